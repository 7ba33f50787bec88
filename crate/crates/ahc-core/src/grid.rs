//! Uniform frequency and time grids.
//!
//! Axes are endpoint-inclusive and symmetric about their center: the k-th
//! point is `center + (k - (n-1)/2) * step` with `step = span/(n-1)`. This
//! makes the mirror `x -> 2*center - x` an exact index involution
//! (`k -> n-1-k`), which the symmetry decomposition and the correlation
//! engine rely on for bit-exact parity identities.

use crate::error::{AhcError, Result};
use serde::{Deserialize, Serialize};

/// Which pair of variables a 2D grid (and the JSA living on it) uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateConvention {
    /// (ω+, ω−) = (ω_s + ω_i, ω_s − ω_i); the first axis is the sum axis.
    SumDiff,
    /// (ω_s, ω_i); the first axis is the signal axis.
    SignalIdler,
}

/// A uniform, endpoint-inclusive axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub center: f64,
    pub span: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(center: f64, span: f64, n: usize) -> Result<Self> {
        if !center.is_finite() || !span.is_finite() {
            return Err(AhcError::config("axis center and span must be finite"));
        }
        if n == 0 {
            return Err(AhcError::config("axis needs at least one point"));
        }
        if n == 1 && span != 0.0 {
            return Err(AhcError::config("single-point axis must have zero span"));
        }
        if n > 1 && span <= 0.0 {
            return Err(AhcError::config("axis span must be positive"));
        }
        Ok(Axis { center, span, n })
    }

    /// Single-point axis (used for the collapsed ω+ axis of a cw grid).
    pub fn collapsed(center: f64) -> Self {
        Axis {
            center,
            span: 0.0,
            n: 1,
        }
    }

    #[inline]
    pub fn step(&self) -> f64 {
        if self.n > 1 {
            self.span / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        debug_assert!(k < self.n);
        self.center + (k as f64 - (self.n - 1) as f64 / 2.0) * self.step()
    }

    /// First grid point (the axis minimum).
    #[inline]
    pub fn start(&self) -> f64 {
        self.value(0)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.value(k)).collect()
    }

    /// Index of the mirror point about the axis center.
    #[inline]
    pub fn mirror_index(&self, k: usize) -> usize {
        self.n - 1 - k
    }

    /// Index of the grid point nearest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        if self.n == 1 {
            return 0;
        }
        let k = ((x - self.start()) / self.step()).round();
        (k.max(0.0) as usize).min(self.n - 1)
    }

    pub fn is_power_of_two(&self) -> bool {
        self.n.is_power_of_two()
    }
}

/// 2D frequency grid. For a cw (monochromatic-pump) model the sum axis is
/// collapsed to the single point ω+ = ω_p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub convention: CoordinateConvention,
    /// ω+ axis (SumDiff) or ω_s axis (SignalIdler).
    pub first: Axis,
    /// ω− axis (SumDiff) or ω_i axis (SignalIdler).
    pub second: Axis,
}

impl FrequencyGrid {
    /// cw grid: collapsed ω+ axis at `omega_pump`, ω− axis as given.
    pub fn cw(omega_pump: f64, diff_axis: Axis) -> Result<Self> {
        let grid = FrequencyGrid {
            convention: CoordinateConvention::SumDiff,
            first: Axis::collapsed(omega_pump),
            second: diff_axis,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn sum_diff(sum_axis: Axis, diff_axis: Axis) -> Result<Self> {
        let grid = FrequencyGrid {
            convention: CoordinateConvention::SumDiff,
            first: sum_axis,
            second: diff_axis,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn signal_idler(signal_axis: Axis, idler_axis: Axis) -> Result<Self> {
        let grid = FrequencyGrid {
            convention: CoordinateConvention::SignalIdler,
            first: signal_axis,
            second: idler_axis,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, ax) in [("first", &self.first), ("second", &self.second)] {
            if ax.n > 1 && !ax.is_power_of_two() {
                return Err(AhcError::config(format!(
                    "{name} axis n_points = {} must be a power of two",
                    ax.n
                )));
            }
        }
        if self.convention == CoordinateConvention::SignalIdler && self.first.n == 1 {
            return Err(AhcError::config(
                "signal/idler grids cannot be collapsed; use the sum/difference convention for cw",
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn cw_collapsed(&self) -> bool {
        self.convention == CoordinateConvention::SumDiff && self.first.n == 1
    }

    pub fn diff_axis(&self) -> &Axis {
        debug_assert_eq!(self.convention, CoordinateConvention::SumDiff);
        &self.second
    }

    pub fn sum_axis(&self) -> &Axis {
        debug_assert_eq!(self.convention, CoordinateConvention::SumDiff);
        &self.first
    }
}

/// Time grid for correlation surfaces. `sum_axis` is absent in the cw case,
/// where G² depends on the delay t− only. The diff axis must be centered on
/// zero; an odd point count puts t− = 0 exactly on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGrid {
    pub sum_axis: Option<Axis>,
    pub diff_axis: Axis,
}

impl CorrelationGrid {
    pub fn cw(diff_axis: Axis) -> Result<Self> {
        Self::check_diff(&diff_axis)?;
        Ok(CorrelationGrid {
            sum_axis: None,
            diff_axis,
        })
    }

    pub fn pulsed(sum_axis: Axis, diff_axis: Axis) -> Result<Self> {
        Self::check_diff(&diff_axis)?;
        Ok(CorrelationGrid {
            sum_axis: Some(sum_axis),
            diff_axis,
        })
    }

    /// Symmetric delay axis of half-width `half_span` with `n` points.
    pub fn symmetric_cw(half_span: f64, n: usize) -> Result<Self> {
        Self::cw(Axis::new(0.0, 2.0 * half_span, n)?)
    }

    fn check_diff(ax: &Axis) -> Result<()> {
        if ax.center != 0.0 {
            return Err(AhcError::config(
                "correlation diff axis must be centered on zero delay",
            ));
        }
        if ax.n < 2 {
            return Err(AhcError::config("correlation diff axis needs >= 2 points"));
        }
        Ok(())
    }

    #[inline]
    pub fn cw_collapsed(&self) -> bool {
        self.sum_axis.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_points_are_symmetric_about_center() {
        let ax = Axis::new(10.0, 8.0, 5).unwrap();
        assert_eq!(ax.values(), vec![6.0, 8.0, 10.0, 12.0, 14.0]);
        for k in 0..ax.n {
            let m = ax.mirror_index(k);
            assert_eq!(ax.value(k) - ax.center, -(ax.value(m) - ax.center));
        }
    }

    #[test]
    fn axis_even_count_still_mirrors_exactly() {
        let ax = Axis::new(0.0, 3.0, 4).unwrap();
        assert_eq!(ax.values(), vec![-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(ax.mirror_index(0), 3);
        assert_eq!(ax.mirror_index(1), 2);
    }

    #[test]
    fn nearest_index_clamps_to_range() {
        let ax = Axis::new(0.0, 10.0, 11).unwrap();
        assert_eq!(ax.nearest_index(-100.0), 0);
        assert_eq!(ax.nearest_index(100.0), 10);
        assert_eq!(ax.nearest_index(1.2), 6);
    }

    #[test]
    fn frequency_grid_rejects_non_power_of_two() {
        let diff = Axis::new(0.0, 1e9, 1000).unwrap();
        assert!(FrequencyGrid::cw(0.0, diff).is_err());
        let diff = Axis::new(0.0, 1e9, 1024).unwrap();
        assert!(FrequencyGrid::cw(0.0, diff).is_ok());
    }

    #[test]
    fn correlation_grid_requires_zero_centered_diff() {
        assert!(CorrelationGrid::cw(Axis::new(1.0, 2.0, 3).unwrap()).is_err());
        let g = CorrelationGrid::symmetric_cw(1e-6, 4097).unwrap();
        assert!(g.cw_collapsed());
        let mid = (g.diff_axis.n - 1) / 2;
        assert_eq!(g.diff_axis.value(mid), 0.0);
    }

    #[test]
    fn invalid_axes_are_rejected() {
        assert!(Axis::new(0.0, -1.0, 4).is_err());
        assert!(Axis::new(0.0, 1.0, 0).is_err());
        assert!(Axis::new(f64::NAN, 1.0, 4).is_err());
        assert!(Axis::new(0.0, 1.0, 1).is_err());
        assert!(Axis::new(0.0, 0.0, 1).is_ok());
    }
}
