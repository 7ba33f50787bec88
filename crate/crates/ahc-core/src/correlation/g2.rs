//! Coincidence densities behind the beam splitter.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlation::czt::dft_uniform;
use crate::error::{AhcError, Result};
use crate::grid::{Axis, CoordinateConvention, CorrelationGrid};
use crate::spectral::JointSpectralAmplitude;
use crate::TWO_PI;

/// Detector pairing at the two beam-splitter outputs, or the splitter-free
/// reference (signal and idler measured directly).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelPair {
    CC,
    DD,
    CD,
    AB,
}

impl ChannelPair {
    pub const ALL: [ChannelPair; 4] = [
        ChannelPair::CC,
        ChannelPair::DD,
        ChannelPair::CD,
        ChannelPair::AB,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ChannelPair::CC => "cc",
            ChannelPair::DD => "dd",
            ChannelPair::CD => "cd",
            ChannelPair::AB => "ab",
        }
    }
}

/// Coincidence density on a correlation grid. For a cw amplitude the values
/// are a single row over t−; otherwise rows run over t+.
///
/// The absolute scale carries one factor (grid step / 2π) per frequency
/// axis from the discretized Fourier kernels; only ratios between surfaces
/// computed from the same amplitude are meaningful.
#[derive(Debug, Clone)]
pub struct G2Surface {
    pub channel: ChannelPair,
    pub grid: CorrelationGrid,
    pub values: Array2<f64>,
}

impl G2Surface {
    /// View of a cw trace over t−.
    pub fn trace(&self) -> Result<ndarray::ArrayView1<'_, f64>> {
        if self.values.nrows() != 1 {
            return Err(AhcError::config("expected a cw correlation trace"));
        }
        Ok(self.values.row(0))
    }

    pub fn diff_axis(&self) -> &Axis {
        &self.grid.diff_axis
    }
}

/// Compute G² for one channel pairing on the given delay grid.
///
/// The beam-splitter channels mix the amplitude at ±ω−: with
/// Z±(t) = Σ f e^{−i(ω+t+ ± ω−t−)/2}, the CC and DD densities are
/// |Z− + Z+|²/8, CD is |Z− − Z+|²/4, and AB (no splitter) is
/// (|Z+|² + |Z−|²)/2. CC + DD + CD = AB holds pointwise by construction.
///
/// The mirror Z−(t−) = Z+(−t−) is evaluated by index reversal on the
/// symmetric delay axis, one transform per row, so the CD trace vanishes
/// identically at t− = 0 and even parity in t− is bitwise exact.
pub fn g2_from_jsa(
    jsa: &JointSpectralAmplitude,
    channel: ChannelPair,
    grid: &CorrelationGrid,
) -> Result<G2Surface> {
    jsa.require_normalized(1e-6)?;
    if jsa.convention() != CoordinateConvention::SumDiff {
        return Err(AhcError::config(
            "correlation surfaces are computed in sum/difference coordinates; \
             rebuild the amplitude on a sum/difference grid",
        ));
    }
    let fgrid = &jsa.grid;
    if fgrid.cw_collapsed() && grid.sum_axis.is_some() {
        return Err(AhcError::config(
            "a cw amplitude yields a t− trace; drop the t+ axis from the grid",
        ));
    }
    check_resolution(jsa, grid)?;

    let t_diff = &grid.diff_axis;
    let h_minus = fgrid.second.step() / TWO_PI;

    // ω− transform of every ω+ row, with the half kernel.
    let mut z = Array2::from_elem((fgrid.first.n, t_diff.n), Complex64::new(0.0, 0.0));
    for (r, row) in jsa.values.outer_iter().enumerate() {
        let x: Vec<Complex64> = row.iter().copied().collect();
        let out = dft_uniform(&x, fgrid.second.start(), fgrid.second.step(), t_diff, 0.5);
        for j in 0..t_diff.n {
            z[(r, j)] = out[j] * h_minus;
        }
    }

    let t_plus = match &grid.sum_axis {
        Some(ax) => ax.clone(),
        None => Axis::collapsed(0.0),
    };
    let h_plus = if fgrid.first.n > 1 {
        fgrid.first.step() / TWO_PI
    } else {
        // Collapsed ω+: the kernel is a pure phase common to Z+ and Z−,
        // dropped under the modulus.
        1.0
    };

    let mut values = Array2::zeros((t_plus.n, t_diff.n));
    let mut col = vec![Complex64::new(0.0, 0.0); fgrid.first.n];
    for j in 0..t_diff.n / 2 + 1 {
        let jm = t_diff.mirror_index(j);
        let (zp, zm) = if fgrid.first.n == 1 {
            (vec![z[(0, j)]], vec![z[(0, jm)]])
        } else {
            for (r, slot) in col.iter_mut().enumerate() {
                *slot = z[(r, j)];
            }
            let zp = dft_uniform(&col, fgrid.first.start(), fgrid.first.step(), &t_plus, 0.5);
            for (r, slot) in col.iter_mut().enumerate() {
                *slot = z[(r, jm)];
            }
            let zm = dft_uniform(&col, fgrid.first.start(), fgrid.first.step(), &t_plus, 0.5);
            (zp, zm)
        };
        for i in 0..t_plus.n {
            let p = zp[i] * h_plus;
            let m = zm[i] * h_plus;
            values[(i, j)] = combine(channel, p, m);
            values[(i, jm)] = combine(channel, m, p);
        }
    }

    Ok(G2Surface {
        channel,
        grid: grid.clone(),
        values,
    })
}

fn combine(channel: ChannelPair, zp: Complex64, zm: Complex64) -> f64 {
    match channel {
        ChannelPair::CC | ChannelPair::DD => 0.125 * (zm + zp).norm_sqr(),
        ChannelPair::CD => 0.25 * (zm - zp).norm_sqr(),
        ChannelPair::AB => 0.5 * (zp.norm_sqr() + zm.norm_sqr()),
    }
}

/// Delay steps must resolve the fastest oscillation the amplitude can
/// produce: step ≤ π/ω_max, with ω_max taken over the power-bearing support
/// (the per-axis interval holding 99.99% of the squared norm, so that
/// negligible far tails do not force absurdly fine grids).
fn check_resolution(jsa: &JointSpectralAmplitude, grid: &CorrelationGrid) -> Result<()> {
    let w_plus_max = if jsa.grid.first.n > 1 {
        power_support(
            &jsa.grid.first,
            &marginal_power(&jsa.values, ndarray::Axis(1)),
        )
    } else {
        0.0
    };
    let w_minus_max = power_support(
        &jsa.grid.second,
        &marginal_power(&jsa.values, ndarray::Axis(0)),
    );
    let checks = [
        ("t-", grid.diff_axis.step(), w_minus_max),
        (
            "t+",
            grid.sum_axis.as_ref().map_or(0.0, |a| a.step()),
            w_plus_max,
        ),
    ];
    for (name, step, wmax) in checks {
        if wmax > 0.0 && step > std::f64::consts::PI / wmax {
            return Err(AhcError::config(format!(
                "{name} step {step:.3e} s under-resolves spectral content at {wmax:.3e} rad/s \
                 (need step <= {:.3e} s)",
                std::f64::consts::PI / wmax
            )));
        }
    }
    Ok(())
}

fn marginal_power(values: &Array2<Complex64>, sum_over: ndarray::Axis) -> Vec<f64> {
    values
        .map(|v| v.norm_sqr())
        .sum_axis(sum_over)
        .into_raw_vec_and_offset()
        .0
}

fn power_support(axis: &Axis, power: &[f64]) -> f64 {
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let budget = 0.5e-4 * total;
    let mut lo = 0usize;
    let mut hi = power.len() - 1;
    let mut cut = 0.0;
    while lo < hi && cut + power[lo] <= budget {
        cut += power[lo];
        lo += 1;
    }
    cut = 0.0;
    while hi > lo && cut + power[hi] <= budget {
        cut += power[hi];
        hi -= 1;
    }
    axis.value(lo).abs().max(axis.value(hi).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::closed_form::g2_closed_form_cw;
    use crate::grid::FrequencyGrid;
    use crate::hz;
    use crate::spectral::single_mode_lorentzian_g;

    fn line(gamma: f64, w0: f64, span: f64, n: usize) -> JointSpectralAmplitude {
        let axis = Axis::new(w0, span, n).unwrap();
        single_mode_lorentzian_g(hz(563.2e12), gamma, w0, axis).unwrap()
    }

    fn delay_grid(half: f64, n: usize) -> CorrelationGrid {
        CorrelationGrid::symmetric_cw(half, n).unwrap()
    }

    #[test]
    fn channels_match_the_closed_forms() {
        let gamma = hz(7.6e6);
        let w0 = hz(250e6);
        let jsa = line(gamma, w0, 4000.0 * gamma, 1 << 20);
        let grid = delay_grid(120e-9, 961);
        let scale = {
            let ab = g2_from_jsa(&jsa, ChannelPair::AB, &grid).unwrap();
            ab.values[(0, 480)]
        };
        for channel in ChannelPair::ALL {
            let g2 = g2_from_jsa(&jsa, channel, &grid).unwrap();
            let trace = g2.trace().unwrap();
            for j in 0..grid.diff_axis.n {
                let t = grid.diff_axis.value(j);
                let expect = g2_closed_form_cw(gamma, w0, channel, t);
                let got = trace[j] / scale;
                assert!(
                    (got - expect).abs() < 4e-3,
                    "{} at t = {t:.2e}: {got} vs {expect}",
                    channel.label()
                );
            }
        }
    }

    #[test]
    fn cd_vanishes_exactly_at_zero_delay() {
        let gamma = hz(7.6e6);
        let jsa = line(gamma, hz(165e6), 1000.0 * gamma, 1 << 16);
        let grid = delay_grid(80e-9, 2001);
        let g2 = g2_from_jsa(&jsa, ChannelPair::CD, &grid).unwrap();
        let trace = g2.trace().unwrap();
        assert_eq!(trace[1000], 0.0);
    }

    #[test]
    fn traces_are_bitwise_even_in_delay() {
        let gamma = hz(7.6e6);
        let jsa = line(gamma, hz(165e6), 1000.0 * gamma, 1 << 16);
        let grid = delay_grid(80e-9, 801);
        for channel in ChannelPair::ALL {
            let g2 = g2_from_jsa(&jsa, channel, &grid).unwrap();
            let trace = g2.trace().unwrap();
            for j in 0..801 {
                assert_eq!(trace[j], trace[800 - j], "{}", channel.label());
            }
        }
    }

    #[test]
    fn channel_sum_reproduces_the_reference() {
        let gamma = hz(7.6e6);
        let jsa = line(gamma, hz(250e6), 1000.0 * gamma, 1 << 16);
        let grid = delay_grid(100e-9, 501);
        let parts: Vec<_> = [ChannelPair::CC, ChannelPair::DD, ChannelPair::CD]
            .iter()
            .map(|&c| g2_from_jsa(&jsa, c, &grid).unwrap())
            .collect();
        let ab = g2_from_jsa(&jsa, ChannelPair::AB, &grid).unwrap();
        let peak = ab.values.iter().copied().fold(0.0f64, f64::max);
        for j in 0..501 {
            let sum: f64 = parts.iter().map(|p| p.values[(0, j)]).sum();
            let rel = (sum - ab.values[(0, j)]).abs() / peak;
            assert!(rel < 1e-12, "conservation off by {rel:.2e} at bin {j}");
        }
    }

    #[test]
    fn coarse_delay_grids_are_rejected() {
        let gamma = hz(7.6e6);
        let w0 = hz(250e6);
        let jsa = line(gamma, w0, 1000.0 * gamma, 1 << 16);
        let grid = delay_grid(1e-6, 201);
        let err = g2_from_jsa(&jsa, ChannelPair::CD, &grid).unwrap_err();
        assert!(err.to_string().contains("under-resolves"));
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let gamma = hz(7.6e6);
        let mut jsa = line(gamma, hz(250e6), 1000.0 * gamma, 1 << 14);
        jsa.values.mapv_inplace(|v| 2.0 * v);
        assert!(g2_from_jsa(&jsa, ChannelPair::AB, &delay_grid(50e-9, 101)).is_err());
    }

    #[test]
    fn signal_idler_convention_is_rejected() {
        let ax = Axis::new(1e15, hz(1e9), 64).unwrap();
        let grid = FrequencyGrid::signal_idler(ax, ax).unwrap();
        let values = Array2::from_elem((64, 64), Complex64::new(1.0 / 64.0, 0.0));
        let jsa = JointSpectralAmplitude::new(grid, values).unwrap();
        assert!(g2_from_jsa(&jsa, ChannelPair::AB, &delay_grid(50e-9, 101)).is_err());
    }

    #[test]
    fn pulsed_surface_is_even_in_t_minus_rows() {
        let gamma = hz(7e6);
        let sigma = hz(5e6);
        let fgrid = FrequencyGrid::sum_diff(
            Axis::new(0.0, 12.0 * sigma, 64).unwrap(),
            Axis::new(0.0, 60.0 * gamma, 256).unwrap(),
        )
        .unwrap();
        let mut values = Array2::from_elem((64, 256), Complex64::new(0.0, 0.0));
        for r in 0..64 {
            let wp = fgrid.first.value(r);
            for c in 0..256 {
                let wm = fgrid.second.value(c);
                let pump = (-0.5 * (wp / sigma).powi(2)).exp();
                let lor = 1.0 / (gamma * gamma + wm * wm);
                values[(r, c)] = Complex64::new(pump * lor, 0.3 * pump * lor);
            }
        }
        let mut jsa = JointSpectralAmplitude::new(fgrid, values).unwrap();
        jsa.normalize().unwrap();
        let grid = CorrelationGrid::pulsed(
            Axis::new(0.0, 4.0e-7, 31).unwrap(),
            Axis::new(0.0, 3.0e-7, 81).unwrap(),
        )
        .unwrap();
        let g2 = g2_from_jsa(&jsa, ChannelPair::CC, &grid).unwrap();
        assert_eq!(g2.values.nrows(), 31);
        for i in 0..31 {
            for j in 0..81 {
                assert_eq!(g2.values[(i, j)], g2.values[(i, 80 - j)]);
            }
        }
        let cd = g2_from_jsa(&jsa, ChannelPair::CD, &grid).unwrap();
        for i in 0..31 {
            assert_eq!(cd.values[(i, 40)], 0.0);
        }
    }
}
