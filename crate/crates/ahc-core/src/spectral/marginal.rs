//! Spectral marginals and width measurement.

use crate::error::{AhcError, Result};
use crate::grid::CoordinateConvention;
use crate::spectral::jsa::JointSpectralAmplitude;

/// Single-photon marginal intensities on per-photon frequency axes (rad/s).
#[derive(Debug, Clone)]
pub struct Marginals {
    pub signal_axis: Vec<f64>,
    pub signal_intensity: Vec<f64>,
    pub idler_axis: Vec<f64>,
    pub idler_intensity: Vec<f64>,
}

/// Marginal intensity spectra of the two photons.
///
/// cw amplitudes map the ω− line onto ω_s = (ω_p + ω−)/2 and
/// ω_i = (ω_p − ω−)/2 pointwise (each ω− hits exactly one signal frequency).
/// signal/idler surfaces integrate out the partner axis. A 2D sum/difference
/// surface has no axis-aligned marginals; rebuild on a signal/idler grid.
pub fn jsa_marginals(jsa: &JointSpectralAmplitude) -> Result<Marginals> {
    let grid = &jsa.grid;
    match (grid.convention, jsa.is_cw()) {
        (CoordinateConvention::SumDiff, true) => {
            let wp = grid.first.center;
            let n = grid.second.n;
            let mut signal_axis = Vec::with_capacity(n);
            let mut idler_axis = Vec::with_capacity(n);
            let mut intensity = Vec::with_capacity(n);
            for k in 0..n {
                let wm = grid.second.value(k);
                signal_axis.push(0.5 * (wp + wm));
                idler_axis.push(0.5 * (wp - wm));
                intensity.push(jsa.values[(0, k)].norm_sqr());
            }
            // The idler axis runs downward in ω−; present it ascending.
            idler_axis.reverse();
            let mut idler_intensity = intensity.clone();
            idler_intensity.reverse();
            Ok(Marginals {
                signal_axis,
                signal_intensity: intensity,
                idler_axis,
                idler_intensity,
            })
        }
        (CoordinateConvention::SignalIdler, _) => {
            let h_s = grid.first.step();
            let h_i = grid.second.step();
            let signal_intensity: Vec<f64> = (0..grid.first.n)
                .map(|r| jsa.values.row(r).iter().map(|v| v.norm_sqr()).sum::<f64>() * h_i)
                .collect();
            let idler_intensity: Vec<f64> = (0..grid.second.n)
                .map(|c| {
                    jsa.values.column(c).iter().map(|v| v.norm_sqr()).sum::<f64>() * h_s
                })
                .collect();
            Ok(Marginals {
                signal_axis: grid.first.values(),
                signal_intensity,
                idler_axis: grid.second.values(),
                idler_intensity,
            })
        }
        (CoordinateConvention::SumDiff, false) => Err(AhcError::config(
            "marginals of a 2D sum/difference surface are not axis-aligned; \
             build the amplitude on a signal/idler grid",
        )),
    }
}

/// Full width at half maximum of a sampled curve, with linear interpolation
/// of the half-height crossings on both flanks of the global maximum.
/// Returns `None` when a flank never drops below half maximum.
pub fn interpolated_fwhm(axis: &[f64], y: &[f64]) -> Option<f64> {
    if axis.len() != y.len() || axis.len() < 3 {
        return None;
    }
    let (kmax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(ymax > 0.0) {
        return None;
    }
    let half = 0.5 * ymax;
    let crossing = |mut k: usize, step: isize| -> Option<f64> {
        loop {
            let next = k as isize + step;
            if next < 0 || next as usize >= y.len() {
                return None;
            }
            let next = next as usize;
            if y[next] <= half {
                let frac = (y[k] - half) / (y[k] - y[next]);
                return Some(axis[k] + frac * (axis[next] - axis[k]));
            }
            k = next;
        }
    };
    let left = crossing(kmax, -1)?;
    let right = crossing(kmax, 1)?;
    Some((right - left).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, FrequencyGrid};
    use crate::hz;
    use crate::spectral::single_mode_lorentzian_g;
    use ndarray::Array2;
    use num_complex::Complex64;

    #[test]
    fn lorentzian_squared_width_halves_on_the_signal_axis() {
        let gamma = hz(7.6e6);
        let wp = hz(563.2e12);
        let axis = Axis::new(hz(250e6), 200.0 * gamma, 1 << 14).unwrap();
        let jsa = single_mode_lorentzian_g(wp, gamma, hz(250e6), axis).unwrap();
        let m = jsa_marginals(&jsa).unwrap();

        // |1/(γ² + Δ²)|² has FWHM 2γ·sqrt(sqrt2 − 1) in ω−.
        let expect_diff = 2.0 * gamma * (std::f64::consts::SQRT_2 - 1.0).sqrt();
        let line: Vec<f64> = jsa.line().unwrap().iter().map(|v| v.norm_sqr()).collect();
        let w_diff = interpolated_fwhm(&jsa.grid.second.values(), &line).unwrap();
        assert!((w_diff - expect_diff).abs() < 1e-3 * expect_diff);

        let w_signal = interpolated_fwhm(&m.signal_axis, &m.signal_intensity).unwrap();
        assert!((w_signal - 0.5 * expect_diff).abs() < 1e-3 * expect_diff);
        let w_idler = interpolated_fwhm(&m.idler_axis, &m.idler_intensity).unwrap();
        assert!((w_idler - 0.5 * expect_diff).abs() < 1e-3 * expect_diff);
    }

    #[test]
    fn signal_idler_marginals_integrate_the_partner_axis() {
        let n = 64;
        let ax = Axis::new(0.0, 8.0, n).unwrap();
        let grid = FrequencyGrid::signal_idler(ax, ax).unwrap();
        let mut values = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
        for r in 0..n {
            for c in 0..n {
                let x = grid.first.value(r);
                let y = grid.second.value(c);
                values[(r, c)] = Complex64::new((-(x * x) - 0.5 * y * y).exp(), 0.0);
            }
        }
        let mut jsa = JointSpectralAmplitude::new(grid, values).unwrap();
        jsa.normalize().unwrap();
        let m = jsa_marginals(&jsa).unwrap();
        // Separable surface: marginals are the 1D intensity profiles.
        let ws = interpolated_fwhm(&m.signal_axis, &m.signal_intensity).unwrap();
        let wi = interpolated_fwhm(&m.idler_axis, &m.idler_intensity).unwrap();
        // |e^{-x²}|² = e^{-2x²} has FWHM sqrt(2 ln 2); the idler is sqrt(2) wider.
        let expect = (2.0f64 * std::f64::consts::LN_2).sqrt();
        assert!((ws - expect).abs() < 0.02 * expect, "{ws} vs {expect}");
        assert!((wi - std::f64::consts::SQRT_2 * expect).abs() < 0.03 * expect);
    }

    #[test]
    fn idler_axis_is_ascending_for_cw() {
        let gamma = hz(5e6);
        let axis = Axis::new(0.0, hz(1e9), 256).unwrap();
        let jsa = single_mode_lorentzian_g(hz(500e12), gamma, 0.0, axis).unwrap();
        let m = jsa_marginals(&jsa).unwrap();
        assert!(m.idler_axis.windows(2).all(|w| w[1] > w[0]));
        assert!(m.signal_axis.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn sum_diff_surface_is_rejected() {
        let ax = Axis::new(0.0, 8.0, 16).unwrap();
        let grid = FrequencyGrid::sum_diff(ax, ax).unwrap();
        let values = Array2::from_elem((16, 16), Complex64::new(1.0, 0.0));
        let jsa = JointSpectralAmplitude::new(grid, values).unwrap();
        assert!(jsa_marginals(&jsa).is_err());
    }

    #[test]
    fn fwhm_of_a_sampled_triangle() {
        let axis: Vec<f64> = (0..101).map(|k| k as f64).collect();
        let y: Vec<f64> = axis.iter().map(|&x| (50.0 - (x - 50.0).abs()).max(0.0)).collect();
        let w = interpolated_fwhm(&axis, &y).unwrap();
        assert!((w - 50.0).abs() < 1e-9);
    }
}
