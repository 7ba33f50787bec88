//! Joint temporal amplitude via chirp-z evaluation of the Fourier kernels.

use ndarray::Array2;
use num_complex::Complex64;

use crate::correlation::czt::dft_uniform;
use crate::error::{AhcError, Result};
use crate::grid::{Axis, CoordinateConvention};
use crate::spectral::jsa::JointSpectralAmplitude;
use crate::TWO_PI;

/// Kernel scale: sum/difference coordinates satisfy
/// ω_s t_s + ω_i t_i = (ω+ t+ + ω− t−) / 2, so their kernel carries half
/// phases; signal/idler coordinates use the plain e^{−iωt}.
fn kernel_scale(convention: CoordinateConvention) -> f64 {
    match convention {
        CoordinateConvention::SumDiff => 0.5,
        CoordinateConvention::SignalIdler => 1.0,
    }
}

fn axis_measure(ax: &Axis) -> f64 {
    if ax.n > 1 {
        ax.step() / TWO_PI
    } else {
        1.0
    }
}

/// Time axis conjugate to a frequency axis: same point count, step
/// τ = 2π / (scale · n · h), centered on zero. Transforming onto this axis
/// makes the discrete kernel unitary up to a known factor, so
/// [`jsa_from_jta`] inverts [`jta_from_jsa`] exactly.
pub fn conjugate_time_axis(freq_axis: &Axis, convention: CoordinateConvention) -> Axis {
    if freq_axis.n <= 1 {
        return Axis::collapsed(0.0);
    }
    let s = kernel_scale(convention);
    let tau = TWO_PI / (s * freq_axis.n as f64 * freq_axis.step());
    Axis {
        center: 0.0,
        span: tau * (freq_axis.n - 1) as f64,
        n: freq_axis.n,
    }
}

/// Joint temporal amplitude
/// JTA[j1][j2] = Π_axes (h/2π) Σ f[k1][k2] e^{−i·s·(ω1 t1 + ω2 t2)}
/// with s from the grid convention. Collapsed axes contribute a pure phase
/// and unit measure. Returned with `t_first` on rows.
pub fn jta_from_jsa(
    jsa: &JointSpectralAmplitude,
    t_first: &Axis,
    t_second: &Axis,
) -> Result<Array2<Complex64>> {
    let s = kernel_scale(jsa.convention());
    transform(jsa, t_first, t_second, s, axis_measure)
}

/// Invert [`jta_from_jsa`] on matching axes: evaluates the adjoint kernel
/// with measure s·τ per time axis (1/n_t against a collapsed frequency
/// axis), reproducing the original grid values when the time axes are the
/// [`conjugate_time_axis`] of the frequency axes.
pub fn jsa_from_jta(
    jta: &Array2<Complex64>,
    t_first: &Axis,
    t_second: &Axis,
    target: &JointSpectralAmplitude,
) -> Result<Array2<Complex64>> {
    if jta.nrows() != t_first.n || jta.ncols() != t_second.n {
        return Err(AhcError::config(
            "temporal amplitude shape does not match the time axes",
        ));
    }
    let s = kernel_scale(target.convention());
    let grid = &target.grid;
    let n1 = grid.first.n;
    let n2 = grid.second.n;

    let measure = |freq_ax: &Axis, t_ax: &Axis| -> f64 {
        if freq_ax.n > 1 {
            s * t_ax.step()
        } else {
            1.0 / t_ax.n as f64
        }
    };
    let m2 = measure(&grid.second, t_second);
    let mut half = Array2::from_elem((t_first.n, n2), Complex64::new(0.0, 0.0));
    for (r, row) in jta.outer_iter().enumerate() {
        let x: Vec<Complex64> = row.iter().copied().collect();
        let out = dft_uniform(&x, t_second.start(), t_second.step(), &grid.second, -s);
        for k in 0..n2 {
            half[(r, k)] = out[k] * m2;
        }
    }
    let m1 = measure(&grid.first, t_first);
    let mut full = Array2::from_elem((n1, n2), Complex64::new(0.0, 0.0));
    for k in 0..n2 {
        let x: Vec<Complex64> = half.column(k).iter().copied().collect();
        let out = dft_uniform(&x, t_first.start(), t_first.step(), &grid.first, -s);
        for r in 0..n1 {
            full[(r, k)] = out[r] * m1;
        }
    }
    Ok(full)
}

fn transform(
    jsa: &JointSpectralAmplitude,
    t_first: &Axis,
    t_second: &Axis,
    s: f64,
    measure: fn(&Axis) -> f64,
) -> Result<Array2<Complex64>> {
    let grid = &jsa.grid;
    let m2 = measure(&grid.second);
    let mut half = Array2::from_elem((grid.first.n, t_second.n), Complex64::new(0.0, 0.0));
    for (r, row) in jsa.values.outer_iter().enumerate() {
        let x: Vec<Complex64> = row.iter().copied().collect();
        let out = dft_uniform(&x, grid.second.start(), grid.second.step(), t_second, s);
        for j in 0..t_second.n {
            half[(r, j)] = out[j] * m2;
        }
    }
    let m1 = measure(&grid.first);
    let mut full = Array2::from_elem((t_first.n, t_second.n), Complex64::new(0.0, 0.0));
    for j in 0..t_second.n {
        let x: Vec<Complex64> = half.column(j).iter().copied().collect();
        let out = dft_uniform(&x, grid.first.start(), grid.first.step(), t_first, s);
        for i in 0..t_first.n {
            full[(i, j)] = out[i] * m1;
        }
    }
    Ok(full)
}
