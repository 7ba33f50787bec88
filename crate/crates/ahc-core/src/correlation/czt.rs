//! Chirp-z evaluation of sums Σ_k x_k e^{−i·s·a_k·b_j} on uniform grids.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::Axis;

/// Below this work estimate the direct O(NM) sum beats Bluestein setup.
const DIRECT_THRESHOLD: usize = 1 << 12;

/// Evaluate Z[j] = Σ_k x[k]·exp(−i·scale·a_k·b_j) for a_k = a_start + k·a_step
/// and b_j the points of `b`. Negative `scale` gives the adjoint kernel.
///
/// Uses Bluestein's reduction of the chirp cross term to a convolution,
/// so cost is O((N+M) log(N+M)) for any grid offsets and step ratio.
pub fn dft_uniform(
    x: &[Complex64],
    a_start: f64,
    a_step: f64,
    b: &Axis,
    scale: f64,
) -> Vec<Complex64> {
    let n = x.len();
    let m = b.n;
    if n == 0 || m == 0 {
        return vec![Complex64::new(0.0, 0.0); m];
    }
    if n * m <= DIRECT_THRESHOLD || n == 1 || m == 1 {
        return direct(x, a_start, a_step, b, scale);
    }
    bluestein(x, a_start, a_step, b, scale)
}

fn phase(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, -s)
}

fn direct(x: &[Complex64], a_start: f64, a_step: f64, b: &Axis, scale: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(b.n);
    for j in 0..b.n {
        let bj = b.value(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &xk) in x.iter().enumerate() {
            let a = a_start + k as f64 * a_step;
            acc += xk * phase(scale * a * bj);
        }
        out.push(acc);
    }
    out
}

fn bluestein(x: &[Complex64], a_start: f64, a_step: f64, b: &Axis, scale: f64) -> Vec<Complex64> {
    let n = x.len();
    let m = b.n;
    let b_start = b.start();
    let b_step = b.step();
    // a_k·b_j = a0·b_j + k·h·b0 + h·τ·jk; jk = (j² + k² − (j−k)²) / 2.
    let alpha = scale * a_step * b_step;

    let p = (n + m - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(p);
    let ifft = planner.plan_fft_inverse(p);

    let zero = Complex64::new(0.0, 0.0);
    let mut u = vec![zero; p];
    for (k, &xk) in x.iter().enumerate() {
        let kf = k as f64;
        let theta = scale * kf * a_step * b_start + 0.5 * alpha * kf * kf;
        u[k] = xk * phase(theta);
    }
    let mut v = vec![zero; p];
    for d in -(n as i64 - 1)..=(m as i64 - 1) {
        let df = d as f64;
        let idx = d.rem_euclid(p as i64) as usize;
        v[idx] = phase(-0.5 * alpha * df * df);
    }

    fft.process(&mut u);
    fft.process(&mut v);
    for (a, b) in u.iter_mut().zip(v.iter()) {
        *a *= *b;
    }
    ifft.process(&mut u);
    let inv_p = 1.0 / p as f64;

    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let jf = j as f64;
        let theta = scale * a_start * b.value(j) + 0.5 * alpha * jf * jf;
        out.push(u[j] * phase(theta) * inv_p);
    }
    out
}
