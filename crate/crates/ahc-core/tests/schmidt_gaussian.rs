//! Schmidt decomposition of a double-Gaussian joint amplitude, for which the
//! spectrum is known in closed form. With
//!
//!   f(ωs, ωi) ∝ exp(−(ωs+ωi)²/(4σ₊²)) · exp(−(ωs−ωi)²/(4σ₋²)),  r = σ₊/σ₋,
//!
//! the Schmidt coefficients are geometric, λₙ = (1 − μ) μⁿ with
//! μ = ((r − 1)/(r + 1))², so K = (1 + μ)/(1 − μ) and
//! S = −ln(1 − μ) − μ ln(μ)/(1 − μ).

use ahc_core::entanglement::schmidt_decompose;
use ahc_core::grid::{Axis, FrequencyGrid};
use ahc_core::spectral::JointSpectralAmplitude;
use ndarray::Array2;
use num_complex::Complex64;

fn gaussian_jsa(axis: Axis, sigma_plus: f64, sigma_minus: f64) -> JointSpectralAmplitude {
    let signal = axis.values();
    let idler = signal.clone();
    let values = Array2::from_shape_fn((axis.n, axis.n), |(row, col)| {
        let ws = signal[row];
        let wi = idler[col];
        let sum = ws + wi;
        let diff = ws - wi;
        let log_amp = -sum * sum / (4.0 * sigma_plus * sigma_plus)
            - diff * diff / (4.0 * sigma_minus * sigma_minus);
        Complex64::new(log_amp.exp(), 0.0)
    });
    let grid = FrequencyGrid::signal_idler(axis.clone(), axis).expect("grid");
    let mut jsa = JointSpectralAmplitude::new(grid, values).expect("amplitude");
    jsa.normalize().expect("normalize");
    jsa
}

#[test]
fn double_gaussian_schmidt_spectrum_is_geometric() {
    let sigma_plus = 2.0 * std::f64::consts::PI * 30.0e6;
    let r = 3.0;
    let sigma_minus = sigma_plus / r;
    let mu: f64 = ((r - 1.0) / (r + 1.0)).powi(2);

    let axis = Axis::new(0.0, 12.0 * sigma_plus, 512).expect("axis");
    let jsa = gaussian_jsa(axis, sigma_plus, sigma_minus);
    let spectrum = schmidt_decompose(&jsa).expect("decomposition");

    let k_expected = (1.0 + mu) / (1.0 - mu);
    let s_expected = -(1.0 - mu).ln() - mu * mu.ln() / (1.0 - mu);
    assert!(
        (spectrum.schmidt_number - k_expected).abs() / k_expected < 1.0e-6,
        "K = {:.9}, expected {:.9}",
        spectrum.schmidt_number,
        k_expected
    );
    assert!(
        (spectrum.entropy_nat - s_expected).abs() < 1.0e-5,
        "S = {:.9} nat, expected {:.9}",
        spectrum.entropy_nat,
        s_expected
    );
    assert!((spectrum.entropy_bits - s_expected / std::f64::consts::LN_2).abs() < 2.0e-5);
    for (idx, lambda) in spectrum.lambdas.iter().take(5).enumerate() {
        let expected = (1.0 - mu) * mu.powi(idx as i32);
        assert!(
            (lambda - expected).abs() < 1.0e-6,
            "lambda[{idx}] = {lambda:.9}, expected {expected:.9}"
        );
    }
    let total: f64 = spectrum.lambdas.iter().sum();
    assert!((total - 1.0).abs() < 1.0e-9);
}

#[test]
fn separable_amplitude_has_unit_schmidt_number() {
    let sigma = 2.0 * std::f64::consts::PI * 10.0e6;
    let axis = Axis::new(0.0, 14.0 * sigma, 256).expect("axis");
    let jsa = gaussian_jsa(axis, sigma, sigma);

    let spectrum = schmidt_decompose(&jsa).expect("decomposition");
    assert!((spectrum.schmidt_number - 1.0).abs() < 1.0e-9);
    assert!(spectrum.entropy_nat.abs() < 1.0e-7);
    assert!((spectrum.lambdas[0] - 1.0).abs() < 1.0e-9);
}
