//! Schmidt decomposition of joint spectral amplitudes and pump-bandwidth
//! entropy sweeps.
//!
//! A normalized amplitude on a signal/idler grid is treated as the matrix of
//! a bipartite pure state; its singular values give the Schmidt spectrum,
//! from which entanglement entropy and Schmidt number follow. The sweep
//! helper rebuilds the two-mode source for a range of pump bandwidths and
//! reports how the entropy falls as the pump broadens.

use ndarray_linalg::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::grid::{Axis, CoordinateConvention, FrequencyGrid};
use crate::spectral::{
    apply_fp_filters, build_cespdc_jsa, JointSpectralAmplitude, ModeCombSpec,
    PhaseMatchingEnvelope, PumpSpectrum,
};

/// Schmidt spectrum of a bipartite amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    /// Schmidt coefficients λ_n, descending, summing to one.
    pub lambdas: Vec<f64>,
    /// Entanglement entropy −Σ λ ln λ in nats.
    pub entropy_nat: f64,
    /// The same entropy in bits.
    pub entropy_bits: f64,
    /// Effective mode count K = 1 / Σ λ².
    pub schmidt_number: f64,
}

impl SchmidtSpectrum {
    fn from_singular_values(values: &[f64]) -> Result<Self> {
        let total: f64 = values.iter().map(|s| s * s).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(AhcError::Numerics(format!(
                "singular values have non-positive squared sum {total}"
            )));
        }
        let lambdas: Vec<f64> = values.iter().map(|s| s * s / total).collect();
        let mut entropy_nat = 0.0;
        let mut purity = 0.0;
        for &l in &lambdas {
            if l > 0.0 {
                entropy_nat -= l * l.ln();
            }
            purity += l * l;
        }
        Ok(SchmidtSpectrum {
            entropy_nat,
            entropy_bits: entropy_nat / std::f64::consts::LN_2,
            schmidt_number: 1.0 / purity,
            lambdas,
        })
    }
}

/// Require at least 8 grid points across every spectral feature the builder
/// metadata knows about, so the singular values are trustworthy.
fn resolution_precheck(jsa: &JointSpectralAmplitude) -> Result<()> {
    let Some(builder) = &jsa.metadata.builder else {
        return Ok(());
    };
    let mut widths = vec![
        ("signal mode", builder.signal.linewidth),
        ("idler mode", builder.idler.linewidth),
    ];
    if let PumpSpectrum::GaussianPulse { sigma, .. } = builder.pump {
        widths.push(("pump", 2.355 * sigma));
    }
    if let Some((fs, fi)) = &builder.filters {
        widths.push(("signal filter mode", fs.linewidth));
        widths.push(("idler filter mode", fi.linewidth));
    }
    for (axis_name, axis) in [("signal", &jsa.grid.first), ("idler", &jsa.grid.second)] {
        let step = axis.step();
        for &(feature, width) in &widths {
            if step * 8.0 > width * (1.0 + 1e-9) {
                return Err(AhcError::Numerics(format!(
                    "{axis_name} axis step {step:.3e} rad/s leaves fewer than 8 points \
                     across the {feature} width {width:.3e} rad/s; refine the grid"
                )));
            }
        }
    }
    Ok(())
}

/// Schmidt-decompose a normalized amplitude on a signal/idler grid.
///
/// Only the singular values are computed. Monochromatic-pump amplitudes are
/// rejected: their implicit energy delta function makes the pair state
/// perfectly frequency-correlated, so the decomposition has no finite
/// representation on a grid.
pub fn schmidt_decompose(jsa: &JointSpectralAmplitude) -> Result<SchmidtSpectrum> {
    if jsa.is_cw() {
        return Err(AhcError::config(
            "a monochromatic pump pins the pair energies exactly; the Schmidt spectrum \
             diverges and is not defined on the collapsed grid. Build a pulsed-pump \
             surface instead",
        ));
    }
    if jsa.convention() != CoordinateConvention::SignalIdler {
        return Err(AhcError::config(
            "Schmidt decomposition needs the signal/idler convention; the sum/difference \
             axes mix the two subsystems",
        ));
    }
    jsa.require_normalized(1e-6)?;
    resolution_precheck(jsa)?;
    let (_, s, _) = jsa
        .values
        .svd(false, false)
        .map_err(|e| AhcError::Numerics(format!("SVD failed: {e}")))?;
    SchmidtSpectrum::from_singular_values(s.as_slice().unwrap_or(&s.to_vec()))
}

/// Two-mode source swept over pump bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSweepConfig {
    /// Intensity FWHM of each cavity mode (rad/s).
    pub gamma: f64,
    /// Splitting between the signal and idler modes (rad/s); entropy does
    /// not depend on it, the modes just sit at ±half the splitting.
    pub omega_minus_0: f64,
    /// Pump spectral widths σ to sweep (rad/s).
    pub sigma_values: Vec<f64>,
    /// Optional Fabry-Perot filter pair applied to the built amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<(ModeCombSpec, ModeCombSpec)>,
}

/// One sweep sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Pump spectral width (rad/s).
    pub sigma: f64,
    /// Grid points per axis used for this sample.
    pub grid_n: usize,
    pub spectrum: SchmidtSpectrum,
}

/// Grid sized for one sweep sample: spans must hold both the Lorentzian
/// wings and the pump envelope, steps must resolve the narrower of the two.
fn sweep_grid(gamma: f64, omega_minus_0: f64, sigma: f64) -> Result<FrequencyGrid> {
    let half_span = 15.0 * sigma.max(gamma);
    let step = (2.355 * sigma).min(gamma) / 8.0;
    let n = ((2.0 * half_span / step).ceil() as usize + 1).next_power_of_two();
    if n > 4096 {
        return Err(AhcError::config(format!(
            "pump width {sigma:.3e} rad/s against mode width {gamma:.3e} rad/s needs \
             {n} grid points per axis (cap 4096); the scales are too far apart"
        )));
    }
    let span = 2.0 * half_span;
    FrequencyGrid::signal_idler(
        Axis::new(0.5 * omega_minus_0, span, n)?,
        Axis::new(-0.5 * omega_minus_0, span, n)?,
    )
}

/// Entanglement entropy of the two-mode source as a function of pump
/// bandwidth, ascending in σ.
pub fn entropy_vs_pump_sweep(config: &PumpSweepConfig) -> Result<Vec<SweepPoint>> {
    if !(config.gamma > 0.0) || !config.gamma.is_finite() {
        return Err(AhcError::config(format!(
            "mode linewidth must be positive, got {}",
            config.gamma
        )));
    }
    if !config.omega_minus_0.is_finite() || config.omega_minus_0 < 0.0 {
        return Err(AhcError::config(format!(
            "mode splitting must be finite and non-negative, got {}",
            config.omega_minus_0
        )));
    }
    if config.sigma_values.is_empty() {
        return Err(AhcError::config("sweep needs at least one pump width"));
    }
    let mut sigmas = config.sigma_values.clone();
    sigmas.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(sigmas.len());
    for sigma in sigmas {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(AhcError::config(format!(
                "pump widths must be positive, got {sigma}"
            )));
        }
        let grid = sweep_grid(config.gamma, config.omega_minus_0, sigma)?;
        let pump = PumpSpectrum::GaussianPulse { center: 0.0, sigma };
        let signal = ModeCombSpec::single_mode(0.5 * config.omega_minus_0, config.gamma);
        let idler = ModeCombSpec::single_mode(-0.5 * config.omega_minus_0, config.gamma);
        let jsa = build_cespdc_jsa(
            &pump,
            &signal,
            &idler,
            &PhaseMatchingEnvelope::Flat,
            &grid,
        )?;
        let jsa = match &config.filters {
            Some((fs, fi)) => apply_fp_filters(&jsa, fs, fi)?,
            None => jsa,
        };
        let spectrum = schmidt_decompose(&jsa)?;
        points.push(SweepPoint {
            sigma,
            grid_n: grid.first.n,
            spectrum,
        });
    }
    Ok(points)
}
