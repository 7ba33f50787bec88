//! Builders for cavity-enhanced SPDC joint spectral amplitudes.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::grid::{CoordinateConvention, FrequencyGrid};
use crate::spectral::comb::{cavity_comb_amplitude, filter_transfer, ModeCombSpec};
use crate::spectral::jsa::{BuilderProvenance, JointSpectralAmplitude};

const LN2: f64 = std::f64::consts::LN_2;

/// Pump field spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PumpSpectrum {
    /// Ideal cw pump at a single angular frequency. Energy conservation then
    /// pins ω+ = ω_p and the amplitude collapses to a line over ω−.
    Monochromatic { omega: f64 },
    /// Transform-limited Gaussian pulse. `sigma` is the rms width of the
    /// amplitude spectrum α(ω+) = exp(−(ω+ − center)² / (2σ²)).
    GaussianPulse { center: f64, sigma: f64 },
}

impl PumpSpectrum {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PumpSpectrum::Monochromatic { omega } => {
                if !omega.is_finite() {
                    return Err(AhcError::config("pump frequency must be finite"));
                }
            }
            PumpSpectrum::GaussianPulse { center, sigma } => {
                if !center.is_finite() {
                    return Err(AhcError::config("pump center must be finite"));
                }
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(AhcError::config(format!(
                        "pump spectral width must be positive, got {sigma}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn amplitude(&self, omega_plus: f64) -> f64 {
        match *self {
            PumpSpectrum::Monochromatic { .. } => 1.0,
            PumpSpectrum::GaussianPulse { center, sigma } => {
                let x = (omega_plus - center) / sigma;
                (-0.5 * x * x).exp()
            }
        }
    }
}

/// Phase-matching envelope over the difference frequency ω− = ω_s − ω_i.
///
/// The crystal acceptance varies slowly with the signal/idler split and is
/// essentially flat along the pump energy line, so it is modeled as a
/// function of ω− alone. `fwhm` is the intensity FWHM; the amplitude used is
/// exp(−2·ln2·((ω− − center)/fwhm)²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseMatchingEnvelope {
    Flat,
    Gaussian { center: f64, fwhm: f64 },
}

impl PhaseMatchingEnvelope {
    pub fn validate(&self) -> Result<()> {
        if let PhaseMatchingEnvelope::Gaussian { center, fwhm } = *self {
            if !center.is_finite() {
                return Err(AhcError::config("phase-matching center must be finite"));
            }
            if !(fwhm > 0.0) || !fwhm.is_finite() {
                return Err(AhcError::config(format!(
                    "phase-matching bandwidth must be positive, got {fwhm}"
                )));
            }
        }
        Ok(())
    }

    fn amplitude(&self, omega_minus: f64) -> f64 {
        match *self {
            PhaseMatchingEnvelope::Flat => 1.0,
            PhaseMatchingEnvelope::Gaussian { center, fwhm } => {
                let x = (omega_minus - center) / fwhm;
                (-2.0 * LN2 * x * x).exp()
            }
        }
    }
}

/// Build the joint spectral amplitude of a doubly resonant SPDC source.
///
/// Monochromatic pump: the grid must be cw-collapsed; the line is
/// f(ω−) = F(ω−)·A_s((ω_p + ω−)/2)·A_i((ω_p − ω−)/2).
///
/// Pulsed pump: the grid must be 2D, in either convention; the surface is
/// α(ω+)·F(ω−)·A_s(ω_s)·A_i(ω_i).
///
/// The result is L2-normalized. When a Gaussian phase-matching envelope
/// leaves more than 1% of the resonant-pair ladder power outside the comb
/// mode range, a warning is recorded in the metadata. Flat envelopes have no
/// natural cutoff and carry no truncation estimate.
pub fn build_cespdc_jsa(
    pump: &PumpSpectrum,
    signal: &ModeCombSpec,
    idler: &ModeCombSpec,
    pm: &PhaseMatchingEnvelope,
    grid: &FrequencyGrid,
) -> Result<JointSpectralAmplitude> {
    pump.validate()?;
    signal.validate()?;
    idler.validate()?;
    pm.validate()?;
    grid.validate()?;
    check_linewidth_coverage(signal, idler, grid)?;

    let n1 = grid.first.n;
    let n2 = grid.second.n;
    let mut values = Array2::from_elem((n1, n2), Complex64::new(0.0, 0.0));

    match (pump, grid.cw_collapsed()) {
        (PumpSpectrum::Monochromatic { omega }, true) => {
            let omega_p = grid.first.center;
            let tol = 1e-6 * omega.abs().max(1.0);
            if (omega_p - omega).abs() > tol {
                return Err(AhcError::config(format!(
                    "collapsed sum axis sits at {omega_p} but the pump is at {omega}"
                )));
            }
            for k in 0..n2 {
                let wm = grid.second.value(k);
                let ws = 0.5 * (omega_p + wm);
                let wi = 0.5 * (omega_p - wm);
                values[(0, k)] = pm.amplitude(wm)
                    * cavity_comb_amplitude(ws, signal)
                    * cavity_comb_amplitude(wi, idler);
            }
        }
        (PumpSpectrum::Monochromatic { .. }, false) => {
            return Err(AhcError::config(
                "a monochromatic pump needs a cw grid with a collapsed sum axis",
            ));
        }
        (PumpSpectrum::GaussianPulse { .. }, true) => {
            return Err(AhcError::config(
                "a pulsed pump needs a 2D grid; the sum axis is collapsed",
            ));
        }
        (PumpSpectrum::GaussianPulse { .. }, false) => {
            for k1 in 0..n1 {
                let a = grid.first.value(k1);
                for k2 in 0..n2 {
                    let b = grid.second.value(k2);
                    let (wp, wm, ws, wi) = match grid.convention {
                        CoordinateConvention::SumDiff => (a, b, 0.5 * (a + b), 0.5 * (a - b)),
                        CoordinateConvention::SignalIdler => (a + b, a - b, a, b),
                    };
                    values[(k1, k2)] = pump.amplitude(wp)
                        * pm.amplitude(wm)
                        * cavity_comb_amplitude(ws, signal)
                        * cavity_comb_amplitude(wi, idler);
                }
            }
        }
    }

    let mut jsa = JointSpectralAmplitude::new(grid.clone(), values)?;
    jsa.normalize()?;
    jsa.metadata.builder = Some(BuilderProvenance {
        pump: *pump,
        signal: *signal,
        idler: *idler,
        phase_matching: *pm,
        filters: None,
    });
    if let Some(loss) = truncation_loss(signal, idler, pm) {
        jsa.metadata.truncation_loss = Some(loss);
        if loss > 0.01 {
            jsa.metadata.warnings.push(format!(
                "comb mode range truncates {:.2}% of the phase-matched pair ladder",
                100.0 * loss
            ));
        }
    }
    Ok(jsa)
}

fn check_linewidth_coverage(
    signal: &ModeCombSpec,
    idler: &ModeCombSpec,
    grid: &FrequencyGrid,
) -> Result<()> {
    match grid.convention {
        CoordinateConvention::SumDiff => {
            let gamma = signal.linewidth.max(idler.linewidth);
            if grid.second.n > 1 && grid.second.span < 4.0 * gamma {
                return Err(AhcError::config(format!(
                    "difference axis span {:.3e} is narrower than four linewidths ({:.3e})",
                    grid.second.span,
                    4.0 * gamma
                )));
            }
        }
        CoordinateConvention::SignalIdler => {
            for (name, ax, comb) in [
                ("signal", &grid.first, signal),
                ("idler", &grid.second, idler),
            ] {
                if ax.span < 4.0 * comb.linewidth {
                    return Err(AhcError::config(format!(
                        "{name} axis span {:.3e} is narrower than four linewidths ({:.3e})",
                        ax.span,
                        4.0 * comb.linewidth
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Fraction of envelope-weighted pair power outside the comb mode ranges.
///
/// Resonant pairs couple signal mode m to idler mode −m; pair m sits at
/// ω− = ω−0 + m·(FSR_s + FSR_i) and carries weight F(ω−)². `None` for flat
/// envelopes.
fn truncation_loss(
    signal: &ModeCombSpec,
    idler: &ModeCombSpec,
    pm: &PhaseMatchingEnvelope,
) -> Option<f64> {
    if matches!(pm, PhaseMatchingEnvelope::Flat) {
        return None;
    }
    let pair_lo = signal.m_range.0.max(-idler.m_range.1);
    let pair_hi = signal.m_range.1.min(-idler.m_range.0);
    let base = signal.center - idler.center;
    let spacing = signal.fsr + idler.fsr;
    let weight = |m: i64| {
        let f = pm.amplitude(base + m as f64 * spacing);
        f * f
    };
    let mut inside = 0.0;
    for m in pair_lo..=pair_hi {
        inside += weight(m);
    }
    let mut total = inside;
    let wmax = (pair_lo..=pair_hi).map(weight).fold(weight(0), f64::max);
    let floor = 1e-9 * wmax.max(f64::MIN_POSITIVE);
    for (start, step) in [(pair_hi + 1, 1i64), (pair_lo - 1, -1i64)] {
        let mut m = start;
        let mut quiet = 0;
        while quiet < 3 && (m - start).unsigned_abs() < 1_000_000 {
            let w = weight(m);
            total += w;
            quiet = if w < floor { quiet + 1 } else { 0 };
            m += step;
        }
    }
    if total > 0.0 {
        Some(1.0 - inside / total)
    } else {
        None
    }
}

/// Single-pair-line amplitude g(ω−) ∝ 1 / (γ² + (ω−0 − ω−)²).
///
/// This is the monochromatic-pump amplitude of one doubly resonant mode pair
/// with common intensity FWHM γ, real by construction, L2-normalized on the
/// grid. The difference axis must cover at least four linewidths.
pub fn single_mode_lorentzian_g(
    omega_pump: f64,
    gamma: f64,
    omega_minus0: f64,
    diff_axis: crate::grid::Axis,
) -> Result<JointSpectralAmplitude> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(AhcError::config(format!(
            "linewidth must be positive, got {gamma}"
        )));
    }
    if diff_axis.span < 4.0 * gamma {
        return Err(AhcError::config(format!(
            "difference axis span {:.3e} is narrower than four linewidths ({:.3e})",
            diff_axis.span,
            4.0 * gamma
        )));
    }
    let grid = FrequencyGrid::cw(omega_pump, diff_axis)?;
    let n = grid.second.n;
    let mut values = Array2::from_elem((1, n), Complex64::new(0.0, 0.0));
    for k in 0..n {
        let d = omega_minus0 - grid.second.value(k);
        values[(0, k)] = Complex64::new(1.0 / (gamma * gamma + d * d), 0.0);
    }
    let mut jsa = JointSpectralAmplitude::new(grid, values)?;
    jsa.normalize()?;
    Ok(jsa)
}

/// Apply Fabry-Perot filter combs to the signal and idler arms.
///
/// Each point is multiplied by the unit-peak transfers of both filters, the
/// transmitted power fraction is recorded, and the result is renormalized.
pub fn apply_fp_filters(
    jsa: &JointSpectralAmplitude,
    filter_signal: &ModeCombSpec,
    filter_idler: &ModeCombSpec,
) -> Result<JointSpectralAmplitude> {
    filter_signal.validate()?;
    filter_idler.validate()?;
    let before = jsa.l2_norm();
    if !(before > 0.0) {
        return Err(AhcError::Numerics("input amplitude has zero norm".into()));
    }
    let grid = &jsa.grid;
    let mut values = jsa.values.clone();
    for k1 in 0..grid.first.n {
        let a = grid.first.value(k1);
        for k2 in 0..grid.second.n {
            let b = grid.second.value(k2);
            let (ws, wi) = match grid.convention {
                CoordinateConvention::SumDiff => (0.5 * (a + b), 0.5 * (a - b)),
                CoordinateConvention::SignalIdler => (a, b),
            };
            values[(k1, k2)] *=
                filter_transfer(ws, filter_signal) * filter_transfer(wi, filter_idler);
        }
    }
    let mut out = JointSpectralAmplitude::new(grid.clone(), values)?;
    let after = out.l2_norm();
    let fraction = (after / before).powi(2);
    if !(after > 0.0) || !fraction.is_finite() {
        return Err(AhcError::Numerics(
            "filters removed all power from the amplitude".into(),
        ));
    }
    out.normalize()?;
    let mut metadata = jsa.metadata.clone();
    metadata.normalized = true;
    metadata.transmitted_fraction = Some(fraction);
    if let Some(ref mut prov) = metadata.builder {
        prov.filters = Some((*filter_signal, *filter_idler));
    }
    out.metadata = metadata;
    Ok(out)
}
