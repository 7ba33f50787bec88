//! Lorentzian mode combs for cavity-enhanced emission and Fabry-Perot filtering.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::TWO_PI;

/// Evenly spaced comb of Lorentzian cavity modes.
///
/// All frequencies are angular (rad/s). `linewidth` is the intensity FWHM of a
/// single mode; the field amplitude of one mode has HWHM `linewidth / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCombSpec {
    /// Angular frequency of the m = 0 mode.
    pub center: f64,
    /// Intensity FWHM of each mode (rad/s).
    pub linewidth: f64,
    /// Free spectral range (rad/s).
    pub fsr: f64,
    /// Inclusive mode index range `(m_min, m_max)` with `m_min <= 0 <= m_max`.
    pub m_range: (i64, i64),
}

impl ModeCombSpec {
    /// Comb with a single mode at `center`. The FSR never enters for m = 0;
    /// it is set to the linewidth to stay positive.
    pub fn single_mode(center: f64, linewidth: f64) -> Self {
        Self {
            center,
            linewidth,
            fsr: linewidth.max(f64::MIN_POSITIVE),
            m_range: (0, 0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth > 0.0) || !self.linewidth.is_finite() {
            return Err(AhcError::config(format!(
                "mode linewidth must be positive and finite, got {}",
                self.linewidth
            )));
        }
        if !(self.fsr > 0.0) || !self.fsr.is_finite() {
            return Err(AhcError::config(format!(
                "free spectral range must be positive and finite, got {}",
                self.fsr
            )));
        }
        if !self.center.is_finite() {
            return Err(AhcError::config("comb center must be finite"));
        }
        let (lo, hi) = self.m_range;
        if lo > 0 || hi < 0 {
            return Err(AhcError::config(format!(
                "mode index range ({lo}, {hi}) must contain m = 0"
            )));
        }
        Ok(())
    }

    /// Number of modes in the range.
    pub fn mode_count(&self) -> usize {
        (self.m_range.1 - self.m_range.0 + 1) as usize
    }

    /// Angular frequency of mode `m`.
    pub fn mode_frequency(&self, m: i64) -> f64 {
        self.center + m as f64 * self.fsr
    }
}

/// Comb amplitude Σ_m sqrt(γ/2π) / (γ/2 + i(ω0 + m·FSR − ω)).
///
/// Each term integrates to unit power over ω, so a single isolated mode is an
/// L2-normalized line. The value is largest on resonance where a term reaches
/// `sqrt(2/(π γ))`.
pub fn cavity_comb_amplitude(omega: f64, spec: &ModeCombSpec) -> Complex64 {
    let hwhm = 0.5 * spec.linewidth;
    let scale = (spec.linewidth / TWO_PI).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for m in spec.m_range.0..=spec.m_range.1 {
        let detuning = spec.center + m as f64 * spec.fsr - omega;
        acc += scale / Complex64::new(hwhm, detuning);
    }
    acc
}

/// Unit-peak filter transfer Σ_m (γ/2) / (γ/2 + i(ω0 + m·FSR − ω)).
///
/// On resonance with one mode the transmission magnitude is 1 (up to far-mode
/// tails), so applying the filter to an amplitude and comparing norms yields a
/// transmitted power fraction in [0, 1].
pub fn filter_transfer(omega: f64, spec: &ModeCombSpec) -> Complex64 {
    let hwhm = 0.5 * spec.linewidth;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in spec.m_range.0..=spec.m_range.1 {
        let detuning = spec.center + m as f64 * spec.fsr - omega;
        acc += hwhm / Complex64::new(hwhm, detuning);
    }
    acc
}
