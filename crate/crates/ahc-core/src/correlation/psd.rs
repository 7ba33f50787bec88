//! Power spectral density of correlation traces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlation::czt::dft_uniform;
use crate::correlation::g2::G2Surface;
use crate::error::{AhcError, Result};
use crate::grid::Axis;
use crate::TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// No taper. Right choice for noiseless analytic traces, where leakage
    /// is dominated by the trace's own envelope.
    Rectangular,
    /// Raised cosine taper for noisy counted data.
    Hann,
}

impl WindowKind {
    pub fn label(self) -> &'static str {
        match self {
            WindowKind::Rectangular => "rectangular",
            WindowKind::Hann => "hann",
        }
    }

    pub fn weights(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; n],
            WindowKind::Hann => (0..n)
                .map(|j| {
                    let x = TWO_PI * j as f64 / (n - 1) as f64;
                    0.5 * (1.0 - x.cos())
                })
                .collect(),
        }
    }
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsdSpectrum {
    /// Ordinary frequencies in Hz, 0 to Nyquist inclusive.
    pub freqs_hz: Vec<f64>,
    pub values: Vec<f64>,
    pub window: String,
    /// Scale description; absolute units are not calibrated.
    pub normalization: String,
    /// Grid resolution in Hz (frequency bin spacing).
    pub df_hz: f64,
}

impl PsdSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One-sided |DFT|² of a cw correlation trace.
///
/// The trace mean is kept (no detrending): the DC ridge is part of the
/// lineshape. Frequencies run from 0 to the trace Nyquist in steps of
/// 1/(n·dt); values carry a dt² scale so refining the grid converges.
pub fn psd_of_g2(g2: &G2Surface, window: WindowKind) -> Result<PsdSpectrum> {
    let trace = g2.trace().map_err(|_| {
        AhcError::config(
            "power spectra are computed from cw traces; reduce the surface to a t− trace first",
        )
    })?;
    let axis = &g2.grid.diff_axis;
    psd_of_samples(&trace.to_vec(), axis, window)
}

/// One-sided |DFT|² of arbitrary real samples on a uniform delay axis.
pub fn psd_of_samples(samples: &[f64], axis: &Axis, window: WindowKind) -> Result<PsdSpectrum> {
    let n = samples.len();
    if n != axis.n {
        return Err(AhcError::config("sample count does not match the axis"));
    }
    if n < 4 {
        return Err(AhcError::config("trace too short for a spectrum"));
    }
    let dt = axis.step();
    let weights = window.weights(n);
    let x: Vec<Complex64> = samples
        .iter()
        .zip(&weights)
        .map(|(&v, &w)| Complex64::new(v * w, 0.0))
        .collect();
    let n_freq = n / 2 + 1;
    let df = 1.0 / (n as f64 * dt);
    let freq_axis = Axis {
        center: 0.5 * (n_freq - 1) as f64 * df * TWO_PI,
        span: (n_freq - 1) as f64 * df * TWO_PI,
        n: n_freq,
    };
    let spectrum = dft_uniform(&x, axis.start(), dt, &freq_axis, 1.0);
    let scale = dt * dt;
    Ok(PsdSpectrum {
        freqs_hz: (0..n_freq).map(|q| q as f64 * df).collect(),
        values: spectrum.iter().map(|z| z.norm_sqr() * scale).collect(),
        window: window.label().to_string(),
        normalization: "squared modulus of the windowed DFT times dt^2, one-sided".to_string(),
        df_hz: df,
    })
}
