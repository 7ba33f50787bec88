//! Spectra of measured histograms and raw tag streams.

use serde::{Deserialize, Serialize};

use crate::analysis::histogram::CorrelationHistogram;
use crate::correlation::{psd_of_samples, PsdSpectrum, WindowKind};
use crate::error::Result;
use crate::TWO_PI;

/// Windowed one-sided power spectral density of histogram counts.
pub fn psd_estimate(hist: &CorrelationHistogram, window: WindowKind) -> Result<PsdSpectrum> {
    let axis = hist.axis()?;
    psd_of_samples(&hist.counts_f64(), &axis, window)
}

/// Where a frequency lands after sampling at `sample_rate_hz`: the absolute
/// offset to the nearest multiple of the sample rate.
pub fn alias_frequency(freq_hz: f64, sample_rate_hz: f64) -> f64 {
    if sample_rate_hz <= 0.0 {
        return freq_hz.abs();
    }
    (freq_hz - sample_rate_hz * (freq_hz / sample_rate_hz).round()).abs()
}

/// Frequency bounds a histogram can resolve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    /// Spectral resolution set by the delay window, 1 / (2 window).
    pub resolution_hz: f64,
    /// Highest representable beat frequency, 1 / (2 bin width).
    pub max_frequency_hz: f64,
    pub note: String,
}

/// Resolution limits implied by a histogram's window and bin width.
pub fn resolution_report(hist: &CorrelationHistogram) -> ResolutionReport {
    let window = hist.bin_centers.last().copied().unwrap_or(0.0).abs();
    let resolution_hz = if window > 0.0 {
        1.0 / (2.0 * window)
    } else {
        f64::INFINITY
    };
    let max_frequency_hz = 1.0 / (2.0 * hist.bin_width);
    ResolutionReport {
        resolution_hz,
        max_frequency_hz,
        note: format!(
            "beats resolve to {:.3} kHz; frequencies above {:.3} MHz alias",
            resolution_hz / 1e3,
            max_frequency_hz / 1e6
        ),
    }
}

/// Periodogram of a point process at chosen frequencies:
/// z(f) = |sum_k exp(i 2 pi f t_k)|^2 / N.
///
/// Under the null hypothesis of no modulation at `f`, z is approximately
/// Exp(1) distributed, so z values far above the typical scale of control
/// frequencies indicate genuine modulation.
pub fn point_process_power(ticks: &[u64], tick_seconds: f64, freqs_hz: &[f64]) -> Vec<f64> {
    let n = ticks.len();
    if n == 0 {
        return vec![0.0; freqs_hz.len()];
    }
    freqs_hz
        .iter()
        .map(|&f| {
            let w = TWO_PI * f * tick_seconds;
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for &tick in ticks {
                let phase = w * tick as f64;
                let (s, c) = phase.sin_cos();
                re += c;
                im += s;
            }
            (re * re + im * im) / n as f64
        })
        .collect()
}
