//! Self-describing JSON containers and plot-ready CSV exports.
//!
//! Container layout (format_version 1): a JSON object with `format_version`,
//! a `kind` tag naming the payload, axis descriptors in ordinary frequency
//! (Hz) or seconds, and sample arrays as base64 of little-endian f64 bytes.
//! Complex arrays interleave re, im per point in row-major order. Axis
//! descriptors also carry the exact angular values (`center_rad_per_s`,
//! `span_rad_per_s`) so a write/read cycle reproduces the grid bit for bit;
//! readers fall back to the Hz fields when those are absent.

use std::fs;
use std::io::Write;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::CorrelationHistogram;
use crate::correlation::PsdSpectrum;
use crate::entanglement::SweepPoint;
use crate::error::{AhcError, Result};
use crate::grid::{Axis, CoordinateConvention, FrequencyGrid};
use crate::simulator::G2TraceSet;
use crate::spectral::{JointSpectralAmplitude, JsaMetadata};
use crate::TWO_PI;

pub const CONTAINER_VERSION: u32 = 1;

/// One frequency axis of a JSA container, in Hz with exact angular shadows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSchema {
    /// "sum", "difference", "signal", or "idler".
    pub role: String,
    pub center_hz: f64,
    pub span_hz: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_rad_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_rad_per_s: Option<f64>,
}

impl AxisSchema {
    fn from_axis(role: &str, axis: &Axis) -> Self {
        Self {
            role: role.into(),
            center_hz: axis.center / TWO_PI,
            span_hz: axis.span / TWO_PI,
            n: axis.n,
            center_rad_per_s: Some(axis.center),
            span_rad_per_s: Some(axis.span),
        }
    }

    fn to_axis(&self) -> Result<Axis> {
        let center = self.center_rad_per_s.unwrap_or(self.center_hz * TWO_PI);
        let span = self.span_rad_per_s.unwrap_or(self.span_hz * TWO_PI);
        Axis::new(center, span, self.n)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsaContainer {
    format_version: u32,
    kind: String,
    convention: String,
    axes: Vec<AxisSchema>,
    /// Base64 of row-major little-endian f64 pairs (re, im).
    values_base64: String,
    metadata: JsaMetadata,
}

fn encode_complex(values: &Array2<Complex64>) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 16);
    for v in values.iter() {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    B64.encode(bytes)
}

fn encode_real(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    B64.encode(bytes)
}

fn decode_bytes(b64: &str, what: &str) -> Result<Vec<u8>> {
    B64.decode(b64.trim())
        .map_err(|e| AhcError::parse(format!("{what}: invalid base64: {e}"), None))
}

fn decode_real(b64: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = decode_bytes(b64, what)?;
    if bytes.len() != expected * 8 {
        return Err(AhcError::parse(
            format!(
                "{what}: expected {} bytes for {expected} f64 values, got {}",
                expected * 8,
                bytes.len()
            ),
            None,
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Serialize a joint spectral amplitude to the v1 JSON container.
pub fn jsa_to_json(jsa: &JointSpectralAmplitude) -> Result<String> {
    let roles = match jsa.grid.convention {
        CoordinateConvention::SumDiff => ["sum", "difference"],
        CoordinateConvention::SignalIdler => ["signal", "idler"],
    };
    let container = JsaContainer {
        format_version: CONTAINER_VERSION,
        kind: "joint_spectral_amplitude".into(),
        convention: match jsa.grid.convention {
            CoordinateConvention::SumDiff => "sum_diff".into(),
            CoordinateConvention::SignalIdler => "signal_idler".into(),
        },
        axes: vec![
            AxisSchema::from_axis(roles[0], &jsa.grid.first),
            AxisSchema::from_axis(roles[1], &jsa.grid.second),
        ],
        values_base64: encode_complex(&jsa.values),
        metadata: jsa.metadata.clone(),
    };
    serde_json::to_string_pretty(&container)
        .map_err(|e| AhcError::parse(format!("container serialization failed: {e}"), None))
}

/// Parse a v1 JSON container back into an amplitude.
pub fn jsa_from_json(text: &str) -> Result<JointSpectralAmplitude> {
    let container: JsaContainer = serde_json::from_str(text)
        .map_err(|e| AhcError::parse(format!("container JSON: {e}"), None))?;
    if container.format_version != CONTAINER_VERSION {
        return Err(AhcError::parse(
            format!(
                "unsupported container version {} (reader handles {CONTAINER_VERSION})",
                container.format_version
            ),
            None,
        ));
    }
    if container.kind != "joint_spectral_amplitude" {
        return Err(AhcError::parse(
            format!("expected a joint_spectral_amplitude container, got kind {:?}", container.kind),
            None,
        ));
    }
    let convention = match container.convention.as_str() {
        "sum_diff" => CoordinateConvention::SumDiff,
        "signal_idler" => CoordinateConvention::SignalIdler,
        other => {
            return Err(AhcError::parse(
                format!("unknown coordinate convention {other:?}"),
                None,
            ))
        }
    };
    if container.axes.len() != 2 {
        return Err(AhcError::parse(
            format!("expected 2 axes, got {}", container.axes.len()),
            None,
        ));
    }
    let first = container.axes[0].to_axis()?;
    let second = container.axes[1].to_axis()?;
    let grid = FrequencyGrid {
        convention,
        first,
        second,
    };
    grid.validate()?;
    let n = grid.first.n * grid.second.n;
    let bytes = decode_bytes(&container.values_base64, "values")?;
    if bytes.len() != n * 16 {
        return Err(AhcError::parse(
            format!(
                "values: expected {} bytes for {n} complex points, got {}",
                n * 16,
                bytes.len()
            ),
            None,
        ));
    }
    let flat: Vec<Complex64> = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let values = Array2::from_shape_vec((grid.first.n, grid.second.n), flat)
        .map_err(|e| AhcError::parse(format!("values shape: {e}"), None))?;
    let mut jsa = JointSpectralAmplitude::new(grid, values)?;
    jsa.metadata = container.metadata;
    Ok(jsa)
}

pub fn write_jsa_file(path: &Path, jsa: &JointSpectralAmplitude) -> Result<()> {
    fs::write(path, jsa_to_json(jsa)?)?;
    Ok(())
}

pub fn read_jsa_file(path: &Path) -> Result<JointSpectralAmplitude> {
    jsa_from_json(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TimeAxisSchema {
    role: String,
    center_s: f64,
    span_s: f64,
    n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct G2Container {
    format_version: u32,
    kind: String,
    delay_axis: TimeAxisSchema,
    cc_base64: String,
    dd_base64: String,
    cd_base64: String,
    ab_base64: String,
}

/// Serialize predicted correlation traces to the v1 JSON container.
pub fn g2_to_json(traces: &G2TraceSet) -> Result<String> {
    let container = G2Container {
        format_version: CONTAINER_VERSION,
        kind: "g2_traces".into(),
        delay_axis: TimeAxisSchema {
            role: "delay".into(),
            center_s: traces.axis.center,
            span_s: traces.axis.span,
            n: traces.axis.n,
        },
        cc_base64: encode_real(&traces.cc),
        dd_base64: encode_real(&traces.dd),
        cd_base64: encode_real(&traces.cd),
        ab_base64: encode_real(&traces.ab),
    };
    serde_json::to_string_pretty(&container)
        .map_err(|e| AhcError::parse(format!("container serialization failed: {e}"), None))
}

/// Parse correlation traces from the v1 JSON container.
pub fn g2_from_json(text: &str) -> Result<G2TraceSet> {
    let container: G2Container = serde_json::from_str(text)
        .map_err(|e| AhcError::parse(format!("container JSON: {e}"), None))?;
    if container.format_version != CONTAINER_VERSION {
        return Err(AhcError::parse(
            format!("unsupported container version {}", container.format_version),
            None,
        ));
    }
    if container.kind != "g2_traces" {
        return Err(AhcError::parse(
            format!("expected a g2_traces container, got kind {:?}", container.kind),
            None,
        ));
    }
    let ax = &container.delay_axis;
    let axis = Axis::new(ax.center_s, ax.span_s, ax.n)?;
    let n = ax.n;
    G2TraceSet::new(
        axis,
        decode_real(&container.cc_base64, n, "cc")?,
        decode_real(&container.dd_base64, n, "dd")?,
        decode_real(&container.cd_base64, n, "cd")?,
        decode_real(&container.ab_base64, n, "ab")?,
    )
}

pub fn write_g2_file(path: &Path, traces: &G2TraceSet) -> Result<()> {
    fs::write(path, g2_to_json(traces)?)?;
    Ok(())
}

pub fn read_g2_file(path: &Path) -> Result<G2TraceSet> {
    g2_from_json(&fs::read_to_string(path)?)
}

/// Long-format CSV of the four correlation traces: delay_s,pairing,g2.
pub fn write_g2_csv<W: Write>(mut w: W, traces: &G2TraceSet) -> Result<()> {
    writeln!(w, "delay_s,pairing,g2")?;
    let delays = traces.axis.values();
    for (name, series) in [
        ("cc", &traces.cc),
        ("dd", &traces.dd),
        ("cd", &traces.cd),
        ("ab", &traces.ab),
    ] {
        for (t, v) in delays.iter().zip(series) {
            writeln!(w, "{t:.9e},{name},{v:.9e}")?;
        }
    }
    Ok(())
}

/// Histogram CSV: delay_s,count.
pub fn write_histogram_csv<W: Write>(mut w: W, hist: &CorrelationHistogram) -> Result<()> {
    writeln!(w, "delay_s,count")?;
    for (t, c) in hist.bin_centers.iter().zip(&hist.counts) {
        writeln!(w, "{t:.9e},{c}")?;
    }
    Ok(())
}

/// PSD CSV: freq_hz,power.
pub fn write_psd_csv<W: Write>(mut w: W, psd: &PsdSpectrum) -> Result<()> {
    writeln!(w, "freq_hz,power")?;
    for (f, p) in psd.freqs_hz.iter().zip(&psd.values) {
        writeln!(w, "{f:.9e},{p:.9e}")?;
    }
    Ok(())
}

/// Entropy sweep CSV: sigma_p_hz,entropy_nat,entropy_bits,schmidt_number.
pub fn write_sweep_csv<W: Write>(mut w: W, points: &[SweepPoint]) -> Result<()> {
    writeln!(w, "sigma_p_hz,entropy_nat,entropy_bits,schmidt_number")?;
    for p in points {
        writeln!(
            w,
            "{:.9e},{:.9e},{:.9e},{:.9e}",
            p.sigma / TWO_PI,
            p.spectrum.entropy_nat,
            p.spectrum.entropy_bits,
            p.spectrum.schmidt_number
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SweepContainer {
    format_version: u32,
    kind: String,
    points: Vec<SweepPoint>,
}

/// Entropy sweep as a JSON container.
pub fn sweep_to_json(points: &[SweepPoint]) -> Result<String> {
    let container = SweepContainer {
        format_version: CONTAINER_VERSION,
        kind: "entropy_sweep".into(),
        points: points.to_vec(),
    };
    serde_json::to_string_pretty(&container)
        .map_err(|e| AhcError::parse(format!("container serialization failed: {e}"), None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hz;
    use crate::spectral::single_mode_lorentzian_g;

    fn cw_jsa() -> JointSpectralAmplitude {
        let gamma = hz(7.6e6);
        let axis = Axis::new(hz(250e6), 40.0 * gamma, 64).unwrap();
        single_mode_lorentzian_g(0.0, gamma, hz(250e6), axis).unwrap()
    }

    #[test]
    fn jsa_roundtrip_is_bit_exact() {
        let jsa = cw_jsa();
        let text = jsa_to_json(&jsa).unwrap();
        let back = jsa_from_json(&text).unwrap();
        assert_eq!(back.grid.convention, jsa.grid.convention);
        assert_eq!(back.grid.first.center.to_bits(), jsa.grid.first.center.to_bits());
        assert_eq!(back.grid.second.span.to_bits(), jsa.grid.second.span.to_bits());
        assert_eq!(back.grid.second.n, jsa.grid.second.n);
        assert_eq!(back.metadata, jsa.metadata);
        for (a, b) in back.values.iter().zip(jsa.values.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn two_dimensional_roundtrip_keeps_shape_and_order() {
        let n = 8;
        let grid = FrequencyGrid::signal_idler(
            Axis::new(1e9, 1e8, n).unwrap(),
            Axis::new(-1e9, 1e8, n).unwrap(),
        )
        .unwrap();
        let mut values = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
        for a in 0..n {
            for b in 0..n {
                values[(a, b)] = Complex64::new(a as f64, -(b as f64));
            }
        }
        let jsa = JointSpectralAmplitude::new(grid, values).unwrap();
        let back = jsa_from_json(&jsa_to_json(&jsa).unwrap()).unwrap();
        assert_eq!(back.values[(3, 5)], Complex64::new(3.0, -5.0));
        assert_eq!(back.grid.convention, CoordinateConvention::SignalIdler);
    }

    #[test]
    fn version_and_kind_are_enforced() {
        let jsa = cw_jsa();
        let text = jsa_to_json(&jsa).unwrap();
        let wrong_version = text.replace("\"format_version\": 1", "\"format_version\": 7");
        let err = jsa_from_json(&wrong_version).unwrap_err();
        assert!(err.to_string().contains("version 7"), "{err}");
        let wrong_kind = text.replace("joint_spectral_amplitude", "something_else");
        assert!(jsa_from_json(&wrong_kind).is_err());
    }

    #[test]
    fn truncated_payload_is_rejected_with_byte_counts() {
        let jsa = cw_jsa();
        let text = jsa_to_json(&jsa).unwrap();
        let container: serde_json::Value = serde_json::from_str(&text).unwrap();
        let b64 = container["values_base64"].as_str().unwrap();
        let truncated = text.replace(b64, &b64[..b64.len() - 8]);
        let err = jsa_from_json(&truncated).unwrap_err();
        assert!(err.to_string().contains("bytes"), "{err}");
    }

    #[test]
    fn g2_container_roundtrips() {
        let axis = Axis::new(0.0, 8e-9, 5).unwrap();
        let traces = G2TraceSet::new(
            axis,
            vec![0.1, 0.2, 0.3, 0.2, 0.1],
            vec![0.1, 0.2, 0.3, 0.2, 0.1],
            vec![0.0, 0.1, 0.0, 0.1, 0.0],
            vec![0.2, 0.5, 0.6, 0.5, 0.2],
        )
        .unwrap();
        let back = g2_from_json(&g2_to_json(&traces).unwrap()).unwrap();
        assert_eq!(back.cd, traces.cd);
        assert_eq!(back.ab, traces.ab);
        assert_eq!(back.axis.span.to_bits(), traces.axis.span.to_bits());
    }

    #[test]
    fn csv_writers_emit_expected_headers() {
        let axis = Axis::new(0.0, 2e-9, 3).unwrap();
        let traces = G2TraceSet::new(
            axis,
            vec![0.1; 3],
            vec![0.1; 3],
            vec![0.2; 3],
            vec![0.6; 3],
        )
        .unwrap();
        let mut out = Vec::new();
        write_g2_csv(&mut out, &traces).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("delay_s,pairing,g2\n"));
        assert_eq!(text.lines().count(), 1 + 4 * 3);

        let hist = CorrelationHistogram {
            bin_centers: vec![-1e-9, 0.0, 1e-9],
            counts: vec![4, 9, 2],
            channel_pair: "CD".into(),
            total_pairs: 15,
            bin_width: 1e-9,
            flagged: vec![false; 3],
        };
        let mut out = Vec::new();
        write_histogram_csv(&mut out, &hist).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("delay_s,count\n"));
        assert!(text.contains(",9\n"));

        let psd = PsdSpectrum {
            freqs_hz: vec![0.0, 1e6],
            values: vec![1.0, 2.0],
            window: "rectangular".into(),
            normalization: "per-bin".into(),
            df_hz: 1e6,
        };
        let mut out = Vec::new();
        write_psd_csv(&mut out, &psd).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("freq_hz,power\n"));
    }

    #[test]
    fn sweep_csv_converts_sigma_to_ordinary_frequency() {
        use crate::entanglement::SchmidtSpectrum;
        let points = vec![SweepPoint {
            sigma: hz(5e6),
            grid_n: 256,
            spectrum: SchmidtSpectrum {
                lambdas: vec![0.9, 0.1],
                entropy_nat: 0.325,
                entropy_bits: 0.469,
                schmidt_number: 1.22,
            },
        }];
        let mut out = Vec::new();
        write_sweep_csv(&mut out, &points).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("sigma_p_hz,entropy_nat,entropy_bits,schmidt_number\n"));
        assert!(text.contains("5.000000000e6"), "{text}");
        let json = sweep_to_json(&points).unwrap();
        assert!(json.contains("entropy_sweep"));
    }
}
