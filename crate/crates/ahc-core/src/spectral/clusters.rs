//! Mode-cluster detection on a cw spectral line.

use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::spectral::jsa::JointSpectralAmplitude;

/// Options for [`cluster_report`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClusterOptions {
    /// Peaks below this fraction of the tallest peak are dropped entirely.
    pub global_threshold: f64,
    /// Within a cluster, modes count if they reach this fraction of the
    /// cluster's tallest peak.
    pub per_cluster_threshold: f64,
    /// Gap (rad/s) separating clusters. `None` derives it as 8x the median
    /// spacing of adjacent retained peaks.
    pub cluster_gap: Option<f64>,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            global_threshold: 0.01,
            per_cluster_threshold: (-1.0f64).exp(),
            cluster_gap: None,
        }
    }
}

/// One refined intensity peak on the line.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Peak {
    /// Interpolated ω− position (rad/s).
    pub omega_minus: f64,
    /// Interpolated intensity relative to the tallest peak.
    pub relative_height: f64,
}

/// A group of neighboring peaks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cluster {
    /// Intensity-weighted center (rad/s).
    pub center: f64,
    /// Peaks in the cluster, in frequency order.
    pub peaks: Vec<Peak>,
    /// Number of peaks at or above the per-cluster threshold.
    pub mode_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterReport {
    pub peaks: Vec<Peak>,
    pub clusters: Vec<Cluster>,
    pub options: ClusterOptions,
}

/// Locate intensity peaks of a cw line and group them into clusters.
///
/// Local maxima of |f|² are refined with a three-point parabola (position and
/// height), gated at `global_threshold` relative to the tallest, and grouped
/// wherever the gap between consecutive peaks exceeds the cluster gap.
pub fn cluster_report(
    jsa: &JointSpectralAmplitude,
    options: &ClusterOptions,
) -> Result<ClusterReport> {
    if !(options.global_threshold > 0.0 && options.global_threshold < 1.0) {
        return Err(AhcError::config("global threshold must be in (0, 1)"));
    }
    if !(options.per_cluster_threshold > 0.0 && options.per_cluster_threshold < 1.0) {
        return Err(AhcError::config("per-cluster threshold must be in (0, 1)"));
    }
    let line = jsa.line()?;
    let axis = &jsa.grid.second;
    let power: Vec<f64> = line.iter().map(|v| v.norm_sqr()).collect();
    let n = power.len();
    if n < 3 {
        return Err(AhcError::config("line too short for peak finding"));
    }

    let mut peaks = Vec::new();
    for k in 1..n - 1 {
        if power[k] > power[k - 1] && power[k] >= power[k + 1] && power[k] > 0.0 {
            let (dx, height) = parabolic_refine(power[k - 1], power[k], power[k + 1]);
            peaks.push(Peak {
                omega_minus: axis.value(k) + dx * axis.step(),
                relative_height: height,
            });
        }
    }
    if peaks.is_empty() {
        return Err(AhcError::Numerics("no local maxima found on the line".into()));
    }
    let top = peaks
        .iter()
        .map(|p| p.relative_height)
        .fold(0.0f64, f64::max);
    for p in &mut peaks {
        p.relative_height /= top;
    }
    peaks.retain(|p| p.relative_height >= options.global_threshold);

    let gap = match options.cluster_gap {
        Some(g) if g > 0.0 => g,
        Some(_) => return Err(AhcError::config("cluster gap must be positive")),
        None => {
            let mut spacings: Vec<f64> = peaks
                .windows(2)
                .map(|w| w[1].omega_minus - w[0].omega_minus)
                .collect();
            if spacings.is_empty() {
                f64::INFINITY
            } else {
                spacings.sort_by(|a, b| a.total_cmp(b));
                8.0 * spacings[spacings.len() / 2]
            }
        }
    };

    let mut clusters: Vec<Cluster> = Vec::new();
    let mut current: Vec<Peak> = Vec::new();
    for p in &peaks {
        if let Some(last) = current.last() {
            if p.omega_minus - last.omega_minus > gap {
                clusters.push(close_cluster(std::mem::take(&mut current), options));
            }
        }
        current.push(*p);
    }
    if !current.is_empty() {
        clusters.push(close_cluster(current, options));
    }

    Ok(ClusterReport {
        peaks,
        clusters,
        options: *options,
    })
}

fn close_cluster(peaks: Vec<Peak>, options: &ClusterOptions) -> Cluster {
    let total: f64 = peaks.iter().map(|p| p.relative_height).sum();
    let center = peaks
        .iter()
        .map(|p| p.omega_minus * p.relative_height)
        .sum::<f64>()
        / total;
    let local_max = peaks
        .iter()
        .map(|p| p.relative_height)
        .fold(0.0f64, f64::max);
    let mode_count = peaks
        .iter()
        .filter(|p| p.relative_height >= options.per_cluster_threshold * local_max)
        .count();
    Cluster {
        center,
        peaks,
        mode_count,
    }
}

/// Vertex of the parabola through (-1, ym), (0, y0), (+1, yp).
/// Returns (offset in grid steps, refined height).
fn parabolic_refine(ym: f64, y0: f64, yp: f64) -> (f64, f64) {
    let denom = ym - 2.0 * y0 + yp;
    if denom >= 0.0 || denom.abs() < f64::MIN_POSITIVE {
        return (0.0, y0);
    }
    let dx = 0.5 * (ym - yp) / denom;
    let dx = dx.clamp(-0.5, 0.5);
    (dx, y0 - 0.25 * (ym - yp) * dx)
}
