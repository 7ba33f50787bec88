//! Joint spectral amplitude container.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::grid::{CoordinateConvention, FrequencyGrid};
use crate::spectral::{ModeCombSpec, PhaseMatchingEnvelope, PumpSpectrum};

/// Builder parameters recorded on a built amplitude, used later for
/// resolution checks and report provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuilderProvenance {
    pub pump: PumpSpectrum,
    pub signal: ModeCombSpec,
    pub idler: ModeCombSpec,
    pub phase_matching: PhaseMatchingEnvelope,
    /// Filter combs applied after building, signal then idler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<(ModeCombSpec, ModeCombSpec)>,
}

/// Identity of the run that produced a stored artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStamp {
    /// Hash of the configuration the run was started from.
    pub config_digest: String,
    /// Version of the code that wrote the file.
    pub code_version: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JsaMetadata {
    /// True when the values carry unit discrete L2 norm.
    pub normalized: bool,
    /// Power fraction surviving the most recent filtering step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmitted_fraction: Option<f64>,
    /// Estimated envelope-weighted power lost to mode-range truncation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<BuilderProvenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

/// Complex amplitude over a [`FrequencyGrid`].
///
/// Rows index the first grid axis, columns the second. A monochromatic-pump
/// amplitude is stored as a single row over the difference axis.
#[derive(Debug, Clone)]
pub struct JointSpectralAmplitude {
    pub grid: FrequencyGrid,
    pub values: Array2<Complex64>,
    pub metadata: JsaMetadata,
}

impl JointSpectralAmplitude {
    pub fn new(grid: FrequencyGrid, values: Array2<Complex64>) -> Result<Self> {
        grid.validate()?;
        if values.nrows() != grid.first.n || values.ncols() != grid.second.n {
            return Err(AhcError::config(format!(
                "value shape {}x{} does not match grid {}x{}",
                values.nrows(),
                values.ncols(),
                grid.first.n,
                grid.second.n
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(AhcError::Numerics(
                "amplitude contains non-finite values".into(),
            ));
        }
        Ok(Self {
            grid,
            values,
            metadata: JsaMetadata::default(),
        })
    }

    /// Discrete L2 norm `sqrt(Σ |f|²)`.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scale to unit discrete L2 norm.
    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.l2_norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(AhcError::Numerics(format!(
                "cannot normalize amplitude with L2 norm {norm}"
            )));
        }
        let inv = 1.0 / norm;
        self.values.mapv_inplace(|v| v * inv);
        self.metadata.normalized = true;
        Ok(())
    }

    pub fn convention(&self) -> CoordinateConvention {
        self.grid.convention
    }

    pub fn is_cw(&self) -> bool {
        self.grid.cw_collapsed()
    }

    /// View of the single ω− row of a monochromatic-pump amplitude.
    pub fn line(&self) -> Result<ndarray::ArrayView1<'_, Complex64>> {
        if !self.is_cw() {
            return Err(AhcError::config(
                "expected a monochromatic-pump amplitude (single row)",
            ));
        }
        Ok(self.values.row(0))
    }

    /// Error unless the norm is within `tol` of 1.
    pub fn require_normalized(&self, tol: f64) -> Result<()> {
        let norm = self.l2_norm();
        if (norm - 1.0).abs() > tol {
            return Err(AhcError::config(format!(
                "amplitude must be L2-normalized (norm = {norm})"
            )));
        }
        Ok(())
    }
}
