//! Spectral model of the filtered cavity-enhanced SPDC source.
//!
//! The central object is the [`JointSpectralAmplitude`]: a complex amplitude
//! on a [`FrequencyGrid`], either a single line in ω− (monochromatic pump,
//! energy conservation integrated out analytically) or a full 2D surface
//! (pulsed pump). Builders normalize to unit discrete L2 norm and attach
//! bookkeeping metadata (transmitted power, truncation warnings, builder
//! parameters).

mod builder;
mod clusters;
mod comb;
mod jsa;
mod jta;
mod marginal;
mod symmetry;

pub use builder::{
    apply_fp_filters, build_cespdc_jsa, single_mode_lorentzian_g, PhaseMatchingEnvelope,
    PumpSpectrum,
};
pub use clusters::{cluster_report, Cluster, ClusterOptions, ClusterReport, Peak};
pub use comb::{cavity_comb_amplitude, filter_transfer, ModeCombSpec};
pub use jsa::{BuilderProvenance, JointSpectralAmplitude, JsaMetadata, RunStamp};
pub use jta::{conjugate_time_axis, jsa_from_jta, jta_from_jsa};
pub use marginal::{interpolated_fwhm, jsa_marginals, Marginals};
pub use symmetry::{decompose_symmetry, SymmetryParts};
