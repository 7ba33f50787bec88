//! Two-photon correlation functions and their spectra.
//!
//! [`g2_from_jsa`] turns a joint spectral amplitude into the coincidence
//! density G²(t+, t−) behind a beam splitter, evaluated with chirp-z
//! transforms on arbitrary delay grids. Closed-form references for the
//! single-pair-line case and power spectral densities of the resulting
//! traces live alongside.

pub mod czt;

mod closed_form;
mod g1;
mod g2;
mod psd;

pub use closed_form::{g2_closed_form_cw, g2_closed_form_trace};
pub use g1::g1_output_intensity;
pub use g2::{g2_from_jsa, ChannelPair, G2Surface};
pub use psd::{psd_of_g2, psd_of_samples, PsdSpectrum, WindowKind};
