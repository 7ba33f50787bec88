//! Simulation and analysis of beat-note (autoheterodyne) measurements on
//! narrow-band photon pairs.
//!
//! The crate covers the full chain from a spectral model of a cavity-enhanced
//! SPDC source to the statistics recovered from detector time tags:
//!
//! * [`spectral`] builds joint spectral amplitudes for cw and pulsed pumps,
//!   applies Fabry-Perot filtering, and reports mode clustering and marginals.
//! * [`correlation`] turns a JSA into second-order correlation surfaces for
//!   the beamsplitter channel pairs CC, DD, CD and AB, their power spectral
//!   densities, and first-order intensities.
//! * [`simulator`] draws Monte-Carlo photon-pair events from those
//!   correlation traces and pushes them through a detector model (efficiency,
//!   jitter, dark counts, dead time, clock quantization).
//! * [`tags`] defines the binary/CSV time-tag stream format.
//! * [`analysis`] recovers histograms, PSDs, beat-note fits, visibilities and
//!   contamination bounds from tag streams.
//! * [`entanglement`] computes Schmidt spectra and entropy sweeps of pulsed
//!   JSAs.
//!
//! Frequencies are angular (rad/s) everywhere inside the crate; conversion
//! from ordinary frequency in Hz happens at configuration boundaries only.

pub mod analysis;
pub mod container;
pub mod correlation;
pub mod entanglement;
pub mod error;
pub mod grid;
pub mod simulator;
pub mod spectral;
pub mod tags;

pub use error::AhcError;
pub use grid::{Axis, CoordinateConvention, CorrelationGrid, FrequencyGrid};

/// 2π, the conversion factor between ordinary and angular frequency.
pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Convert ordinary frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn hz(f: f64) -> f64 {
    TWO_PI * f
}

/// Convert angular frequency in rad/s to ordinary frequency in Hz.
#[inline]
pub fn to_hz(w: f64) -> f64 {
    w / TWO_PI
}
