//! Time-tag analysis: correlation histograms, spectra, and beat-note fits.

pub mod fit;
pub mod histogram;
pub mod spectrum;

pub use fit::{
    fit_beat, fit_modulation_depth, fringe_attenuation, BeatFitResult, ContaminationProbe,
    FitOptions, ModulationEstimate,
};
pub use histogram::{
    auto_histogram, cross_histogram, CorrelationHistogram, HistogramAccumulator, HistogramConfig,
    PairingRule,
};
pub use spectrum::{
    alias_frequency, point_process_power, psd_estimate, resolution_report, ResolutionReport,
};
