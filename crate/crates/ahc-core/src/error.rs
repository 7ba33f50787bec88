//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, analysis, and file IO.
#[derive(Debug, Error)]
pub enum AhcError {
    /// Invalid configuration or parameters. `pointer` is a JSON-pointer-style
    /// path when the error originates from a structured config field.
    #[error("configuration error{}: {message}", pointer.as_ref().map(|p| format!(" at {p}")).unwrap_or_default())]
    Config {
        message: String,
        pointer: Option<String>,
    },

    /// A numeric routine failed to converge or produced non-finite values.
    #[error("numerical error: {0}")]
    Numerics(String),

    /// A fit could not identify the requested feature.
    #[error("fit error: {0}")]
    Fit(String),

    /// Several spectral peaks are comparable; refusing to pick one.
    /// Candidate frequencies are in Hz, powers relative to the strongest in dB.
    #[error("ambiguous spectrum: {} candidate peaks within {within_db:.1} dB: {}", candidates.len(), format_candidates(candidates))]
    AmbiguousPeak {
        candidates: Vec<(f64, f64)>,
        within_db: f64,
    },

    /// Malformed input file. `offset` is a byte offset when known.
    #[error("parse error{}: {message}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    Parse { message: String, offset: Option<u64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AhcError {
    /// Configuration error without a field path.
    pub fn config(message: impl Into<String>) -> Self {
        AhcError::Config {
            message: message.into(),
            pointer: None,
        }
    }

    /// Configuration error attached to a JSON-pointer path.
    pub fn config_at(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        AhcError::Config {
            message: message.into(),
            pointer: Some(pointer.into()),
        }
    }

    pub fn parse(message: impl Into<String>, offset: Option<u64>) -> Self {
        AhcError::Parse {
            message: message.into(),
            offset,
        }
    }
}

fn format_candidates(c: &[(f64, f64)]) -> String {
    c.iter()
        .map(|(f, db)| format!("{:.3} MHz ({:+.1} dB)", f / 1e6, db))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, AhcError>;
