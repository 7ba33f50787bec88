//! Command-line front end: configuration schema, pipeline stages, and run
//! reports for the pair-source simulator and analysis chain.

pub mod config;
pub mod pipeline;
pub mod report;
