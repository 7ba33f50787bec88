//! Monte-Carlo time-tag simulation of the two-detector experiment.
//!
//! Pairs are emitted as a Poisson process, assigned an outcome channel pair
//! and a relative delay drawn from tabulated coincidence densities, then
//! pushed through a per-detector chain: detection efficiency, Gaussian
//! timing jitter, dark counts, non-paralyzable dead time, and clock
//! quantization. The result is a merged, time-ordered tag stream.
//!
//! Randomness is split into independent deterministic streams (emission,
//! efficiency, jitter, darks per channel) so that streaming generation in
//! chunks is bit-identical to a one-shot run for the same seed.

mod detector;
mod sampler;

pub use detector::DetectorModel;
pub use sampler::{MixtureComponent, PairOutcome, SourceConfig};

use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::grid::Axis;
use crate::tags::{TagHeader, TimeTag, TimeTagStream, CHANNEL_NAMES};
use detector::DetectorEngine;
use sampler::PairSampler;

/// Beam-splitter output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputChannel {
    C = 0,
    D = 1,
}

/// One ideal (pre-detector) photon arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealEvent {
    /// Absolute arrival time in seconds.
    pub time: f64,
    pub channel: OutputChannel,
}

/// Tabulated coincidence densities used as sampling distributions.
///
/// `cc`, `dd`, `cd` are the per-pairing delay densities; `ab` is the
/// splitter-free envelope used for the reduced-visibility mixture. All four
/// share the delay axis. Absolute scale is irrelevant; integrals set the
/// outcome probabilities.
#[derive(Debug, Clone)]
pub struct G2TraceSet {
    pub axis: Axis,
    pub cc: Vec<f64>,
    pub dd: Vec<f64>,
    pub cd: Vec<f64>,
    pub ab: Vec<f64>,
}

impl G2TraceSet {
    pub fn new(axis: Axis, cc: Vec<f64>, dd: Vec<f64>, cd: Vec<f64>, ab: Vec<f64>) -> Result<Self> {
        let set = Self {
            axis,
            cc,
            dd,
            cd,
            ab,
        };
        set.validate()?;
        Ok(set)
    }

    /// Tabulate the single-pair-line closed forms on `axis`.
    pub fn from_closed_form(gamma: f64, omega_minus0: f64, axis: Axis) -> Result<Self> {
        use crate::correlation::{g2_closed_form_trace, ChannelPair};
        Self::new(
            axis,
            g2_closed_form_trace(gamma, omega_minus0, ChannelPair::CC, &axis),
            g2_closed_form_trace(gamma, omega_minus0, ChannelPair::DD, &axis),
            g2_closed_form_trace(gamma, omega_minus0, ChannelPair::CD, &axis),
            g2_closed_form_trace(gamma, omega_minus0, ChannelPair::AB, &axis),
        )
    }

    /// Collect computed surfaces (cw traces, shared grid) into a set.
    pub fn from_surfaces(
        cc: &crate::correlation::G2Surface,
        dd: &crate::correlation::G2Surface,
        cd: &crate::correlation::G2Surface,
        ab: &crate::correlation::G2Surface,
    ) -> Result<Self> {
        use crate::correlation::ChannelPair;
        for (surface, expect) in [
            (cc, ChannelPair::CC),
            (dd, ChannelPair::DD),
            (cd, ChannelPair::CD),
            (ab, ChannelPair::AB),
        ] {
            if surface.channel != expect {
                return Err(AhcError::config(format!(
                    "expected a {} surface, got {}",
                    expect.label(),
                    surface.channel.label()
                )));
            }
            if surface.grid.diff_axis != cc.grid.diff_axis {
                return Err(AhcError::config("trace grids differ between channels"));
            }
        }
        Self::new(
            cc.grid.diff_axis,
            cc.trace()?.to_vec(),
            dd.trace()?.to_vec(),
            cd.trace()?.to_vec(),
            ab.trace()?.to_vec(),
        )
    }

    fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("cc", &self.cc),
            ("dd", &self.dd),
            ("cd", &self.cd),
            ("ab", &self.ab),
        ] {
            if t.len() != self.axis.n {
                return Err(AhcError::config(format!(
                    "{name} trace length {} does not match the axis ({})",
                    t.len(),
                    self.axis.n
                )));
            }
            if t.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(AhcError::config(format!(
                    "{name} trace must be finite and non-negative"
                )));
            }
        }
        if self.axis.n < 2 {
            return Err(AhcError::config("trace axis needs at least two points"));
        }
        let total: f64 = self.cc.iter().chain(&self.dd).chain(&self.cd).sum();
        if !(total > 0.0) {
            return Err(AhcError::config(
                "coincidence densities are identically zero; nothing to sample",
            ));
        }
        Ok(())
    }

    /// Largest |delay| on the axis.
    pub fn max_abs_delay(&self) -> f64 {
        self.axis.start().abs().max(self.axis.value(self.axis.n - 1).abs())
    }
}

/// Bookkeeping from a simulation run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimStats {
    pub pairs_emitted: u64,
    /// Pairs routed to (cd, cc, dd).
    pub outcome_counts: [u64; 3],
    /// Pairs drawn from each mixture component.
    pub component_counts: Vec<u64>,
    pub clicks_lost_efficiency: u64,
    pub dark_counts: [u64; 2],
    pub dropped_dead_time: [u64; 2],
    pub dropped_out_of_range: u64,
    /// Tags in the final stream per channel.
    pub recorded: [u64; 2],
}

/// Simulate and collect the full tag stream in memory.
pub fn simulate(
    components: &[MixtureComponent<'_>],
    source: &SourceConfig,
    det_c: &DetectorModel,
    det_d: &DetectorModel,
    config_digest: &str,
) -> Result<(TimeTagStream, SimStats)> {
    let mut tags = Vec::new();
    let (header, stats) = simulate_stream(components, source, det_c, det_d, config_digest, |out| {
        tags.extend_from_slice(out)
    })?;
    Ok((TimeTagStream { header, tags }, stats))
}

/// Simulate in bounded memory, handing finished tag batches to `sink` in
/// stream order. Batches concatenate to exactly the stream [`simulate`]
/// returns for the same inputs.
pub fn simulate_stream(
    components: &[MixtureComponent<'_>],
    source: &SourceConfig,
    det_c: &DetectorModel,
    det_d: &DetectorModel,
    config_digest: &str,
    mut sink: impl FnMut(&[TimeTag]),
) -> Result<(TagHeader, SimStats)> {
    source.validate()?;
    det_c.validate()?;
    det_d.validate()?;
    if det_c.clock_tick != det_d.clock_tick {
        return Err(AhcError::config(
            "both detectors must share one clock tick to merge into a stream",
        ));
    }
    if components.is_empty() {
        return Err(AhcError::config("need at least one mixture component"));
    }

    let mut sampler = PairSampler::new(components, source)?;
    let mut engine = DetectorEngine::new(source, det_c, det_d)?;
    let holdback = {
        let max_delay = components
            .iter()
            .map(|c| c.traces.max_abs_delay())
            .fold(0.0f64, f64::max);
        let max_jitter = 10.0 * det_c.jitter_sigma.max(det_d.jitter_sigma);
        0.5 * max_delay + max_jitter + 1e-12
    };

    let chunk_pairs: u64 = 1 << 18;
    let chunk_duration = (chunk_pairs as f64 / source.pair_rate).max(1e-6);
    let mut chunk_end = chunk_duration.min(source.duration);
    let mut events = Vec::new();
    loop {
        events.clear();
        let exhausted = sampler.emit_until(chunk_end, &mut events);
        engine.feed(&events);
        if exhausted || chunk_end >= source.duration {
            let out = engine.finalize();
            sink(&out);
            break;
        }
        let out = engine.flush(chunk_end - holdback);
        sink(&out);
        chunk_end = (chunk_end + chunk_duration).min(source.duration);
    }

    let mut stats = SimStats {
        pairs_emitted: sampler.pairs_emitted(),
        outcome_counts: sampler.outcome_counts(),
        component_counts: sampler.component_counts().to_vec(),
        ..Default::default()
    };
    engine.fill_stats(&mut stats);

    let header = TagHeader {
        version: 1,
        tick_seconds: det_c.clock_tick,
        channel_names: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
        duration_seconds: source.duration,
        seed: source.seed,
        config_digest: config_digest.to_string(),
    };
    Ok((header, stats))
}

/// Draw the ideal (pre-detector) event list for a single trace set.
pub fn sample_pairs(
    traces: &G2TraceSet,
    source: &SourceConfig,
) -> Result<(Vec<IdealEvent>, SimStats)> {
    source.validate()?;
    let components = [MixtureComponent {
        weight: 1.0,
        traces,
    }];
    let mut sampler = PairSampler::new(&components, source)?;
    let mut events = Vec::new();
    sampler.emit_until(source.duration, &mut events);
    let stats = SimStats {
        pairs_emitted: sampler.pairs_emitted(),
        outcome_counts: sampler.outcome_counts(),
        component_counts: sampler.component_counts().to_vec(),
        ..Default::default()
    };
    Ok((events, stats))
}

/// Apply the detector chain to an ideal event list and merge the channels
/// into a time-ordered tag stream.
pub fn apply_detector_model(
    events: &[IdealEvent],
    source: &SourceConfig,
    det_c: &DetectorModel,
    det_d: &DetectorModel,
    config_digest: &str,
) -> Result<(TimeTagStream, SimStats)> {
    det_c.validate()?;
    det_d.validate()?;
    if det_c.clock_tick != det_d.clock_tick {
        return Err(AhcError::config(
            "both detectors must share one clock tick to merge into a stream",
        ));
    }
    let mut engine = DetectorEngine::new(source, det_c, det_d)?;
    engine.feed(events);
    let tags = engine.finalize();
    let mut stats = SimStats::default();
    engine.fill_stats(&mut stats);
    let header = TagHeader {
        version: 1,
        tick_seconds: det_c.clock_tick,
        channel_names: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
        duration_seconds: source.duration,
        seed: source.seed,
        config_digest: config_digest.to_string(),
    };
    Ok((TimeTagStream { header, tags }, stats))
}
