//! Poisson pair emission and delay sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::simulator::{G2TraceSet, IdealEvent, OutputChannel};

/// Source-side simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    /// Mean emitted pair rate (pairs per second).
    pub pair_rate: f64,
    /// Acquisition duration in seconds; clicks outside [0, duration) are
    /// discarded.
    pub duration: f64,
    /// Interference visibility in [0, 1]: the oscillating fraction of each
    /// delay density. 0 leaves only the envelope, 1 reproduces the densities
    /// as given.
    pub visibility_v0: f64,
    /// Seed for all random streams of the run.
    pub seed: u64,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate > 0.0) || !self.pair_rate.is_finite() {
            return Err(AhcError::config(format!(
                "pair rate must be positive, got {}",
                self.pair_rate
            )));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(AhcError::config(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(0.0..=1.0).contains(&self.visibility_v0) {
            return Err(AhcError::config(format!(
                "visibility must lie in [0, 1], got {}",
                self.visibility_v0
            )));
        }
        Ok(())
    }
}

/// One source in an incoherent mixture: pairs are drawn from `traces` with
/// probability proportional to `weight`.
#[derive(Debug, Clone, Copy)]
pub struct MixtureComponent<'a> {
    pub weight: f64,
    pub traces: &'a G2TraceSet,
}

/// Which detector pairing a pair of photons ends up in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairOutcome {
    Cd,
    Cc,
    Dd,
}

/// Inverse-CDF sampler over a tabulated non-negative density.
///
/// The density is treated as piecewise constant per step for inversion;
/// with tabulation much finer than any later binning the bias is
/// negligible.
struct TraceSampler {
    t0: f64,
    step: f64,
    cdf: Vec<f64>,
}

impl TraceSampler {
    fn new(axis: &crate::grid::Axis, trace: &[f64]) -> Option<Self> {
        let mut cdf = Vec::with_capacity(trace.len());
        let mut acc = 0.0;
        for w in trace.windows(2) {
            cdf.push(acc);
            acc += 0.5 * (w[0] + w[1]);
        }
        cdf.push(acc);
        if !(acc > 0.0) {
            return None;
        }
        let inv = 1.0 / acc;
        for v in &mut cdf {
            *v *= inv;
        }
        Some(Self {
            t0: axis.start(),
            step: axis.step(),
            cdf,
        })
    }

    fn draw(&self, u: f64) -> f64 {
        let k = match self
            .cdf
            .binary_search_by(|probe| probe.total_cmp(&u))
        {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        };
        let k = k.min(self.cdf.len() - 2);
        let lo = self.cdf[k];
        let hi = self.cdf[k + 1];
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
        self.t0 + (k as f64 + frac) * self.step
    }
}

struct ComponentSampler {
    /// Cumulative outcome probabilities: P(cd), P(cd)+P(cc).
    outcome_cdf: [f64; 2],
    cd: TraceSampler,
    cc: TraceSampler,
    dd: TraceSampler,
    ab: TraceSampler,
}

pub(crate) struct PairSampler {
    rng: ChaCha8Rng,
    interarrival: Exp<f64>,
    v0: f64,
    components: Vec<ComponentSampler>,
    /// Cumulative component weights (length = components − 1).
    component_cdf: Vec<f64>,
    t: f64,
    duration: f64,
    pairs: u64,
    outcomes: [u64; 3],
    component_counts: Vec<u64>,
    done: bool,
}

const STREAM_EMISSION: u64 = 0x70616972_73726300;

impl PairSampler {
    pub fn new(components: &[MixtureComponent<'_>], source: &SourceConfig) -> Result<Self> {
        source.validate()?;
        if components.is_empty() {
            return Err(AhcError::config("at least one mixture component required"));
        }
        let mut samplers = Vec::with_capacity(components.len());
        let mut weights = Vec::with_capacity(components.len());
        for comp in components {
            if !(comp.weight > 0.0) || !comp.weight.is_finite() {
                return Err(AhcError::config(format!(
                    "mixture weight must be positive, got {}",
                    comp.weight
                )));
            }
            comp.traces.validate()?;
            let axis = &comp.traces.axis;
            let integral = |t: &[f64]| -> f64 {
                t.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>()
            };
            let (icd, icc, idd) = (
                integral(&comp.traces.cd),
                integral(&comp.traces.cc),
                integral(&comp.traces.dd),
            );
            let total = icd + icc + idd;
            if !(total > 0.0) {
                return Err(AhcError::config(
                    "coincidence densities integrate to zero; nothing to sample",
                ));
            }
            let ab = TraceSampler::new(axis, &comp.traces.ab).ok_or_else(|| {
                AhcError::config("envelope trace integrates to zero; cannot mix visibility")
            })?;
            // A zero individual channel is legal (for example CD with the
            // beat tuned away); it simply never gets drawn. Represent it by
            // the envelope sampler, which stays unused at probability zero.
            let make = |t: &[f64], fallback: &TraceSampler| {
                TraceSampler::new(axis, t).unwrap_or_else(|| TraceSampler {
                    t0: fallback.t0,
                    step: fallback.step,
                    cdf: fallback.cdf.clone(),
                })
            };
            samplers.push(ComponentSampler {
                outcome_cdf: [icd / total, (icd + icc) / total],
                cd: make(&comp.traces.cd, &ab),
                cc: make(&comp.traces.cc, &ab),
                dd: make(&comp.traces.dd, &ab),
                ab,
            });
            weights.push(comp.weight);
        }
        let wtotal: f64 = weights.iter().sum();
        let mut component_cdf = Vec::new();
        let mut acc = 0.0;
        for w in &weights[..weights.len() - 1] {
            acc += w / wtotal;
            component_cdf.push(acc);
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(source.seed ^ STREAM_EMISSION),
            interarrival: Exp::new(source.pair_rate)
                .map_err(|e| AhcError::config(format!("bad pair rate: {e}")))?,
            v0: source.visibility_v0,
            components: samplers,
            component_cdf,
            t: 0.0,
            duration: source.duration,
            pairs: 0,
            outcomes: [0; 3],
            component_counts: vec![0; components.len()],
            done: false,
        })
    }

    /// Emit pairs into `out` until the emission clock passes
    /// min(until, duration). The first pair past `until` is included so no
    /// state needs to straddle calls. Returns true when the source is
    /// exhausted (reached its duration).
    pub fn emit_until(&mut self, until: f64, out: &mut Vec<IdealEvent>) -> bool {
        let limit = until.min(self.duration);
        if self.done {
            return true;
        }
        loop {
            self.t += self.interarrival.sample(&mut self.rng);
            if self.t >= self.duration {
                self.done = true;
                return true;
            }
            self.emit_pair_at(self.t, out);
            if self.t >= limit {
                // First emission past the chunk boundary; stop here so the
                // caller can flush. It was already emitted, so the next call
                // resumes with a fresh interarrival draw.
                return false;
            }
        }
    }

    fn emit_pair_at(&mut self, t: f64, out: &mut Vec<IdealEvent>) {
        let comp_idx = if self.component_cdf.is_empty() {
            0
        } else {
            let u: f64 = self.rng.gen();
            self.component_cdf
                .iter()
                .position(|&c| u < c)
                .unwrap_or(self.component_cdf.len())
        };
        self.component_counts[comp_idx] += 1;
        let comp = &self.components[comp_idx];

        let u: f64 = self.rng.gen();
        let outcome = if u < comp.outcome_cdf[0] {
            PairOutcome::Cd
        } else if u < comp.outcome_cdf[1] {
            PairOutcome::Cc
        } else {
            PairOutcome::Dd
        };

        // Always burn one uniform so runs with the same seed but different
        // visibility share emission times and outcomes.
        let u_vis: f64 = self.rng.gen();
        let oscillating = u_vis < self.v0 || self.v0 >= 1.0;
        let u: f64 = self.rng.gen();
        let sampler = if oscillating {
            match outcome {
                PairOutcome::Cd => &comp.cd,
                PairOutcome::Cc => &comp.cc,
                PairOutcome::Dd => &comp.dd,
            }
        } else {
            &comp.ab
        };
        let delay = sampler.draw(u);

        let (ch_early, ch_late, slot) = match outcome {
            PairOutcome::Cd => (OutputChannel::C, OutputChannel::D, 0),
            PairOutcome::Cc => (OutputChannel::C, OutputChannel::C, 1),
            PairOutcome::Dd => (OutputChannel::D, OutputChannel::D, 2),
        };
        self.outcomes[slot] += 1;
        self.pairs += 1;
        out.push(IdealEvent {
            time: t - 0.5 * delay,
            channel: ch_early,
        });
        out.push(IdealEvent {
            time: t + 0.5 * delay,
            channel: ch_late,
        });
    }

    pub fn pairs_emitted(&self) -> u64 {
        self.pairs
    }

    pub fn outcome_counts(&self) -> [u64; 3] {
        self.outcomes
    }

    pub fn component_counts(&self) -> &[u64] {
        &self.component_counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::hz;

    fn traces() -> G2TraceSet {
        let axis = Axis::new(0.0, 4e-7, 8001).unwrap();
        G2TraceSet::from_closed_form(hz(7.6e6), hz(250e6), axis).unwrap()
    }

    fn source(seed: u64) -> SourceConfig {
        SourceConfig {
            pair_rate: 1e5,
            duration: 2.0,
            visibility_v0: 1.0,
            seed,
        }
    }

    #[test]
    fn outcome_probabilities_follow_the_trace_integrals() {
        let tr = traces();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let mut sampler = PairSampler::new(&comps, &source(11)).unwrap();
        let mut events = Vec::new();
        sampler.emit_until(f64::INFINITY, &mut events);
        let n = sampler.pairs_emitted() as f64;
        assert!(n > 1.5e5);
        let [cd, cc, dd] = sampler.outcome_counts();
        // ω−0 ≫ γ: the beat integrates out and the split is (1/2, 1/4, 1/4).
        assert!((cd as f64 / n - 0.5).abs() < 0.01);
        assert!((cc as f64 / n - 0.25).abs() < 0.01);
        assert!((dd as f64 / n - 0.25).abs() < 0.01);
    }

    #[test]
    fn cross_pairs_land_on_opposite_channels() {
        let tr = traces();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let mut sampler = PairSampler::new(&comps, &source(7)).unwrap();
        let mut events = Vec::new();
        sampler.emit_until(0.01, &mut events);
        assert_eq!(events.len() % 2, 0);
        assert!(events.len() > 1000);
        let mut seen_cross = false;
        let mut seen_same = false;
        for pair in events.chunks(2) {
            if pair[0].channel != pair[1].channel {
                // Cross pairs are pushed C first by construction.
                assert_eq!(pair[0].channel, OutputChannel::C);
                assert_eq!(pair[1].channel, OutputChannel::D);
                seen_cross = true;
            } else {
                seen_same = true;
            }
        }
        assert!(seen_cross && seen_same);
    }

    #[test]
    fn chunked_emission_matches_one_shot() {
        let tr = traces();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let src = source(42);
        let mut one = Vec::new();
        PairSampler::new(&comps, &src)
            .unwrap()
            .emit_until(f64::INFINITY, &mut one);
        let mut chunked = Vec::new();
        let mut sampler = PairSampler::new(&comps, &src).unwrap();
        let mut end = 0.05;
        while !sampler.emit_until(end, &mut chunked) {
            end += 0.05;
        }
        assert_eq!(one.len(), chunked.len());
        for (a, b) in one.iter().zip(&chunked) {
            assert_eq!(a.time.to_bits(), b.time.to_bits());
            assert_eq!(a.channel, b.channel);
        }
    }

    #[test]
    fn zero_visibility_washes_out_the_beat() {
        // CD delays near zero are suppressed by the beat when V0 = 1 and
        // follow the plain envelope when V0 = 0. Compare the fraction of
        // cross pairs inside a tenth of a beat period.
        let inner_fraction = |v0: f64| {
            let tr = traces();
            let comps = [MixtureComponent {
                weight: 1.0,
                traces: &tr,
            }];
            let src = SourceConfig {
                visibility_v0: v0,
                ..source(3)
            };
            let mut sampler = PairSampler::new(&comps, &src).unwrap();
            let mut events = Vec::new();
            sampler.emit_until(f64::INFINITY, &mut events);
            let mut small = 0u64;
            let mut total = 0u64;
            for pair in events.chunks(2) {
                if pair[0].channel != pair[1].channel {
                    let d = (pair[1].time - pair[0].time).abs();
                    if d < 20e-9 {
                        total += 1;
                        if d < 0.4e-9 {
                            small += 1;
                        }
                    }
                }
            }
            small as f64 / total as f64
        };
        let with_beat = inner_fraction(1.0);
        let washed = inner_fraction(0.0);
        // Analytic values: 0.0020 with the beat, 0.031 without.
        assert!(washed > 5.0 * with_beat, "washed {washed}, beat {with_beat}");
        assert!((washed - 0.031).abs() < 0.01, "washed fraction {washed}");
    }

    #[test]
    fn mixture_weights_select_components() {
        let tr = traces();
        let tr2 = traces();
        let comps = [
            MixtureComponent {
                weight: 0.99,
                traces: &tr,
            },
            MixtureComponent {
                weight: 0.01,
                traces: &tr2,
            },
        ];
        let mut sampler = PairSampler::new(&comps, &source(9)).unwrap();
        let mut events = Vec::new();
        sampler.emit_until(f64::INFINITY, &mut events);
        let counts = sampler.component_counts();
        let n = sampler.pairs_emitted() as f64;
        assert!((counts[0] as f64 / n - 0.99).abs() < 0.005);
        assert!((counts[1] as f64 / n - 0.01).abs() < 0.005);
    }

    #[test]
    fn delay_histogram_matches_the_density() {
        let axis = Axis::new(0.0, 2e-7, 4001).unwrap();
        let gamma = hz(7.6e6);
        let tr = G2TraceSet::from_closed_form(gamma, hz(250e6), axis).unwrap();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let src = SourceConfig {
            pair_rate: 2e5,
            duration: 5.0,
            visibility_v0: 1.0,
            seed: 21,
        };
        let mut sampler = PairSampler::new(&comps, &src).unwrap();
        let mut events = Vec::new();
        sampler.emit_until(f64::INFINITY, &mut events);
        // Envelope check on cross pairs: mean |d| for e^{−γ|t|} is 1/γ.
        let mut sum = 0.0;
        let mut count = 0u64;
        for pair in events.chunks(2) {
            if pair[0].channel != pair[1].channel {
                sum += (pair[1].time - pair[0].time).abs();
                count += 1;
            }
        }
        let mean = sum / count as f64;
        // CD weights the envelope by (1 − cos); at ω−0 ≫ γ the beat term
        // shifts the mean of |d| by under 0.1%, but truncation at the axis
        // edge T does not: E|d| = (1/γ)·(1 − e^{−γT}(1 + γT))/(1 − e^{−γT}).
        let gt = gamma * 100e-9;
        let expect = (1.0 - (-gt).exp() * (1.0 + gt)) / (1.0 - (-gt).exp()) / gamma;
        assert!(
            (mean - expect).abs() < 0.02 * expect,
            "mean {mean:.3e} vs {expect:.3e}"
        );
    }
}
