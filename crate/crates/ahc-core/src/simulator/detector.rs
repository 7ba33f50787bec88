//! Detection chain: efficiency, jitter, darks, dead time, quantization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::simulator::{IdealEvent, SimStats, SourceConfig};
use crate::tags::TimeTag;

/// Per-detector response parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Probability that an arriving photon produces a click.
    pub efficiency: f64,
    /// Dark count rate in counts per second.
    pub dark_rate: f64,
    /// Non-paralyzable dead time in seconds after each accepted click.
    pub dead_time: f64,
    /// Gaussian timing jitter sigma in seconds, clamped at ten sigma.
    pub jitter_sigma: f64,
    /// Timestamp resolution in seconds; clicks are floored onto this clock.
    pub clock_tick: f64,
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(AhcError::config(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        for (name, v) in [
            ("dark rate", self.dark_rate),
            ("dead time", self.dead_time),
            ("jitter sigma", self.jitter_sigma),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(AhcError::config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !(self.clock_tick > 0.0) || !self.clock_tick.is_finite() {
            return Err(AhcError::config(format!(
                "clock tick must be positive, got {}",
                self.clock_tick
            )));
        }
        Ok(())
    }
}

const STREAM_EFFICIENCY: u64 = 0x64657465_63746566;
const STREAM_JITTER: u64 = 0x64657465_63746a69;
const STREAM_DARK: [u64; 2] = [0x64657465_6374644b, 0x64657465_6374644c];

struct DarkSource {
    rng: ChaCha8Rng,
    interarrival: Exp<f64>,
    next: f64,
}

struct ChannelState {
    efficiency: f64,
    jitter: Option<Normal<f64>>,
    jitter_clamp: f64,
    dead_time: f64,
    min_gap_ticks: u64,
    dark: Option<DarkSource>,
    /// Clicks awaiting a safe drain point, analog times in seconds.
    pending: Vec<f64>,
    last_analog: Option<f64>,
    last_tick: Option<u64>,
    darks_generated: u64,
    dropped_dead: u64,
}

/// Streaming detector chain for both channels.
///
/// `feed` accumulates analog clicks; `flush(t_safe)` emits every tag whose
/// tick precedes the tick containing `t_safe`, so later feeds can never
/// produce an earlier tag. All random streams are keyed off the source seed
/// independently, making chunked runs bit-identical to one-shot runs.
pub(crate) struct DetectorEngine {
    channels: [ChannelState; 2],
    efficiency_rng: ChaCha8Rng,
    jitter_rng: ChaCha8Rng,
    tick: f64,
    duration: f64,
    lost_efficiency: u64,
    dropped_range: u64,
    recorded: [u64; 2],
}

impl DetectorEngine {
    pub fn new(
        source: &SourceConfig,
        det_c: &DetectorModel,
        det_d: &DetectorModel,
    ) -> Result<Self> {
        det_c.validate()?;
        det_d.validate()?;
        if det_c.clock_tick != det_d.clock_tick {
            return Err(AhcError::config(
                "both detectors must share one clock tick to merge into a stream",
            ));
        }
        let tick = det_c.clock_tick;
        let build = |det: &DetectorModel, idx: usize| -> Result<ChannelState> {
            let jitter = if det.jitter_sigma > 0.0 {
                Some(
                    Normal::new(0.0, det.jitter_sigma)
                        .map_err(|e| AhcError::config(format!("bad jitter sigma: {e}")))?,
                )
            } else {
                None
            };
            let dark = if det.dark_rate > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(source.seed ^ STREAM_DARK[idx]);
                let interarrival = Exp::new(det.dark_rate)
                    .map_err(|e| AhcError::config(format!("bad dark rate: {e}")))?;
                let next = interarrival.sample(&mut rng);
                Some(DarkSource {
                    rng,
                    interarrival,
                    next,
                })
            } else {
                None
            };
            let ratio = det.dead_time / tick;
            let min_gap_ticks = if (ratio - ratio.round()).abs() < 1e-9 {
                ratio.round()
            } else {
                ratio.ceil()
            } as u64;
            Ok(ChannelState {
                efficiency: det.efficiency,
                jitter,
                jitter_clamp: 10.0 * det.jitter_sigma,
                dead_time: det.dead_time,
                min_gap_ticks,
                dark,
                pending: Vec::new(),
                last_analog: None,
                last_tick: None,
                darks_generated: 0,
                dropped_dead: 0,
            })
        };
        Ok(Self {
            channels: [build(det_c, 0)?, build(det_d, 1)?],
            efficiency_rng: ChaCha8Rng::seed_from_u64(source.seed ^ STREAM_EFFICIENCY),
            jitter_rng: ChaCha8Rng::seed_from_u64(source.seed ^ STREAM_JITTER),
            tick,
            duration: source.duration,
            lost_efficiency: 0,
            dropped_range: 0,
            recorded: [0; 2],
        })
    }

    /// Push ideal photon arrivals through efficiency and jitter into the
    /// pending buffers. Uniform and Gaussian draws are consumed strictly in
    /// event order, so the same event sequence always detects identically.
    pub fn feed(&mut self, events: &[IdealEvent]) {
        for ev in events {
            let ch = &mut self.channels[ev.channel as usize];
            let u: f64 = self.efficiency_rng.gen();
            if u >= ch.efficiency {
                self.lost_efficiency += 1;
                continue;
            }
            let mut t = ev.time;
            if let Some(normal) = &ch.jitter {
                let j = normal.sample(&mut self.jitter_rng);
                t += j.clamp(-ch.jitter_clamp, ch.jitter_clamp);
            }
            ch.pending.push(t);
        }
    }

    fn advance_darks(&mut self, target: f64) {
        for ch in &mut self.channels {
            if let Some(dark) = &mut ch.dark {
                while dark.next < target {
                    ch.pending.push(dark.next);
                    ch.darks_generated += 1;
                    dark.next += dark.interarrival.sample(&mut dark.rng);
                }
            }
        }
    }

    /// Emit all tags with tick index below floor(t_safe / tick), merged
    /// across channels in (tick, channel) order.
    pub fn flush(&mut self, t_safe: f64) -> Vec<TimeTag> {
        self.advance_darks(t_safe.min(self.duration));
        let tick = self.tick;
        let duration = self.duration;
        let safe_tick = (t_safe / tick).floor();
        let mut streams: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
        for (idx, ch) in self.channels.iter_mut().enumerate() {
            ch.pending.sort_unstable_by(f64::total_cmp);
            let cut = ch
                .pending
                .partition_point(|&t| (t / tick).floor() < safe_tick);
            for k in 0..cut {
                let t = ch.pending[k];
                if let Some(last) = ch.last_analog {
                    if t - last < ch.dead_time {
                        ch.dropped_dead += 1;
                        continue;
                    }
                }
                ch.last_analog = Some(t);
                if t < 0.0 || t >= duration {
                    self.dropped_range += 1;
                    continue;
                }
                let tick_index = (t / tick).floor() as u64;
                if let Some(last_tick) = ch.last_tick {
                    if tick_index < last_tick + ch.min_gap_ticks {
                        ch.dropped_dead += 1;
                        continue;
                    }
                }
                ch.last_tick = Some(tick_index);
                self.recorded[idx] += 1;
                streams[idx].push(tick_index);
            }
            ch.pending.drain(..cut);
        }
        let [c, d] = streams;
        let mut out = Vec::with_capacity(c.len() + d.len());
        let (mut i, mut j) = (0, 0);
        while i < c.len() && j < d.len() {
            if c[i] <= d[j] {
                out.push(TimeTag {
                    tick: c[i],
                    channel: 0,
                });
                i += 1;
            } else {
                out.push(TimeTag {
                    tick: d[j],
                    channel: 1,
                });
                j += 1;
            }
        }
        out.extend(c[i..].iter().map(|&tick| TimeTag { tick, channel: 0 }));
        out.extend(d[j..].iter().map(|&tick| TimeTag { tick, channel: 1 }));
        out
    }

    /// Drain everything left, generating darks through the full duration.
    pub fn finalize(&mut self) -> Vec<TimeTag> {
        self.advance_darks(self.duration);
        self.flush(f64::INFINITY)
    }

    pub fn fill_stats(&self, stats: &mut SimStats) {
        stats.clicks_lost_efficiency = self.lost_efficiency;
        stats.dark_counts = [
            self.channels[0].darks_generated,
            self.channels[1].darks_generated,
        ];
        stats.dropped_dead_time = [
            self.channels[0].dropped_dead,
            self.channels[1].dropped_dead,
        ];
        stats.dropped_out_of_range = self.dropped_range;
        stats.recorded = self.recorded;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::hz;
    use crate::simulator::{
        apply_detector_model, sample_pairs, simulate, G2TraceSet, MixtureComponent, OutputChannel,
    };

    fn traces() -> G2TraceSet {
        let axis = Axis::new(0.0, 2e-7, 4001).unwrap();
        G2TraceSet::from_closed_form(hz(7.6e6), hz(250e6), axis).unwrap()
    }

    fn det(tick: f64) -> DetectorModel {
        DetectorModel {
            efficiency: 0.8,
            dark_rate: 1e4,
            dead_time: 25e-9,
            jitter_sigma: 0.5e-9,
            clock_tick: tick,
        }
    }

    #[test]
    fn same_seed_reproduces_the_stream_bit_for_bit() {
        let tr = traces();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let src = SourceConfig {
            pair_rate: 1e6,
            duration: 0.02,
            visibility_v0: 1.0,
            seed: 77,
        };
        let d = det(1e-9);
        let (a, _) = simulate(&comps, &src, &d, &d, "digest").unwrap();
        let (b, _) = simulate(&comps, &src, &d, &d, "digest").unwrap();
        assert_eq!(a.tags, b.tags);
        assert!(!a.tags.is_empty());
    }

    #[test]
    fn chunked_run_matches_one_shot_detection() {
        let tr = traces();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let src = SourceConfig {
            pair_rate: 1e7,
            duration: 0.08,
            visibility_v0: 1.0,
            seed: 5150,
        };
        let d = det(1e-9);
        let (chunked, stats) = simulate(&comps, &src, &d, &d, "x").unwrap();
        let (events, _) = sample_pairs(&tr, &src).unwrap();
        let (one_shot, _) = apply_detector_model(&events, &src, &d, &d, "x").unwrap();
        assert!(stats.pairs_emitted > 500_000, "covers multiple chunks");
        assert_eq!(chunked.tags.len(), one_shot.tags.len());
        assert_eq!(chunked.tags, one_shot.tags);
    }

    #[test]
    fn dead_time_enforces_minimum_tick_gap() {
        let tr = traces();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let src = SourceConfig {
            pair_rate: 5e6,
            duration: 0.01,
            visibility_v0: 1.0,
            seed: 3,
        };
        let d = DetectorModel {
            efficiency: 1.0,
            dark_rate: 1e5,
            dead_time: 100e-9,
            jitter_sigma: 0.0,
            clock_tick: 1e-9,
        };
        let (stream, stats) = simulate(&comps, &src, &d, &d, "x").unwrap();
        let mut last = [None; 2];
        for tag in &stream.tags {
            let ch = tag.channel as usize;
            if let Some(prev) = last[ch] {
                assert!(tag.tick - prev >= 100, "gap {} on {}", tag.tick - prev, ch);
            }
            last[ch] = Some(tag.tick);
        }
        assert!(stats.dropped_dead_time[0] + stats.dropped_dead_time[1] > 1000);
    }

    #[test]
    fn click_accounting_balances_without_dead_time() {
        let tr = traces();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let src = SourceConfig {
            pair_rate: 1e5,
            duration: 0.5,
            visibility_v0: 1.0,
            seed: 12,
        };
        let d = DetectorModel {
            efficiency: 0.7,
            dark_rate: 0.0,
            dead_time: 0.0,
            jitter_sigma: 0.0,
            clock_tick: 1e-9,
        };
        let (stream, stats) = simulate(&comps, &src, &d, &d, "x").unwrap();
        let recorded = stats.recorded[0] + stats.recorded[1];
        assert_eq!(recorded as usize, stream.tags.len());
        assert_eq!(
            recorded + stats.clicks_lost_efficiency + stats.dropped_out_of_range,
            2 * stats.pairs_emitted
        );
        let frac = stats.clicks_lost_efficiency as f64 / (2 * stats.pairs_emitted) as f64;
        assert!((frac - 0.3).abs() < 0.01);
    }

    #[test]
    fn jitter_spreads_and_clamps_timestamps() {
        let src = SourceConfig {
            pair_rate: 1.0,
            duration: 1e-5,
            visibility_v0: 1.0,
            seed: 99,
        };
        let d = DetectorModel {
            efficiency: 1.0,
            dark_rate: 0.0,
            dead_time: 0.0,
            jitter_sigma: 1e-9,
            clock_tick: 1e-10,
        };
        let events: Vec<IdealEvent> = (0..10_000)
            .map(|_| IdealEvent {
                time: 5e-6,
                channel: OutputChannel::C,
            })
            .collect();
        let (stream, _) = apply_detector_model(&events, &src, &d, &d, "x").unwrap();
        assert_eq!(stream.tags.len(), events.len());
        let ticks: Vec<f64> = stream.tags.iter().map(|t| t.tick as f64).collect();
        let n = ticks.len() as f64;
        let mean = ticks.iter().sum::<f64>() / n;
        let var = ticks.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        let center = 5e-6 / 1e-10 - 0.5;
        assert!((mean - center).abs() < 0.5, "mean {mean}");
        assert!((var.sqrt() - 10.0).abs() < 0.5, "std {}", var.sqrt());
        for t in &ticks {
            assert!((t - center).abs() <= 101.0, "clamp violated: {t}");
        }
    }

    #[test]
    fn darks_alone_fill_the_duration() {
        let tr = traces();
        let comps = [MixtureComponent {
            weight: 1.0,
            traces: &tr,
        }];
        let src = SourceConfig {
            pair_rate: 1e-3,
            duration: 1.0,
            visibility_v0: 1.0,
            seed: 8,
        };
        let d = DetectorModel {
            efficiency: 1.0,
            dark_rate: 1e5,
            dead_time: 0.0,
            jitter_sigma: 0.0,
            clock_tick: 1e-9,
        };
        let (stream, stats) = simulate(&comps, &src, &d, &d, "x").unwrap();
        let expect = 1e5;
        for ch in 0..2 {
            let got = stats.dark_counts[ch] as f64;
            assert!((got - expect).abs() < 5.0 * expect.sqrt(), "darks {got}");
        }
        let max_tick = (src.duration / d.clock_tick) as u64;
        assert!(stream.tags.iter().all(|t| t.tick < max_tick));
        assert!(stream.tags.windows(2).all(|w| w[0].tick <= w[1].tick));
    }

    #[test]
    fn mismatched_clock_ticks_are_rejected() {
        let src = SourceConfig {
            pair_rate: 1.0,
            duration: 1.0,
            visibility_v0: 1.0,
            seed: 0,
        };
        let a = det(1e-9);
        let b = det(2e-9);
        assert!(DetectorEngine::new(&src, &a, &b).is_err());
    }
}
