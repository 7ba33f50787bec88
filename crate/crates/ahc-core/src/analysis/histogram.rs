//! Coincidence histograms from time-tag streams.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{AhcError, Result};
use crate::grid::Axis;
use crate::tags::{TimeTag, TimeTagStream};

/// How clicks are matched into delay pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingRule {
    /// Every pair of clicks within the window contributes one count.
    AllPairsInWindow,
    /// Start-stop: each start click pairs with the next stop click only.
    Consecutive,
}

/// Binning parameters for correlation histograms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    /// Bin width in seconds. Bins are centered on integer multiples of it.
    pub bin_width: f64,
    /// Half-width of the delay window in seconds; delays in [-window, window]
    /// are histogrammed.
    pub window: f64,
    pub pairing: PairingRule,
    /// Flag bins with |center| below this for exclusion from fits, covering
    /// the region distorted by detector dead time.
    pub dead_time_mask: Option<f64>,
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) || !self.bin_width.is_finite() {
            return Err(AhcError::config(format!(
                "bin width must be positive, got {}",
                self.bin_width
            )));
        }
        if !(self.window >= self.bin_width) || !self.window.is_finite() {
            return Err(AhcError::config(format!(
                "window must be at least one bin wide, got {}",
                self.window
            )));
        }
        if self.n_bins() > 50_000_000 {
            return Err(AhcError::config(
                "window/bin_width combination needs more than 5e7 bins",
            ));
        }
        if let Some(mask) = self.dead_time_mask {
            if !(mask >= 0.0) || !mask.is_finite() {
                return Err(AhcError::config(format!(
                    "dead time mask must be non-negative, got {mask}"
                )));
            }
        }
        Ok(())
    }

    /// Odd bin count: one center bin at zero delay plus symmetric wings.
    /// The quotient gets a tiny relative nudge so a window meant as an
    /// exact multiple of the bin width is not floored one bin short.
    pub fn n_bins(&self) -> usize {
        2 * (self.window / self.bin_width * (1.0 + 1e-12)).floor() as usize + 1
    }
}

/// A binned delay histogram between two channels (or one against itself).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    /// Bin centers in seconds, ascending, symmetric about zero.
    pub bin_centers: Vec<f64>,
    pub counts: Vec<u64>,
    /// Label of the channel pairing, e.g. "CD" or "CC auto".
    pub channel_pair: String,
    /// Pairs entered into the histogram (equals the count sum).
    pub total_pairs: u64,
    pub bin_width: f64,
    /// Bins to exclude from fits (inside the dead time mask).
    pub flagged: Vec<bool>,
}

impl CorrelationHistogram {
    /// Uniform delay axis matching `bin_centers`.
    pub fn axis(&self) -> Result<Axis> {
        let n = self.bin_centers.len();
        Axis::new(0.0, (n - 1) as f64 * self.bin_width, n)
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// Streaming histogram builder: feed time-ordered tag batches, then
/// [`finish`](Self::finish). Cross mode pairs channel `a` against channel
/// `b` with signed delay t_b - t_a; auto mode (a == b) adds each pair at
/// both signs. Memory stays bounded by the window length.
pub struct HistogramAccumulator {
    config: HistogramConfig,
    tick_seconds: f64,
    ch_a: u8,
    ch_b: u8,
    counts: Vec<u64>,
    half: i64,
    /// Pruning horizon in ticks (window plus half a bin).
    prune_ticks: f64,
    /// Recent click ticks per side, pruned to the window. Delays are formed
    /// from integer tick differences so they stay exact.
    recent_a: VecDeque<u64>,
    recent_b: VecDeque<u64>,
    /// Start clicks still waiting for their stop (consecutive mode).
    open_starts: VecDeque<u64>,
    total_pairs: u64,
    last_tick: Option<u64>,
    label: String,
}

impl HistogramAccumulator {
    pub fn new(config: HistogramConfig, tick_seconds: f64, ch_a: u8, ch_b: u8) -> Result<Self> {
        config.validate()?;
        if !(tick_seconds > 0.0) || !tick_seconds.is_finite() {
            return Err(AhcError::config(format!(
                "tick length must be positive, got {tick_seconds}"
            )));
        }
        let n = config.n_bins();
        let name = |c: u8| ["C", "D"].get(c as usize).copied().unwrap_or("?");
        let label = if ch_a == ch_b {
            format!("{}{} auto", name(ch_a), name(ch_b))
        } else {
            format!("{}{}", name(ch_a), name(ch_b))
        };
        Ok(Self {
            prune_ticks: (config.window + 0.5 * config.bin_width) / tick_seconds,
            config,
            tick_seconds,
            ch_a,
            ch_b,
            counts: vec![0; n],
            half: (n as i64 - 1) / 2,
            recent_a: VecDeque::new(),
            recent_b: VecDeque::new(),
            open_starts: VecDeque::new(),
            total_pairs: 0,
            last_tick: None,
            label,
        })
    }

    /// Delay between two clicks in seconds, from their exact tick difference.
    fn delay(&self, later: u64, earlier: u64) -> f64 {
        (later as i64 - earlier as i64) as f64 * self.tick_seconds
    }

    fn record(&mut self, delay: f64) {
        let idx = (delay / self.config.bin_width).round() as i64;
        if idx.abs() <= self.half {
            self.counts[(idx + self.half) as usize] += 1;
            self.total_pairs += 1;
        }
    }

    fn expired(&self, now: u64, old: u64) -> bool {
        (now - old) as f64 > self.prune_ticks
    }

    /// Add one batch of tags. Batches must continue in time order.
    pub fn push(&mut self, tags: &[TimeTag]) -> Result<()> {
        for tag in tags {
            let t = tag.tick;
            if self.last_tick.is_some_and(|last| t < last) {
                return Err(AhcError::parse(
                    format!(
                        "tags out of order: tick {t} after {}",
                        self.last_tick.unwrap()
                    ),
                    None,
                ));
            }
            self.last_tick = Some(t);
            let is_a = tag.channel == self.ch_a;
            let is_b = tag.channel == self.ch_b;
            if !is_a && !is_b {
                continue;
            }
            match self.config.pairing {
                PairingRule::AllPairsInWindow => {
                    while let Some(&old) = self.recent_a.front() {
                        if self.expired(t, old) {
                            self.recent_a.pop_front();
                        } else {
                            break;
                        }
                    }
                    while let Some(&old) = self.recent_b.front() {
                        if self.expired(t, old) {
                            self.recent_b.pop_front();
                        } else {
                            break;
                        }
                    }
                    if self.ch_a == self.ch_b {
                        for k in 0..self.recent_a.len() {
                            let d = self.delay(t, self.recent_a[k]);
                            self.record(d);
                            self.record(-d);
                        }
                        self.recent_a.push_back(t);
                    } else if is_a {
                        for k in 0..self.recent_b.len() {
                            let d = -self.delay(t, self.recent_b[k]);
                            self.record(d);
                        }
                        self.recent_a.push_back(t);
                    } else {
                        for k in 0..self.recent_a.len() {
                            let d = self.delay(t, self.recent_a[k]);
                            self.record(d);
                        }
                        self.recent_b.push_back(t);
                    }
                }
                PairingRule::Consecutive => {
                    if is_b {
                        while let Some(start) = self.open_starts.pop_front() {
                            let d = self.delay(t, start);
                            if (t - start) as f64 <= self.prune_ticks {
                                self.record(d);
                            }
                        }
                    }
                    if is_a {
                        self.open_starts.push_back(t);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn finish(self) -> CorrelationHistogram {
        let n = self.counts.len();
        let half = self.half;
        let b = self.config.bin_width;
        let bin_centers: Vec<f64> = (0..n).map(|i| (i as i64 - half) as f64 * b).collect();
        let mask = self.config.dead_time_mask.unwrap_or(-1.0);
        let flagged = bin_centers.iter().map(|c| c.abs() < mask).collect();
        CorrelationHistogram {
            bin_centers,
            counts: self.counts,
            channel_pair: self.label,
            total_pairs: self.total_pairs,
            bin_width: b,
            flagged,
        }
    }
}

/// Histogram of delays between two different channels of a stream.
pub fn cross_histogram(
    stream: &TimeTagStream,
    ch_a: u8,
    ch_b: u8,
    config: &HistogramConfig,
) -> Result<CorrelationHistogram> {
    if ch_a == ch_b {
        return Err(AhcError::config(
            "cross histogram needs two different channels; use auto_histogram",
        ));
    }
    let mut acc = HistogramAccumulator::new(*config, stream.header.tick_seconds, ch_a, ch_b)?;
    acc.push(&stream.tags)?;
    Ok(acc.finish())
}

/// Symmetrized same-channel delay histogram.
pub fn auto_histogram(
    stream: &TimeTagStream,
    channel: u8,
    config: &HistogramConfig,
) -> Result<CorrelationHistogram> {
    if config.pairing != PairingRule::AllPairsInWindow {
        return Err(AhcError::config(
            "auto histogram only supports all-pairs pairing",
        ));
    }
    let mut acc = HistogramAccumulator::new(*config, stream.header.tick_seconds, channel, channel)?;
    acc.push(&stream.tags)?;
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::TagHeader;

    fn stream(tags: Vec<TimeTag>) -> TimeTagStream {
        TimeTagStream {
            header: TagHeader {
                version: 1,
                tick_seconds: 1e-9,
                channel_names: vec!["C".into(), "D".into()],
                duration_seconds: 1.0,
                seed: 0,
                config_digest: String::new(),
            },
            tags,
        }
    }

    fn config(bin_ns: f64, window_ns: f64) -> HistogramConfig {
        HistogramConfig {
            bin_width: bin_ns * 1e-9,
            window: window_ns * 1e-9,
            pairing: PairingRule::AllPairsInWindow,
            dead_time_mask: None,
        }
    }

    #[test]
    fn delays_land_in_signed_bins() {
        let s = stream(vec![
            TimeTag {
                tick: 100,
                channel: 0,
            },
            TimeTag {
                tick: 103,
                channel: 1,
            },
            TimeTag {
                tick: 110,
                channel: 0,
            },
        ]);
        let h = cross_histogram(&s, 0, 1, &config(1.0, 10.0)).unwrap();
        assert_eq!(h.bin_centers.len(), 21);
        assert_eq!(h.bin_centers[10], 0.0);
        // d = t_D - t_C: +3 ns and -7 ns.
        assert_eq!(h.counts[10 + 3], 1);
        assert_eq!(h.counts[10 - 7], 1);
        assert_eq!(h.total_pairs, 2);
    }

    #[test]
    fn window_limits_which_pairs_count() {
        let s = stream(vec![
            TimeTag {
                tick: 0,
                channel: 0,
            },
            TimeTag {
                tick: 6,
                channel: 1,
            },
            TimeTag {
                tick: 100,
                channel: 1,
            },
        ]);
        let h = cross_histogram(&s, 0, 1, &config(1.0, 5.0)).unwrap();
        assert_eq!(h.total_pairs, 0);
        let h = cross_histogram(&s, 0, 1, &config(1.0, 6.0)).unwrap();
        assert_eq!(h.total_pairs, 1);
    }

    #[test]
    fn bins_center_on_integer_multiples() {
        let s = stream(vec![
            TimeTag {
                tick: 1000,
                channel: 0,
            },
            TimeTag {
                tick: 1002,
                channel: 1,
            },
        ]);
        // 2 ns delay with 4 ns bins sits exactly on the bin edge; the
        // half-away-from-zero tie lands it at center 4 ns, not 0.
        let h = cross_histogram(&s, 0, 1, &config(4.0, 20.0)).unwrap();
        let nonzero: Vec<usize> = (0..h.counts.len()).filter(|&i| h.counts[i] > 0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((h.bin_centers[nonzero[0]] - 4e-9).abs() < 1e-15);
    }

    #[test]
    fn auto_histogram_is_symmetric() {
        let s = stream(vec![
            TimeTag {
                tick: 10,
                channel: 0,
            },
            TimeTag {
                tick: 13,
                channel: 0,
            },
            TimeTag {
                tick: 19,
                channel: 0,
            },
            TimeTag {
                tick: 500,
                channel: 0,
            },
        ]);
        let h = auto_histogram(&s, 0, &config(1.0, 10.0)).unwrap();
        for i in 0..h.counts.len() {
            assert_eq!(h.counts[i], h.counts[h.counts.len() - 1 - i]);
        }
        // Pairs: (10,13)=3, (13,19)=6, (10,19)=9, each at both signs.
        assert_eq!(h.total_pairs, 6);
        assert_eq!(h.counts[10 + 3], 1);
        assert_eq!(h.counts[10 - 3], 1);
        assert_eq!(h.counts[10], 0);
    }

    #[test]
    fn chunked_pushes_match_one_push() {
        let mut tags = Vec::new();
        let mut tick = 0u64;
        let mut state = 123456789u64;
        for _ in 0..4000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            tick += state % 97;
            tags.push(TimeTag {
                tick,
                channel: (state >> 32) as u8 % 2,
            });
        }
        let s = stream(tags.clone());
        let whole = cross_histogram(&s, 0, 1, &config(2.0, 50.0)).unwrap();
        let mut acc = HistogramAccumulator::new(config(2.0, 50.0), 1e-9, 0, 1).unwrap();
        for chunk in tags.chunks(17) {
            acc.push(chunk).unwrap();
        }
        let parts = acc.finish();
        assert_eq!(whole.counts, parts.counts);
        assert_eq!(whole.total_pairs, parts.total_pairs);
    }

    #[test]
    fn consecutive_pairing_takes_first_stop_only() {
        let s = stream(vec![
            TimeTag {
                tick: 0,
                channel: 0,
            },
            TimeTag {
                tick: 3,
                channel: 1,
            },
            TimeTag {
                tick: 5,
                channel: 1,
            },
        ]);
        let mut cfg = config(1.0, 10.0);
        cfg.pairing = PairingRule::Consecutive;
        let h = cross_histogram(&s, 0, 1, &cfg).unwrap();
        assert_eq!(h.total_pairs, 1);
        assert_eq!(h.counts[10 + 3], 1);
        assert_eq!(h.counts[10 + 5], 0);
    }

    #[test]
    fn dead_time_mask_flags_central_bins() {
        let s = stream(vec![TimeTag {
            tick: 10,
            channel: 0,
        }]);
        let mut cfg = config(1.0, 10.0);
        cfg.dead_time_mask = Some(2.5e-9);
        let h = cross_histogram(&s, 0, 1, &cfg).unwrap();
        let flagged: Vec<usize> = (0..h.flagged.len()).filter(|&i| h.flagged[i]).collect();
        assert_eq!(flagged, vec![8, 9, 10, 11, 12]);
    }

    #[test]
    fn out_of_order_tags_are_rejected() {
        let mut acc = HistogramAccumulator::new(config(1.0, 10.0), 1e-9, 0, 1).unwrap();
        acc.push(&[TimeTag {
            tick: 50,
            channel: 0,
        }])
        .unwrap();
        let err = acc.push(&[TimeTag {
            tick: 40,
            channel: 1,
        }]);
        assert!(err.is_err());
    }
}
