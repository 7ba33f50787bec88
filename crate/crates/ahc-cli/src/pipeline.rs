//! Pipeline stages. Every stage reads its inputs from files in the output
//! directory and writes its artifacts back there, so a full `pipeline` run
//! and a chain of single-stage invocations produce identical bytes.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ahc_core::analysis::{
    auto_histogram, cross_histogram, fit_beat, psd_estimate, resolution_report, BeatFitResult,
    CorrelationHistogram, ResolutionReport,
};
use ahc_core::container;
use ahc_core::correlation::{g2_from_jsa, psd_of_g2, ChannelPair, PsdSpectrum, WindowKind};
use ahc_core::entanglement::entropy_vs_pump_sweep;
use ahc_core::simulator::{simulate, G2TraceSet, MixtureComponent, SimStats};
use ahc_core::tags::{read_tags_file, write_tags_file};
use ahc_core::error::Result;
use ahc_core::{hz, AhcError, Axis, CoordinateConvention, CorrelationGrid, TWO_PI};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisBlock, PipelineConfig};
use crate::report::{self, ArtifactEntry, Provenance};

/// Artifact file names inside the output directory.
pub mod files {
    pub const JSA: &str = "jsa.json";
    pub const G2: &str = "g2.json";
    pub const G2_CSV: &str = "g2.csv";
    pub const MODEL_PSD: &str = "psd_model_cd.json";
    pub const MODEL_PSD_CSV: &str = "psd_model_cd.csv";
    pub const TAGS: &str = "tags.bin";
    pub const HIST_CD: &str = "histogram_cd.json";
    pub const HIST_CD_CSV: &str = "histogram_cd.csv";
    pub const HIST_CC: &str = "histogram_cc.json";
    pub const HIST_CC_CSV: &str = "histogram_cc.csv";
    pub const PSD_CD: &str = "psd_cd.json";
    pub const PSD_CD_CSV: &str = "psd_cd.csv";
    pub const PSD_CC: &str = "psd_cc.json";
    pub const PSD_CC_CSV: &str = "psd_cc.csv";
    pub const RESOLUTION: &str = "resolution.json";
    pub const FIT: &str = "fit.json";
    pub const SWEEP: &str = "sweep.json";
    pub const SWEEP_CSV: &str = "sweep.csv";
    pub const SCHMIDT: &str = "schmidt.json";
    pub const REPORT: &str = "report.json";
}

/// Everything a stage needs: the parsed config, its raw text for digests,
/// the output directory, and the effective seed.
pub struct RunContext<'a> {
    pub config: &'a PipelineConfig,
    pub config_text: &'a str,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub with_timestamp: bool,
    pub quiet: bool,
    written: RefCell<Vec<String>>,
}

impl<'a> RunContext<'a> {
    pub fn new(
        config: &'a PipelineConfig,
        config_text: &'a str,
        out_dir: PathBuf,
        seed_override: Option<u64>,
        with_timestamp: bool,
        quiet: bool,
    ) -> Self {
        RunContext {
            config,
            config_text,
            out_dir,
            seed: seed_override.unwrap_or(config.seed),
            with_timestamp,
            quiet,
            written: RefCell::new(Vec::new()),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::new(self.config_text, self.seed, self.with_timestamp)
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("ahc: {msg}");
        }
    }

    fn record(&self, name: &str) {
        self.written.borrow_mut().push(name.to_string());
    }

    fn put_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        report::write_json(&self.path(name), value)?;
        self.record(name);
        Ok(())
    }

    fn put_bytes(&self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.path(name), bytes)?;
        self.record(name);
        Ok(())
    }

    fn get_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let path = self.path(name);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| missing_input(&path, &e.to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| AhcError::parse(format!("{}: {e}", path.display()), None))
    }
}

fn missing_input(path: &Path, detail: &str) -> AhcError {
    AhcError::parse(
        format!(
            "cannot read {}: {detail}; run the producing stage first",
            path.display()
        ),
        None,
    )
}

fn config_value(ctx: &RunContext) -> Result<serde_json::Value> {
    serde_json::from_str(ctx.config_text)
        .map_err(|e| AhcError::parse(format!("config is not valid JSON: {e}"), None))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSummary {
    pub convention: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmitted_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct G2Summary {
    pub points: usize,
    pub step_s: f64,
    pub half_window_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelateSummary {
    pub cross_pairs: u64,
    pub bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_pairs: Option<u64>,
}

/// Fit results of one run: the cross-correlation beat, and when an
/// auto-correlation histogram exists, its fringe fitted at the same
/// frequency together with the phase difference between the two.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutcome {
    pub beat: BeatFitResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_beat: Option<BeatFitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_difference_rad: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub provenance: Provenance,
    pub config: serde_json::Value,
    #[serde(flatten)]
    pub outcome: FitOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma_p_hz: f64,
    pub grid_n: usize,
    pub entropy_nat: f64,
    pub entropy_bits: f64,
    pub schmidt_number: f64,
}

/// How the computed entropies compare against the configured expectations,
/// tried in both log bases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub reference: Vec<f64>,
    pub tolerance: f64,
    pub max_rel_error_nat: f64,
    pub max_rel_error_bits: f64,
    pub within_tolerance_nat: bool,
    pub within_tolerance_bits: bool,
    /// Log base with the smaller worst-case relative error.
    pub best_base: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchmidtOutcome {
    pub table: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceComparison>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchmidtReport {
    pub provenance: Provenance,
    pub config: serde_json::Value,
    #[serde(flatten)]
    pub outcome: SchmidtOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub provenance: Provenance,
    pub config: serde_json::Value,
    pub stages: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jsa: Option<SynthSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<G2Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<CorrelateSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<ResolutionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SchmidtOutcome>,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Build the configured amplitude and store it with a run stamp.
pub fn stage_synth_jsa(ctx: &RunContext) -> Result<SynthSummary> {
    let source = ctx
        .config
        .source
        .as_ref()
        .ok_or_else(|| AhcError::config_at("/source", "this stage needs a source block"))?;
    ctx.note("building joint spectral amplitude");
    let mut jsa = source.build_jsa()?;
    jsa.metadata.run = Some(ctx.provenance().stamp());
    container::write_jsa_file(&ctx.path(files::JSA), &jsa)?;
    ctx.record(files::JSA);
    Ok(SynthSummary {
        convention: match jsa.convention() {
            CoordinateConvention::SumDiff => "sum_diff".to_string(),
            CoordinateConvention::SignalIdler => "signal_idler".to_string(),
        },
        rows: jsa.values.nrows(),
        cols: jsa.values.ncols(),
        transmitted_fraction: jsa.metadata.transmitted_fraction,
        truncation_loss: jsa.metadata.truncation_loss,
        warnings: jsa.metadata.warnings.clone(),
    })
}

/// Delay axis for the model traces: a few bins past the histogram window,
/// oversampled so the sampler's linear interpolation sees the fringes.
fn delay_axis(analysis: &AnalysisBlock) -> Result<Axis> {
    let oversample = analysis.g2_oversample.unwrap_or(4) as f64;
    let step = analysis.bin_width_s / oversample;
    let half = analysis.window_s + 2.0 * analysis.bin_width_s;
    let half_points = (half / step).ceil() as usize;
    let n = 2 * half_points + 1;
    if n > 4_000_001 {
        return Err(AhcError::config_at(
            "/analysis",
            format!("correlation axis would need {n} points; widen bin_width_s or shrink window_s"),
        ));
    }
    Axis::new(0.0, 2.0 * half_points as f64 * step, n)
}

/// Correlation traces for all four channel pairs of the stored amplitude,
/// plus the model CD power spectrum.
pub fn stage_compute_g2(ctx: &RunContext) -> Result<G2Summary> {
    let analysis = ctx.config.analysis.as_ref().ok_or_else(|| {
        AhcError::config_at("/analysis", "correlation traces take their axis from the analysis block")
    })?;
    let jsa = container::read_jsa_file(&ctx.path(files::JSA))
        .map_err(|e| rewrap_missing(ctx, files::JSA, e))?;
    let axis = delay_axis(analysis)?;
    let grid = CorrelationGrid::cw(axis)?;
    ctx.note("computing correlation traces");
    let cc = g2_from_jsa(&jsa, ChannelPair::CC, &grid)?;
    let dd = g2_from_jsa(&jsa, ChannelPair::DD, &grid)?;
    let cd = g2_from_jsa(&jsa, ChannelPair::CD, &grid)?;
    let ab = g2_from_jsa(&jsa, ChannelPair::AB, &grid)?;
    let traces = G2TraceSet::from_surfaces(&cc, &dd, &cd, &ab)?;
    container::write_g2_file(&ctx.path(files::G2), &traces)?;
    ctx.record(files::G2);
    let mut csv = Vec::new();
    container::write_g2_csv(&mut csv, &traces)?;
    ctx.put_bytes(files::G2_CSV, &csv)?;

    let model_psd = psd_of_g2(&cd, WindowKind::Rectangular)?;
    ctx.put_json(files::MODEL_PSD, &model_psd)?;
    let mut csv = Vec::new();
    container::write_psd_csv(&mut csv, &model_psd)?;
    ctx.put_bytes(files::MODEL_PSD_CSV, &csv)?;

    Ok(G2Summary {
        points: axis.n,
        step_s: axis.step(),
        half_window_s: axis.value(axis.n - 1),
    })
}

/// Draw time tags from the stored traces through the detector chain.
pub fn stage_simulate_tags(ctx: &RunContext) -> Result<SimStats> {
    let sim = ctx
        .config
        .simulation
        .as_ref()
        .ok_or_else(|| AhcError::config_at("/simulation", "this stage needs a simulation block"))?;
    let traces = container::read_g2_file(&ctx.path(files::G2))
        .map_err(|e| rewrap_missing(ctx, files::G2, e))?;
    let expected_pairs = sim.pair_rate_hz * sim.duration_s;
    if expected_pairs > 5e7 {
        return Err(AhcError::config_at(
            "/simulation/duration_s",
            format!(
                "about {expected_pairs:.0} pairs would be held in memory; the command-line \
                 path caps at 5e7, use the library's streaming interface beyond that"
            ),
        ));
    }

    let leak = match &sim.leakage {
        Some(leak) => {
            let source = ctx.config.source.as_ref().ok_or_else(|| {
                AhcError::config_at(
                    "/simulation/leakage",
                    "leakage borrows the source linewidths and needs a source block",
                )
            })?;
            let gamma = 0.5 * (hz(source.signal.linewidth_hz) + hz(source.idler.linewidth_hz));
            let traces = G2TraceSet::from_closed_form(gamma, hz(leak.beat_hz), traces.axis)?;
            Some((leak.weight, traces))
        }
        None => None,
    };
    let mut components = Vec::new();
    match &leak {
        Some((weight, leak_traces)) => {
            components.push(MixtureComponent {
                weight: 1.0 - weight,
                traces: &traces,
            });
            components.push(MixtureComponent {
                weight: *weight,
                traces: leak_traces,
            });
        }
        None => components.push(MixtureComponent {
            weight: 1.0,
            traces: &traces,
        }),
    }

    ctx.note(&format!(
        "simulating {:.2e} pairs over {} s",
        expected_pairs, sim.duration_s
    ));
    let digest = report::config_digest(ctx.config_text);
    let (stream, stats) = simulate(
        &components,
        &sim.source_config(ctx.seed),
        &sim.detector_c.to_model(),
        &sim.detector_d.to_model(),
        &digest,
    )?;
    write_tags_file(ctx.path(files::TAGS), &stream)?;
    ctx.record(files::TAGS);
    Ok(stats)
}

/// Histogram the stored tag stream: always C against D, optionally C
/// against itself with the dead-time mask applied.
pub fn stage_correlate(ctx: &RunContext) -> Result<CorrelateSummary> {
    let analysis = ctx
        .config
        .analysis
        .as_ref()
        .ok_or_else(|| AhcError::config_at("/analysis", "this stage needs an analysis block"))?;
    let stream = read_tags_file(ctx.path(files::TAGS))
        .map_err(|e| rewrap_missing(ctx, files::TAGS, e))?;
    ctx.note("correlating tag stream");
    let cd = cross_histogram(&stream, 0, 1, &analysis.histogram_config(None))?;
    ctx.put_json(files::HIST_CD, &cd)?;
    let mut csv = Vec::new();
    container::write_histogram_csv(&mut csv, &cd)?;
    ctx.put_bytes(files::HIST_CD_CSV, &csv)?;

    let auto_pairs = if analysis.auto_correlation {
        let cc = auto_histogram(
            &stream,
            0,
            &analysis.histogram_config(analysis.dead_time_mask_s),
        )?;
        ctx.put_json(files::HIST_CC, &cc)?;
        let mut csv = Vec::new();
        container::write_histogram_csv(&mut csv, &cc)?;
        ctx.put_bytes(files::HIST_CC_CSV, &csv)?;
        Some(cc.total_pairs)
    } else {
        None
    };

    Ok(CorrelateSummary {
        cross_pairs: cd.total_pairs,
        bins: cd.counts.len(),
        auto_pairs,
    })
}

/// Power spectra of the stored histograms and the resolution report.
pub fn stage_spectrum(ctx: &RunContext) -> Result<ResolutionReport> {
    let analysis = ctx
        .config
        .analysis
        .as_ref()
        .ok_or_else(|| AhcError::config_at("/analysis", "this stage needs an analysis block"))?;
    let cd: CorrelationHistogram = ctx.get_json(files::HIST_CD)?;
    ctx.note("estimating power spectra");
    let psd = psd_estimate(&cd, analysis.psd_window)?;
    ctx.put_json(files::PSD_CD, &psd)?;
    let mut csv = Vec::new();
    container::write_psd_csv(&mut csv, &psd)?;
    ctx.put_bytes(files::PSD_CD_CSV, &csv)?;

    if ctx.path(files::HIST_CC).exists() {
        let cc: CorrelationHistogram = ctx.get_json(files::HIST_CC)?;
        let psd_cc = psd_estimate(&cc, analysis.psd_window)?;
        ctx.put_json(files::PSD_CC, &psd_cc)?;
        let mut csv = Vec::new();
        container::write_psd_csv(&mut csv, &psd_cc)?;
        ctx.put_bytes(files::PSD_CC_CSV, &csv)?;
    }

    let res = resolution_report(&cd);
    ctx.put_json(files::RESOLUTION, &res)?;
    Ok(res)
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % TWO_PI;
    if x > PI {
        x -= TWO_PI;
    }
    if x <= -PI {
        x += TWO_PI;
    }
    x
}

/// Fit the beat note in the stored spectra. The auto-correlation fringe, if
/// present, is fitted at the frequency found in the cross histogram because
/// its own spectrum is distorted by the dead-time notch.
pub fn stage_fit(ctx: &RunContext) -> Result<FitOutcome> {
    let analysis = ctx
        .config
        .analysis
        .as_ref()
        .ok_or_else(|| AhcError::config_at("/analysis", "this stage needs an analysis block"))?;
    let cd: CorrelationHistogram = ctx.get_json(files::HIST_CD)?;
    let psd: PsdSpectrum = ctx.get_json(files::PSD_CD)?;
    let jitter = ctx
        .config
        .simulation
        .as_ref()
        .and_then(|s| s.combined_jitter_sigma());
    let tick = ctx
        .config
        .simulation
        .as_ref()
        .map(|s| s.detector_c.clock_tick_s);
    let opts = analysis.fit_options(jitter, tick);
    ctx.note("fitting beat note");
    let beat = fit_beat(&psd, &cd, &analysis.probe_frequencies_hz, &opts)?;

    let (auto_beat, phase_difference_rad) = if ctx.path(files::HIST_CC).exists() {
        let cc: CorrelationHistogram = ctx.get_json(files::HIST_CC)?;
        let psd_cc: PsdSpectrum = ctx.get_json(files::PSD_CC)?;
        let mut auto_opts = opts;
        auto_opts.fixed_frequency_hz = Some(beat.beat_frequency_hz);
        let auto = fit_beat(&psd_cc, &cc, &[], &auto_opts)?;
        let diff = wrap_angle(auto.phase_rad - beat.phase_rad);
        (Some(auto), Some(diff))
    } else {
        (None, None)
    };

    let outcome = FitOutcome {
        beat,
        auto_beat,
        phase_difference_rad,
    };
    let full = FitReport {
        provenance: ctx.provenance(),
        config: config_value(ctx)?,
        outcome: outcome.clone(),
    };
    ctx.put_json(files::FIT, &full)?;
    Ok(outcome)
}

/// Schmidt entropy sweep over the configured pump widths.
pub fn stage_schmidt(ctx: &RunContext) -> Result<SchmidtOutcome> {
    let sweep = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| AhcError::config_at("/sweep", "this stage needs a sweep block"))?;
    ctx.note("sweeping pump bandwidth");
    let points = entropy_vs_pump_sweep(&sweep.to_sweep_config())?;
    let mut json = container::sweep_to_json(&points)?;
    if !json.ends_with('\n') {
        json.push('\n');
    }
    ctx.put_bytes(files::SWEEP, json.as_bytes())?;
    let mut csv = Vec::new();
    container::write_sweep_csv(&mut csv, &points)?;
    ctx.put_bytes(files::SWEEP_CSV, &csv)?;

    let table: Vec<SweepRow> = points
        .iter()
        .map(|p| SweepRow {
            sigma_p_hz: p.sigma / TWO_PI,
            grid_n: p.grid_n,
            entropy_nat: p.spectrum.entropy_nat,
            entropy_bits: p.spectrum.entropy_bits,
            schmidt_number: p.spectrum.schmidt_number,
        })
        .collect();

    let reference = sweep.reference_entropies.as_ref().map(|refs| {
        // The sweep sorts by sigma; line the references up the same way.
        let mut paired: Vec<(f64, f64)> = sweep
            .sigma_values_hz
            .iter()
            .copied()
            .zip(refs.iter().copied())
            .collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tolerance = 0.2;
        let mut max_nat = 0.0f64;
        let mut max_bits = 0.0f64;
        for (row, (_, expect)) in table.iter().zip(&paired) {
            max_nat = max_nat.max((row.entropy_nat - expect).abs() / expect);
            max_bits = max_bits.max((row.entropy_bits - expect).abs() / expect);
        }
        ReferenceComparison {
            reference: paired.iter().map(|(_, e)| *e).collect(),
            tolerance,
            max_rel_error_nat: max_nat,
            max_rel_error_bits: max_bits,
            within_tolerance_nat: max_nat <= tolerance,
            within_tolerance_bits: max_bits <= tolerance,
            best_base: if max_bits <= max_nat { "bits" } else { "nat" }.to_string(),
        }
    });

    let outcome = SchmidtOutcome { table, reference };
    let full = SchmidtReport {
        provenance: ctx.provenance(),
        config: config_value(ctx)?,
        outcome: outcome.clone(),
    };
    ctx.put_json(files::SCHMIDT, &full)?;
    Ok(outcome)
}

/// Every configured stage in dependency order, then one aggregate report.
pub fn run_pipeline(ctx: &RunContext) -> Result<PipelineReport> {
    let mut rep = PipelineReport {
        provenance: ctx.provenance(),
        config: config_value(ctx)?,
        stages: Vec::new(),
        jsa: None,
        g2: None,
        simulation: None,
        histogram: None,
        resolution: None,
        fit: None,
        sweep: None,
        artifacts: Vec::new(),
    };
    if ctx.config.source.is_some() {
        rep.jsa = Some(stage_synth_jsa(ctx)?);
        rep.stages.push("synth-jsa".to_string());
        if ctx.config.analysis.is_some() {
            rep.g2 = Some(stage_compute_g2(ctx)?);
            rep.stages.push("compute-g2".to_string());
            if ctx.config.simulation.is_some() {
                rep.simulation = Some(stage_simulate_tags(ctx)?);
                rep.stages.push("simulate-tags".to_string());
                rep.histogram = Some(stage_correlate(ctx)?);
                rep.stages.push("correlate".to_string());
                rep.resolution = Some(stage_spectrum(ctx)?);
                rep.stages.push("spectrum".to_string());
                rep.fit = Some(stage_fit(ctx)?);
                rep.stages.push("fit".to_string());
            }
        }
    }
    if ctx.config.sweep.is_some() {
        rep.sweep = Some(stage_schmidt(ctx)?);
        rep.stages.push("schmidt".to_string());
    }
    if rep.stages.is_empty() {
        return Err(AhcError::config(
            "config drives no stage: add source and analysis blocks, or a sweep block",
        ));
    }

    for name in ctx.written.borrow().iter() {
        rep.artifacts.push(ArtifactEntry {
            file: name.clone(),
            sha256: report::file_digest(&ctx.path(name))?,
        });
    }
    report::write_json(&ctx.path(files::REPORT), &rep)?;
    ctx.note(&format!(
        "report written to {}",
        ctx.path(files::REPORT).display()
    ));
    Ok(rep)
}

fn rewrap_missing(ctx: &RunContext, name: &str, e: AhcError) -> AhcError {
    match e {
        AhcError::Io(io) => missing_input(&ctx.path(name), &io.to_string()),
        other => other,
    }
}
