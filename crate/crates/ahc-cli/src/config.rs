//! Run configuration: a JSON document with ordinary frequencies in Hz and
//! times in seconds. Conversion to the core crate's angular units happens in
//! the `to_*` accessors here and nowhere else.
//!
//! Unknown keys are rejected during deserialization; value-level problems are
//! collected by [`validate_config`] as JSON-pointer diagnostics so a bad file
//! reports every offending field in one pass.

use ahc_core::analysis::{FitOptions, HistogramConfig, PairingRule};
use ahc_core::correlation::WindowKind;
use ahc_core::simulator::{DetectorModel, SourceConfig};
use ahc_core::spectral::{ModeCombSpec, PhaseMatchingEnvelope, PumpSpectrum};
use ahc_core::error::Result;
use ahc_core::{hz, AhcError, Axis, FrequencyGrid};
use serde::{Deserialize, Serialize};

/// Bundled example configurations, addressable by name instead of a path.
pub const RECIPES: &[(&str, &str)] = &[
    ("fig3a_250MHz", include_str!("../configs/fig3a_250MHz.json")),
    ("fig3c_165MHz", include_str!("../configs/fig3c_165MHz.json")),
    ("fig4_gm", include_str!("../configs/fig4_gm.json")),
    ("figS1_pulsed", include_str!("../configs/figS1_pulsed.json")),
    ("figS2_sweep", include_str!("../configs/figS2_sweep.json")),
];

/// Resolve `--config`: a bundled recipe name wins, anything else is a path.
pub fn load_config_text(arg: &str) -> Result<String> {
    if let Some((_, text)) = RECIPES.iter().find(|(name, _)| *name == arg) {
        return Ok((*text).to_string());
    }
    std::fs::read_to_string(arg)
        .map_err(|e| AhcError::config(format!("cannot read config {arg}: {e}")))
}

fn default_schema_version() -> u32 {
    1
}

fn default_visibility() -> f64 {
    1.0
}

fn default_pairing() -> PairingRule {
    PairingRule::AllPairsInWindow
}

fn default_psd_window() -> WindowKind {
    WindowKind::Rectangular
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceBlock {
    pub pump: PumpBlock,
    pub signal: CombBlock,
    pub idler: CombBlock,
    #[serde(default)]
    pub phase_matching: PhaseMatchingBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<FilterBlock>,
    pub grid: GridBlock,
}

/// Pump spectrum selector. `kind` is "monochromatic" (uses `frequency_hz`)
/// or "gaussian_pulse" (uses `center_hz` and `sigma_hz`, the rms width of
/// the amplitude spectrum). A plain struct instead of a tagged enum so that
/// unknown keys are still rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_hz: Option<f64>,
}

/// One resonator comb. Without `fsr_hz` the comb degenerates to a single
/// mode at `center_hz`; `mode_range` is the inclusive index range and
/// requires `fsr_hz`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombBlock {
    pub center_hz: f64,
    pub linewidth_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fsr_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_range: Option<[i64; 2]>,
}

/// Phase-matching envelope: `kind` is "flat" or "gaussian" (uses `center_hz`
/// and `fwhm_hz`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMatchingBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm_hz: Option<f64>,
}

impl Default for PhaseMatchingBlock {
    fn default() -> Self {
        PhaseMatchingBlock {
            kind: "flat".to_string(),
            center_hz: None,
            fwhm_hz: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterBlock {
    pub signal: CombBlock,
    pub idler: CombBlock,
}

/// Frequency grid the amplitude is built on. The difference axis is always
/// present; the sum axis only exists for a pulsed pump.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default)]
    pub diff_center_hz: f64,
    pub diff_span_hz: f64,
    pub diff_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_span_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_n: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationBlock {
    pub pair_rate_hz: f64,
    pub duration_s: f64,
    #[serde(default = "default_visibility")]
    pub visibility: f64,
    pub detector_c: DetectorBlock,
    pub detector_d: DetectorBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage: Option<LeakageBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorBlock {
    pub efficiency: f64,
    #[serde(default)]
    pub dark_rate_hz: f64,
    #[serde(default)]
    pub dead_time_s: f64,
    #[serde(default)]
    pub jitter_sigma_s: f64,
    pub clock_tick_s: f64,
}

/// An extra incoherent pair population beating at `beat_hz`, mixed in with
/// probability `weight`. Its envelope reuses the source linewidths.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakageBlock {
    pub weight: f64,
    pub beat_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    pub bin_width_s: f64,
    /// Half-width of the delay window; bins cover [-window, +window].
    pub window_s: f64,
    #[serde(default = "default_pairing")]
    pub pairing: PairingRule,
    /// Flags |delay| below this in auto-correlation histograms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dead_time_mask_s: Option<f64>,
    /// Also histogram channel C against itself.
    #[serde(default)]
    pub auto_correlation: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probe_frequencies_hz: Vec<f64>,
    #[serde(default = "default_psd_window")]
    pub psd_window: WindowKind,
    /// Model-trace points per histogram bin (default 4).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2_oversample: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
}

/// Optional overrides for the beat-note fit; anything absent keeps the
/// fitter's default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prominence_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_min_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_frequency_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fringe_periods: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambiguity_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_halfwidth_bins: Option<usize>,
}

/// Schmidt entropy sweep over pump bandwidths.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Intensity FWHM of each cavity mode.
    pub gamma_hz: f64,
    /// Signal-idler mode splitting; the entropy does not depend on it.
    #[serde(default)]
    pub splitting_hz: f64,
    /// Pump amplitude-spectrum rms widths to sweep.
    pub sigma_values_hz: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<FilterBlock>,
    /// Expected entropies, one per sigma, in an unspecified log base; the
    /// report states which base fits them better.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_entropies: Option<Vec<f64>>,
}

impl CombBlock {
    pub fn to_spec(&self) -> ModeCombSpec {
        match self.fsr_hz {
            Some(fsr) => ModeCombSpec {
                center: hz(self.center_hz),
                linewidth: hz(self.linewidth_hz),
                fsr: hz(fsr),
                m_range: self.mode_range.map(|[a, b]| (a, b)).unwrap_or((0, 0)),
            },
            None => ModeCombSpec::single_mode(hz(self.center_hz), hz(self.linewidth_hz)),
        }
    }
}

impl PumpBlock {
    pub fn to_spectrum(&self) -> Result<PumpSpectrum> {
        match self.kind.as_str() {
            "monochromatic" => Ok(PumpSpectrum::Monochromatic {
                omega: hz(self.frequency_hz.ok_or_else(|| {
                    AhcError::config_at("/source/pump/frequency_hz", "missing pump frequency")
                })?),
            }),
            "gaussian_pulse" => Ok(PumpSpectrum::GaussianPulse {
                center: hz(self.center_hz.ok_or_else(|| {
                    AhcError::config_at("/source/pump/center_hz", "missing pump center")
                })?),
                sigma: hz(self.sigma_hz.ok_or_else(|| {
                    AhcError::config_at("/source/pump/sigma_hz", "missing pump width")
                })?),
            }),
            other => Err(AhcError::config_at(
                "/source/pump/kind",
                format!("unknown pump kind {other:?}, expected monochromatic or gaussian_pulse"),
            )),
        }
    }
}

impl PhaseMatchingBlock {
    pub fn to_envelope(&self) -> Result<PhaseMatchingEnvelope> {
        match self.kind.as_str() {
            "flat" => Ok(PhaseMatchingEnvelope::Flat),
            "gaussian" => Ok(PhaseMatchingEnvelope::Gaussian {
                center: hz(self.center_hz.unwrap_or(0.0)),
                fwhm: hz(self.fwhm_hz.ok_or_else(|| {
                    AhcError::config_at(
                        "/source/phase_matching/fwhm_hz",
                        "gaussian phase matching needs a width",
                    )
                })?),
            }),
            other => Err(AhcError::config_at(
                "/source/phase_matching/kind",
                format!("unknown phase-matching kind {other:?}, expected flat or gaussian"),
            )),
        }
    }
}

impl SourceBlock {
    pub fn frequency_grid(&self) -> Result<FrequencyGrid> {
        let diff = Axis::new(
            hz(self.grid.diff_center_hz),
            hz(self.grid.diff_span_hz),
            self.grid.diff_n,
        )?;
        match self.pump.to_spectrum()? {
            PumpSpectrum::Monochromatic { omega } => FrequencyGrid::cw(omega, diff),
            PumpSpectrum::GaussianPulse { center, .. } => {
                let (span, n) = match (self.grid.sum_span_hz, self.grid.sum_n) {
                    (Some(s), Some(n)) => (s, n),
                    _ => {
                        return Err(AhcError::config_at(
                            "/source/grid/sum_span_hz",
                            "a pulsed pump needs sum_span_hz and sum_n",
                        ))
                    }
                };
                FrequencyGrid::sum_diff(Axis::new(center, hz(span), n)?, diff)
            }
        }
    }

    /// Build the configured amplitude, filters applied if present.
    pub fn build_jsa(&self) -> Result<ahc_core::spectral::JointSpectralAmplitude> {
        let jsa = ahc_core::spectral::build_cespdc_jsa(
            &self.pump.to_spectrum()?,
            &self.signal.to_spec(),
            &self.idler.to_spec(),
            &self.phase_matching.to_envelope()?,
            &self.frequency_grid()?,
        )?;
        match &self.filters {
            Some(f) => {
                ahc_core::spectral::apply_fp_filters(&jsa, &f.signal.to_spec(), &f.idler.to_spec())
            }
            None => Ok(jsa),
        }
    }
}

impl DetectorBlock {
    pub fn to_model(&self) -> DetectorModel {
        DetectorModel {
            efficiency: self.efficiency,
            dark_rate: self.dark_rate_hz,
            dead_time: self.dead_time_s,
            jitter_sigma: self.jitter_sigma_s,
            clock_tick: self.clock_tick_s,
        }
    }
}

impl SimulationBlock {
    pub fn source_config(&self, seed: u64) -> SourceConfig {
        SourceConfig {
            pair_rate: self.pair_rate_hz,
            duration: self.duration_s,
            visibility_v0: self.visibility,
            seed,
        }
    }

    /// Delay jitter of a coincidence is fed to the fitter as the quadrature
    /// mean of the two detector sigmas, matching its exp(-(omega sigma)^2)
    /// attenuation model.
    pub fn combined_jitter_sigma(&self) -> Option<f64> {
        let s2 = 0.5
            * (self.detector_c.jitter_sigma_s.powi(2) + self.detector_d.jitter_sigma_s.powi(2));
        (s2 > 0.0).then(|| s2.sqrt())
    }
}

impl AnalysisBlock {
    pub fn histogram_config(&self, dead_time_mask: Option<f64>) -> HistogramConfig {
        HistogramConfig {
            bin_width: self.bin_width_s,
            window: self.window_s,
            pairing: self.pairing,
            dead_time_mask,
        }
    }

    pub fn fit_options(&self, jitter_sigma_s: Option<f64>, clock_tick_s: Option<f64>) -> FitOptions {
        let mut opts = FitOptions {
            jitter_sigma_s,
            clock_tick_s,
            ..FitOptions::default()
        };
        if let Some(f) = &self.fit {
            if let Some(v) = f.prominence_db {
                opts.prominence_db = v;
            }
            if f.freq_min_hz.is_some() {
                opts.freq_min_hz = f.freq_min_hz;
            }
            if f.fixed_frequency_hz.is_some() {
                opts.fixed_frequency_hz = f.fixed_frequency_hz;
            }
            if let Some(v) = f.fringe_periods {
                opts.fringe_periods = v;
            }
            if let Some(v) = f.ambiguity_db {
                opts.ambiguity_db = v;
            }
            if let Some(v) = f.probe_halfwidth_bins {
                opts.probe_halfwidth_bins = v;
            }
        }
        opts
    }
}

impl SweepBlock {
    pub fn to_sweep_config(&self) -> ahc_core::entanglement::PumpSweepConfig {
        ahc_core::entanglement::PumpSweepConfig {
            gamma: hz(self.gamma_hz),
            omega_minus_0: hz(self.splitting_hz),
            sigma_values: self.sigma_values_hz.iter().map(|&f| hz(f)).collect(),
            filters: self
                .filters
                .as_ref()
                .map(|f| (f.signal.to_spec(), f.idler.to_spec())),
        }
    }
}

/// One schema problem, located by a JSON pointer into the config document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub pointer: String,
    pub message: String,
}

impl Diagnostic {
    fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

/// Deserialize a config, reporting the failure location as a JSON pointer.
pub fn parse_config(text: &str) -> std::result::Result<PipelineConfig, Diagnostic> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize::<_, PipelineConfig>(de).map_err(|err| {
        let pointer = path_to_pointer(err.path());
        Diagnostic::new(pointer, err.inner().to_string())
    })
}

fn path_to_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Map { key } => {
                out.push('/');
                out.push_str(key);
            }
            Segment::Seq { index } => {
                out.push('/');
                out.push_str(&index.to_string());
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(variant);
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Collect every value-level problem in a parsed config.
pub fn validate_config(cfg: &PipelineConfig) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    if cfg.schema_version != 1 {
        d.push(Diagnostic::new(
            "/schema_version",
            format!(
                "unsupported schema version {}, this build reads version 1",
                cfg.schema_version
            ),
        ));
    }
    if let Some(source) = &cfg.source {
        check_source(source, &mut d);
    }
    if let Some(sim) = &cfg.simulation {
        check_simulation(sim, cfg.source.is_some(), &mut d);
    }
    if let Some(analysis) = &cfg.analysis {
        check_analysis(analysis, &mut d);
    }
    if let Some(sweep) = &cfg.sweep {
        check_sweep(sweep, &mut d);
    }
    d
}

fn check_positive(value: f64, pointer: String, what: &str, d: &mut Vec<Diagnostic>) {
    if !value.is_finite() || value <= 0.0 {
        d.push(Diagnostic::new(
            pointer,
            format!("{what} must be positive, got {value}"),
        ));
    }
}

fn check_non_negative(value: f64, pointer: String, what: &str, d: &mut Vec<Diagnostic>) {
    if !value.is_finite() || value < 0.0 {
        d.push(Diagnostic::new(
            pointer,
            format!("{what} must be finite and non-negative, got {value}"),
        ));
    }
}

fn check_finite(value: f64, pointer: String, what: &str, d: &mut Vec<Diagnostic>) {
    if !value.is_finite() {
        d.push(Diagnostic::new(
            pointer,
            format!("{what} must be finite, got {value}"),
        ));
    }
}

fn check_comb(comb: &CombBlock, base: &str, d: &mut Vec<Diagnostic>) {
    check_finite(comb.center_hz, format!("{base}/center_hz"), "mode center", d);
    check_positive(
        comb.linewidth_hz,
        format!("{base}/linewidth_hz"),
        "mode linewidth",
        d,
    );
    if let Some(fsr) = comb.fsr_hz {
        check_positive(fsr, format!("{base}/fsr_hz"), "free spectral range", d);
    }
    if let Some([a, b]) = comb.mode_range {
        if comb.fsr_hz.is_none() {
            d.push(Diagnostic::new(
                format!("{base}/mode_range"),
                "mode_range needs fsr_hz",
            ));
        }
        if a > 0 || b < 0 {
            d.push(Diagnostic::new(
                format!("{base}/mode_range"),
                format!("mode range [{a}, {b}] must bracket mode 0"),
            ));
        }
    }
}

fn check_source(s: &SourceBlock, d: &mut Vec<Diagnostic>) {
    let pulsed = match s.pump.kind.as_str() {
        "monochromatic" => {
            match s.pump.frequency_hz {
                Some(f) => check_finite(f, "/source/pump/frequency_hz".into(), "pump frequency", d),
                None => d.push(Diagnostic::new(
                    "/source/pump/frequency_hz",
                    "a monochromatic pump needs frequency_hz",
                )),
            }
            for (field, present) in [
                ("center_hz", s.pump.center_hz.is_some()),
                ("sigma_hz", s.pump.sigma_hz.is_some()),
            ] {
                if present {
                    d.push(Diagnostic::new(
                        format!("/source/pump/{field}"),
                        "only used by a gaussian_pulse pump",
                    ));
                }
            }
            false
        }
        "gaussian_pulse" => {
            match s.pump.center_hz {
                Some(f) => check_finite(f, "/source/pump/center_hz".into(), "pump center", d),
                None => d.push(Diagnostic::new(
                    "/source/pump/center_hz",
                    "a gaussian_pulse pump needs center_hz",
                )),
            }
            match s.pump.sigma_hz {
                Some(f) => check_positive(f, "/source/pump/sigma_hz".into(), "pump width", d),
                None => d.push(Diagnostic::new(
                    "/source/pump/sigma_hz",
                    "a gaussian_pulse pump needs sigma_hz",
                )),
            }
            if s.pump.frequency_hz.is_some() {
                d.push(Diagnostic::new(
                    "/source/pump/frequency_hz",
                    "only used by a monochromatic pump",
                ));
            }
            true
        }
        other => {
            d.push(Diagnostic::new(
                "/source/pump/kind",
                format!("unknown pump kind {other:?}, expected monochromatic or gaussian_pulse"),
            ));
            false
        }
    };

    check_comb(&s.signal, "/source/signal", d);
    check_comb(&s.idler, "/source/idler", d);
    if let Some(f) = &s.filters {
        check_comb(&f.signal, "/source/filters/signal", d);
        check_comb(&f.idler, "/source/filters/idler", d);
    }

    match s.phase_matching.kind.as_str() {
        "flat" => {
            for (field, present) in [
                ("center_hz", s.phase_matching.center_hz.is_some()),
                ("fwhm_hz", s.phase_matching.fwhm_hz.is_some()),
            ] {
                if present {
                    d.push(Diagnostic::new(
                        format!("/source/phase_matching/{field}"),
                        "only used by a gaussian envelope",
                    ));
                }
            }
        }
        "gaussian" => match s.phase_matching.fwhm_hz {
            Some(f) => check_positive(
                f,
                "/source/phase_matching/fwhm_hz".into(),
                "phase-matching width",
                d,
            ),
            None => d.push(Diagnostic::new(
                "/source/phase_matching/fwhm_hz",
                "a gaussian envelope needs fwhm_hz",
            )),
        },
        other => d.push(Diagnostic::new(
            "/source/phase_matching/kind",
            format!("unknown phase-matching kind {other:?}, expected flat or gaussian"),
        )),
    }

    check_positive(
        s.grid.diff_span_hz,
        "/source/grid/diff_span_hz".into(),
        "difference-axis span",
        d,
    );
    check_finite(
        s.grid.diff_center_hz,
        "/source/grid/diff_center_hz".into(),
        "difference-axis center",
        d,
    );
    if s.grid.diff_n < 2 || !s.grid.diff_n.is_power_of_two() {
        d.push(Diagnostic::new(
            "/source/grid/diff_n",
            format!(
                "frequency axes need a power-of-two point count >= 2, got {}",
                s.grid.diff_n
            ),
        ));
    }
    match (s.grid.sum_span_hz, s.grid.sum_n, pulsed) {
        (None, None, false) => {}
        (Some(_), Some(_), false) => d.push(Diagnostic::new(
            "/source/grid/sum_span_hz",
            "a monochromatic pump collapses the sum axis; drop sum_span_hz and sum_n",
        )),
        (None, None, true) => d.push(Diagnostic::new(
            "/source/grid/sum_span_hz",
            "a pulsed pump needs sum_span_hz and sum_n",
        )),
        (Some(span), Some(n), true) => {
            check_positive(span, "/source/grid/sum_span_hz".into(), "sum-axis span", d);
            if n < 2 || !n.is_power_of_two() {
                d.push(Diagnostic::new(
                    "/source/grid/sum_n",
                    format!("frequency axes need a power-of-two point count >= 2, got {n}"),
                ));
            }
        }
        _ => d.push(Diagnostic::new(
            "/source/grid/sum_span_hz",
            "sum_span_hz and sum_n come as a pair",
        )),
    }
}

fn check_detector(det: &DetectorBlock, base: &str, d: &mut Vec<Diagnostic>) {
    if !det.efficiency.is_finite() || !(0.0..=1.0).contains(&det.efficiency) {
        d.push(Diagnostic::new(
            format!("{base}/efficiency"),
            format!("efficiency must lie in [0, 1], got {}", det.efficiency),
        ));
    }
    check_non_negative(det.dark_rate_hz, format!("{base}/dark_rate_hz"), "dark rate", d);
    check_non_negative(det.dead_time_s, format!("{base}/dead_time_s"), "dead time", d);
    check_non_negative(
        det.jitter_sigma_s,
        format!("{base}/jitter_sigma_s"),
        "jitter sigma",
        d,
    );
    check_positive(det.clock_tick_s, format!("{base}/clock_tick_s"), "clock tick", d);
}

fn check_simulation(sim: &SimulationBlock, has_source: bool, d: &mut Vec<Diagnostic>) {
    check_positive(sim.pair_rate_hz, "/simulation/pair_rate_hz".into(), "pair rate", d);
    check_positive(sim.duration_s, "/simulation/duration_s".into(), "duration", d);
    if !sim.visibility.is_finite() || !(0.0..=1.0).contains(&sim.visibility) {
        d.push(Diagnostic::new(
            "/simulation/visibility",
            format!("visibility must lie in [0, 1], got {}", sim.visibility),
        ));
    }
    check_detector(&sim.detector_c, "/simulation/detector_c", d);
    check_detector(&sim.detector_d, "/simulation/detector_d", d);
    if sim.detector_c.clock_tick_s != sim.detector_d.clock_tick_s {
        d.push(Diagnostic::new(
            "/simulation/detector_d/clock_tick_s",
            "both detectors must share one clock tick",
        ));
    }
    if let Some(leak) = &sim.leakage {
        if !leak.weight.is_finite() || leak.weight <= 0.0 || leak.weight >= 1.0 {
            d.push(Diagnostic::new(
                "/simulation/leakage/weight",
                format!("leakage weight must lie in (0, 1), got {}", leak.weight),
            ));
        }
        check_positive(
            leak.beat_hz,
            "/simulation/leakage/beat_hz".into(),
            "leakage beat frequency",
            d,
        );
        if !has_source {
            d.push(Diagnostic::new(
                "/simulation/leakage",
                "leakage borrows the source linewidths and needs a source block",
            ));
        }
    }
}

fn check_analysis(a: &AnalysisBlock, d: &mut Vec<Diagnostic>) {
    check_positive(a.bin_width_s, "/analysis/bin_width_s".into(), "bin width", d);
    check_positive(a.window_s, "/analysis/window_s".into(), "delay window", d);
    if a.bin_width_s.is_finite()
        && a.window_s.is_finite()
        && a.bin_width_s > 0.0
        && a.window_s < a.bin_width_s
    {
        d.push(Diagnostic::new(
            "/analysis/window_s",
            "delay window must cover at least one bin",
        ));
    }
    if let Some(mask) = a.dead_time_mask_s {
        check_non_negative(mask, "/analysis/dead_time_mask_s".into(), "dead-time mask", d);
    }
    for (i, &f) in a.probe_frequencies_hz.iter().enumerate() {
        check_positive(
            f,
            format!("/analysis/probe_frequencies_hz/{i}"),
            "probe frequency",
            d,
        );
    }
    if let Some(ov) = a.g2_oversample {
        if ov == 0 || ov > 64 {
            d.push(Diagnostic::new(
                "/analysis/g2_oversample",
                format!("oversampling must lie in 1..=64, got {ov}"),
            ));
        }
    }
    if let Some(f) = &a.fit {
        if let Some(v) = f.prominence_db {
            check_positive(v, "/analysis/fit/prominence_db".into(), "prominence", d);
        }
        if let Some(v) = f.freq_min_hz {
            check_positive(v, "/analysis/fit/freq_min_hz".into(), "search floor", d);
        }
        if let Some(v) = f.fixed_frequency_hz {
            check_positive(v, "/analysis/fit/fixed_frequency_hz".into(), "fit frequency", d);
        }
        if let Some(v) = f.fringe_periods {
            check_positive(v, "/analysis/fit/fringe_periods".into(), "fringe window", d);
        }
        if let Some(v) = f.ambiguity_db {
            check_positive(v, "/analysis/fit/ambiguity_db".into(), "ambiguity range", d);
        }
    }
}

fn check_sweep(s: &SweepBlock, d: &mut Vec<Diagnostic>) {
    check_positive(s.gamma_hz, "/sweep/gamma_hz".into(), "mode linewidth", d);
    check_non_negative(s.splitting_hz, "/sweep/splitting_hz".into(), "mode splitting", d);
    if s.sigma_values_hz.is_empty() {
        d.push(Diagnostic::new(
            "/sweep/sigma_values_hz",
            "need at least one pump width",
        ));
    }
    for (i, &sigma) in s.sigma_values_hz.iter().enumerate() {
        check_positive(sigma, format!("/sweep/sigma_values_hz/{i}"), "pump width", d);
    }
    if let Some(f) = &s.filters {
        check_comb(&f.signal, "/sweep/filters/signal", d);
        check_comb(&f.idler, "/sweep/filters/idler", d);
    }
    if let Some(refs) = &s.reference_entropies {
        if refs.len() != s.sigma_values_hz.len() {
            d.push(Diagnostic::new(
                "/sweep/reference_entropies",
                format!(
                    "{} reference values for {} pump widths; need one per width",
                    refs.len(),
                    s.sigma_values_hz.len()
                ),
            ));
        }
        for (i, &e) in refs.iter().enumerate() {
            check_positive(e, format!("/sweep/reference_entropies/{i}"), "reference entropy", d);
        }
    }
}
