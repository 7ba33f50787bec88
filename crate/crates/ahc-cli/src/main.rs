//! `ahc`: simulate and analyze beat-note measurements on narrow-band photon
//! pairs. Errors leave as one-line JSON on stderr; exit codes are 0 (ok),
//! 2 (configuration), 3 (runtime), 4 (ambiguous fit).

use std::path::PathBuf;
use std::process::ExitCode;

use ahc_cli::config::{self, Diagnostic};
use ahc_cli::pipeline::{self, RunContext};
use ahc_core::AhcError;
use clap::{Args, Parser, Subcommand};

/// Environment variable consulted for the default output directory.
const OUT_DIR_ENV: &str = "AHC_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "ahc",
    version,
    about = "Simulate and analyze beat notes of narrow-band photon pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config and list schema problems with JSON-pointer paths.
    Validate(ValidateArgs),
    /// Build the joint spectral amplitude and store it.
    SynthJsa(StageArgs),
    /// Correlation traces of the stored amplitude.
    ComputeG2(StageArgs),
    /// Draw Monte-Carlo detector time tags from the stored traces.
    SimulateTags(StageArgs),
    /// Histogram the stored tag stream.
    Correlate(StageArgs),
    /// Power spectra and resolution of the stored histograms.
    Spectrum(StageArgs),
    /// Fit the beat note in the stored histogram and spectrum.
    Fit(StageArgs),
    /// Schmidt entropy sweep over pump bandwidths.
    Schmidt(StageArgs),
    /// Run every configured stage and write one aggregate report.
    Pipeline(StageArgs),
    /// List the bundled example configs usable as --config values.
    Recipes,
}

#[derive(Args)]
struct ValidateArgs {
    /// Config file path or bundled recipe name.
    #[arg(long)]
    config: String,
}

#[derive(Args)]
struct StageArgs {
    /// Config file path or bundled recipe name.
    #[arg(long)]
    config: String,
    /// Output directory; defaults to $AHC_OUT_DIR, then the config's
    /// output_dir, then ./ahc-out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress notes on stderr.
    #[arg(long)]
    quiet: bool,
    /// Omit wall-clock timestamps so reruns are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy)]
enum Stage {
    SynthJsa,
    ComputeG2,
    SimulateTags,
    Correlate,
    Spectrum,
    Fit,
    Schmidt,
    Pipeline,
}

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Recipes => {
            for (name, _) in config::RECIPES {
                println!("{name}");
            }
            0
        }
        Command::Validate(args) => cmd_validate(&args),
        Command::SynthJsa(a) => cmd_stage(a, Stage::SynthJsa),
        Command::ComputeG2(a) => cmd_stage(a, Stage::ComputeG2),
        Command::SimulateTags(a) => cmd_stage(a, Stage::SimulateTags),
        Command::Correlate(a) => cmd_stage(a, Stage::Correlate),
        Command::Spectrum(a) => cmd_stage(a, Stage::Spectrum),
        Command::Fit(a) => cmd_stage(a, Stage::Fit),
        Command::Schmidt(a) => cmd_stage(a, Stage::Schmidt),
        Command::Pipeline(a) => cmd_stage(a, Stage::Pipeline),
    }
}

fn cmd_validate(args: &ValidateArgs) -> u8 {
    let text = match config::load_config_text(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let diagnostics = match config::parse_config(&text) {
        Ok(cfg) => config::validate_config(&cfg),
        Err(diag) => vec![diag],
    };
    let valid = diagnostics.is_empty();
    println!(
        "{}",
        serde_json::json!({ "valid": valid, "diagnostics": diagnostics })
    );
    if valid {
        0
    } else {
        2
    }
}

fn cmd_stage(args: StageArgs, which: Stage) -> u8 {
    let text = match config::load_config_text(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(diag) => return fail(&AhcError::config_at(diag.pointer, diag.message)),
    };
    let diags = config::validate_config(&cfg);
    if !diags.is_empty() {
        return fail_diagnostics(&diags);
    }

    let out_dir = args
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ahc-out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        return fail(&e.into());
    }

    let ctx = RunContext::new(
        &cfg,
        &text,
        out_dir,
        args.seed,
        !args.no_timestamp,
        args.quiet,
    );
    let result = match which {
        Stage::SynthJsa => pipeline::stage_synth_jsa(&ctx).map(drop),
        Stage::ComputeG2 => pipeline::stage_compute_g2(&ctx).map(drop),
        Stage::SimulateTags => pipeline::stage_simulate_tags(&ctx).map(drop),
        Stage::Correlate => pipeline::stage_correlate(&ctx).map(drop),
        Stage::Spectrum => pipeline::stage_spectrum(&ctx).map(drop),
        Stage::Fit => pipeline::stage_fit(&ctx).map(drop),
        Stage::Schmidt => pipeline::stage_schmidt(&ctx).map(drop),
        Stage::Pipeline => pipeline::run_pipeline(&ctx).map(drop),
    };
    match result {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn fail(e: &AhcError) -> u8 {
    let mut body = serde_json::Map::new();
    body.insert("kind".into(), kind_of(e).into());
    body.insert("message".into(), e.to_string().into());
    if let AhcError::Config {
        pointer: Some(p), ..
    } = e
    {
        body.insert("pointer".into(), p.clone().into());
    }
    if let AhcError::AmbiguousPeak { candidates, .. } = e {
        body.insert(
            "candidates".into(),
            serde_json::json!(candidates
                .iter()
                .map(|(f, db)| serde_json::json!({"frequency_hz": f, "relative_db": db}))
                .collect::<Vec<_>>()),
        );
    }
    eprintln!("{}", serde_json::json!({ "error": body }));
    exit_code(e)
}

fn fail_diagnostics(diags: &[Diagnostic]) -> u8 {
    eprintln!(
        "{}",
        serde_json::json!({
            "error": {
                "kind": "config",
                "message": format!("{} invalid field(s)", diags.len()),
                "diagnostics": diags,
            }
        })
    );
    2
}

fn kind_of(e: &AhcError) -> &'static str {
    match e {
        AhcError::Config { .. } => "config",
        AhcError::AmbiguousPeak { .. } => "ambiguity",
        _ => "runtime",
    }
}

fn exit_code(e: &AhcError) -> u8 {
    match e {
        AhcError::Config { .. } => 2,
        AhcError::AmbiguousPeak { .. } => 4,
        _ => 3,
    }
}
