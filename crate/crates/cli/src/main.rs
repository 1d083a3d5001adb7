//! `skan` — run simulator experiment presets.
//!
//! Exit codes: 0 success, 2 configuration error, 3 internal or engine
//! equivalence failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use skan_cli::config::{ConfigError, ExperimentConfig};
use skan_cli::presets::{run_preset, PresetContext, PresetError, PRESET_NAMES};
use skan_core::harness::EngineKind;

#[derive(Parser, Debug)]
#[command(
    name = "skan",
    version,
    about = "Integer spiking-neuron simulator with adaptive ramp kernels",
    after_help = "Presets:\n  \
        single    one fully recorded run (dense trace, event log)\n  \
        fig7      commonest-pattern selection vs presentation probability\n  \
        fig8      response-time narrowing on a fixed pattern\n  \
        fig9      pulse width as a correlate of timing jitter\n  \
        fig12     pattern-estimate RMS error vs signal-to-noise ratio\n  \
        fig14     1-to-1 allocation convergence vs network size\n  \
        fig15     convergence vs input dimension and pattern width\n  \
        fig16     convergence vs temporal jitter\n  \
        rf-sweep  train one neuron, sweep its receptive field"
)]
struct Args {
    /// Experiment preset to run.
    #[arg(value_parser = PRESET_NAMES)]
    preset: String,

    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,

    /// Number of seeded runs (overrides the preset default).
    #[arg(long)]
    runs: Option<usize>,

    /// Engine selection; `both` runs the pair and insists on bit-identical
    /// results.
    #[arg(long, default_value = "optimized", value_parser = ["reference", "optimized", "both"])]
    engine: String,

    /// Output directory for CSVs and plots.
    #[arg(long, default_value = "skan-out")]
    out: PathBuf,

    /// Worker threads for fanning runs out (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,

    /// Inline `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    for pair in &args.set {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(ConfigError::Syntax { line: 0, text: pair.clone() });
        };
        config.set(key.trim(), value)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(runs) = args.runs {
        config.runs = Some(runs);
    }
    config.check()?;
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match build_config(&args) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("configuration error: {err}");
            return ExitCode::from(2);
        }
    };
    if let Some(jobs) = args.jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("internal error: {err}");
            return ExitCode::from(3);
        }
    }
    for warning in config.warnings(config.n_inputs.unwrap_or(2)) {
        eprintln!("warning: {warning}");
    }
    let engine = match args.engine.as_str() {
        "reference" => EngineKind::Reference,
        "both" => EngineKind::Both,
        _ => EngineKind::Optimized,
    };
    let ctx = PresetContext { config, engine, out_dir: args.out.clone() };
    match run_preset(&args.preset, &ctx) {
        Ok(()) => {
            println!("wrote artifacts to {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(PresetError::Config(err)) => {
            eprintln!("configuration error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(3)
        }
    }
}
