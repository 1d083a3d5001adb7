//! Experiment presets. Each preset resolves the configuration into a set of
//! seeded runs, executes them (in parallel across seeds), and writes CSV
//! summaries plus static SVG renderings into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use skan_core::analysis::{
    classify_and_detect_convergence, learnt_pattern_estimate, pulse_width_stats,
    receptive_field_2in, rms_error, NeuronSnapshot, RunRecord, SelectionOutcome,
    selection_outcome, CONVERGENCE_WINDOW, WIDTH_WINDOW,
};
use skan_core::harness::{execute, run_many, EngineKind, HarnessError, RunSpec};
use skan_core::stimulus::PatternSpec;
use skan_core::engine::RecordPolicy;
use thiserror::Error;

use crate::config::{config_hash, ConfigError, ExperimentConfig};
use crate::report::{line_plot, CsvFile, Provenance, Series};

pub const PRESET_NAMES: [&str; 9] =
    ["single", "fig7", "fig8", "fig9", "fig12", "fig14", "fig15", "fig16", "rf-sweep"];

#[derive(Debug, Error)]
pub enum PresetError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("cannot write artifact: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything a preset needs besides its name.
pub struct PresetContext {
    pub config: ExperimentConfig,
    pub engine: EngineKind,
    pub out_dir: PathBuf,
}

impl PresetContext {
    fn provenance(&self, preset: &str) -> Provenance {
        Provenance {
            seed: self.config.seed,
            config_hash: config_hash(&self.config, preset),
            preset: preset.to_string(),
        }
    }

    fn base_spec(&self, n_neurons: usize, n_inputs: usize, n_patterns: u32) -> RunSpec {
        let c = &self.config;
        let mut spec = RunSpec::new(n_neurons, n_inputs, n_patterns);
        spec.params = c.network_params(n_inputs);
        spec.pattern_width = c.pattern_width;
        spec.period = c.period;
        spec.noise = c.noise();
        spec.step_init_base = c.dr_init_base;
        spec.randomize_steps = c.dr_init_random;
        spec.threshold_init = c.theta_init;
        spec.engine = self.engine;
        spec
    }
}

/// Dispatch a preset by name. Unknown names are configuration errors.
pub fn run_preset(name: &str, ctx: &PresetContext) -> Result<(), PresetError> {
    fs::create_dir_all(&ctx.out_dir)?;
    match name {
        "single" => single(ctx),
        "fig7" => fig7(ctx),
        "fig8" => fig8(ctx),
        "fig9" => fig9(ctx),
        "fig12" => fig12(ctx),
        "fig14" => fig14(ctx),
        "fig15" => fig15(ctx),
        "fig16" => fig16(ctx),
        "rf-sweep" => rf_sweep(ctx),
        other => Err(ConfigError::UnknownPreset(other.to_string()).into()),
    }
}

fn write_run_records(
    dir: &Path,
    provenance: &Provenance,
    records: &[RunRecord],
) -> Result<PathBuf, PresetError> {
    let mut csv = CsvFile::new(
        dir,
        "run_records.csv",
        provenance,
        "presentation,pattern,neuron,latency,width,theta",
    );
    for record in records {
        if record.responders.is_empty() {
            let theta = record.onset_thresholds.first().copied().unwrap_or(0);
            csv.row(&[&record.presentation, &record.pattern, &-1i64, &"", &0u64, &theta]);
        }
        for responder in &record.responders {
            let theta = record
                .onset_thresholds
                .get(responder.neuron as usize)
                .copied()
                .unwrap_or(0);
            let latency = responder.latency.map_or(String::new(), |l| l.to_string());
            csv.row(&[
                &record.presentation,
                &record.pattern,
                &responder.neuron,
                &latency,
                &responder.width,
                &theta,
            ]);
        }
    }
    Ok(csv.finish()?)
}

/// Fraction of runs not yet converged at each checkpoint.
fn not_converged_curve(outcomes: &[Option<u32>], presentations: usize) -> Vec<(f64, f64)> {
    let total = outcomes.len().max(1) as f64;
    (0..=presentations)
        .step_by(20)
        .map(|p| {
            let unconverged = outcomes
                .iter()
                .filter(|o| !matches!(o, Some(at) if (*at as usize) <= p))
                .count();
            (p as f64, 100.0 * unconverged as f64 / total)
        })
        .collect()
}

/// One run, full recording: dense trace, event log, per-presentation
/// records.
fn single(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("single");
    let mut spec = ctx.base_spec(
        c.n_neurons.unwrap_or(1),
        c.n_inputs.unwrap_or(2),
        c.n_patterns.unwrap_or(1),
    );
    spec.presentations = c.presentations.unwrap_or(50);
    spec.record = RecordPolicy::Dense;
    let out = execute(&spec, c.seed)?;

    write_run_records(&ctx.out_dir, &provenance, &out.records)?;
    let mut trace_csv = fs::File::create(ctx.out_dir.join("trace.csv"))?;
    out.trace.write_dense_csv(&mut trace_csv)?;
    let mut events = fs::File::create(ctx.out_dir.join("events.bin"))?;
    out.trace.write_events_binary(&mut events)?;

    let stats = pulse_width_stats(&out.records, WIDTH_WINDOW);
    let mut summary = CsvFile::new(
        &ctx.out_dir,
        "summary.csv",
        &provenance,
        "presentation,pattern,responders,width,running_mean_width,envelope_width",
    );
    let mut width_series = Vec::new();
    for (k, record) in out.records.iter().enumerate() {
        let mean = stats.running_mean[k].map_or(String::new(), |m| format!("{m}"));
        summary.row(&[
            &record.presentation,
            &record.pattern,
            &record.responders.len(),
            &stats.widths[k],
            &mean,
            &stats.envelope[k],
        ]);
        width_series.push((k as f64, stats.widths[k] as f64));
    }
    summary.finish()?;
    line_plot(
        &ctx.out_dir,
        "width.svg",
        &provenance,
        "output pulse width per presentation",
        "presentation",
        "width (ticks)",
        &[Series { name: "width".into(), points: width_series }],
    )?;
    Ok(())
}

/// Response-time narrowing on a fixed two-spike pattern.
fn fig8(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("fig8");
    let mut spec = ctx.base_spec(1, 2, 1);
    spec.presentations = c.presentations.unwrap_or(50);
    spec.fixed_patterns =
        Some(vec![PatternSpec { offsets: vec![0, c.isi], width: c.pattern_width }]);
    let out = execute(&spec, c.seed)?;

    write_run_records(&ctx.out_dir, &provenance, &out.records)?;
    let mut summary = CsvFile::new(
        &ctx.out_dir,
        "summary.csv",
        &provenance,
        "presentation,latency,width,theta",
    );
    let mut latency_series = Vec::new();
    let mut width_series = Vec::new();
    for record in &out.records {
        let (latency, width) = record
            .responders
            .first()
            .map_or((String::new(), 0), |r| {
                (r.latency.map_or(String::new(), |l| l.to_string()), r.width)
            });
        let theta = record.onset_thresholds[0];
        summary.row(&[&record.presentation, &latency, &width, &theta]);
        if let Ok(l) = latency.parse::<f64>() {
            latency_series.push((record.presentation as f64, l));
        }
        width_series.push((record.presentation as f64, width as f64));
    }
    summary.finish()?;
    line_plot(
        &ctx.out_dir,
        "latency.svg",
        &provenance,
        "response time per presentation",
        "presentation",
        "last input spike to rising edge (ticks)",
        &[Series { name: "latency".into(), points: latency_series }],
    )?;
    line_plot(
        &ctx.out_dir,
        "width.svg",
        &provenance,
        "output pulse width per presentation",
        "presentation",
        "width (ticks)",
        &[Series { name: "width".into(), points: width_series }],
    )?;
    Ok(())
}

/// Pulse width as a correlate of timing noise: sweep the jitter level.
fn fig9(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("fig9");
    let sigmas = [0.0, 0.5, 1.0, 2.0];
    let runs = c.runs.unwrap_or(100);
    let presentations = c.presentations.unwrap_or(300);
    let scoring_start = presentations / 2;

    let mut summary = CsvFile::new(
        &ctx.out_dir,
        "summary.csv",
        &provenance,
        "sigma,run,responses,mean_width",
    );
    let mut aggregate = Vec::new();
    for (i, &sigma) in sigmas.iter().enumerate() {
        let mut spec = ctx.base_spec(1, 2, 1);
        spec.presentations = presentations;
        spec.noise.jitter_sigma = sigma;
        let rows = run_many(runs, c.seed.wrapping_add(i as u64 * 0x10_0000), |_, seed| {
            let out = execute(&spec, seed)?;
            let tail = &out.records[scoring_start..];
            let widths: Vec<u64> = tail
                .iter()
                .map(|r| r.responders.iter().map(|n| n.width).sum::<u64>())
                .filter(|&w| w > 0)
                .collect();
            let responses = widths.len();
            let mean = if responses == 0 {
                f64::NAN
            } else {
                widths.iter().sum::<u64>() as f64 / responses as f64
            };
            Ok::<(usize, f64), HarnessError>((responses, mean))
        });
        let mut means = Vec::new();
        for (run, row) in rows.into_iter().enumerate() {
            let (responses, mean) = row?;
            summary.row(&[&sigma, &run, &responses, &mean]);
            if mean.is_finite() {
                means.push(mean);
            }
        }
        let overall = means.iter().sum::<f64>() / means.len().max(1) as f64;
        aggregate.push((sigma, overall));
    }
    summary.finish()?;
    let mut agg = CsvFile::new(&ctx.out_dir, "aggregate.csv", &provenance, "sigma,mean_width");
    for &(sigma, mean) in &aggregate {
        agg.row(&[&sigma, &mean]);
    }
    agg.finish()?;
    line_plot(
        &ctx.out_dir,
        "width_vs_sigma.svg",
        &provenance,
        "mean responding pulse width vs timing jitter",
        "jitter sigma (ticks)",
        "mean width (ticks)",
        &[Series { name: "mean width".into(), points: aggregate }],
    )?;
    Ok(())
}

/// Commonest-pattern selection by a single neuron.
fn fig7(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("fig7");
    let probabilities = [0.5, 0.6, 0.7, 0.85, 1.0];
    let runs = c.runs.unwrap_or(100);
    let presentations = c.presentations.unwrap_or(300);
    let n_inputs = c.n_inputs.unwrap_or(4);

    let mut summary =
        CsvFile::new(&ctx.out_dir, "summary.csv", &provenance, "p_x,run,outcome");
    let mut curve = Vec::new();
    let mut aggregate_rows = Vec::new();
    for (i, &p_x) in probabilities.iter().enumerate() {
        let mut spec = ctx.base_spec(1, n_inputs, 2);
        spec.presentations = presentations;
        spec.probabilities = Some(vec![p_x, 1.0 - p_x]);
        let outcomes = run_many(runs, c.seed.wrapping_add(i as u64 * 0x10_0000), |_, seed| {
            let out = execute(&spec, seed)?;
            Ok::<SelectionOutcome, HarnessError>(selection_outcome(
                &out.records,
                presentations / 2,
            ))
        });
        let mut counts = [0usize; 4]; // first, second, both, neither
        for (run, outcome) in outcomes.into_iter().enumerate() {
            let outcome = outcome?;
            let label = match outcome {
                SelectionOutcome::First => "x",
                SelectionOutcome::Second => "y",
                SelectionOutcome::Both => "both",
                SelectionOutcome::Neither => "neither",
            };
            counts[match outcome {
                SelectionOutcome::First => 0,
                SelectionOutcome::Second => 1,
                SelectionOutcome::Both => 2,
                SelectionOutcome::Neither => 3,
            }] += 1;
            summary.row(&[&p_x, &run, &label]);
        }
        let frac = |n: usize| 100.0 * n as f64 / runs as f64;
        curve.push((p_x, frac(counts[0])));
        aggregate_rows.push((p_x, frac(counts[0]), frac(counts[1]), frac(counts[2]), frac(counts[3])));
    }
    summary.finish()?;
    let mut agg = CsvFile::new(
        &ctx.out_dir,
        "aggregate.csv",
        &provenance,
        "p_x,pct_x,pct_y,pct_both,pct_neither",
    );
    for (p, x, y, b, n) in aggregate_rows {
        agg.row(&[&p, &x, &y, &b, &n]);
    }
    agg.finish()?;
    line_plot(
        &ctx.out_dir,
        "selection.svg",
        &provenance,
        "commonest-pattern selection",
        "presentation probability of pattern x",
        "% of runs selecting x",
        &[Series { name: "x selected".into(), points: curve }],
    )?;
    Ok(())
}

/// Receptive-field error against the target pattern across signal-to-noise
/// ratios and channel counts.
fn fig12(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("fig12");
    let snr_grid: [(f64, f64, &str); 3] =
        [(1.0, 0.0, "1:0"), (0.5, 0.5, "1:1"), (1.0 / 3.0, 2.0 / 3.0, "1:2")];
    let input_grid = [2usize, 8];
    let runs = c.runs.unwrap_or(50);
    let presentations = c.presentations.unwrap_or(1000);

    let mut summary =
        CsvFile::new(&ctx.out_dir, "summary.csv", &provenance, "n_inputs,snr,run,rms");
    let mut series = Vec::new();
    let mut agg = CsvFile::new(
        &ctx.out_dir,
        "aggregate.csv",
        &provenance,
        "n_inputs,snr,mean_rms",
    );
    for (gi, &n_inputs) in input_grid.iter().enumerate() {
        let mut points = Vec::new();
        for (si, &(p_signal, rate, label)) in snr_grid.iter().enumerate() {
            let mut spec = ctx.base_spec(1, n_inputs, 1);
            spec.presentations = presentations;
            spec.noise.p_signal = p_signal;
            spec.noise.poisson_rate = rate;
            let salt = (gi * 8 + si) as u64 * 0x10_0000;
            let rows = run_many(runs, c.seed.wrapping_add(salt), |_, seed| {
                let out = execute(&spec, seed)?;
                let neuron = &out.final_state.neurons[0];
                let steps: Vec<u32> = neuron.kernels.iter().map(|k| k.step).collect();
                let estimate = learnt_pattern_estimate(&steps, spec.params.neuron.kernel.weight);
                let target: Vec<f64> =
                    out.patterns[0].offsets.iter().map(|&o| o as f64).collect();
                let rms = rms_error(&estimate, &target).expect("matching lengths");
                Ok::<f64, HarnessError>(rms)
            });
            let mut sum = 0.0;
            let mut count = 0usize;
            for (run, row) in rows.into_iter().enumerate() {
                let rms = row?;
                summary.row(&[&n_inputs, &label, &run, &rms]);
                sum += rms;
                count += 1;
            }
            let mean = sum / count.max(1) as f64;
            agg.row(&[&n_inputs, &label, &mean]);
            points.push((si as f64, mean));
        }
        series.push(Series { name: format!("{n_inputs} inputs"), points });
    }
    summary.finish()?;
    agg.finish()?;
    line_plot(
        &ctx.out_dir,
        "rms_vs_snr.svg",
        &provenance,
        "pattern estimate error vs signal-to-noise ratio",
        "SNR point (0 = 1:0, 1 = 1:1, 2 = 1:2)",
        "mean RMS error (ticks)",
        &series,
    )?;
    Ok(())
}

/// Convergence outcomes for a grid of race experiments; shared by the
/// fig14/fig15/fig16 presets.
fn race_outcomes(
    ctx: &PresetContext,
    spec: &RunSpec,
    runs: usize,
    salt: u64,
) -> Result<Vec<Option<u32>>, PresetError> {
    let rows = run_many(runs, ctx.config.seed.wrapping_add(salt), |_, seed| {
        let out = execute(spec, seed)?;
        let report = classify_and_detect_convergence(&out.records, CONVERGENCE_WINDOW);
        Ok::<Option<u32>, HarnessError>(report.converged_at)
    });
    let mut outcomes = Vec::with_capacity(runs);
    for row in rows {
        outcomes.push(row?);
    }
    Ok(outcomes)
}

fn write_convergence_artifacts(
    ctx: &PresetContext,
    provenance: &Provenance,
    label_header: &str,
    results: &[(String, Vec<Option<u32>>)],
    presentations: usize,
    plot_name: &str,
    plot_title: &str,
) -> Result<(), PresetError> {
    let mut summary = CsvFile::new(
        &ctx.out_dir,
        "summary.csv",
        provenance,
        &format!("{label_header},run,converged_at"),
    );
    let mut curves = CsvFile::new(
        &ctx.out_dir,
        "curves.csv",
        provenance,
        &format!("{label_header},presentations,pct_not_converged"),
    );
    let mut series = Vec::new();
    for (label, outcomes) in results {
        for (run, outcome) in outcomes.iter().enumerate() {
            let at = outcome.map_or(-1i64, |v| v as i64);
            summary.row(&[label, &run, &at]);
        }
        let curve = not_converged_curve(outcomes, presentations);
        for &(p, pct) in &curve {
            curves.row(&[label, &p, &pct]);
        }
        series.push(Series { name: label.clone(), points: curve });
    }
    summary.finish()?;
    curves.finish()?;
    line_plot(
        &ctx.out_dir,
        plot_name,
        provenance,
        plot_title,
        "pattern presentations",
        "% of runs not converged",
        &series,
    )?;
    Ok(())
}

/// One-to-one neuron/pattern allocation across network sizes.
fn fig14(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("fig14");
    let runs = c.runs.unwrap_or(200);
    let presentations = c.presentations.unwrap_or(800);
    let n_inputs = c.n_inputs.unwrap_or(2);
    let grid: Vec<(usize, u32)> = match (c.n_neurons, c.n_patterns) {
        (Some(n), Some(p)) => vec![(n, p)],
        _ => vec![(2, 2), (3, 3), (4, 4)],
    };
    let mut results = Vec::new();
    for (i, &(n_neurons, n_patterns)) in grid.iter().enumerate() {
        let mut spec = ctx.base_spec(n_neurons, n_inputs, n_patterns);
        spec.presentations = presentations;
        let outcomes = race_outcomes(ctx, &spec, runs, i as u64 * 0x100_0000)?;
        results.push((format!("{n_neurons}n/{n_patterns}p"), outcomes));
    }
    write_convergence_artifacts(
        ctx,
        &provenance,
        "topology",
        &results,
        presentations,
        "convergence.svg",
        "allocation convergence vs network size",
    )
}

/// Convergence across input dimension and pattern width.
fn fig15(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("fig15");
    let runs = c.runs.unwrap_or(100);
    let presentations = c.presentations.unwrap_or(800);
    let dims = [2usize, 4, 8, 16];
    let widths = [20u32, 40];
    let mut results = Vec::new();
    for (wi, &pw) in widths.iter().enumerate() {
        for (di, &dim) in dims.iter().enumerate() {
            let mut spec = ctx.base_spec(2, dim, 2);
            spec.presentations = presentations;
            spec.pattern_width = pw;
            let salt = (wi * 8 + di) as u64 * 0x100_0000;
            let outcomes = race_outcomes(ctx, &spec, runs, salt)?;
            results.push((format!("dim{dim}/PW{pw}"), outcomes));
        }
    }
    write_convergence_artifacts(
        ctx,
        &provenance,
        "case",
        &results,
        presentations,
        "convergence.svg",
        "convergence vs input dimension and pattern width",
    )
}

/// Convergence under temporal jitter.
fn fig16(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("fig16");
    let runs = c.runs.unwrap_or(200);
    let presentations = c.presentations.unwrap_or(800);
    let sigmas = [0.0, 0.25, 0.5, 1.0, 2.0];
    let mut results = Vec::new();
    for (i, &sigma) in sigmas.iter().enumerate() {
        let mut spec = ctx.base_spec(2, c.n_inputs.unwrap_or(2), 2);
        spec.presentations = presentations;
        spec.noise.jitter_sigma = sigma;
        let outcomes = race_outcomes(ctx, &spec, runs, i as u64 * 0x100_0000)?;
        results.push((format!("sigma={sigma}"), outcomes));
    }
    write_convergence_artifacts(
        ctx,
        &provenance,
        "sigma",
        &results,
        presentations,
        "convergence.svg",
        "convergence vs temporal jitter",
    )
}

/// Train one neuron, then sweep its receptive field over the ISI axis.
fn rf_sweep(ctx: &PresetContext) -> Result<(), PresetError> {
    let c = &ctx.config;
    let provenance = ctx.provenance("rf-sweep");
    let mut spec = ctx.base_spec(1, 2, 1);
    spec.presentations = c.presentations.unwrap_or(900);
    spec.fixed_patterns =
        Some(vec![PatternSpec { offsets: vec![0, c.isi], width: c.pattern_width }]);
    let out = execute(&spec, c.seed)?;
    let neuron = &out.final_state.neurons[0];
    let snapshot = NeuronSnapshot {
        params: spec.params.neuron,
        steps: neuron.kernels.iter().map(|k| k.step).collect(),
        threshold: neuron.threshold,
    };
    let rf = receptive_field_2in(&snapshot, c.pattern_width)
        .expect("snapshot is 2-input by construction");

    let mut curve = CsvFile::new(&ctx.out_dir, "rf_curve.csv", &provenance, "tau,rf");
    let mut points = Vec::new();
    for (&tau, &value) in rf.taus.iter().zip(&rf.values) {
        curve.row(&[&tau, &value]);
        points.push((tau as f64, value as f64));
    }
    curve.finish()?;

    let estimate = learnt_pattern_estimate(&snapshot.steps, spec.params.neuron.kernel.weight);
    let mut summary = CsvFile::new(
        &ctx.out_dir,
        "summary.csv",
        &provenance,
        "trained_isi,argmax,bound_lo,bound_hi,estimate_diff,dr_0,dr_1,theta",
    );
    summary.row(&[
        &c.isi,
        &rf.argmax,
        &rf.bounds.0,
        &rf.bounds.1,
        &(estimate[1] - estimate[0]),
        &snapshot.steps[0],
        &snapshot.steps[1],
        &snapshot.threshold,
    ]);
    summary.finish()?;
    line_plot(
        &ctx.out_dir,
        "rf_curve.svg",
        &provenance,
        "receptive field after training",
        "ISI (ticks)",
        "supra-threshold area",
        &[Series { name: "RF".into(), points }],
    )?;
    Ok(())
}
