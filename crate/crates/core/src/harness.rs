//! Seeded experiment runner shared by the command-line presets and the
//! acceptance suite.
//!
//! One [`RunSpec`] describes a complete run: topology, parameters, stimulus
//! statistics and engine choice. [`execute`] derives every random quantity
//! from the run seed through fixed substreams (see [`crate::stimulus`]), so
//! a `(spec, seed)` pair is fully reproducible, and independent runs fan out
//! across threads with [`run_many`].

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{extract_run_records, RunRecord};
use crate::engine::{run_checked, run_optimized, run_reference, RecordPolicy, TickTrace};
use crate::error::{Divergence, StimulusError};
use crate::network::{NetworkParams, NetworkState};
use crate::stimulus::{
    random_initial_step, random_pattern, render_stream, NoiseSpec, PatternSpec, RunRng, Schedule,
};

/// Which engine(s) a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    Reference,
    Optimized,
    /// Run both and fail loudly on any divergence.
    Both,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error(transparent)]
    Divergence(#[from] Divergence),
}

/// Complete description of one run.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub n_neurons: usize,
    pub n_inputs: usize,
    pub n_patterns: u32,
    pub pattern_width: u32,
    pub presentations: usize,
    pub period: u32,
    pub noise: NoiseSpec,
    pub params: NetworkParams,
    /// Base of the randomized initial step, `base * (1 + u)`.
    pub step_init_base: u32,
    /// Draw the initial steps randomly; otherwise every kernel starts at
    /// `step_init_base`.
    pub randomize_steps: bool,
    pub threshold_init: u64,
    /// Pattern sampling probabilities; equally likely when absent.
    pub probabilities: Option<Vec<f64>>,
    /// Fixed target patterns; drawn uniformly at random when absent.
    pub fixed_patterns: Option<Vec<PatternSpec>>,
    pub engine: EngineKind,
    pub record: RecordPolicy,
}

impl RunSpec {
    /// Reference-profile spec: defaults for everything but the topology.
    pub fn new(n_neurons: usize, n_inputs: usize, n_patterns: u32) -> Self {
        RunSpec {
            n_neurons,
            n_inputs,
            n_patterns,
            pattern_width: 20,
            presentations: 300,
            period: 400,
            noise: NoiseSpec::NOISELESS,
            params: NetworkParams {
                neuron: crate::soma::default_params(n_inputs as u32),
                inhibit: crate::network::default_inhibit(),
            },
            step_init_base: 100,
            randomize_steps: true,
            threshold_init: 0,
            probabilities: None,
            fixed_patterns: None,
            engine: EngineKind::Optimized,
            record: RecordPolicy::Events,
        }
    }

    /// Single neuron driven by one fixed two-channel pattern with the given
    /// inter-spike interval.
    pub fn fixed_isi(isi: u32, presentations: usize) -> Self {
        let mut spec = RunSpec::new(1, 2, 1);
        spec.fixed_patterns =
            Some(vec![PatternSpec { offsets: vec![0, isi], width: spec.pattern_width }]);
        spec.presentations = presentations;
        spec
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub patterns: Vec<PatternSpec>,
    pub schedule: Schedule,
    pub initial_state: NetworkState,
    pub final_state: NetworkState,
    pub records: Vec<RunRecord>,
    pub trace: TickTrace,
}

/// Build the network, render the stimulus and run the chosen engine(s).
pub fn execute(spec: &RunSpec, seed: u64) -> Result<RunOutput, HarnessError> {
    let rng = RunRng::new(seed);

    let patterns: Vec<PatternSpec> = match &spec.fixed_patterns {
        Some(fixed) => fixed.clone(),
        None => {
            let mut prng = rng.patterns();
            (0..spec.n_patterns)
                .map(|_| random_pattern(spec.n_inputs, spec.pattern_width, &mut prng))
                .collect()
        }
    };

    // initial steps drawn neuron-major, channel-minor
    let mut irng = rng.kernel_init();
    let initial_state = NetworkState::init(spec.n_neurons, spec.n_inputs, spec.threshold_init, |_, _| {
        if spec.randomize_steps {
            random_initial_step(spec.step_init_base, &mut irng)
        } else {
            spec.step_init_base
        }
    });

    let mut srng = rng.schedule();
    let schedule = match &spec.probabilities {
        Some(probs) => Schedule::sampled(spec.period, probs, spec.presentations, &mut srng)?,
        None => Schedule::uniform_random(
            spec.period,
            patterns.len() as u32,
            spec.presentations,
            &mut srng,
        ),
    };

    let stream = render_stream(&schedule, &patterns, &spec.noise, &rng)?;
    let (final_state, trace) = match spec.engine {
        EngineKind::Reference => run_reference(&initial_state, &spec.params, &stream, spec.record),
        EngineKind::Optimized => run_optimized(&initial_state, &spec.params, &stream, spec.record),
        EngineKind::Both => run_checked(&initial_state, &spec.params, &stream, spec.record)?,
    };
    let records = extract_run_records(&trace, spec.n_neurons, stream.len);
    Ok(RunOutput { patterns, schedule, initial_state, final_state, records, trace })
}

/// SplitMix64-style per-run seed derivation from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run `f` for `n_runs` derived seeds in parallel, preserving run order.
pub fn run_many<T: Send>(
    n_runs: usize,
    master_seed: u64,
    f: impl Fn(usize, u64) -> T + Sync,
) -> Vec<T> {
    (0..n_runs)
        .into_par_iter()
        .map(|i| f(i, derive_seed(master_seed, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::classify_and_detect_convergence;

    #[test]
    fn execute_is_deterministic() {
        let mut spec = RunSpec::new(2, 2, 2);
        spec.presentations = 40;
        spec.engine = EngineKind::Both;
        let a = execute(&spec, 77).unwrap();
        let b = execute(&spec, 77).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.trace.events, b.trace.events);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), seeds.len());
    }

    #[test]
    fn run_many_preserves_order() {
        let out = run_many(8, 1, |i, seed| (i, seed));
        for (i, &(idx, seed)) in out.iter().enumerate() {
            assert_eq!(idx, i);
            assert_eq!(seed, derive_seed(1, i as u64));
        }
    }

    /// A small two-neuron race converges on two well-separated patterns.
    #[test]
    fn race_converges_on_separated_patterns() {
        let mut spec = RunSpec::new(2, 2, 2);
        spec.presentations = 200;
        spec.fixed_patterns = Some(vec![
            PatternSpec { offsets: vec![0, 0], width: 20 },
            PatternSpec { offsets: vec![0, 10], width: 20 },
        ]);
        spec.engine = EngineKind::Both;
        let out = execute(&spec, 3).unwrap();
        let report = classify_and_detect_convergence(&out.records, 20);
        assert!(report.converged_at.is_some(), "no convergence in 200 presentations");
        assert_eq!(report.mapping.len(), 2);
    }
}
