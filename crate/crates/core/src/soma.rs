//! Single-neuron soma: membrane summation, output bit and homeostatic
//! threshold.
//!
//! The membrane potential is the plain sum of the kernel levels; it is never
//! reset by spiking, so the output can stay high for several consecutive
//! ticks. The threshold rises while the output is high and falls once the
//! membrane has returned to zero, which balances into an equilibrium where
//! the neuron fires a narrow pulse for its learnt pattern.

use crate::dendrite::{kernel_tick, KernelParams, KernelState};
use crate::error::ParamError;

/// Parameters of a whole neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NeuronParams {
    pub kernel: KernelParams,
    /// Threshold increase per tick of output pulse.
    pub threshold_rise: u32,
    /// Threshold decrease when the membrane returns to zero.
    pub threshold_fall: u32,
    /// Threshold at construction time.
    pub threshold_init: u64,
}

/// Reference parameter profile: kernel height 10000, unit adaptation step,
/// step ceiling 400, threshold rise/fall of 40 and 100 per input channel,
/// initial threshold zero.
pub const fn default_params(n_inputs: u32) -> NeuronParams {
    NeuronParams {
        kernel: KernelParams {
            weight: 10_000,
            step_delta: 1,
            step_max: 400,
            step_floor: 1,
        },
        threshold_rise: 40 * n_inputs,
        threshold_fall: 100 * n_inputs,
        threshold_init: 0,
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.kernel.validate()?;
        if self.threshold_rise == 0 {
            return Err(ParamError::NotPositive("theta_rise"));
        }
        if self.threshold_fall == 0 {
            return Err(ParamError::NotPositive("theta_fall"));
        }
        Ok(())
    }
}

/// Full state of one neuron.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeuronState {
    pub kernels: Vec<KernelState>,
    pub threshold: u64,
    pub spiking: bool,
}

impl NeuronState {
    /// Resting neuron with one kernel per entry of `steps`.
    pub fn resting(steps: &[u32], threshold_init: u64) -> Self {
        NeuronState {
            kernels: steps.iter().map(|&s| KernelState::resting(s)).collect(),
            threshold: threshold_init,
            spiking: false,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.kernels.len()
    }

    /// Membrane potential: the sum of all kernel levels.
    pub fn membrane(&self) -> u64 {
        self.kernels.iter().map(|k| k.level as u64).sum()
    }
}

/// Output bit: high exactly while the membrane strictly exceeds the
/// previous-tick threshold.
#[inline]
pub fn soma_output(membrane: u64, threshold_prev: u64) -> bool {
    membrane > threshold_prev
}

/// Homeostatic threshold update.
///
/// Rises while the membrane exceeds the threshold (the same condition that
/// drives the output bit), falls by `threshold_fall` on the tick the
/// membrane returns to zero, floored at zero, otherwise unchanged.
#[inline]
pub fn threshold_step(
    threshold_prev: u64,
    membrane: u64,
    membrane_prev: u64,
    params: &NeuronParams,
) -> u64 {
    if membrane > threshold_prev {
        threshold_prev + params.threshold_rise as u64
    } else if membrane == 0 && membrane_prev > 0 {
        threshold_prev.saturating_sub(params.threshold_fall as u64)
    } else {
        threshold_prev
    }
}

/// One synchronous tick of a free-standing neuron.
///
/// Phase order: kernel phases from previous state and this tick's inputs,
/// kernel accumulators from previous phases and the previous feedback bit,
/// then the fresh output bit, then the threshold. Every read is from the
/// previous tick, so evaluation order within the tick cannot change the
/// result.
pub fn neuron_tick(
    state: &NeuronState,
    inputs: &[bool],
    feedback_prev: bool,
    params: &NeuronParams,
) -> NeuronState {
    assert_eq!(inputs.len(), state.kernels.len(), "input width mismatch");
    let membrane_prev = state.membrane();
    let kernels: Vec<KernelState> = state
        .kernels
        .iter()
        .zip(inputs)
        .map(|(&k, &u)| kernel_tick(k, u, feedback_prev, &params.kernel))
        .collect();
    let membrane: u64 = kernels.iter().map(|k| k.level as u64).sum();
    let spiking = soma_output(membrane, state.threshold);
    let threshold = threshold_step(state.threshold, membrane, membrane_prev, params);
    NeuronState { kernels, threshold, spiking }
}

/// Feasibility warning emitted by [`validate_params`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamWarning {
    /// `step_max * pattern_width >= weight`: a fully adapted kernel can
    /// complete its ramp before the last spike of a maximal-width pattern
    /// arrives, so late spikes may stop sharing the output feedback.
    KernelShorterThanPattern {
        step_max: u32,
        weight: u32,
        pattern_width: u32,
    },
    /// Departure from the inhibition rule of thumb
    /// `inh_max / inh_decay = min initial step`.
    InhibitionWindowMismatch { window: u32, min_initial_step: u32 },
}

impl std::fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamWarning::KernelShorterThanPattern { step_max, weight, pattern_width } => write!(
                f,
                "dr_max={step_max} >= w/PW = {weight}/{pattern_width}: a converged kernel \
                 can finish before the pattern does"
            ),
            ParamWarning::InhibitionWindowMismatch { window, min_initial_step } => write!(
                f,
                "inh_max/inh_decay = {window} differs from the minimum initial step {min_initial_step}"
            ),
        }
    }
}

/// Check the step ceiling against the maximal pattern width.
///
/// Violations are warnings rather than errors: useful configurations exist
/// on both sides of the bound.
pub fn validate_params(params: &NeuronParams, pattern_width: u32) -> Vec<ParamWarning> {
    let mut warnings = Vec::new();
    let k = &params.kernel;
    // dr_max < w / PW, compared without division
    if (k.step_max as u64) * (pattern_width as u64) >= k.weight as u64 {
        warnings.push(ParamWarning::KernelShorterThanPattern {
            step_max: k.step_max,
            weight: k.weight,
            pattern_width,
        });
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dendrite::PhaseFlag;

    const N2: NeuronParams = default_params(2);

    #[test]
    fn output_is_strict_comparison() {
        assert!(soma_output(5_000, 4_999));
        assert!(!soma_output(5_000, 5_000));
        assert!(!soma_output(0, 0));
    }

    #[test]
    fn threshold_step_examples() {
        assert_eq!(threshold_step(1_000, 5_000, 4_600, &N2), 1_080);
        assert_eq!(threshold_step(1_000, 0, 400, &N2), 800);
        // floored at zero
        assert_eq!(threshold_step(100, 0, 400, &N2), 0);
        // neither crossing nor return: unchanged
        assert_eq!(threshold_step(1_000, 500, 900, &N2), 1_000);
    }

    #[test]
    fn all_idle_neuron_is_a_fixed_point() {
        let state = NeuronState::resting(&[150, 150], 0);
        let next = neuron_tick(&state, &[false, false], false, &N2);
        assert_eq!(next, state);
    }

    /// Independent straight-line recomputation of a short run, written
    /// directly from the update rules with plain arrays. Used as the oracle
    /// for the composed tick.
    fn oracle_trace(
        steps0: [u32; 2],
        theta0: u64,
        spikes: &[(usize, usize)], // (tick, channel)
        ticks: usize,
        p: &NeuronParams,
    ) -> Vec<(u64, bool)> {
        let w = p.kernel.weight;
        let mut phase = [0i64; 2];
        let mut level = [0u32; 2];
        let mut step = steps0;
        let mut theta = theta0;
        let mut s = false;
        let mut out = Vec::new();
        for t in 0..ticks {
            let mut u = [false; 2];
            for &(st, ch) in spikes {
                if st == t {
                    u[ch] = true;
                }
            }
            let mem_prev = level[0] as u64 + level[1] as u64;
            let mut new_phase = phase;
            for i in 0..2 {
                new_phase[i] = if u[i] && phase[i] == 0 || phase[i] == 1 && level[i] < w {
                    1
                } else if phase[i] == 1 && level[i] >= w || phase[i] == -1 && level[i] > 0 {
                    -1
                } else {
                    0
                };
            }
            for i in 0..2 {
                if phase[i] == 1 {
                    level[i] = (level[i] + step[i]).min(w);
                    if s {
                        step[i] = (step[i] + p.kernel.step_delta).min(p.kernel.step_max);
                    }
                } else if phase[i] == -1 {
                    level[i] = level[i].saturating_sub(step[i]);
                    if s {
                        step[i] = step[i].saturating_sub(p.kernel.step_delta).max(p.kernel.step_floor);
                    }
                }
            }
            phase = new_phase;
            let mem = level[0] as u64 + level[1] as u64;
            let s_new = mem > theta;
            if mem > theta {
                theta += p.threshold_rise as u64;
            } else if mem == 0 && mem_prev > 0 {
                theta = theta.saturating_sub(p.threshold_fall as u64);
            }
            s = s_new;
            out.push((mem, s));
        }
        out
    }

    #[test]
    fn composed_tick_matches_straight_line_oracle() {
        let expected = oracle_trace([150, 150], 0, &[(0, 0), (0, 1)], 300, &N2);
        let mut state = NeuronState::resting(&[150, 150], 0);
        let mut got = Vec::new();
        for t in 0..300 {
            let inputs = [t == 0, t == 0];
            let s_prev = state.spiking;
            state = neuron_tick(&state, &inputs, s_prev, &N2);
            got.push((state.membrane(), state.spiking));
        }
        assert_eq!(got, expected);
        // with a zero initial threshold the output rises one tick after the
        // spikes, as soon as the membrane is positive
        assert!(!got[0].1);
        assert!(got[1].1);
    }

    #[test]
    fn composed_tick_matches_oracle_with_isi_and_high_threshold() {
        let expected = oracle_trace([180, 120], 15_000, &[(3, 0), (13, 1)], 300, &N2);
        let mut state = NeuronState::resting(&[180, 120], 15_000);
        let mut got = Vec::new();
        for t in 0..300 {
            let inputs = [t == 3, t == 13];
            let s_prev = state.spiking;
            state = neuron_tick(&state, &inputs, s_prev, &N2);
            got.push((state.membrane(), state.spiking));
        }
        assert_eq!(got, expected);
    }

    struct PresentationRow {
        onset_theta: u64,
        steps: [u32; 2],
        latency: Option<i64>,
        width: u32,
    }

    /// Drive one presentation of a fixed two-spike pattern every `period`
    /// ticks and record per-presentation behaviour.
    fn present_repeatedly(
        isi: usize,
        presentations: usize,
        period: usize,
        params: &NeuronParams,
        steps0: [u32; 2],
    ) -> (NeuronState, Vec<PresentationRow>) {
        let mut state = NeuronState::resting(&steps0, params.threshold_init);
        let mut rows = Vec::new();
        for _ in 0..presentations {
            let onset_theta = state.threshold;
            let steps = [state.kernels[0].step, state.kernels[1].step];
            let mut rise: Option<usize> = None;
            let mut width = 0u32;
            let mut prev = state.spiking;
            for t in 0..period {
                let inputs = [t == 0, t == isi];
                let s_prev = state.spiking;
                state = neuron_tick(&state, &inputs, s_prev, params);
                if state.spiking {
                    width += 1;
                    if !prev && rise.is_none() {
                        rise = Some(t);
                    }
                }
                prev = state.spiking;
            }
            let latency = rise.map(|r| r as i64 - isi as i64);
            rows.push(PresentationRow { onset_theta, steps, latency, width });
        }
        (state, rows)
    }

    /// Repeated noiseless presentations drive both steps up to the ceiling
    /// when the spikes are simultaneous, and the response latency settles at
    /// ceil(w / dr_max) ticks past the last input spike.
    #[test]
    fn steps_grow_to_ceiling_and_latency_settles() {
        let (state, rows) = present_repeatedly(0, 900, 400, &N2, [150, 150]);
        // early presentations strictly increase the step
        for k in 1..8 {
            assert!(
                rows[k].steps[0] > rows[k - 1].steps[0],
                "step should grow early at presentation {k}"
            );
        }
        assert!(state.kernels.iter().all(|k| k.step >= N2.kernel.step_max - 1));
        let limit = (N2.kernel.weight.div_ceil(N2.kernel.step_max)) as i64;
        for row in &rows[870..] {
            let lat = row.latency.expect("converged neuron must respond");
            assert!((lat - limit).abs() <= 1, "latency {lat} vs limit {limit}");
        }
    }

    /// After convergence on a non-zero ISI the two kernel peak times agree
    /// within one tick, and the onset threshold is periodic within one rise
    /// quantum.
    #[test]
    fn kernel_peaks_synchronize_and_threshold_equilibrates() {
        let isi = 10usize;
        let (state, rows) = present_repeatedly(isi, 900, 400, &N2, [150, 170]);
        let w = N2.kernel.weight;
        let peak0 = w.div_ceil(state.kernels[0].step) as i64;
        let peak1 = isi as i64 + w.div_ceil(state.kernels[1].step) as i64;
        assert!((peak0 - peak1).abs() <= 1, "peaks {peak0} vs {peak1}");
        let last = &rows[rows.len() - 6..];
        for pair in last.windows(2) {
            let d = pair[1].onset_theta as i64 - pair[0].onset_theta as i64;
            assert!(d.unsigned_abs() <= N2.threshold_rise as u64, "onset threshold jitter {d}");
        }
    }

    /// The output may stay high across many consecutive ticks; the membrane
    /// is not reset by spiking.
    #[test]
    fn first_presentation_pulse_is_wide() {
        let (_, rows) = present_repeatedly(0, 1, 400, &N2, [150, 150]);
        assert!(rows[0].width > 10, "width {}", rows[0].width);
    }

    #[test]
    fn validate_params_bound_check() {
        let p = default_params(2);
        assert!(validate_params(&p, 20).is_empty()); // 400 * 20 < 10000
        let warns = validate_params(&p, 40); // 400 * 40 >= 10000
        assert_eq!(warns.len(), 1);
        let mut q = p;
        q.kernel.step_max = 9_999;
        assert!(validate_params(&q, 1).is_empty()); // 9999 < 10000
    }

    #[test]
    fn spike_mid_ramp_is_ignored_by_phase() {
        let mut state = NeuronState::resting(&[200, 200], 0);
        state = neuron_tick(&state, &[true, false], false, &N2);
        assert_eq!(state.kernels[0].phase, PhaseFlag::RampUp);
        let level_seq_a = state.kernels[0].level;
        // a second spike on the same channel must not restart the ramp
        state = neuron_tick(&state, &[true, false], false, &N2);
        assert_eq!(state.kernels[0].phase, PhaseFlag::RampUp);
        assert!(state.kernels[0].level > level_seq_a);
    }
}
