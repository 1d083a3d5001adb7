//! Single-channel synapto-dendritic kernel.
//!
//! An input spike launches a triangular ramp: an accumulator counts up from
//! zero by `step` per tick until it reaches the kernel height `weight`, then
//! counts back down to zero. The phase flag drives the ramp and the back
//! propagating soma output adapts the step size. Everything is integer; the
//! only operations are compares and sign-gated adds.

use crate::error::ParamError;

/// Ramp phase of a kernel. At most one transition per tick, driven by
/// [`kernel_phase_step`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseFlag {
    /// Accumulator counts up towards the kernel height.
    RampUp,
    /// Accumulator counts down towards zero.
    RampDown,
    /// Kernel at rest; the next input spike starts a ramp.
    Idle,
}

impl PhaseFlag {
    /// Sign of the accumulator update: +1, -1 or 0.
    #[inline]
    pub fn sign(self) -> i64 {
        match self {
            PhaseFlag::RampUp => 1,
            PhaseFlag::RampDown => -1,
            PhaseFlag::Idle => 0,
        }
    }
}

/// Per-channel kernel state.
///
/// `level` is this channel's contribution to the membrane potential and
/// stays within `[0, weight]`. `step` is the per-tick ramp increment, the
/// quantity learned by kernel adaptation; it stays within
/// `[step_floor, step_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KernelState {
    pub phase: PhaseFlag,
    pub level: u32,
    pub step: u32,
}

impl KernelState {
    /// Resting kernel with the given initial step size.
    pub fn resting(step: u32) -> Self {
        KernelState { phase: PhaseFlag::Idle, level: 0, step }
    }
}

/// Kernel parameters shared by every channel of a neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelParams {
    /// Maximum kernel height (the constant synaptic weight).
    pub weight: u32,
    /// Amount added to or removed from `step` per adaptation tick.
    pub step_delta: u32,
    /// Upper saturation for `step`.
    pub step_max: u32,
    /// Lower saturation for `step`. A step of zero would stall a ramp
    /// forever, so this must be at least one.
    pub step_floor: u32,
}

impl KernelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.weight == 0 {
            return Err(ParamError::NotPositive("w"));
        }
        if self.step_delta == 0 {
            return Err(ParamError::NotPositive("ddr"));
        }
        if self.step_floor == 0 {
            return Err(ParamError::NotPositive("dr_floor"));
        }
        if self.step_max > self.weight {
            return Err(ParamError::OutOfRange {
                key: "dr_max",
                reason: "must not exceed the kernel height w",
            });
        }
        if self.step_floor > self.step_max {
            return Err(ParamError::OutOfRange {
                key: "dr_floor",
                reason: "must not exceed dr_max",
            });
        }
        Ok(())
    }
}

/// Next phase flag from the previous tick's phase and level plus this tick's
/// input bit.
///
/// A spike only triggers an idle kernel; spikes arriving mid-ramp are
/// ignored, so the channel trains on the first spike of a burst. The ramp
/// turns down once the level has reached the kernel height and goes idle
/// once it is back at zero.
#[inline]
pub fn kernel_phase_step(prev: PhaseFlag, level_prev: u32, input: bool, weight: u32) -> PhaseFlag {
    match prev {
        PhaseFlag::Idle if input => PhaseFlag::RampUp,
        PhaseFlag::Idle => PhaseFlag::Idle,
        PhaseFlag::RampUp if level_prev < weight => PhaseFlag::RampUp,
        PhaseFlag::RampUp => PhaseFlag::RampDown,
        PhaseFlag::RampDown if level_prev > 0 => PhaseFlag::RampDown,
        PhaseFlag::RampDown => PhaseFlag::Idle,
    }
}

/// Accumulator and step update from previous-tick state and the soma's
/// previous output bit.
///
/// The level moves by `step` in the direction of the previous phase and
/// saturates at zero and at the kernel height. While the soma output is
/// high, a kernel still ramping up peaked too late and speeds up by
/// `step_delta`; one already ramping down peaked too early and slows down.
/// No multiplier is involved: the phase sign just selects add, subtract or
/// hold.
#[inline]
pub fn kernel_accumulate(
    state: KernelState,
    soma_prev: bool,
    params: &KernelParams,
) -> (u32, u32) {
    let level = match state.phase {
        PhaseFlag::RampUp => state.level.saturating_add(state.step).min(params.weight),
        PhaseFlag::RampDown => state.level.saturating_sub(state.step),
        PhaseFlag::Idle => state.level,
    };
    let step = if soma_prev {
        match state.phase {
            PhaseFlag::RampUp => state.step.saturating_add(params.step_delta).min(params.step_max),
            PhaseFlag::RampDown => state.step.saturating_sub(params.step_delta).max(params.step_floor),
            PhaseFlag::Idle => state.step,
        }
    } else {
        state.step
    };
    (level, step)
}

/// One synchronous tick of a single kernel: phase from previous state and
/// this tick's input, accumulator from previous phase and previous soma
/// output.
#[inline]
pub fn kernel_tick(
    state: KernelState,
    input: bool,
    soma_prev: bool,
    params: &KernelParams,
) -> KernelState {
    let phase = kernel_phase_step(state.phase, state.level, input, params.weight);
    let (level, step) = kernel_accumulate(state, soma_prev, params);
    KernelState { phase, level, step }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PARAMS: KernelParams = KernelParams {
        weight: 10_000,
        step_delta: 1,
        step_max: 400,
        step_floor: 1,
    };

    #[test]
    fn phase_step_examples() {
        // idle + spike starts a ramp
        assert_eq!(
            kernel_phase_step(PhaseFlag::Idle, 0, true, 10_000),
            PhaseFlag::RampUp
        );
        // level at the height turns the ramp down
        assert_eq!(
            kernel_phase_step(PhaseFlag::RampUp, 10_000, false, 10_000),
            PhaseFlag::RampDown
        );
        // ramp-down at zero goes idle
        assert_eq!(
            kernel_phase_step(PhaseFlag::RampDown, 0, false, 10_000),
            PhaseFlag::Idle
        );
        // mid-ramp spikes are ignored
        assert_eq!(
            kernel_phase_step(PhaseFlag::RampUp, 400, true, 10_000),
            PhaseFlag::RampUp
        );
        assert_eq!(
            kernel_phase_step(PhaseFlag::RampDown, 400, true, 10_000),
            PhaseFlag::RampDown
        );
    }

    #[test]
    fn accumulate_examples() {
        let k = |phase, level, step| KernelState { phase, level, step };
        // headroom above 400 so the raw adaptation arithmetic shows
        let roomy = KernelParams { step_max: 500, ..PARAMS };
        assert_eq!(
            kernel_accumulate(k(PhaseFlag::RampUp, 0, 400), false, &roomy),
            (400, 400)
        );
        assert_eq!(
            kernel_accumulate(k(PhaseFlag::RampUp, 400, 400), true, &roomy),
            (800, 401)
        );
        assert_eq!(
            kernel_accumulate(k(PhaseFlag::RampDown, 800, 400), true, &roomy),
            (400, 399)
        );
        // saturates at zero
        assert_eq!(
            kernel_accumulate(k(PhaseFlag::RampDown, 100, 400), false, &roomy),
            (0, 400)
        );
    }

    #[test]
    fn accumulate_clamps_at_weight() {
        let state = KernelState { phase: PhaseFlag::RampUp, level: 9_900, step: 400 };
        assert_eq!(kernel_accumulate(state, false, &PARAMS).0, 10_000);
    }

    #[test]
    fn step_saturates_at_bounds() {
        let hi = KernelState { phase: PhaseFlag::RampUp, level: 0, step: 400 };
        assert_eq!(kernel_accumulate(hi, true, &PARAMS).1, 400);
        let lo = KernelState { phase: PhaseFlag::RampDown, level: 500, step: 1 };
        assert_eq!(kernel_accumulate(lo, true, &PARAMS).1, 1);
    }

    /// Drive a kernel from rest with a single spike and no adaptation
    /// feedback, counting the ticks where the level actually moves.
    fn pulse_shape(weight: u32, step: u32) -> (Vec<u32>, u32, u32) {
        let params = KernelParams { weight, step_delta: 1, step_max: weight, step_floor: 1 };
        let mut state = KernelState::resting(step);
        let mut levels = vec![state.level];
        let (mut rises, mut falls) = (0, 0);
        for t in 0..(4 * weight as usize + 8) {
            let input = t == 1;
            let next = kernel_tick(state, input, false, &params);
            if next.level > state.level {
                rises += 1;
            }
            if next.level < state.level {
                falls += 1;
            }
            state = next;
            levels.push(state.level);
        }
        assert_eq!(state.phase, PhaseFlag::Idle);
        assert_eq!(state.level, 0);
        (levels, rises, falls)
    }

    #[test]
    fn single_spike_produces_one_triangular_pulse() {
        for weight in 1..=12u32 {
            for step in 1..=12u32 {
                let (levels, rises, falls) = pulse_shape(weight, step);
                let expect = weight.div_ceil(step);
                assert_eq!(rises, expect, "rises for w={weight} dr={step}");
                // the clamp pins the peak at exactly the kernel height
                assert_eq!(levels.iter().copied().max(), Some(weight));
                assert_eq!(falls, expect, "falls for w={weight} dr={step}");
            }
        }
    }

    #[test]
    fn fixed_point_when_idle_without_input() {
        let state = KernelState::resting(150);
        assert_eq!(kernel_tick(state, false, false, &PARAMS), state);
        assert_eq!(kernel_tick(state, false, true, &PARAMS), state);
    }

    /// Exhaustive one-step bound check over a small parameter box.
    #[test]
    fn bounds_hold_for_every_small_state() {
        let params = KernelParams { weight: 9, step_delta: 2, step_max: 7, step_floor: 2 };
        for phase in [PhaseFlag::RampUp, PhaseFlag::RampDown, PhaseFlag::Idle] {
            for level in 0..=params.weight {
                for step in params.step_floor..=params.step_max {
                    for input in [false, true] {
                        for soma in [false, true] {
                            let next = kernel_tick(
                                KernelState { phase, level, step },
                                input,
                                soma,
                                &params,
                            );
                            assert!(next.level <= params.weight);
                            assert!(next.step >= params.step_floor);
                            assert!(next.step <= params.step_max);
                        }
                    }
                }
            }
        }
    }

    proptest! {
        /// Step and level never leave their bounds under arbitrary
        /// input/feedback sequences.
        #[test]
        fn bounds_hold_under_random_drive(
            seq in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..600),
            step0 in 1u32..=400,
        ) {
            let mut state = KernelState::resting(step0);
            for (input, soma) in seq {
                state = kernel_tick(state, input, soma, &PARAMS);
                prop_assert!(state.level <= PARAMS.weight);
                prop_assert!((PARAMS.step_floor..=PARAMS.step_max).contains(&state.step));
                if state.phase == PhaseFlag::Idle && state.level == 0 {
                    // idle kernel must stay put without input
                    let hold = kernel_tick(state, false, soma, &PARAMS);
                    prop_assert_eq!(hold.level, 0);
                    prop_assert_eq!(hold.phase, PhaseFlag::Idle);
                }
            }
        }
    }
}
