//! Fast-forwarding engine.
//!
//! While no neuron is spiking, the per-tick update is piecewise linear: ramp
//! levels move by a constant step, the inhibition counter drains, and
//! nothing else can change until one of a small set of boundary ticks:
//!
//! * the next input spike or presentation onset,
//! * a ramp reaching the kernel height or zero (phase flip, membrane-zero
//!   threshold fall),
//! * a membrane crossing its threshold after the inhibition gate opens.
//!
//! The engine computes the earliest such tick in closed form, advances the
//! linear quantities exactly, and evaluates only the boundary tick through
//! the same single-tick code the reference engine uses. Anything uncertain
//! (any neuron spiking, dense recording requested) falls back to tick-by-tick
//! evaluation, so bit-exactness never depends on the shortcut analysis.

use super::{eval_tick, run_reference, RecordPolicy, StreamCursor, TickScratch, TickTrace};
use crate::dendrite::PhaseFlag;
use crate::network::{NetworkParams, NetworkState};
use crate::stimulus::InputStream;

#[inline]
fn ceil_div(a: u64, b: u64) -> u64 {
    debug_assert!(b > 0);
    a.div_ceil(b)
}

/// Earliest tick >= `t` that must be evaluated, given that the state
/// reflects time `t - 1` and no neuron is spiking. Returns `u64::MAX` when
/// nothing forces an evaluation.
fn next_forced_tick(
    state: &NetworkState,
    params: &NetworkParams,
    t: u64,
    cursor: &StreamCursor<'_>,
) -> u64 {
    let state_time = t - 1;
    let mut forced = u64::MAX;
    if let Some(s) = cursor.next_spike_tick() {
        forced = forced.min(s);
    }
    if let Some(o) = cursor.next_onset_tick() {
        forced = forced.min(o);
    }

    // tick at which the inhibition gate is open for new pulses
    let decay = params.inhibit.decay as u64;
    let gate_open = if state.inhibition == 0 {
        Some(state_time + 1)
    } else if decay == 0 {
        None
    } else {
        Some(state_time + ceil_div(state.inhibition as u64, decay) + 1)
    };

    for neuron in &state.neurons {
        debug_assert!(!neuron.spiking);
        let mut membrane = 0u64;
        let mut slope = 0i64;
        for kernel in &neuron.kernels {
            membrane += kernel.level as u64;
            let step = kernel.step as u64;
            match kernel.phase {
                PhaseFlag::RampUp => {
                    slope += step as i64;
                    if step > 0 {
                        let to_top = ceil_div((params.neuron.kernel.weight - kernel.level) as u64, step);
                        forced = forced.min(state_time + to_top.max(1));
                    }
                }
                PhaseFlag::RampDown => {
                    slope -= step as i64;
                    if step > 0 {
                        let to_zero = ceil_div(kernel.level as u64, step);
                        forced = forced.min(state_time + to_zero.max(1));
                    }
                }
                PhaseFlag::Idle => {}
            }
        }
        // membrane crossing: only an event once the gate is open
        if let Some(open) = gate_open {
            let cross = if membrane > neuron.threshold {
                Some(state_time + 1)
            } else if slope > 0 {
                Some(state_time + (neuron.threshold - membrane) / slope as u64 + 1)
            } else {
                None
            };
            if let Some(c) = cross {
                forced = forced.min(c.max(open));
            }
        }
    }
    forced
}

/// Advance every linear quantity by `k` ticks. Only valid strictly inside a
/// span delimited by [`next_forced_tick`].
fn apply_linear_span(state: &mut NetworkState, params: &NetworkParams, k: u64) {
    for neuron in &mut state.neurons {
        for kernel in &mut neuron.kernels {
            let moved = k * kernel.step as u64;
            match kernel.phase {
                PhaseFlag::RampUp => {
                    let level = kernel.level as u64 + moved;
                    debug_assert!(level <= params.neuron.kernel.weight as u64);
                    kernel.level = level as u32;
                }
                PhaseFlag::RampDown => {
                    debug_assert!(moved <= kernel.level as u64);
                    kernel.level -= moved as u32;
                }
                PhaseFlag::Idle => {}
            }
        }
    }
    let drained = k.saturating_mul(params.inhibit.decay as u64);
    state.inhibition = state.inhibition.saturating_sub(drained.min(u32::MAX as u64) as u32);
}

/// Run the fast-forwarding engine. Bit-identical to [`run_reference`] on
/// every input, including clamp ticks and spikes landing exactly on span
/// boundaries.
pub fn run_optimized(
    initial: &NetworkState,
    params: &NetworkParams,
    stream: &InputStream,
    policy: RecordPolicy,
) -> (NetworkState, TickTrace) {
    if policy == RecordPolicy::Dense {
        // dense recording wants every tick anyway
        return run_reference(initial, params, stream, policy);
    }
    let mut state = initial.clone();
    let mut trace = TickTrace::default();
    let mut cursor = StreamCursor::new(stream);
    let mut scratch = TickScratch::new(stream.n_channels);
    let mut t: u64 = 0;
    while t < stream.len {
        if t > 0 && !state.any_spiking() {
            let forced = next_forced_tick(&state, params, t, &cursor);
            if forced > t {
                let target = forced.min(stream.len);
                apply_linear_span(&mut state, params, target - t);
                t = target;
                if t >= stream.len {
                    break;
                }
            }
        }
        let onset = cursor.take_tick(t, &mut scratch.inputs);
        eval_tick(&mut state, params, t, onset, &mut scratch, &mut trace, policy);
        t += 1;
    }
    (state, trace)
}
