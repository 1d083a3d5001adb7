//! Execution engines over identical tick semantics.
//!
//! [`run_reference`] applies the layer tick for every tick of the stream, in
//! order; it is the semantic oracle. [`run_optimized`] produces bit-identical
//! results while skipping spans it can prove inert. The equivalence currency
//! is the sparse event log plus the final state; dense per-tick snapshots
//! are opt-in for debugging and plotting.

mod optimized;
mod trace_io;

pub use optimized::run_optimized;
pub use trace_io::{read_events_binary, write_events_binary};

use crate::dendrite::PhaseFlag;
use crate::error::Divergence;
use crate::network::{network_tick_in_place, NetworkParams, NetworkState};
use crate::stimulus::InputStream;

/// Sparse trace event. Within one tick, events are ordered: onset, input
/// spikes by channel, then per neuron (by index) phase flips by channel
/// followed by output edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    Onset { tick: u64, presentation: u32, pattern: u32 },
    InputSpike { tick: u64, channel: u16 },
    PhaseFlip { tick: u64, neuron: u16, channel: u16, phase: PhaseFlag },
    OutputRise { tick: u64, neuron: u16 },
    OutputFall { tick: u64, neuron: u16 },
}

impl Event {
    pub fn tick(&self) -> u64 {
        match *self {
            Event::Onset { tick, .. }
            | Event::InputSpike { tick, .. }
            | Event::PhaseFlip { tick, .. }
            | Event::OutputRise { tick, .. }
            | Event::OutputFall { tick, .. } => tick,
        }
    }
}

/// What the engine records while running.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordPolicy {
    /// Sparse event log only.
    Events,
    /// Event log plus a full state snapshot per tick. Forces per-tick
    /// evaluation in the optimized engine.
    Dense,
}

/// Full state snapshot after one tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseRow {
    pub tick: u64,
    pub state: NetworkState,
}

/// Recorded run output.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TickTrace {
    pub events: Vec<Event>,
    /// Per-neuron threshold at each presentation onset, aligned with the
    /// order of `Onset` events.
    pub onset_thresholds: Vec<Vec<u64>>,
    pub dense: Vec<DenseRow>,
    /// Number of ticks actually evaluated (the optimized engine skips the
    /// rest).
    pub ticks_evaluated: u64,
}

/// Cursors over the sorted spike and onset lists of a stream.
pub(crate) struct StreamCursor<'a> {
    stream: &'a InputStream,
    spike_pos: usize,
    onset_pos: usize,
}

impl<'a> StreamCursor<'a> {
    pub(crate) fn new(stream: &'a InputStream) -> Self {
        StreamCursor { stream, spike_pos: 0, onset_pos: 0 }
    }

    /// Tick of the next spike at or after the cursor.
    pub(crate) fn next_spike_tick(&self) -> Option<u64> {
        self.stream.spikes.get(self.spike_pos).map(|&(t, _)| t)
    }

    pub(crate) fn next_onset_tick(&self) -> Option<u64> {
        self.stream.onsets.get(self.onset_pos).map(|&(t, _)| t)
    }

    /// Advance past tick `t`, filling `inputs` with the spike bits of `t`
    /// and returning the onset marker at `t`, if any.
    pub(crate) fn take_tick(&mut self, t: u64, inputs: &mut [bool]) -> Option<(u32, u32)> {
        inputs.fill(false);
        while let Some(&(tick, ch)) = self.stream.spikes.get(self.spike_pos) {
            if tick != t {
                break;
            }
            inputs[ch as usize] = true;
            self.spike_pos += 1;
        }
        let mut onset = None;
        while let Some(&(tick, pattern)) = self.stream.onsets.get(self.onset_pos) {
            if tick != t {
                break;
            }
            onset = Some((self.onset_pos as u32, pattern));
            self.onset_pos += 1;
        }
        onset
    }
}

/// Reusable per-tick buffers, allocated once per run.
pub(crate) struct TickScratch {
    pub(crate) inputs: Vec<bool>,
    prev_phases: Vec<PhaseFlag>,
    prev_spiking: Vec<bool>,
}

impl TickScratch {
    pub(crate) fn new(n_channels: usize) -> Self {
        TickScratch {
            inputs: vec![false; n_channels],
            prev_phases: Vec::new(),
            prev_spiking: Vec::new(),
        }
    }
}

/// Shared single-tick evaluation: advances the state by one tick and emits
/// the events for it. Both engines funnel through here so their event
/// streams agree by construction.
pub(crate) fn eval_tick(
    state: &mut NetworkState,
    params: &NetworkParams,
    tick: u64,
    onset: Option<(u32, u32)>,
    scratch: &mut TickScratch,
    trace: &mut TickTrace,
    policy: RecordPolicy,
) {
    if let Some((presentation, pattern)) = onset {
        trace.events.push(Event::Onset { tick, presentation, pattern });
        trace
            .onset_thresholds
            .push(state.neurons.iter().map(|n| n.threshold).collect());
    }
    for (ch, &bit) in scratch.inputs.iter().enumerate() {
        if bit {
            trace.events.push(Event::InputSpike { tick, channel: ch as u16 });
        }
    }
    scratch.prev_phases.clear();
    scratch.prev_spiking.clear();
    for neuron in &state.neurons {
        scratch.prev_spiking.push(neuron.spiking);
        for kernel in &neuron.kernels {
            scratch.prev_phases.push(kernel.phase);
        }
    }

    network_tick_in_place(state, &scratch.inputs, params);

    let mut flat = 0usize;
    for (n, neuron) in state.neurons.iter().enumerate() {
        for (ch, kernel) in neuron.kernels.iter().enumerate() {
            if kernel.phase != scratch.prev_phases[flat] {
                trace.events.push(Event::PhaseFlip {
                    tick,
                    neuron: n as u16,
                    channel: ch as u16,
                    phase: kernel.phase,
                });
            }
            flat += 1;
        }
        if neuron.spiking && !scratch.prev_spiking[n] {
            trace.events.push(Event::OutputRise { tick, neuron: n as u16 });
        }
        if !neuron.spiking && scratch.prev_spiking[n] {
            trace.events.push(Event::OutputFall { tick, neuron: n as u16 });
        }
    }
    if policy == RecordPolicy::Dense {
        trace.dense.push(DenseRow { tick, state: state.clone() });
    }
    trace.ticks_evaluated += 1;
}

/// Run the dense reference engine: one evaluation per tick, no shortcuts.
pub fn run_reference(
    initial: &NetworkState,
    params: &NetworkParams,
    stream: &InputStream,
    policy: RecordPolicy,
) -> (NetworkState, TickTrace) {
    let mut state = initial.clone();
    let mut trace = TickTrace::default();
    let mut cursor = StreamCursor::new(stream);
    let mut scratch = TickScratch::new(stream.n_channels);
    for tick in 0..stream.len {
        let onset = cursor.take_tick(tick, &mut scratch.inputs);
        eval_tick(&mut state, params, tick, onset, &mut scratch, &mut trace, policy);
    }
    (state, trace)
}

/// Run both engines and insist on bit-identical results. Returns the
/// optimized run on success and the first point of divergence otherwise.
pub fn run_checked(
    initial: &NetworkState,
    params: &NetworkParams,
    stream: &InputStream,
    policy: RecordPolicy,
) -> Result<(NetworkState, TickTrace), Divergence> {
    let (ref_state, ref_trace) = run_reference(initial, params, stream, policy);
    let (opt_state, opt_trace) = run_optimized(initial, params, stream, policy);
    compare_runs(&ref_state, &ref_trace, &opt_state, &opt_trace, stream.len)?;
    Ok((opt_state, opt_trace))
}

/// Compare two runs event by event and state by state.
pub fn compare_runs(
    ref_state: &NetworkState,
    ref_trace: &TickTrace,
    opt_state: &NetworkState,
    opt_trace: &TickTrace,
    stream_len: u64,
) -> Result<(), Divergence> {
    let n = ref_trace.events.len().min(opt_trace.events.len());
    for i in 0..n {
        if ref_trace.events[i] != opt_trace.events[i] {
            return Err(Divergence {
                tick: ref_trace.events[i].tick().min(opt_trace.events[i].tick()),
                detail: format!(
                    "event {i}: reference {:?} vs optimized {:?}",
                    ref_trace.events[i], opt_trace.events[i]
                ),
            });
        }
    }
    if ref_trace.events.len() != opt_trace.events.len() {
        let (longer, name) = if ref_trace.events.len() > n {
            (&ref_trace.events[n], "reference")
        } else {
            (&opt_trace.events[n], "optimized")
        };
        return Err(Divergence {
            tick: longer.tick(),
            detail: format!("extra {name} event {:?}", longer),
        });
    }
    if ref_trace.onset_thresholds != opt_trace.onset_thresholds {
        return Err(Divergence {
            tick: 0,
            detail: "onset threshold snapshots differ".to_string(),
        });
    }
    if ref_state != opt_state {
        return Err(Divergence {
            tick: stream_len,
            detail: "final states differ".to_string(),
        });
    }
    Ok(())
}
