//! Competitive layer of neurons sharing the same inputs.
//!
//! A single global inhibitory countdown replaces the usual winner-take-all
//! machinery: any output spike reloads the countdown, and while it is
//! non-zero no other neuron may start spiking. The best-adapted neuron for a
//! pattern is also the fastest to spike, so it keeps its pattern hidden from
//! the rest of the layer. The countdown holds at its ceiling for the whole
//! output pulse and only starts draining afterwards.

use crate::dendrite::kernel_tick;
use crate::error::ParamError;
use crate::soma::{NeuronParams, NeuronState, ParamWarning};

/// Global inhibition parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InhibitParams {
    /// Countdown reload value on any output spike.
    pub max: u32,
    /// Countdown decrement per tick once no neuron is spiking.
    pub decay: u32,
}

impl InhibitParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.max == 0 {
            return Err(ParamError::NotPositive("inh_max"));
        }
        if self.decay == 0 {
            return Err(ParamError::NotPositive("inh_decay"));
        }
        Ok(())
    }

    /// Rule-of-thumb check: the inhibition window should match the slowest
    /// initial ramp, `inh_max / inh_decay = min initial step`. Advisory only.
    pub fn rule_of_thumb_warning(&self, min_initial_step: u32) -> Option<ParamWarning> {
        let window = self.max / self.decay;
        if window != min_initial_step {
            Some(ParamWarning::InhibitionWindowMismatch { window, min_initial_step })
        } else {
            None
        }
    }
}

/// Reference inhibition profile: countdown from 100 in unit steps.
pub const fn default_inhibit() -> InhibitParams {
    InhibitParams { max: 100, decay: 1 }
}

/// Parameters of a whole layer. All neurons share one parameter set; their
/// individuality lives in the state (randomized initial steps).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkParams {
    pub neuron: NeuronParams,
    pub inhibit: InhibitParams,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.neuron.validate()?;
        self.inhibit.validate()
    }
}

/// Full state of a layer: the neurons plus the shared countdown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkState {
    pub neurons: Vec<NeuronState>,
    pub inhibition: u32,
}

impl NetworkState {
    /// Build a resting layer; `initial_step(neuron, channel)` supplies the
    /// per-kernel initial step size.
    pub fn init(
        n_neurons: usize,
        n_inputs: usize,
        threshold_init: u64,
        mut initial_step: impl FnMut(usize, usize) -> u32,
    ) -> Self {
        let neurons = (0..n_neurons)
            .map(|n| {
                let steps: Vec<u32> = (0..n_inputs).map(|i| initial_step(n, i)).collect();
                NeuronState::resting(&steps, threshold_init)
            })
            .collect();
        NetworkState { neurons, inhibition: 0 }
    }

    pub fn n_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.neurons.first().map_or(0, |n| n.n_inputs())
    }

    pub fn any_spiking(&self) -> bool {
        self.neurons.iter().any(|n| n.spiking)
    }
}

/// Output bit under global inhibition: a neuron may only *start* spiking
/// while the countdown is zero, but may *continue* a pulse it already
/// started.
#[inline]
pub fn gated_soma_output(
    membrane: u64,
    threshold_prev: u64,
    inhibition_prev: u32,
    spiking_prev: bool,
) -> bool {
    membrane > threshold_prev && (inhibition_prev == 0 || spiking_prev)
}

/// Countdown update from this tick's output bits: reload on any spike, else
/// drain towards zero. Reload wins, so the countdown acts as a peak detector
/// that only starts draining after the pulse ends.
#[inline]
pub fn inhibition_step(inhibition_prev: u32, any_spike: bool, params: &InhibitParams) -> u32 {
    if any_spike {
        params.max
    } else {
        inhibition_prev.saturating_sub(params.decay)
    }
}

/// Threshold update under global inhibition.
///
/// The rise is gated exactly like the output bit, so an inhibited crossing
/// leaves the threshold untouched. The fall fires either when the membrane
/// returns to zero with the countdown clear (a presentation nobody answered)
/// or on the falling edge of the neuron's own pulse, so only the neuron that
/// actually fired pays the post-spike fall.
#[inline]
pub fn gated_threshold_step(
    threshold_prev: u64,
    membrane: u64,
    membrane_prev: u64,
    inhibition_prev: u32,
    spiking_now: bool,
    spiking_prev: bool,
    params: &NeuronParams,
) -> u64 {
    if membrane > threshold_prev && (inhibition_prev == 0 || spiking_prev) {
        threshold_prev + params.threshold_rise as u64
    } else if (membrane == 0 && membrane_prev > 0 && inhibition_prev == 0)
        || (!spiking_now && spiking_prev)
    {
        threshold_prev.saturating_sub(params.threshold_fall as u64)
    } else {
        threshold_prev
    }
}

/// One synchronous tick of the whole layer, in place.
///
/// Per neuron: kernel phases and accumulators from previous-tick state (each
/// neuron feeds back its own previous output), then the inhibition-gated
/// output bit, then the gated threshold. Finally the countdown is updated
/// from the OR of the fresh output bits. Neurons never read each other's
/// state; the countdown is the only shared signal.
pub fn network_tick_in_place(state: &mut NetworkState, inputs: &[bool], params: &NetworkParams) {
    let inhibition_prev = state.inhibition;
    let mut any_spike = false;
    for neuron in &mut state.neurons {
        debug_assert_eq!(inputs.len(), neuron.kernels.len());
        let spiking_prev = neuron.spiking;
        let mut membrane_prev = 0u64;
        let mut membrane = 0u64;
        for (kernel, &u) in neuron.kernels.iter_mut().zip(inputs) {
            membrane_prev += kernel.level as u64;
            *kernel = kernel_tick(*kernel, u, spiking_prev, &params.neuron.kernel);
            membrane += kernel.level as u64;
        }
        let spiking = gated_soma_output(membrane, neuron.threshold, inhibition_prev, spiking_prev);
        neuron.threshold = gated_threshold_step(
            neuron.threshold,
            membrane,
            membrane_prev,
            inhibition_prev,
            spiking,
            spiking_prev,
            &params.neuron,
        );
        neuron.spiking = spiking;
        any_spike |= spiking;
    }
    state.inhibition = inhibition_step(inhibition_prev, any_spike, &params.inhibit);
}

/// Pure variant of [`network_tick_in_place`].
pub fn network_tick(state: &NetworkState, inputs: &[bool], params: &NetworkParams) -> NetworkState {
    let mut next = state.clone();
    network_tick_in_place(&mut next, inputs, params);
    next
}

/// Total connection count of a layer: per neuron, one line per input channel
/// plus the output line and the shared inhibition line.
pub fn connection_count(n_inputs: u64, n_neurons: u64) -> u64 {
    (n_inputs + 2) * n_neurons
}
