//! Cycle-accurate simulator for SKAN (Synapto-dendritic Kernel Adapting
//! Neuron) spiking neurons and competitive SKAN networks.
//!
//! The model is integer-only: each input channel owns a triangular ramp
//! kernel whose slope adapts under feedback from the soma output, the soma
//! compares the summed kernel levels against a homeostatic threshold, and a
//! layer of neurons competes through a single global inhibitory countdown.
//! Unsupervised spatio-temporal pattern learning emerges from these pieces.
//!
//! Crate layout:
//!
//! * [`dendrite`] — per-channel kernel state machine and adaptation
//! * [`soma`] — membrane summation, output bit, threshold homeostasis
//! * [`network`] — inhibition-gated competitive layer
//! * [`stimulus`] — pattern generation, corruption, stream rendering
//! * [`engine`] — reference and fast-forwarding executors, bit-exact
//! * [`analysis`] — receptive fields, run records, convergence detection
//! * [`harness`] — seeded, parallel experiment runner

pub mod analysis;
pub mod dendrite;
pub mod engine;
pub mod error;
pub mod harness;
pub mod network;
pub mod soma;
pub mod stimulus;

pub use dendrite::{KernelParams, KernelState, PhaseFlag};
pub use network::{InhibitParams, NetworkParams, NetworkState};
pub use soma::{NeuronParams, NeuronState};
pub use stimulus::{InputStream, NoiseSpec, PatternSpec, Schedule};
