//! Target pattern generation, corruption and rendering into tick streams.
//!
//! A target pattern is one spike per channel at a fixed offset inside the
//! presentation window. Corruption applies, in order: per-spike deletion
//! (survival probability `p_signal`), Gaussian timing jitter rounded to
//! whole ticks and clamped into the window, and background spikes drawn as a
//! per-tick Bernoulli process calibrated to `poisson_rate` expected extra
//! spikes per channel per period.
//!
//! All randomness comes from one ChaCha8 generator keyed by the run seed and
//! split into fixed substreams, so streams are bit-reproducible and
//! presentations can be generated independently (and in parallel):
//!
//! * stream 1 — pattern generation
//! * stream 2 — initial kernel step sizes
//! * stream 3 — schedule sampling
//! * stream `2^32 + presentation * 2^8 + channel` — corruption draws

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use std::io::{self, Write};

use crate::error::StimulusError;

/// One target spatio-temporal pattern: a spike offset per channel, each in
/// `[0, width]` ticks from presentation onset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternSpec {
    pub offsets: Vec<u32>,
    /// Maximal pattern width in ticks.
    pub width: u32,
}

/// Corruption model for rendered presentations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the per-spike timing jitter, in ticks.
    pub jitter_sigma: f64,
    /// Per-spike survival probability.
    pub p_signal: f64,
    /// Expected background spikes per channel per period.
    pub poisson_rate: f64,
}

impl NoiseSpec {
    pub const NOISELESS: NoiseSpec =
        NoiseSpec { jitter_sigma: 0.0, p_signal: 1.0, poisson_rate: 0.0 };

    pub fn is_noiseless(&self) -> bool {
        self.jitter_sigma == 0.0 && self.p_signal == 1.0 && self.poisson_rate == 0.0
    }
}

/// Presentation timing: pattern `sequence[k]` occupies ticks
/// `[k * period, (k + 1) * period)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub period: u32,
    pub sequence: Vec<u32>,
}

impl Schedule {
    pub fn from_sequence(period: u32, sequence: Vec<u32>) -> Self {
        Schedule { period, sequence }
    }

    /// Equally likely pattern choices.
    pub fn uniform_random(
        period: u32,
        n_patterns: u32,
        len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let side = Uniform::from(0..n_patterns);
        Schedule { period, sequence: (0..len).map(|_| side.sample(rng)).collect() }
    }

    /// Pattern choices drawn from explicit probabilities.
    pub fn sampled(
        period: u32,
        probabilities: &[f64],
        len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, StimulusError> {
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|&p| p < 0.0 || !p.is_finite()) || total <= 0.0 {
            return Err(StimulusError::BadProbabilities);
        }
        let sequence = (0..len)
            .map(|_| {
                let mut x = rng.gen::<f64>() * total;
                for (i, &p) in probabilities.iter().enumerate() {
                    if x < p {
                        return i as u32;
                    }
                    x -= p;
                }
                probabilities.len() as u32 - 1
            })
            .collect();
        Ok(Schedule { period, sequence })
    }
}

/// Substream-splitting wrapper around the run seed.
#[derive(Clone, Copy, Debug)]
pub struct RunRng {
    seed: u64,
}

const STREAM_PATTERNS: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_SCHEDULE: u64 = 3;
const STREAM_CORRUPTION_BASE: u64 = 1 << 32;

impl RunRng {
    pub fn new(seed: u64) -> Self {
        RunRng { seed }
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }

    /// Generator for drawing target patterns.
    pub fn patterns(&self) -> ChaCha8Rng {
        self.stream(STREAM_PATTERNS)
    }

    /// Generator for initial kernel step sizes.
    pub fn kernel_init(&self) -> ChaCha8Rng {
        self.stream(STREAM_INIT)
    }

    /// Generator for schedule sampling.
    pub fn schedule(&self) -> ChaCha8Rng {
        self.stream(STREAM_SCHEDULE)
    }

    /// Generator for corrupting one channel of one presentation.
    pub fn corruption(&self, presentation: u32, channel: u16) -> ChaCha8Rng {
        self.stream(STREAM_CORRUPTION_BASE + ((presentation as u64) << 8) + channel as u64)
    }
}

/// Draw a pattern with offsets independently uniform over `[0, width]`.
pub fn random_pattern(n_channels: usize, width: u32, rng: &mut ChaCha8Rng) -> PatternSpec {
    let side = Uniform::from(0..=width);
    PatternSpec { offsets: (0..n_channels).map(|_| side.sample(rng)).collect(), width }
}

/// Initial kernel step per the reference profile: `base * (1 + u)` with `u`
/// uniform in `[0, 1)`, realised as a uniform integer in `[base, 2 * base)`.
pub fn random_initial_step(base: u32, rng: &mut ChaCha8Rng) -> u32 {
    base + rng.gen_range(0..base.max(1))
}

/// Corrupt one channel of one presentation. Draw order is fixed: survival,
/// then jitter, then one Bernoulli per tick of the period.
fn corrupt_channel(
    offset: u32,
    noise: &NoiseSpec,
    period: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    let mut spikes = Vec::new();
    let survives = rng.gen::<f64>() < noise.p_signal;
    if survives {
        let t = if noise.jitter_sigma > 0.0 {
            let normal = Normal::new(0.0, noise.jitter_sigma).expect("sigma checked non-negative");
            let shift = normal.sample(rng).round() as i64;
            (offset as i64 + shift).clamp(0, period as i64 - 1) as u32
        } else {
            offset.min(period - 1)
        };
        spikes.push(t);
    }
    if noise.poisson_rate > 0.0 {
        let p = noise.poisson_rate / period as f64;
        for t in 0..period {
            if rng.gen::<f64>() < p {
                spikes.push(t);
            }
        }
    }
    spikes.sort_unstable();
    spikes
}

/// Corrupt a whole presentation: per-channel sorted spike offsets within the
/// period. Duplicates are allowed; the renderer ORs them into one bit.
pub fn corrupt_presentation(
    pattern: &PatternSpec,
    noise: &NoiseSpec,
    period: u32,
    presentation: u32,
    rng: &RunRng,
) -> Vec<Vec<u32>> {
    pattern
        .offsets
        .iter()
        .enumerate()
        .map(|(ch, &offset)| {
            let mut channel_rng = rng.corruption(presentation, ch as u16);
            corrupt_channel(offset, noise, period, &mut channel_rng)
        })
        .collect()
}

/// A rendered input stream: absolute spike ticks per channel plus the
/// presentation onsets, both sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputStream {
    pub n_channels: usize,
    pub len: u64,
    /// Sorted `(tick, channel)` pairs, deduplicated.
    pub spikes: Vec<(u64, u16)>,
    /// Sorted `(tick, pattern index)` presentation markers.
    pub onsets: Vec<(u64, u32)>,
}

impl InputStream {
    /// Stream with no presentations, for hand-built tests.
    pub fn from_spikes(n_channels: usize, len: u64, mut spikes: Vec<(u64, u16)>) -> Self {
        spikes.sort_unstable();
        spikes.dedup();
        InputStream { n_channels, len, spikes, onsets: Vec::new() }
    }

    /// Debug export, one `tick,channel,bit` row per spike.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "tick,channel,bit")?;
        for &(t, ch) in &self.spikes {
            writeln!(w, "{t},{ch},1")?;
        }
        Ok(())
    }
}

/// Render a schedule of (possibly corrupted) presentations into an input
/// stream of `sequence.len() * period` ticks.
pub fn render_stream(
    schedule: &Schedule,
    patterns: &[PatternSpec],
    noise: &NoiseSpec,
    rng: &RunRng,
) -> Result<InputStream, StimulusError> {
    let n_channels = patterns.first().map_or(0, |p| p.offsets.len());
    for p in patterns {
        if p.offsets.len() != n_channels {
            return Err(StimulusError::ChannelMismatch {
                pattern_channels: p.offsets.len(),
                expected: n_channels,
            });
        }
    }
    let mut spikes = Vec::new();
    let mut onsets = Vec::with_capacity(schedule.sequence.len());
    for (k, &index) in schedule.sequence.iter().enumerate() {
        let pattern = patterns.get(index as usize).ok_or(
            StimulusError::PatternIndexOutOfRange { index, available: patterns.len() },
        )?;
        let base = k as u64 * schedule.period as u64;
        onsets.push((base, index));
        let channels = corrupt_presentation(pattern, noise, schedule.period, k as u32, rng);
        for (ch, ticks) in channels.iter().enumerate() {
            for &t in ticks {
                spikes.push((base + t as u64, ch as u16));
            }
        }
    }
    spikes.sort_unstable();
    spikes.dedup();
    Ok(InputStream {
        n_channels,
        len: schedule.sequence.len() as u64 * schedule.period as u64,
        spikes,
        onsets,
    })
}
