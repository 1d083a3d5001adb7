//! Post-processing over immutable traces: receptive fields, learnt-pattern
//! estimates, per-presentation records, classification scoring and
//! convergence detection.

use crate::dendrite::{kernel_tick, KernelState};
use crate::engine::{Event, TickTrace};
use crate::error::AnalysisError;
use crate::soma::NeuronParams;

/// A saved 2-input neuron to sweep: step sizes and threshold are held fixed.
#[derive(Clone, Debug)]
pub struct NeuronSnapshot {
    pub params: NeuronParams,
    pub steps: Vec<u32>,
    pub threshold: u64,
}

/// Receptive field over the swept inter-spike interval.
#[derive(Clone, Debug)]
pub struct ReceptiveField {
    /// Swept ISI values, `-width ..= width` in order.
    pub taus: Vec<i64>,
    /// Summed supra-threshold area per ISI.
    pub values: Vec<u64>,
    /// ISI with the largest field value; lowest ISI wins ties.
    pub argmax: i64,
    /// First ISIs at or below/above the argmax where the field reaches
    /// zero (clamped to the sweep edges if it never does).
    pub bounds: (i64, i64),
}

/// Simulate one frozen presentation with spikes at `(0, tau)` (shifted so
/// the earlier spike lands on tick zero) and accumulate the supra-threshold
/// area `sum((membrane - threshold) * s)`.
fn frozen_response(snapshot: &NeuronSnapshot, tau: i64, theta_evolves: bool) -> u64 {
    let params = &snapshot.params;
    let spike_a = (-tau).max(0) as u64;
    let spike_b = tau.max(0) as u64;
    let min_step = snapshot.steps.iter().copied().min().unwrap_or(1).max(1);
    let horizon =
        spike_a.max(spike_b) + 2 * (params.kernel.weight as u64).div_ceil(min_step as u64) + 4;
    let mut kernels: Vec<KernelState> =
        snapshot.steps.iter().map(|&s| KernelState::resting(s)).collect();
    let mut theta = snapshot.threshold;
    let mut area = 0u64;
    let mut membrane_prev = 0u64;
    for t in 0..=horizon {
        let inputs = [t == spike_a, t == spike_b];
        for (kernel, &u) in kernels.iter_mut().zip(&inputs) {
            // feedback held low: the step sizes stay frozen
            *kernel = kernel_tick(*kernel, u, false, &params.kernel);
        }
        let membrane: u64 = kernels.iter().map(|k| k.level as u64).sum();
        if membrane > theta {
            area += membrane - theta;
            if theta_evolves {
                theta += params.threshold_rise as u64;
            }
        } else if theta_evolves && membrane == 0 && membrane_prev > 0 {
            theta = theta.saturating_sub(params.threshold_fall as u64);
        }
        membrane_prev = membrane;
    }
    area
}

/// Sweep the receptive field of a saved 2-input neuron over every ISI in
/// `[-width, width]`, with adaptation and threshold frozen.
pub fn receptive_field_2in(
    snapshot: &NeuronSnapshot,
    width: u32,
) -> Result<ReceptiveField, AnalysisError> {
    receptive_field_2in_with(snapshot, width, false)
}

/// Receptive-field sweep with a switch for letting the threshold follow its
/// usual dynamics inside each swept presentation instead of staying frozen.
pub fn receptive_field_2in_with(
    snapshot: &NeuronSnapshot,
    width: u32,
    theta_evolves: bool,
) -> Result<ReceptiveField, AnalysisError> {
    if snapshot.steps.len() != 2 {
        return Err(AnalysisError::UnsupportedDimension(snapshot.steps.len()));
    }
    let taus: Vec<i64> = (-(width as i64)..=width as i64).collect();
    let values: Vec<u64> = taus
        .iter()
        .map(|&tau| frozen_response(snapshot, tau, theta_evolves))
        .collect();
    let argmax_idx = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let argmax = taus[argmax_idx];
    let lo = (0..=argmax_idx)
        .rev()
        .find(|&i| values[i] == 0)
        .map_or(taus[0], |i| taus[i]);
    let hi = (argmax_idx..values.len())
        .find(|&i| values[i] == 0)
        .map_or(*taus.last().unwrap(), |i| taus[i]);
    Ok(ReceptiveField { taus, values, argmax, bounds: (lo, hi) })
}

/// Expected spike offsets implied by the kernel step sizes, mean-centred.
///
/// All kernels of a converged neuron peak together; channel `i` therefore
/// expects its spike `ceil(w / step_i)` ticks before the common peak. This
/// generalizes the receptive-field maximum to any channel count: for two
/// channels the pairwise difference of the returned offsets matches the
/// swept argmax within one tick.
pub fn learnt_pattern_estimate(steps: &[u32], weight: u32) -> Vec<f64> {
    assert!(steps.iter().all(|&s| s >= 1), "step sizes must be positive");
    let peaks: Vec<f64> = steps
        .iter()
        .map(|&s| (weight as u64).div_ceil(s as u64) as f64)
        .collect();
    let mean = peaks.iter().sum::<f64>() / peaks.len() as f64;
    peaks.iter().map(|p| mean - p).collect()
}

/// Root-mean-square distance between two patterns after mean-centring both,
/// so a common shift of either argument is free.
pub fn rms_error(estimate: &[f64], target: &[f64]) -> Result<f64, AnalysisError> {
    if estimate.len() != target.len() {
        return Err(AnalysisError::LengthMismatch { left: estimate.len(), right: target.len() });
    }
    if estimate.len() < 2 {
        return Err(AnalysisError::TooFewChannels(estimate.len()));
    }
    let n = estimate.len() as f64;
    let me = estimate.iter().sum::<f64>() / n;
    let mt = target.iter().sum::<f64>() / n;
    let ss: f64 = estimate
        .iter()
        .zip(target)
        .map(|(e, t)| {
            let d = (e - me) - (t - mt);
            d * d
        })
        .sum();
    Ok((ss / n).sqrt())
}

/// One neuron's response inside one presentation window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeuronResponse {
    pub neuron: u16,
    /// Tick of the first rising edge in the window.
    pub first_rise: u64,
    /// Ticks from the most recent input spike at or before the first rising
    /// edge (within the window) to that edge. `None` when the window holds
    /// no spike at or before the edge.
    pub latency: Option<u64>,
    /// Total ticks of output high for pulses rising in this window.
    pub width: u64,
    /// Number of distinct pulses rising in this window.
    pub pulses: u32,
}

/// Everything recorded about one presentation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRecord {
    pub presentation: u32,
    pub pattern: u32,
    pub onset: u64,
    pub responders: Vec<NeuronResponse>,
    /// Threshold of every neuron at the onset tick.
    pub onset_thresholds: Vec<u64>,
}

/// Fold a trace into per-presentation records. Pulses are assigned to the
/// window containing their rising edge; a pulse still high at stream end is
/// closed there.
pub fn extract_run_records(
    trace: &TickTrace,
    n_neurons: usize,
    stream_len: u64,
) -> Vec<RunRecord> {
    struct Win {
        onset: u64,
        pattern: u32,
        spikes: Vec<u64>,
    }
    let mut windows: Vec<Win> = Vec::new();
    // (rise, fall) pulse pairs per neuron
    let mut pulses: Vec<Vec<(u64, u64)>> = vec![Vec::new(); n_neurons];
    let mut open: Vec<Option<u64>> = vec![None; n_neurons];
    for event in &trace.events {
        match *event {
            Event::Onset { tick, pattern, .. } => {
                windows.push(Win { onset: tick, pattern, spikes: Vec::new() });
            }
            Event::InputSpike { tick, .. } => {
                if let Some(win) = windows.last_mut() {
                    win.spikes.push(tick);
                }
            }
            Event::OutputRise { tick, neuron } => open[neuron as usize] = Some(tick),
            Event::OutputFall { tick, neuron } => {
                if let Some(rise) = open[neuron as usize].take() {
                    pulses[neuron as usize].push((rise, tick));
                }
            }
            Event::PhaseFlip { .. } => {}
        }
    }
    for (neuron, rise) in open.iter().enumerate() {
        if let Some(rise) = rise {
            pulses[neuron].push((*rise, stream_len));
        }
    }

    let mut records: Vec<RunRecord> = windows
        .iter()
        .enumerate()
        .map(|(k, win)| RunRecord {
            presentation: k as u32,
            pattern: win.pattern,
            onset: win.onset,
            responders: Vec::new(),
            onset_thresholds: trace.onset_thresholds.get(k).cloned().unwrap_or_default(),
        })
        .collect();
    let window_end = |k: usize| -> u64 {
        windows.get(k + 1).map_or(stream_len, |w| w.onset)
    };
    for (neuron, neuron_pulses) in pulses.iter().enumerate() {
        for &(rise, fall) in neuron_pulses {
            let Some(k) = windows.iter().rposition(|w| w.onset <= rise) else {
                continue;
            };
            debug_assert!(rise < window_end(k));
            let record = &mut records[k];
            match record.responders.iter_mut().find(|r| r.neuron == neuron as u16) {
                Some(r) => {
                    r.width += fall - rise;
                    r.pulses += 1;
                }
                None => {
                    let latency = windows[k]
                        .spikes
                        .iter()
                        .filter(|&&s| s <= rise)
                        .max()
                        .map(|&s| rise - s);
                    record.responders.push(NeuronResponse {
                        neuron: neuron as u16,
                        first_rise: rise,
                        latency,
                        width: fall - rise,
                        pulses: 1,
                    });
                }
            }
        }
    }
    for record in &mut records {
        record.responders.sort_by_key(|r| r.neuron);
    }
    records
}

/// Verdict of the convergence detector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergenceReport {
    /// Index of the presentation that completed the first run of
    /// `window` consecutive correct classifications, if any.
    pub converged_at: Option<u32>,
    /// The pattern-to-neuron mapping of that first window.
    pub mapping: Vec<(u32, u16)>,
}

/// Number of consecutive correctly classified presentations that counts as
/// converged.
pub const CONVERGENCE_WINDOW: usize = 20;

/// Scan for the first run of `window` consecutive presentations in which
/// exactly one neuron responds, with exactly one pulse, under a single
/// consistent one-to-one pattern-to-neuron mapping. A presentation with no
/// responder, several responders, extra pulses, or a mapping clash breaks
/// the run.
pub fn classify_and_detect_convergence(
    records: &[RunRecord],
    window: usize,
) -> ConvergenceReport {
    assert!(window >= 1);
    if records.len() < window {
        return ConvergenceReport { converged_at: None, mapping: Vec::new() };
    }
    'start: for start in 0..=(records.len() - window) {
        let mut mapping: Vec<(u32, u16)> = Vec::new();
        for record in &records[start..start + window] {
            if record.responders.len() != 1 || record.responders[0].pulses != 1 {
                continue 'start;
            }
            let neuron = record.responders[0].neuron;
            match mapping.iter().find(|&&(p, _)| p == record.pattern) {
                Some(&(_, mapped)) if mapped != neuron => continue 'start,
                Some(_) => {}
                None => {
                    if mapping.iter().any(|&(_, n)| n == neuron) {
                        continue 'start; // neuron already owns another pattern
                    }
                    mapping.push((record.pattern, neuron));
                }
            }
        }
        mapping.sort_unstable();
        return ConvergenceReport {
            converged_at: Some((start + window - 1) as u32),
            mapping,
        };
    }
    ConvergenceReport { converged_at: None, mapping: Vec::new() }
}

/// Pulse-width series with a trailing running mean and envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseWidthStats {
    /// Total output width per presentation (zero when nothing responded).
    pub widths: Vec<u64>,
    /// Trailing mean of the non-zero widths inside the window; `None` until
    /// a response has been seen.
    pub running_mean: Vec<Option<f64>>,
    /// Trailing maximum width inside the window.
    pub envelope: Vec<u64>,
}

/// Default running-statistics window, in presentations.
pub const WIDTH_WINDOW: usize = 50;

/// Per-presentation pulse widths plus trailing statistics. Missed
/// presentations enter the series as zero width but are excluded from the
/// running mean: under the threshold balance the all-inclusive mean is
/// pinned at `theta_fall / theta_rise` regardless of noise, so only the
/// responding widths carry the noise correlation.
pub fn pulse_width_stats(records: &[RunRecord], window: usize) -> PulseWidthStats {
    assert!(window >= 1);
    let widths: Vec<u64> = records
        .iter()
        .map(|r| r.responders.iter().map(|n| n.width).sum())
        .collect();
    let mut running_mean = Vec::with_capacity(widths.len());
    let mut envelope = Vec::with_capacity(widths.len());
    for i in 0..widths.len() {
        let lo = (i + 1).saturating_sub(window);
        let tail = &widths[lo..=i];
        let nonzero: Vec<u64> = tail.iter().copied().filter(|&w| w > 0).collect();
        running_mean.push(if nonzero.is_empty() {
            None
        } else {
            Some(nonzero.iter().sum::<u64>() as f64 / nonzero.len() as f64)
        });
        envelope.push(tail.iter().copied().max().unwrap_or(0));
    }
    PulseWidthStats { widths, running_mean, envelope }
}

/// Which of two patterns a single neuron settled on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionOutcome {
    /// Responded only to presentations of pattern 0.
    First,
    /// Responded only to presentations of pattern 1.
    Second,
    /// Responded to presentations of both patterns.
    Both,
    /// Responded to nothing in the scoring range.
    Neither,
}

/// Score a two-pattern single-neuron run over `records[scoring_start..]`.
pub fn selection_outcome(records: &[RunRecord], scoring_start: usize) -> SelectionOutcome {
    let mut first = false;
    let mut second = false;
    for record in records.iter().skip(scoring_start) {
        let responded = !record.responders.is_empty();
        if responded && record.pattern == 0 {
            first = true;
        }
        if responded && record.pattern == 1 {
            second = true;
        }
    }
    match (first, second) {
        (true, true) => SelectionOutcome::Both,
        (true, false) => SelectionOutcome::First,
        (false, true) => SelectionOutcome::Second,
        (false, false) => SelectionOutcome::Neither,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soma::default_params;

    fn snapshot(steps: Vec<u32>, threshold: u64) -> NeuronSnapshot {
        NeuronSnapshot { params: default_params(2), steps, threshold }
    }

    #[test]
    fn symmetric_fresh_kernels_peak_at_zero() {
        let rf = receptive_field_2in(&snapshot(vec![200, 200], 15_000), 20).unwrap();
        assert_eq!(rf.argmax, 0);
        // symmetric curve
        let mid = rf.values.len() / 2;
        for d in 1..=20usize {
            assert_eq!(rf.values[mid - d], rf.values[mid + d], "asymmetry at {d}");
        }
    }

    #[test]
    fn far_outside_taus_are_zero_and_bounds_enclose_support() {
        let rf = receptive_field_2in(&snapshot(vec![300, 300], 19_000), 20).unwrap();
        assert!(rf.values[rf.taus.iter().position(|&t| t == 20).unwrap()] == 0);
        assert!(rf.values[rf.taus.iter().position(|&t| t == -20).unwrap()] == 0);
        for (&tau, &v) in rf.taus.iter().zip(&rf.values) {
            if tau < rf.bounds.0 || tau > rf.bounds.1 {
                assert_eq!(v, 0, "tau {tau} outside {:?}", rf.bounds);
            }
        }
        let maxv = *rf.values.iter().max().unwrap();
        assert!(maxv > 0);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let err = receptive_field_2in(&snapshot(vec![200, 200, 200], 1_000), 20);
        assert!(matches!(err, Err(AnalysisError::UnsupportedDimension(3))));
    }

    #[test]
    fn estimate_is_zero_for_equal_steps() {
        assert_eq!(learnt_pattern_estimate(&[250, 250, 250], 10_000), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn estimate_at_step_ceiling_has_reference_peak_delay() {
        // all steps maxed: offsets zero, peak delay ceil(10000/400) = 25
        let est = learnt_pattern_estimate(&[400, 400], 10_000);
        assert_eq!(est, vec![0.0, 0.0]);
        assert_eq!(10_000u64.div_ceil(400), 25);
    }

    #[test]
    fn estimate_difference_recovers_isi() {
        // steps that peak 35 and 25 ticks after their spikes expect the
        // second spike 10 ticks after the first
        let est = learnt_pattern_estimate(&[286, 400], 10_000);
        assert_eq!(est[1] - est[0], 10.0);
    }

    #[test]
    fn rms_error_examples() {
        assert_eq!(rms_error(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        // common shift is free
        assert_eq!(rms_error(&[11.0, 12.0, 13.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let e = rms_error(&[-5.0, 5.0], &[-4.0, 4.0]).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        assert!(rms_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn record(
        presentation: u32,
        pattern: u32,
        responders: Vec<(u16, u32, u64)>, // (neuron, pulses, width)
    ) -> RunRecord {
        RunRecord {
            presentation,
            pattern,
            onset: presentation as u64 * 400,
            responders: responders
                .into_iter()
                .map(|(neuron, pulses, width)| NeuronResponse {
                    neuron,
                    first_rise: 0,
                    latency: Some(25),
                    width,
                    pulses,
                })
                .collect(),
            onset_thresholds: Vec::new(),
        }
    }

    #[test]
    fn twenty_consistent_presentations_converge() {
        let records: Vec<RunRecord> = (0..20)
            .map(|k| record(k, k % 2, vec![((k % 2) as u16, 1, 2)]))
            .collect();
        let report = classify_and_detect_convergence(&records, 20);
        assert_eq!(report.converged_at, Some(19));
        assert_eq!(report.mapping, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn double_response_breaks_the_run() {
        let mut records: Vec<RunRecord> = (0..21)
            .map(|k| record(k, k % 2, vec![((k % 2) as u16, 1, 2)]))
            .collect();
        records[19] = record(19, 1, vec![(0, 1, 2), (1, 1, 2)]);
        let report = classify_and_detect_convergence(&records, 20);
        assert_eq!(report.converged_at, None);
    }

    #[test]
    fn silent_presentation_resets_the_window() {
        let mut records: Vec<RunRecord> = (0..45)
            .map(|k| record(k, k % 2, vec![((k % 2) as u16, 1, 2)]))
            .collect();
        records[10] = record(10, 0, vec![]);
        let report = classify_and_detect_convergence(&records, 20);
        // the run restarts after the silent presentation
        assert_eq!(report.converged_at, Some(30));
    }

    #[test]
    fn mapping_must_be_injective() {
        // one neuron answering both patterns is never correct
        let records: Vec<RunRecord> =
            (0..40).map(|k| record(k, k % 2, vec![(0, 1, 2)])).collect();
        let report = classify_and_detect_convergence(&records, 20);
        assert_eq!(report.converged_at, None);
    }

    #[test]
    fn extra_pulse_is_incorrect() {
        let mut records: Vec<RunRecord> = (0..20)
            .map(|k| record(k, k % 2, vec![((k % 2) as u16, 1, 2)]))
            .collect();
        records[5].responders[0].pulses = 2;
        assert_eq!(classify_and_detect_convergence(&records, 20).converged_at, None);
    }

    #[test]
    fn convergence_is_monotone_under_appending() {
        let mut records: Vec<RunRecord> = (0..30)
            .map(|k| record(k, k % 2, vec![((k % 2) as u16, 1, 2)]))
            .collect();
        let before = classify_and_detect_convergence(&records, 20);
        records.push(record(30, 0, vec![]));
        records.push(record(31, 1, vec![(0, 1, 2), (1, 1, 2)]));
        let after = classify_and_detect_convergence(&records, 20);
        assert_eq!(before.converged_at, after.converged_at);
        assert_eq!(before.mapping, after.mapping);
    }

    #[test]
    fn constant_widths_have_constant_mean() {
        let records: Vec<RunRecord> =
            (0..60).map(|k| record(k, 0, vec![(0, 1, 3)])).collect();
        let stats = pulse_width_stats(&records, 50);
        assert!(stats.running_mean.iter().all(|m| *m == Some(3.0)));
        assert!(stats.envelope.iter().all(|&e| e == 3));
    }

    #[test]
    fn running_mean_skips_missed_presentations() {
        let records: Vec<RunRecord> = (0..10)
            .map(|k| {
                if k % 2 == 0 {
                    record(k, 0, vec![(0, 1, 4)])
                } else {
                    record(k, 0, vec![])
                }
            })
            .collect();
        let stats = pulse_width_stats(&records, 50);
        assert_eq!(stats.running_mean.last().copied().flatten(), Some(4.0));
        assert_eq!(stats.widths[1], 0);
    }

    #[test]
    fn selection_outcomes() {
        let mut records: Vec<RunRecord> = (0..10)
            .map(|k| record(k, k % 2, vec![]))
            .collect();
        assert_eq!(selection_outcome(&records, 0), SelectionOutcome::Neither);
        for record in records.iter_mut().filter(|r| r.pattern == 0) {
            record.responders.push(NeuronResponse {
                neuron: 0,
                first_rise: 0,
                latency: None,
                width: 2,
                pulses: 1,
            });
        }
        assert_eq!(selection_outcome(&records, 0), SelectionOutcome::First);
        records[1].responders.push(NeuronResponse {
            neuron: 0,
            first_rise: 0,
            latency: None,
            width: 2,
            pulses: 1,
        });
        assert_eq!(selection_outcome(&records, 0), SelectionOutcome::Both);
        // scoring can start past the stray response
        assert_eq!(selection_outcome(&records, 2), SelectionOutcome::First);
    }
}
