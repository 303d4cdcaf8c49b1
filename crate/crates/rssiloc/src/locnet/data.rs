//! Labeled training data for the coordinate regressor.
//!
//! A sample is one RSSI triple (one value per beacon, in scenario beacon
//! order) plus the true position and a spot label. Labels drive stratified
//! fold assignment so every fold sees every standing spot.

use crate::error::{Error, Result};
use crate::eval::{collect_series, latest_at_or_before, DEFAULT_MAX_STALENESS_MS};
use crate::simulator::{self, NoiseModel};
use crate::types::{Position, RssiSample, Scenario};

/// Inputs per sample; the regressor consumes one RSSI value per beacon.
pub const INPUTS_PER_SAMPLE: usize = 3;

/// Sampling cadence of the bundled training datasets.
pub const TRAINING_PERIOD_MS: u64 = 4500;
/// Shadowing noise of the bundled training datasets.
pub const TRAINING_SIGMA_DB: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<[f64; INPUTS_PER_SAMPLE]>,
    pub targets: Vec<Position>,
    pub labels: Vec<String>,
}

impl Dataset {
    pub fn new() -> Self {
        Dataset { inputs: Vec::new(), targets: Vec::new(), labels: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: [f64; INPUTS_PER_SAMPLE], target: Position, label: String) {
        self.inputs.push(input);
        self.targets.push(target);
        self.labels.push(label);
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.targets.len() || self.inputs.len() != self.labels.len() {
            return Err(Error::invalid("dataset columns have mismatched lengths"));
        }
        if self.is_empty() {
            return Err(Error::invalid("dataset is empty"));
        }
        for (i, input) in self.inputs.iter().enumerate() {
            if input.iter().any(|v| !v.is_finite()) || !self.targets[i].is_finite() {
                return Err(Error::invalid(format!("non-finite value in dataset row {i}")));
            }
        }
        Ok(())
    }

    /// Copies the rows at `indices` into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut out = Dataset::new();
        for &i in indices {
            out.push(self.inputs[i], self.targets[i], self.labels[i].clone());
        }
        out
    }
}

impl Default for Dataset {
    fn default() -> Self {
        Dataset::new()
    }
}

/// Assigns each sample a fold index in `0..folds`, stratified by label: the
/// j-th sample of a label (in dataset order) goes to fold `j % folds`, so
/// per-label fold counts differ by at most one. Errors when a label has
/// fewer samples than folds.
pub fn stratified_folds(labels: &[String], folds: usize) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    let mut order: Vec<&String> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut assignment = vec![0usize; labels.len()];
    for (i, label) in labels.iter().enumerate() {
        let li = match order.iter().position(|l| *l == label) {
            Some(li) => li,
            None => {
                order.push(label);
                counts.push(0);
                order.len() - 1
            }
        };
        assignment[i] = counts[li] % folds;
        counts[li] += 1;
    }
    for (li, &count) in counts.iter().enumerate() {
        if count < folds {
            return Err(Error::LabelTooSmall { label: order[li].clone(), count, folds });
        }
    }
    Ok(assignment)
}

/// Builds a dataset from a trace by sampling each ground-truth interval at
/// `start + i·tick_ms` (i ≥ 1) and taking, per beacon, the latest sample at
/// or before the tick. Requires exactly three beacons; label is `spot-{i}`
/// for interval `i`.
pub fn dataset_from_trace(
    trace: &[RssiSample],
    scenario: &Scenario,
    tick_ms: u64,
) -> Result<Dataset> {
    scenario.validate()?;
    if scenario.beacons.len() != INPUTS_PER_SAMPLE {
        return Err(Error::invalid(format!(
            "dataset builder requires exactly {INPUTS_PER_SAMPLE} beacons, got {}",
            scenario.beacons.len()
        )));
    }
    if tick_ms == 0 {
        return Err(Error::invalid("tick period must be > 0"));
    }
    let series = collect_series(trace, scenario)?;
    let mut dataset = Dataset::new();
    for (ii, interval) in scenario.ground_truth.iter().enumerate() {
        let label = format!("spot-{ii}");
        let mut t = interval.t_start_ms.saturating_add(tick_ms);
        while t <= interval.t_end_ms {
            let mut input = [0.0; INPUTS_PER_SAMPLE];
            for (bi, s) in series.iter().enumerate() {
                let idx = latest_at_or_before(&s.ts, t).ok_or(Error::StaleBeacon {
                    beacon_id: s.beacon_id.clone(),
                    at_ms: t,
                    max_staleness_ms: DEFAULT_MAX_STALENESS_MS,
                })?;
                if t - s.ts[idx] > DEFAULT_MAX_STALENESS_MS {
                    return Err(Error::StaleBeacon {
                        beacon_id: s.beacon_id.clone(),
                        at_ms: t,
                        max_staleness_ms: DEFAULT_MAX_STALENESS_MS,
                    });
                }
                input[bi] = s.raw[idx];
            }
            dataset.push(input, interval.position, label.clone());
            t = t.saturating_add(tick_ms);
        }
    }
    dataset.validate()?;
    Ok(dataset)
}

fn training_dataset(scenario: &Scenario, seed: u64) -> Dataset {
    let noise = NoiseModel {
        shadowing_sigma_db: TRAINING_SIGMA_DB,
        seed,
        sample_period_ms: TRAINING_PERIOD_MS,
        jitter_ms: 1000,
    };
    let trace = simulator::simulate(scenario, &noise).expect("builtin scenario simulates");
    dataset_from_trace(&trace, scenario, TRAINING_PERIOD_MS).expect("builtin trace aligns")
}

/// The bundled home dataset: three 200-sample spots (600 rows), σ = 2 dB,
/// 4.5 s cadence.
pub fn home_training_dataset(seed: u64) -> Dataset {
    training_dataset(&simulator::builtin_home(), seed)
}

/// The bundled office dataset: five 100-sample spots (500 rows), σ = 2 dB,
/// 9 s cadence.
pub fn office_training_dataset(seed: u64) -> Dataset {
    let scenario = simulator::builtin_office();
    let noise = NoiseModel {
        shadowing_sigma_db: TRAINING_SIGMA_DB,
        seed,
        sample_period_ms: 2 * TRAINING_PERIOD_MS,
        jitter_ms: 1000,
    };
    let trace = simulator::simulate(&scenario, &noise).expect("builtin scenario simulates");
    dataset_from_trace(&trace, &scenario, 2 * TRAINING_PERIOD_MS).expect("builtin trace aligns")
}
