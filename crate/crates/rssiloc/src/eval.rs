//! Tick-based accuracy evaluation of localization methods against ground
//! truth.
//!
//! A method is a per-beacon stream transform (identity, look-back, Kalman, or
//! their composition). Evaluation walks ticks at a fixed period through every
//! ground-truth interval; at each tick it takes, per beacon, the transformed
//! value of the latest sample at or before the tick (so estimates never
//! depend on future samples), converts the three values to distances,
//! trilaterates, and scores the Euclidean error against the interval's true
//! position. Ticks whose geometry is degenerate are skipped and counted;
//! a beacon with no sufficiently fresh sample aborts the evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{self, LookbackConfig, OutlierMode};
use crate::pathloss::PathLossModel;
use crate::trilateration;
use crate::types::{Position, RssiSample, Scenario};

pub const DEFAULT_EVAL_PERIOD_MS: u64 = 10_000;
pub const DEFAULT_MAX_STALENESS_MS: u64 = 30_000;

/// Straight-line distance between two positions in meters.
pub fn euclidean(a: Position, b: Position) -> f64 {
    a.distance_to(b)
}

/// A per-beacon stream transform under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// No smoothing; each sample is used as measured.
    Raw,
    Lookback(LookbackConfig),
    Kalman { q: f64, r: f64 },
    Hybrid { q: f64, r: f64, lookback: LookbackConfig },
}

impl Method {
    /// Human-readable row label used in reports.
    pub fn label(&self) -> String {
        match self {
            Method::Raw => "Raw values".to_string(),
            Method::Lookback(cfg) => format!("Look-back-{}{}", cfg.k, mode_suffix(cfg.mode)),
            Method::Kalman { .. } => "Kalman filter".to_string(),
            Method::Hybrid { lookback, .. } => {
                format!("Kalman filter + look-back-{}{}", lookback.k, mode_suffix(lookback.mode))
            }
        }
    }

    /// Applies the transform to one beacon's chronological RSSI values.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        match self {
            Method::Raw => {
                if values.is_empty() {
                    return Err(Error::invalid("cannot transform an empty stream"));
                }
                if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("non-finite value {v} in stream")));
                }
                Ok(values.to_vec())
            }
            Method::Lookback(cfg) => filters::lookback_stream(values, *cfg),
            Method::Kalman { q, r } => filters::kalman_run(values, *q, *r),
            Method::Hybrid { q, r, lookback } => filters::hybrid_stream(values, *q, *r, *lookback),
        }
    }
}

fn mode_suffix(mode: OutlierMode) -> &'static str {
    match mode {
        OutlierMode::MinMax => "",
        OutlierMode::Iqr => " (IQR)",
    }
}

/// Defaults applied when a method token omits its parameters.
#[derive(Debug, Clone, Copy)]
pub struct MethodDefaults {
    pub k: usize,
    pub mode: OutlierMode,
    pub q: f64,
    pub r: f64,
}

impl Default for MethodDefaults {
    fn default() -> Self {
        MethodDefaults {
            k: filters::DEFAULT_LOOKBACK_K,
            mode: OutlierMode::MinMax,
            q: filters::DEFAULT_PROCESS_NOISE,
            r: filters::DEFAULT_MEASUREMENT_NOISE,
        }
    }
}

/// Parses one method token: `raw`, `lookback[:K]`, `kalman`, `hybrid[:K]`.
pub fn parse_method(token: &str, defaults: &MethodDefaults) -> Result<Method> {
    let (head, arg) = match token.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (token, None),
    };
    let k = match arg {
        Some(a) => a
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("invalid window size {a:?} in method {token:?}")))?,
        None => defaults.k,
    };
    match head {
        "raw" if arg.is_none() => Ok(Method::Raw),
        "kalman" if arg.is_none() => Ok(Method::Kalman { q: defaults.q, r: defaults.r }),
        "lookback" => Ok(Method::Lookback(LookbackConfig::new(k, defaults.mode)?)),
        "hybrid" => Ok(Method::Hybrid {
            q: defaults.q,
            r: defaults.r,
            lookback: LookbackConfig::new(k, defaults.mode)?,
        }),
        _ => Err(Error::invalid(format!(
            "unknown method {token:?} (expected raw, lookback[:K], kalman, or hybrid[:K])"
        ))),
    }
}

/// Parses a comma-separated method list, e.g. `raw,lookback:5,kalman,hybrid:50`.
pub fn parse_methods(list: &str, defaults: &MethodDefaults) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for token in list.split(',') {
        let token = token.trim();
        if token.is_empty() {
            return Err(Error::invalid("empty method token in method list"));
        }
        methods.push(parse_method(token, defaults)?);
    }
    if methods.is_empty() {
        return Err(Error::invalid("method list is empty"));
    }
    Ok(methods)
}

#[derive(Debug, Clone, Copy)]
pub struct EvalConfig {
    pub eval_period_ms: u64,
    pub max_staleness_ms: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            eval_period_ms: DEFAULT_EVAL_PERIOD_MS,
            max_staleness_ms: DEFAULT_MAX_STALENESS_MS,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_period_ms == 0 {
            return Err(Error::invalid("evaluation period must be > 0"));
        }
        Ok(())
    }
}

/// One scored evaluation tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub timestamp_ms: u64,
    pub interval_index: usize,
    pub estimate: Position,
    pub truth: Position,
    pub error_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSummary {
    pub t_start_ms: u64,
    pub t_end_ms: u64,
    pub scored_ticks: usize,
    pub skipped_ticks: usize,
    /// Mean Euclidean error over scored ticks; `None` when every tick in the
    /// interval was skipped.
    pub mean_error_m: Option<f64>,
}

/// Accuracy of one method over a whole trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub method_label: String,
    pub intervals: Vec<IntervalSummary>,
    /// Mean over all scored ticks (tick-weighted).
    pub overall_mean_m: Option<f64>,
    /// Mean of the per-interval means (each interval weighted equally).
    pub interval_mean_m: Option<f64>,
    pub scored_ticks: usize,
    pub skipped_ticks: usize,
}

pub(crate) struct BeaconSeries {
    pub beacon_id: String,
    pub position: Position,
    pub model: PathLossModel,
    pub ts: Vec<u64>,
    pub raw: Vec<f64>,
}

/// Splits a trace into per-beacon time series in scenario beacon order.
/// Samples from beacons not in the scenario are ignored.
pub(crate) fn collect_series(trace: &[RssiSample], scenario: &Scenario) -> Result<Vec<BeaconSeries>> {
    let mut series: Vec<BeaconSeries> = scenario
        .beacons
        .iter()
        .map(|b| {
            Ok(BeaconSeries {
                beacon_id: b.beacon_id.clone(),
                position: b.position,
                model: PathLossModel::new(b.a_ref, b.path_loss_exp)?,
                ts: Vec::new(),
                raw: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;

    for sample in trace {
        sample.validate()?;
        if let Some(s) = series.iter_mut().find(|s| s.beacon_id == sample.beacon_id) {
            s.ts.push(sample.timestamp_ms);
            s.raw.push(sample.rssi_dbm);
        }
    }
    for s in &mut series {
        if !s.ts.windows(2).all(|w| w[0] <= w[1]) {
            let mut order: Vec<usize> = (0..s.ts.len()).collect();
            order.sort_by_key(|&i| s.ts[i]);
            s.ts = order.iter().map(|&i| s.ts[i]).collect();
            s.raw = order.iter().map(|&i| s.raw[i]).collect();
        }
    }
    Ok(series)
}

/// Index of the latest timestamp at or before `tick`, if any.
pub(crate) fn latest_at_or_before(ts: &[u64], tick: u64) -> Option<usize> {
    let idx = ts.partition_point(|&t| t <= tick);
    idx.checked_sub(1)
}

/// Picks, for each tick, the sample nearest in time. Ties between an earlier
/// and a later sample prefer the earlier one. A tick whose nearest sample is
/// farther than `max_staleness_ms` fails with a staleness error.
pub fn align(
    trace: &[RssiSample],
    beacon_id: &str,
    ticks: &[u64],
    max_staleness_ms: u64,
) -> Result<Vec<f64>> {
    let mut pairs: Vec<(u64, f64)> = trace
        .iter()
        .filter(|s| s.beacon_id == beacon_id)
        .map(|s| (s.timestamp_ms, s.rssi_dbm))
        .collect();
    pairs.sort_by_key(|&(t, _)| t);

    let mut out = Vec::with_capacity(ticks.len());
    for &tick in ticks {
        let idx = pairs.partition_point(|&(t, _)| t <= tick);
        let before = idx.checked_sub(1).map(|i| (tick - pairs[i].0, pairs[i].1));
        let after = pairs.get(idx).map(|&(t, v)| (t - tick, v));
        let nearest = match (before, after) {
            (Some((db, vb)), Some((da, _))) if db <= da => Some((db, vb)),
            (Some(_), Some((da, va))) => Some((da, va)),
            (Some(b), None) => Some(b),
            (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        match nearest {
            Some((dist, v)) if dist <= max_staleness_ms => out.push(v),
            _ => {
                return Err(Error::StaleBeacon {
                    beacon_id: beacon_id.to_string(),
                    at_ms: tick,
                    max_staleness_ms,
                })
            }
        }
    }
    Ok(out)
}

/// Tick times for one ground-truth interval: `start + i·period` for `i ≥ 1`,
/// while still inside the interval.
fn interval_ticks(t_start_ms: u64, t_end_ms: u64, period_ms: u64) -> Vec<u64> {
    let mut ticks = Vec::new();
    let mut t = t_start_ms.saturating_add(period_ms);
    while t <= t_end_ms {
        ticks.push(t);
        t = t.saturating_add(period_ms);
    }
    ticks
}

/// Scores every tick; returns the scored records plus the count of ticks
/// skipped because trilateration rejected the geometry.
pub fn evaluate_ticks(
    trace: &[RssiSample],
    scenario: &Scenario,
    method: &Method,
    config: &EvalConfig,
) -> Result<(Vec<TickRecord>, usize)> {
    scenario.validate()?;
    config.validate()?;
    let series = collect_series(trace, scenario)?;

    // Every transform is causal, so transforming the full series once yields
    // the same values as re-running it on each tick's prefix.
    let mut transformed: Vec<Vec<f64>> = Vec::with_capacity(series.len());
    for s in &series {
        if s.raw.is_empty() {
            return Err(Error::invalid(format!(
                "trace has no samples for beacon {:?}",
                s.beacon_id
            )));
        }
        transformed.push(method.apply(&s.raw)?);
    }

    let mut records = Vec::new();
    let mut skipped = 0usize;
    for (ii, interval) in scenario.ground_truth.iter().enumerate() {
        for tick in interval_ticks(interval.t_start_ms, interval.t_end_ms, config.eval_period_ms) {
            let mut anchors = Vec::with_capacity(series.len());
            for (s, values) in series.iter().zip(&transformed) {
                let idx = latest_at_or_before(&s.ts, tick).ok_or(Error::StaleBeacon {
                    beacon_id: s.beacon_id.clone(),
                    at_ms: tick,
                    max_staleness_ms: config.max_staleness_ms,
                })?;
                if tick - s.ts[idx] > config.max_staleness_ms {
                    return Err(Error::StaleBeacon {
                        beacon_id: s.beacon_id.clone(),
                        at_ms: tick,
                        max_staleness_ms: config.max_staleness_ms,
                    });
                }
                anchors.push((s.position, s.model.rssi_to_distance(values[idx])?));
            }
            match trilateration::trilaterate(&anchors) {
                Ok(est) => {
                    let error_m = euclidean(est.position, interval.position);
                    records.push(TickRecord {
                        timestamp_ms: tick,
                        interval_index: ii,
                        estimate: est.position,
                        truth: interval.position,
                        error_m,
                    });
                }
                Err(Error::Geometry { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    Ok((records, skipped))
}

pub(crate) fn summarize(
    method_label: String,
    scenario: &Scenario,
    records: &[TickRecord],
    config: &EvalConfig,
) -> ErrorReport {
    let mut intervals = Vec::with_capacity(scenario.ground_truth.len());
    let mut total_err = 0.0;
    let mut total_scored = 0usize;
    let mut total_skipped = 0usize;
    for (ii, interval) in scenario.ground_truth.iter().enumerate() {
        let errs: Vec<f64> = records
            .iter()
            .filter(|r| r.interval_index == ii)
            .map(|r| r.error_m)
            .collect();
        let planned = interval_ticks(interval.t_start_ms, interval.t_end_ms, config.eval_period_ms).len();
        let skipped = planned - errs.len();
        let mean = if errs.is_empty() {
            None
        } else {
            Some(errs.iter().sum::<f64>() / errs.len() as f64)
        };
        total_err += errs.iter().sum::<f64>();
        total_scored += errs.len();
        total_skipped += skipped;
        intervals.push(IntervalSummary {
            t_start_ms: interval.t_start_ms,
            t_end_ms: interval.t_end_ms,
            scored_ticks: errs.len(),
            skipped_ticks: skipped,
            mean_error_m: mean,
        });
    }
    let overall_mean_m = if total_scored > 0 {
        Some(total_err / total_scored as f64)
    } else {
        None
    };
    let means: Vec<f64> = intervals.iter().filter_map(|s| s.mean_error_m).collect();
    let interval_mean_m = if means.is_empty() {
        None
    } else {
        Some(means.iter().sum::<f64>() / means.len() as f64)
    };
    ErrorReport {
        method_label,
        intervals,
        overall_mean_m,
        interval_mean_m,
        scored_ticks: total_scored,
        skipped_ticks: total_skipped,
    }
}

/// Evaluates one method over a trace and summarizes per-interval and overall
/// mean errors.
pub fn evaluate(
    trace: &[RssiSample],
    scenario: &Scenario,
    method: &Method,
    config: &EvalConfig,
) -> Result<ErrorReport> {
    let (records, _) = evaluate_ticks(trace, scenario, method, config)?;
    Ok(summarize(method.label(), scenario, &records, config))
}

fn interval_label(s: &IntervalSummary) -> String {
    if s.t_start_ms % 60_000 == 0 && s.t_end_ms % 60_000 == 0 {
        format!("{}-{} min", s.t_start_ms / 60_000, s.t_end_ms / 60_000)
    } else {
        format!("{}-{} s", s.t_start_ms as f64 / 1000.0, s.t_end_ms as f64 / 1000.0)
    }
}

fn cell_cm(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.2}", v * 100.0),
        None => "-".to_string(),
    }
}

fn header_labels(reports: &[ErrorReport]) -> Vec<String> {
    reports
        .first()
        .map(|r| r.intervals.iter().map(interval_label).collect())
        .unwrap_or_default()
}

/// Renders reports as CSV, one method per row; error cells in cm with two
/// decimals.
pub fn render_reports_csv(reports: &[ErrorReport]) -> String {
    let labels = header_labels(reports);
    let mut out = String::from("Method");
    for l in &labels {
        out.push(',');
        out.push_str(l);
    }
    out.push_str(",Avg. error,Avg. error (eq),Skipped\n");
    for r in reports {
        out.push_str(&r.method_label);
        for s in &r.intervals {
            out.push(',');
            out.push_str(&cell_cm(s.mean_error_m));
        }
        out.push(',');
        out.push_str(&cell_cm(r.overall_mean_m));
        out.push(',');
        out.push_str(&cell_cm(r.interval_mean_m));
        out.push(',');
        out.push_str(&r.skipped_ticks.to_string());
        out.push('\n');
    }
    out
}

/// Renders reports as a markdown table; error cells in cm with two decimals.
pub fn render_reports_markdown(reports: &[ErrorReport]) -> String {
    let labels = header_labels(reports);
    let n_cols = labels.len() + 4;
    let mut out = String::from("| Method |");
    for l in &labels {
        out.push_str(&format!(" {l} |"));
    }
    out.push_str(" Avg. error | Avg. error (eq) | Skipped |\n|");
    out.push_str(&"---|".repeat(n_cols));
    out.push('\n');
    for r in reports {
        out.push_str(&format!("| {} |", r.method_label));
        for s in &r.intervals {
            out.push_str(&format!(" {} |", cell_cm(s.mean_error_m)));
        }
        out.push_str(&format!(
            " {} | {} | {} |\n",
            cell_cm(r.overall_mean_m),
            cell_cm(r.interval_mean_m),
            r.skipped_ticks
        ));
    }
    out
}
