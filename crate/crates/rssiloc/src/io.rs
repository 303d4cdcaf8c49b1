//! On-disk formats.
//!
//! CSV, all with headers:
//! - trace: `timestamp_ms,beacon_id,target_id,rssi_dbm`
//! - ground truth: `t_start_ms,t_end_ms,true_x_m,true_y_m`
//! - calibration: `timestamp_ms,beacon_id,rssi_dbm,true_x_m,true_y_m`,
//!   grouped into contiguous runs per timestamp with one row per beacon
//! - dataset: `rssi1,rssi2,rssi3,true_x_m,true_y_m,label`
//!
//! JSON (pretty-printed): scenarios and trained models.
//!
//! Floats are written in shortest round-trip form, so write → read is
//! value-exact and repeated writes are byte-identical.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locnet::{Dataset, Mlp};
use crate::pathloss::CalibrationPoint;
use crate::types::{GroundTruthInterval, Position, RssiSample, Scenario};

fn read_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse { path: path.display().to_string(), line, msg: e.to_string() }
}

fn row_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn write_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(ioe) => Error::Io(ioe),
        other => Error::invalid(format!("csv write failed: {other:?}")),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(write_err)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| read_err(path, e))
}

// --- traces ---

pub fn write_trace_csv(path: &Path, samples: &[RssiSample]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for s in samples {
        w.serialize(s).map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<RssiSample>> {
    let mut r = csv_reader(path)?;
    let mut out = Vec::new();
    for record in r.deserialize::<RssiSample>() {
        let sample = record.map_err(|e| read_err(path, e))?;
        sample.validate()?;
        out.push(sample);
    }
    Ok(out)
}

// --- ground truth ---

#[derive(Serialize, Deserialize)]
struct TruthRow {
    t_start_ms: u64,
    t_end_ms: u64,
    true_x_m: f64,
    true_y_m: f64,
}

pub fn write_truth_csv(path: &Path, intervals: &[GroundTruthInterval]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for gt in intervals {
        w.serialize(TruthRow {
            t_start_ms: gt.t_start_ms,
            t_end_ms: gt.t_end_ms,
            true_x_m: gt.position.x,
            true_y_m: gt.position.y,
        })
        .map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_csv(path: &Path) -> Result<Vec<GroundTruthInterval>> {
    let mut r = csv_reader(path)?;
    let mut out = Vec::new();
    for (i, record) in r.deserialize::<TruthRow>().enumerate() {
        let row = record.map_err(|e| read_err(path, e))?;
        if row.t_end_ms <= row.t_start_ms {
            return Err(row_err(path, i + 2, "interval must end after it starts"));
        }
        if !(row.true_x_m.is_finite() && row.true_y_m.is_finite()) {
            return Err(row_err(path, i + 2, "non-finite position"));
        }
        out.push(GroundTruthInterval {
            t_start_ms: row.t_start_ms,
            t_end_ms: row.t_end_ms,
            position: Position::new(row.true_x_m, row.true_y_m),
        });
    }
    Ok(out)
}

// --- calibration logs ---

#[derive(Serialize, Deserialize)]
struct CalibrationRow {
    timestamp_ms: u64,
    beacon_id: String,
    rssi_dbm: f64,
    true_x_m: f64,
    true_y_m: f64,
}

/// Writes calibration points as one timestamp group per point (group index as
/// the timestamp), one row per beacon in `beacon_ids` order.
pub fn write_calibration_csv(
    path: &Path,
    points: &[CalibrationPoint],
    beacon_ids: &[String],
) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (ti, point) in points.iter().enumerate() {
        if point.rssi_dbm.len() != beacon_ids.len() {
            return Err(Error::invalid(format!(
                "calibration point {ti} has {} values for {} beacons",
                point.rssi_dbm.len(),
                beacon_ids.len()
            )));
        }
        for (bi, id) in beacon_ids.iter().enumerate() {
            w.serialize(CalibrationRow {
                timestamp_ms: ti as u64,
                beacon_id: id.clone(),
                rssi_dbm: point.rssi_dbm[bi],
                true_x_m: point.position.x,
                true_y_m: point.position.y,
            })
            .map_err(write_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a calibration log. Rows sharing a timestamp form one point; every
/// group must cover exactly the beacons of the first group (any order) and
/// agree on the true position. Returns the points (RSSI vectors in
/// first-group beacon order) and that beacon order.
pub fn read_calibration_csv(path: &Path) -> Result<(Vec<CalibrationPoint>, Vec<String>)> {
    let mut r = csv_reader(path)?;
    let mut rows = Vec::new();
    for record in r.deserialize::<CalibrationRow>() {
        rows.push(record.map_err(|e| read_err(path, e))?);
    }
    if rows.is_empty() {
        return Err(row_err(path, 0, "calibration file has no data rows"));
    }

    // Contiguous runs of one timestamp form the groups.
    let mut groups: Vec<(usize, Vec<&CalibrationRow>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match groups.last_mut() {
            Some((_, g)) if g[0].timestamp_ms == row.timestamp_ms => g.push(row),
            _ => groups.push((i + 2, vec![row])), // +2: header line, 1-based
        }
    }

    let beacon_order: Vec<String> = groups[0].1.iter().map(|r| r.beacon_id.clone()).collect();
    {
        let mut sorted = beacon_order.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != beacon_order.len() {
            return Err(row_err(path, groups[0].0, "duplicate beacon in calibration group"));
        }
    }

    let mut points = Vec::with_capacity(groups.len());
    for (line, group) in &groups {
        if group.len() != beacon_order.len() {
            return Err(row_err(
                path,
                *line,
                format!("group has {} rows, expected one per beacon ({})", group.len(), beacon_order.len()),
            ));
        }
        let mut rssi = vec![f64::NAN; beacon_order.len()];
        for row in group {
            let bi = beacon_order.iter().position(|b| *b == row.beacon_id).ok_or_else(|| {
                row_err(path, *line, format!("unexpected beacon {:?} in group", row.beacon_id))
            })?;
            if !rssi[bi].is_nan() {
                return Err(row_err(path, *line, format!("beacon {:?} repeated in group", row.beacon_id)));
            }
            rssi[bi] = row.rssi_dbm;
            if row.true_x_m != group[0].true_x_m || row.true_y_m != group[0].true_y_m {
                return Err(row_err(path, *line, "rows in one group disagree on the true position"));
            }
        }
        points.push(CalibrationPoint {
            rssi_dbm: rssi,
            position: Position::new(group[0].true_x_m, group[0].true_y_m),
        });
    }
    Ok((points, beacon_order))
}

// --- datasets ---

#[derive(Serialize, Deserialize)]
struct DatasetRow {
    rssi1: f64,
    rssi2: f64,
    rssi3: f64,
    true_x_m: f64,
    true_y_m: f64,
    label: String,
}

pub fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    dataset.validate()?;
    let mut w = csv_writer(path)?;
    for i in 0..dataset.len() {
        let x = dataset.inputs[i];
        w.serialize(DatasetRow {
            rssi1: x[0],
            rssi2: x[1],
            rssi3: x[2],
            true_x_m: dataset.targets[i].x,
            true_y_m: dataset.targets[i].y,
            label: dataset.labels[i].clone(),
        })
        .map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv_reader(path)?;
    let mut dataset = Dataset::new();
    for record in r.deserialize::<DatasetRow>() {
        let row = record.map_err(|e| read_err(path, e))?;
        dataset.push(
            [row.rssi1, row.rssi2, row.rssi3],
            Position::new(row.true_x_m, row.true_y_m),
            row.label,
        );
    }
    dataset.validate()?;
    Ok(dataset)
}

// --- JSON ---

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_scenario_json(path: &Path, scenario: &Scenario) -> Result<()> {
    scenario.validate()?;
    write_json_pretty(path, scenario)
}

pub fn read_scenario_json(path: &Path) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn write_model_json(path: &Path, model: &Mlp) -> Result<()> {
    model.validate()?;
    write_json_pretty(path, model)
}

pub fn read_model_json(path: &Path) -> Result<Mlp> {
    let model: Mlp = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    model.validate()?;
    Ok(model)
}
