//! Shared domain types: samples, beacons, walls, scenarios, estimates.
//!
//! All types here are plain immutable value objects (`Clone + Send + Sync`);
//! they serialize with serde for the scenario JSON and trace CSV formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physically plausible indoor range for the path-loss exponent `n`.
pub const PATH_LOSS_EXP_MIN: f64 = 1.4;
pub const PATH_LOSS_EXP_MAX: f64 = 5.1;

/// A point in the floor plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_to(&self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One timestamped signal-strength reading from one beacon for one target.
///
/// Field order matches the trace CSV columns
/// `timestamp_ms,beacon_id,target_id,rssi_dbm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssiSample {
    /// Milliseconds since trace epoch; non-negative.
    pub timestamp_ms: u64,
    pub beacon_id: String,
    pub target_id: String,
    /// Signal strength in dBm, typically in [-110, -30]; finite.
    pub rssi_dbm: f64,
}

impl RssiSample {
    pub fn validate(&self) -> Result<()> {
        if !self.rssi_dbm.is_finite() {
            return Err(Error::invalid(format!(
                "sample at t={} for beacon {:?} has non-finite rssi",
                self.timestamp_ms, self.beacon_id
            )));
        }
        Ok(())
    }
}

/// A fixed receiver: identifier, floor-plane position, and the per-beacon
/// calibration constants of the log-distance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconConfig {
    pub beacon_id: String,
    pub position: Position,
    /// RSSI at 1 m, dBm (symbol A).
    pub a_ref: f64,
    /// Path-loss exponent (symbol n), within [`PATH_LOSS_EXP_MIN`, `PATH_LOSS_EXP_MAX`].
    pub path_loss_exp: f64,
}

impl BeaconConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beacon_id.is_empty() {
            return Err(Error::invalid("beacon_id must be non-empty"));
        }
        if !self.position.is_finite() {
            return Err(Error::invalid(format!(
                "beacon {:?} has non-finite position",
                self.beacon_id
            )));
        }
        if !self.a_ref.is_finite() {
            return Err(Error::invalid(format!(
                "beacon {:?} has non-finite a_ref",
                self.beacon_id
            )));
        }
        if !(PATH_LOSS_EXP_MIN..=PATH_LOSS_EXP_MAX).contains(&self.path_loss_exp) {
            return Err(Error::invalid(format!(
                "beacon {:?} path_loss_exp {} outside [{}, {}]",
                self.beacon_id, self.path_loss_exp, PATH_LOSS_EXP_MIN, PATH_LOSS_EXP_MAX
            )));
        }
        Ok(())
    }
}

/// A straight wall segment with a flat penetration loss in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Position,
    pub b: Position,
    pub attenuation_db: f64,
}

impl Wall {
    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::invalid("wall endpoints must be finite"));
        }
        if self.a == self.b {
            return Err(Error::invalid("wall endpoints must be distinct"));
        }
        if !self.attenuation_db.is_finite() || self.attenuation_db < 0.0 {
            return Err(Error::invalid("wall attenuation must be finite and >= 0 dB"));
        }
        Ok(())
    }
}

/// Axis-aligned floor-plan extent, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.min_x, self.min_y, self.max_x, self.max_y];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("bounds must be finite"));
        }
        if self.max_x <= self.min_x || self.max_y <= self.min_y {
            return Err(Error::invalid("bounds must have positive extent"));
        }
        Ok(())
    }
}

/// A time span during which the target stood still at a known spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInterval {
    pub t_start_ms: u64,
    pub t_end_ms: u64,
    pub position: Position,
}

/// Floor plan, beacon installation, and ground-truth timeline for one
/// experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub bounds: Bounds,
    pub beacons: Vec<BeaconConfig>,
    pub walls: Vec<Wall>,
    /// Non-overlapping, time-ordered stationary intervals.
    pub ground_truth: Vec<GroundTruthInterval>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.beacons.len() < 3 {
            return Err(Error::invalid(format!(
                "scenario {:?} needs >= 3 beacons, has {}",
                self.name,
                self.beacons.len()
            )));
        }
        for b in &self.beacons {
            b.validate()?;
        }
        let mut ids: Vec<&str> = self.beacons.iter().map(|b| b.beacon_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.beacons.len() {
            return Err(Error::invalid(format!(
                "scenario {:?} has duplicate beacon ids",
                self.name
            )));
        }
        if all_collinear(&self.beacons) {
            return Err(Error::invalid(format!(
                "scenario {:?}: beacons are all collinear",
                self.name
            )));
        }
        for w in &self.walls {
            w.validate()?;
        }
        for (i, gt) in self.ground_truth.iter().enumerate() {
            if gt.t_end_ms <= gt.t_start_ms {
                return Err(Error::invalid(format!(
                    "ground-truth interval {i} has non-positive duration"
                )));
            }
            if !gt.position.is_finite() {
                return Err(Error::invalid(format!(
                    "ground-truth interval {i} has non-finite position"
                )));
            }
            if i > 0 && gt.t_start_ms <= self.ground_truth[i - 1].t_end_ms {
                return Err(Error::invalid(format!(
                    "ground-truth intervals must be ordered and non-overlapping (interval {i})"
                )));
            }
        }
        Ok(())
    }

    /// Beacon identifiers in scenario order (the order of dataset triples).
    pub fn beacon_ids(&self) -> Vec<String> {
        self.beacons.iter().map(|b| b.beacon_id.clone()).collect()
    }
}

fn all_collinear(beacons: &[BeaconConfig]) -> bool {
    let p0 = beacons[0].position;
    for i in 1..beacons.len() {
        for j in (i + 1)..beacons.len() {
            let u = (beacons[i].position.x - p0.x, beacons[i].position.y - p0.y);
            let v = (beacons[j].position.x - p0.x, beacons[j].position.y - p0.y);
            let cross = u.0 * v.1 - u.1 * v.0;
            if cross.abs() > 1e-9 {
                return false;
            }
        }
    }
    true
}

/// A solved position at one instant, with solver quality metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub timestamp_ms: u64,
    pub position: Position,
    /// Achieved sum of squared circle-equation residuals; >= 0, and zero iff
    /// the distance circles admit a common intersection point.
    pub residual: f64,
    pub method_tag: String,
}
