//! Deterministic synthetic RSSI trace generation.
//!
//! For every ground-truth interval and every beacon, samples are emitted at
//! `period ± jitter` with
//! `rssi = A − 10·n·log10(max(d, 0.1)) − Σ(wall losses) + N(0, σ²)`,
//! where the wall sum covers walls whose segments cross the beacon↔target
//! segment. All randomness comes from per-(interval, beacon) streams derived
//! from one seed, so traces are byte-identical for a fixed seed no matter how
//! generation is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::types::{
    BeaconConfig, Bounds, GroundTruthInterval, Position, RssiSample, Scenario, Wall,
};

pub const DEFAULT_SAMPLE_PERIOD_MS: u64 = 8000;
pub const DEFAULT_JITTER_MS: u64 = 1000;
/// Distances below this clamp are treated as 0.1 m by the propagation model.
pub const MIN_MODEL_DISTANCE_M: f64 = 0.1;

/// Target identifier stamped on generated samples.
pub const TARGET_ID: &str = "occupant";

/// Shadowing noise and sampling cadence of the simulated receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Gaussian shadowing standard deviation in dB (log-normal in power); ≥ 0.
    pub shadowing_sigma_db: f64,
    pub seed: u64,
    /// Nominal sampling period per beacon; > 0.
    pub sample_period_ms: u64,
    /// Uniform timestamp jitter half-width; < period.
    pub jitter_ms: u64,
}

impl NoiseModel {
    pub fn new(shadowing_sigma_db: f64, seed: u64) -> Self {
        NoiseModel {
            shadowing_sigma_db,
            seed,
            sample_period_ms: DEFAULT_SAMPLE_PERIOD_MS,
            jitter_ms: DEFAULT_JITTER_MS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.shadowing_sigma_db.is_finite() || self.shadowing_sigma_db < 0.0 {
            return Err(Error::invalid("shadowing sigma must be finite and >= 0"));
        }
        if self.sample_period_ms == 0 {
            return Err(Error::invalid("sample period must be > 0"));
        }
        if self.jitter_ms >= self.sample_period_ms {
            return Err(Error::invalid("jitter must be smaller than the sample period"));
        }
        Ok(())
    }
}

/// Generates the full trace for a scenario, sorted by timestamp (ties by
/// beacon id). Timestamps are strictly increasing per beacon.
pub fn simulate(scenario: &Scenario, noise: &NoiseModel) -> Result<Vec<RssiSample>> {
    scenario.validate()?;
    noise.validate()?;

    let normal = if noise.shadowing_sigma_db > 0.0 {
        Some(Normal::new(0.0, noise.shadowing_sigma_db).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };

    let n_beacons = scenario.beacons.len();
    let mut samples = Vec::new();
    for (ii, interval) in scenario.ground_truth.iter().enumerate() {
        for (bi, beacon) in scenario.beacons.iter().enumerate() {
            let stream = (ii * n_beacons + bi) as u64;
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(noise.seed, stream));

            let d = beacon.position.distance_to(interval.position);
            if d < 1e-3 {
                log::warn!(
                    "target in interval {ii} coincides with beacon {:?} (d = {d:.4} m); clamping to {MIN_MODEL_DISTANCE_M} m",
                    beacon.beacon_id
                );
            }
            let wall_loss: f64 = scenario
                .walls
                .iter()
                .filter(|w| segments_intersect(beacon.position, interval.position, w.a, w.b))
                .map(|w| w.attenuation_db)
                .sum();
            let base_rssi = beacon.a_ref
                - 10.0 * beacon.path_loss_exp * d.max(MIN_MODEL_DISTANCE_M).log10()
                - wall_loss;

            let mut prev_t: Option<u64> = None;
            let mut i: u64 = 0;
            loop {
                let base = interval.t_start_ms + i * noise.sample_period_ms;
                if base > interval.t_end_ms {
                    break;
                }
                let jitter: i64 = if noise.jitter_ms > 0 {
                    rng.random_range(-(noise.jitter_ms as i64)..=noise.jitter_ms as i64)
                } else {
                    0
                };
                let mut t = (base as i64 + jitter).max(0) as u64;
                if let Some(p) = prev_t {
                    t = t.max(p + 1);
                }
                prev_t = Some(t);

                let noise_db = match &normal {
                    Some(n) => n.sample(&mut rng),
                    None => 0.0,
                };
                samples.push(RssiSample {
                    timestamp_ms: t,
                    beacon_id: beacon.beacon_id.clone(),
                    target_id: TARGET_ID.to_string(),
                    rssi_dbm: base_rssi + noise_db,
                });
                i += 1;
            }
        }
    }

    samples.sort_by(|a, b| {
        a.timestamp_ms
            .cmp(&b.timestamp_ms)
            .then_with(|| a.beacon_id.cmp(&b.beacon_id))
    });
    Ok(samples)
}

/// True when segments `p1p2` and `q1q2` intersect (including touching).
fn segments_intersect(p1: Position, p2: Position, q1: Position, q2: Position) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && within_box(q1, q2, p1))
        || (d2 == 0.0 && within_box(q1, q2, p2))
        || (d3 == 0.0 && within_box(p1, p2, q1))
        || (d4 == 0.0 && within_box(p1, p2, q2))
}

fn orient(a: Position, b: Position, c: Position) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn within_box(a: Position, b: Position, c: Position) -> bool {
    c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
}

// --- builtin fixtures ---
//
// Home: three rooms assembled into one floor plan —
//   bedroom [0, 2.50]×[0, 3.29], hallway [2.50, 4.84]×[0, 2.21],
//   study [2.50, 5.00]×[2.21, 3.21]
// with brick interior walls (8 dB) on the shared boundaries and one ceiling
// beacon per room at the room center. The occupant stands at one spot per
// room, away from the beacon verticals, for 15 minutes per room with a
// one-minute walking gap between rooms.
//
// Office: meeting room [0, 5.60]×[0, 7.80] and hallway [5.60, 7.20]×[0, 5.60]
// separated by a plasterboard wall (3 dB); two beacons in the meeting room
// (window side and wall side) and one in the hallway. Five 15-minute
// stationary intervals: three meeting-room spots, then two hallway spots.

/// Duration of each stationary interval in the fixtures.
pub const FIXTURE_INTERVAL_MS: u64 = 900_000;
/// Spacing between consecutive interval starts (leaves a 60 s walking gap).
pub const FIXTURE_INTERVAL_SPACING_MS: u64 = 960_000;

const HOME_A_REF: f64 = -87.0;
const OFFICE_A_REF: f64 = -67.0;
const FIXTURE_PATH_LOSS_EXP: f64 = 2.5;
const BRICK_DB: f64 = 8.0;
const PLASTERBOARD_DB: f64 = 3.0;

fn beacon(id: &str, x: f64, y: f64, a_ref: f64) -> BeaconConfig {
    BeaconConfig {
        beacon_id: id.to_string(),
        position: Position::new(x, y),
        a_ref,
        path_loss_exp: FIXTURE_PATH_LOSS_EXP,
    }
}

fn wall(ax: f64, ay: f64, bx: f64, by: f64, db: f64) -> Wall {
    Wall {
        a: Position::new(ax, ay),
        b: Position::new(bx, by),
        attenuation_db: db,
    }
}

fn intervals(spots: &[(f64, f64)]) -> Vec<GroundTruthInterval> {
    spots
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let start = i as u64 * FIXTURE_INTERVAL_SPACING_MS;
            GroundTruthInterval {
                t_start_ms: start,
                t_end_ms: start + FIXTURE_INTERVAL_MS,
                position: Position::new(x, y),
            }
        })
        .collect()
}

/// The three-room home fixture: beacons `bedroom`, `study`, `hallway`.
pub fn builtin_home() -> Scenario {
    Scenario {
        name: "home".to_string(),
        bounds: Bounds { min_x: 0.0, min_y: 0.0, max_x: 5.0, max_y: 3.29 },
        beacons: vec![
            beacon("bedroom", 1.25, 1.645, HOME_A_REF),
            beacon("study", 3.75, 2.71, HOME_A_REF),
            beacon("hallway", 3.67, 1.105, HOME_A_REF),
        ],
        walls: vec![
            wall(2.5, 0.0, 2.5, 2.21, BRICK_DB),  // bedroom | hallway
            wall(2.5, 2.21, 2.5, 3.29, BRICK_DB), // bedroom | study
            wall(2.5, 2.21, 5.0, 2.21, BRICK_DB), // hallway | study
        ],
        ground_truth: intervals(&[
            (2.25, 2.2),  // bedroom spot, near the inner wall
            (2.8, 2.45),  // study spot
            (3.0, 1.9),   // hallway spot
        ]),
    }
}

/// The meeting-room + hallway office fixture: beacons `window`, `wall`,
/// `hallway`.
pub fn builtin_office() -> Scenario {
    Scenario {
        name: "office".to_string(),
        bounds: Bounds { min_x: 0.0, min_y: 0.0, max_x: 7.2, max_y: 7.8 },
        beacons: vec![
            beacon("window", 1.4, 3.9, OFFICE_A_REF),
            beacon("wall", 4.2, 3.9, OFFICE_A_REF),
            beacon("hallway", 6.4, 2.8, OFFICE_A_REF),
        ],
        walls: vec![
            wall(5.6, 0.0, 5.6, 5.6, PLASTERBOARD_DB), // meeting room | hallway
        ],
        ground_truth: intervals(&[
            (1.2, 1.5),  // meeting room, near the window corner
            (4.3, 6.0),  // meeting room, back wall
            (2.8, 4.2),  // meeting room, center
            (6.4, 2.2),  // hallway, south of the luminaire
            (6.8, 4.8),  // hallway, north end
        ]),
    }
}

/// Both fixtures, keyed for lookup by name via [`builtin`].
pub fn builtin_scenarios() -> (Scenario, Scenario) {
    (builtin_home(), builtin_office())
}

/// Fixture lookup by name (`"home"` or `"office"`).
pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "home" => Some(builtin_home()),
        "office" => Some(builtin_office()),
        _ => None,
    }
}
