//! Log-distance path-loss model: RSSI ↔ distance conversion and grid
//! calibration of the constants `A` (reference RSSI at 1 m) and `n`
//! (path-loss exponent).
//!
//! Distance from RSSI: `d = 10^((A − rssi) / (10·n))`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::trilateration::trilaterate;
use crate::types::Position;

/// The `A`/`n` pair of the log-distance model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    /// RSSI at 1 m, dBm.
    pub a_ref: f64,
    /// Path-loss exponent; must be > 0.
    pub path_loss_exp: f64,
}

impl PathLossModel {
    pub fn new(a_ref: f64, path_loss_exp: f64) -> Result<Self> {
        if !a_ref.is_finite() {
            return Err(Error::invalid("a_ref must be finite"));
        }
        if !path_loss_exp.is_finite() || path_loss_exp <= 0.0 {
            return Err(Error::invalid("path_loss_exp must be finite and > 0"));
        }
        Ok(PathLossModel { a_ref, path_loss_exp })
    }

    /// Distance in meters implied by an RSSI reading; strictly positive and
    /// strictly decreasing in `rssi_dbm`.
    pub fn rssi_to_distance(&self, rssi_dbm: f64) -> Result<f64> {
        if !rssi_dbm.is_finite() {
            return Err(Error::invalid("rssi must be finite"));
        }
        Ok(10f64.powf((self.a_ref - rssi_dbm) / (10.0 * self.path_loss_exp)))
    }

    /// Exact inverse of [`rssi_to_distance`](Self::rssi_to_distance):
    /// `A − 10·n·log10(d)`.
    pub fn distance_to_rssi(&self, distance_m: f64) -> Result<f64> {
        if !distance_m.is_finite() || distance_m <= 0.0 {
            return Err(Error::invalid("distance must be finite and > 0"));
        }
        Ok(self.a_ref - 10.0 * self.path_loss_exp * distance_m.log10())
    }
}

/// One calibration observation: an RSSI reading per beacon (in anchor order)
/// taken while the target stood at a known position.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPoint {
    pub rssi_dbm: Vec<f64>,
    pub position: Position,
}

/// Default exponent grid `{1.4, 1.5, …, 5.1}`.
pub fn default_n_grid() -> Vec<f64> {
    (14..=51).map(|i| i as f64 / 10.0).collect()
}

/// Default reference-power grid `{−95, −94, …, −55}` dBm.
pub fn default_a_grid() -> Vec<f64> {
    (-95..=-55).map(|i| i as f64).collect()
}

/// Grid search for the `(A, n)` pair minimizing mean trilateration error over
/// the calibration set. Ties break toward smaller `n`, then smaller `|A|`.
///
/// The objective is end-to-end localization error, not per-beacon distance
/// error: for each candidate pair, every point's RSSI vector is converted to
/// distances, trilaterated against `anchors`, and scored by Euclidean
/// distance to the point's true position.
pub fn calibrate(
    points: &[CalibrationPoint],
    anchors: &[Position],
    n_grid: &[f64],
    a_grid: &[f64],
) -> Result<PathLossModel> {
    if points.is_empty() {
        return Err(Error::invalid("calibration needs >= 1 labeled point"));
    }
    if n_grid.is_empty() || a_grid.is_empty() {
        return Err(Error::invalid("calibration grids must be non-empty"));
    }
    for p in points {
        if p.rssi_dbm.len() != anchors.len() {
            return Err(Error::invalid(format!(
                "calibration point has {} rssi values for {} anchors",
                p.rssi_dbm.len(),
                anchors.len()
            )));
        }
    }

    let candidates: Vec<(f64, f64)> = n_grid
        .iter()
        .flat_map(|&n| a_grid.iter().map(move |&a| (n, a)))
        .collect();

    // The argmin under the (error, n, |A|, A) lexicographic key is associative
    // and commutative, so parallel reduction order cannot change the winner.
    let best = candidates
        .par_iter()
        .map(|&(n, a)| {
            let model = PathLossModel { a_ref: a, path_loss_exp: n };
            let err = mean_error(points, anchors, &model);
            err.map(|e| (e, n, a))
        })
        .try_reduce_with(|x, y| Ok(if key(y) < key(x) { y } else { x }));

    match best {
        Some(Ok((_, n, a))) => Ok(PathLossModel { a_ref: a, path_loss_exp: n }),
        Some(Err(e)) => Err(e),
        None => Err(Error::invalid("empty candidate grid")),
    }
}

fn key(c: (f64, f64, f64)) -> (u64, u64, u64, u64) {
    // total_cmp-compatible ordering keys (all values finite or NaN-last).
    (bits(c.0), bits(c.1), bits(c.2.abs()), bits(c.2))
}

fn bits(v: f64) -> u64 {
    // Monotone map from f64 order to u64 order (total order, NaN at the top).
    let b = v.to_bits();
    if b >> 63 == 0 {
        b | (1 << 63)
    } else {
        !b
    }
}

fn mean_error(points: &[CalibrationPoint], anchors: &[Position], model: &PathLossModel) -> Result<f64> {
    let mut total = 0.0;
    for p in points {
        let mut circles = Vec::with_capacity(anchors.len());
        for (pos, &rssi) in anchors.iter().zip(&p.rssi_dbm) {
            circles.push((*pos, model.rssi_to_distance(rssi)?));
        }
        let est = trilaterate(&circles)?;
        total += est.position.distance_to(p.position);
    }
    Ok(total / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HOME_A: f64 = -87.0;
    const OFFICE_A: f64 = -67.0;

    #[test]
    fn reference_distance_is_one_meter() {
        let office = PathLossModel::new(OFFICE_A, 2.5).unwrap();
        assert_eq!(office.rssi_to_distance(-67.0).unwrap(), 1.0);
        let home = PathLossModel::new(HOME_A, 2.5).unwrap();
        assert_eq!(home.rssi_to_distance(-87.0).unwrap(), 1.0);
    }

    #[test]
    fn unit_exponent_gives_ten_meters() {
        let office = PathLossModel::new(OFFICE_A, 2.5).unwrap();
        // (−67 − (−92)) / 25 = 1 exactly.
        assert!((office.rssi_to_distance(-92.0).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn distance_to_rssi_examples() {
        let office = PathLossModel::new(OFFICE_A, 2.5).unwrap();
        assert_eq!(office.distance_to_rssi(1.0).unwrap(), -67.0);
        assert!((office.distance_to_rssi(10.0).unwrap() + 92.0).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_on_named_distances() {
        let model = PathLossModel::new(OFFICE_A, 2.5).unwrap();
        for d in [0.5, 1.0, 2.0, 5.0, 10.0] {
            let rt = model.rssi_to_distance(model.distance_to_rssi(d).unwrap()).unwrap();
            assert!((rt - d).abs() / d < 1e-9, "d={d} rt={rt}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PathLossModel::new(-67.0, 0.0).is_err());
        assert!(PathLossModel::new(f64::NAN, 2.5).is_err());
        let m = PathLossModel::new(-67.0, 2.5).unwrap();
        assert!(m.rssi_to_distance(f64::INFINITY).is_err());
        assert!(m.distance_to_rssi(0.0).is_err());
        assert!(m.distance_to_rssi(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_decreasing_in_rssi(r1 in -110.0f64..-30.0, r2 in -110.0f64..-30.0) {
            prop_assume!(r1 < r2);
            let m = PathLossModel::new(-67.0, 2.5).unwrap();
            prop_assert!(m.rssi_to_distance(r1).unwrap() > m.rssi_to_distance(r2).unwrap());
        }

        #[test]
        fn inverse_identity_on_dbm(rssi in -110.0f64..-30.0, n in 1.4f64..5.1, a in -95.0f64..-55.0) {
            let m = PathLossModel::new(a, n).unwrap();
            let back = m.distance_to_rssi(m.rssi_to_distance(rssi).unwrap()).unwrap();
            prop_assert!((back - rssi).abs() < 1e-9 * rssi.abs().max(1.0));
        }
    }

    /// Three anchors on the unit circle around the origin (deliberately
    /// asymmetric) and a point at the center: every anchor is at exactly 1 m.
    fn unit_circle_anchors() -> Vec<Position> {
        [0.0f64, 100.0, 215.0]
            .iter()
            .map(|deg| {
                let rad = deg.to_radians();
                Position::new(rad.cos(), rad.sin())
            })
            .collect()
    }

    #[test]
    fn exact_a_recovered_and_n_tie_breaks_low() {
        // All beacons at exactly 1 m report rssi = A. Any candidate with the
        // true A yields d = 1 for every n, so localization error is zero for
        // the whole A column and the tie-break must select the smallest n.
        let anchors = unit_circle_anchors();
        let point = CalibrationPoint {
            rssi_dbm: vec![-87.0, -87.0, -87.0],
            position: Position::new(0.0, 0.0),
        };
        let model = calibrate(&[point], &anchors, &default_n_grid(), &default_a_grid()).unwrap();
        assert_eq!(model.a_ref, -87.0);
        assert_eq!(model.path_loss_exp, 1.4);
    }

    #[test]
    fn singleton_grid_returned_regardless_of_data() {
        let anchors = unit_circle_anchors();
        let point = CalibrationPoint {
            rssi_dbm: vec![-60.0, -75.0, -80.0],
            position: Position::new(0.3, -0.2),
        };
        let model = calibrate(&[point], &anchors, &[2.5], &[-87.0]).unwrap();
        assert_eq!(model.a_ref, -87.0);
        assert_eq!(model.path_loss_exp, 2.5);
    }

    #[test]
    fn exact_pair_recovered_from_varied_distances() {
        // Noiseless readings generated by a grid member at varied distances:
        // the generator is the unique zero-error candidate.
        let truth = PathLossModel::new(-80.0, 3.0).unwrap();
        let anchors = vec![
            Position::new(0.0, 0.0),
            Position::new(4.0, 0.0),
            Position::new(1.0, 3.0),
        ];
        let spots = [
            Position::new(1.0, 1.0),
            Position::new(2.5, 1.5),
            Position::new(0.5, 2.0),
        ];
        let points: Vec<CalibrationPoint> = spots
            .iter()
            .map(|&p| CalibrationPoint {
                rssi_dbm: anchors
                    .iter()
                    .map(|a| truth.distance_to_rssi(a.distance_to(p)).unwrap())
                    .collect(),
                position: p,
            })
            .collect();
        let model = calibrate(&points, &anchors, &default_n_grid(), &default_a_grid()).unwrap();
        assert_eq!(model.a_ref, -80.0);
        assert_eq!(model.path_loss_exp, 3.0);
    }

    #[test]
    fn empty_inputs_rejected() {
        let anchors = unit_circle_anchors();
        assert!(calibrate(&[], &anchors, &[2.5], &[-87.0]).is_err());
        let point = CalibrationPoint { rssi_dbm: vec![-87.0; 3], position: Position::new(0.0, 0.0) };
        assert!(calibrate(&[point.clone()], &anchors, &[], &[-87.0]).is_err());
        assert!(calibrate(&[point], &anchors, &[2.5], &[]).is_err());
    }
}
