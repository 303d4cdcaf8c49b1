//! Recover the path-loss constants (A, n) by grid search over labeled
//! calibration points, then show the calibrated model ranging accuracy.
//!
//! Run with: `cargo run --example calibrate_pathloss`

use rssiloc::pathloss::{calibrate, default_a_grid, default_n_grid, CalibrationPoint, PathLossModel};
use rssiloc::Position;

fn main() -> rssiloc::Result<()> {
    // Ground truth: an office-like propagation model the grid can represent.
    let truth = PathLossModel::new(-67.0, 2.5)?;
    let anchors = vec![
        Position::new(1.4, 3.9),
        Position::new(4.2, 3.9),
        Position::new(6.4, 2.8),
    ];

    // Four survey spots; each point records one RSSI per anchor, generated
    // noiselessly by the true model.
    let spots = [
        Position::new(1.2, 1.5),
        Position::new(4.3, 6.0),
        Position::new(2.8, 4.2),
        Position::new(6.8, 4.8),
    ];
    let points: Vec<CalibrationPoint> = spots
        .iter()
        .map(|&p| {
            let rssi_dbm = anchors
                .iter()
                .map(|a| truth.distance_to_rssi(a.distance_to(p)).unwrap())
                .collect();
            CalibrationPoint { rssi_dbm, position: p }
        })
        .collect();

    let model = calibrate(&points, &anchors, &default_n_grid(), &default_a_grid())?;
    println!("true model:       A = {:>6.1} dBm, n = {:.1}", truth.a_ref, truth.path_loss_exp);
    println!("calibrated model: A = {:>6.1} dBm, n = {:.1}", model.a_ref, model.path_loss_exp);

    println!("\nranging with the calibrated model:");
    for (i, p) in points.iter().enumerate() {
        for (a, &rssi) in anchors.iter().zip(&p.rssi_dbm) {
            let d_true = a.distance_to(p.position);
            let d_est = model.rssi_to_distance(rssi)?;
            println!(
                "  spot {i} anchor ({:>3.1}, {:>3.1}): rssi {:>7.2} dBm -> {:.3} m (true {:.3} m)",
                a.x, a.y, rssi, d_est, d_true
            );
        }
    }
    Ok(())
}
