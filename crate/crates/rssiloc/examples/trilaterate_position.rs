//! Solve positions from anchor distances: an exact three-circle intersection,
//! a noisy over-determined fix, and a rejected collinear geometry.
//!
//! Run with: `cargo run --example trilaterate_position`

use rssiloc::trilateration::trilaterate;
use rssiloc::{Error, Position};

fn main() -> rssiloc::Result<()> {
    // Consistent distances: all three circles pass through (1.0, 1.5).
    let truth = Position::new(1.0, 1.5);
    let anchors = [Position::new(0.0, 0.0), Position::new(4.0, 0.0), Position::new(1.0, 3.5)];
    let exact: Vec<(Position, f64)> =
        anchors.iter().map(|a| (*a, a.distance_to(truth))).collect();
    let est = trilaterate(&exact)?;
    println!(
        "exact circles:  ({:.6}, {:.6}), residual {:.2e} (truth ({}, {}))",
        est.position.x, est.position.y, est.residual, truth.x, truth.y
    );

    // Inconsistent distances (e.g. from noisy RSSI): no common intersection,
    // the solver returns the least-squares point and a positive residual.
    let noisy: Vec<(Position, f64)> = exact
        .iter()
        .zip([0.2, -0.15, 0.1])
        .map(|(&(a, d), delta)| (a, d + delta))
        .collect();
    let est = trilaterate(&noisy)?;
    println!(
        "noisy circles:  ({:.6}, {:.6}), residual {:.4}, error {:.3} m",
        est.position.x,
        est.position.y,
        est.residual,
        est.position.distance_to(truth)
    );

    // Collinear anchors leave the position ambiguous across a line; the
    // solver refuses rather than guessing.
    let collinear = [
        (Position::new(0.0, 0.0), 1.0),
        (Position::new(2.0, 0.0), 1.2),
        (Position::new(5.0, 0.0), 3.9),
    ];
    match trilaterate(&collinear) {
        Err(Error::Geometry { condition, limit }) => {
            println!("collinear anchors rejected: condition {condition:.2e} over limit {limit:.0e}");
        }
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
