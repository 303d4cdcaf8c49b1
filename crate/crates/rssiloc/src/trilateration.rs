//! Least-squares trilateration from ≥ 3 anchor distances.
//!
//! The circle system `(x − xᵢ)² + (y − yᵢ)² = dᵢ²` rarely has an exact
//! solution under noise, so the solver minimizes the squared circle-equation
//! residuals `Σᵢ (‖p − cᵢ‖² − dᵢ²)²`:
//!
//! 1. subtract the first circle equation from the others, leaving a linear
//!    system in `(x, y)` solved by normal equations ("linearized
//!    trilateration");
//! 2. refine the squared-residual objective until the step is below 1e-10 m
//!    or 50 iterations, backtracking on steps that fail to descend; each step
//!    is full Newton while the Hessian is positive definite and Gauss–Newton
//!    otherwise.
//!
//! If the circles do intersect in one point, stage 1 starts at it and stage 2
//! drives the residual to ~0. The objective is quartic and can hold several
//! local minima — most visibly for nearly collinear anchors, where the
//! linearized start is thrown far along the ill-conditioned direction — so
//! Gauss–Newton also runs from the best cell of a coarse grid over the
//! region that provably contains the global minimum, and the better of the
//! two end points wins.

use crate::error::{Error, Result};
use crate::types::{Position, PositionEstimate};

/// Condition-number ceiling on the 2×2 normal matrix; above it the anchors
/// are treated as collinear.
pub const CONDITION_LIMIT: f64 = 1e12;

const GN_STEP_TOL_M: f64 = 1e-10;
const GN_MAX_ITERS: usize = 50;

/// Solves for the position best matching the given `(anchor, distance)`
/// circles. Distances must be positive and finite; anchors must not be all
/// collinear.
pub fn trilaterate(anchors: &[(Position, f64)]) -> Result<PositionEstimate> {
    if anchors.len() < 3 {
        return Err(Error::invalid(format!(
            "trilateration needs >= 3 anchors, got {}",
            anchors.len()
        )));
    }
    for (pos, d) in anchors {
        if !pos.is_finite() {
            return Err(Error::invalid("anchor positions must be finite"));
        }
        if !d.is_finite() || *d <= 0.0 {
            return Err(Error::invalid(format!("anchor distances must be finite and > 0, got {d}")));
        }
    }

    let p0 = linearized_start(anchors)?;
    let mut p = gauss_newton(anchors, p0);
    let alt = gauss_newton(anchors, coarse_seed(anchors));
    if objective(anchors, alt) < objective(anchors, p) {
        p = alt;
    }
    Ok(PositionEstimate {
        timestamp_ms: 0,
        position: p,
        residual: objective(anchors, p),
        method_tag: String::new(),
    })
}

/// Best lattice point of a coarse grid spanning the anchors' bounding box
/// inflated by the largest distance. Outside that box every circle residual
/// is positive and shrinks toward the anchors, so the box contains all
/// stationary points and in particular the global minimum.
fn coarse_seed(anchors: &[(Position, f64)]) -> Position {
    const CELLS: usize = 48;
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut dmax: f64 = 0.0;
    for &(c, d) in anchors {
        x0 = x0.min(c.x);
        x1 = x1.max(c.x);
        y0 = y0.min(c.y);
        y1 = y1.max(c.y);
        dmax = dmax.max(d);
    }
    x0 -= dmax;
    x1 += dmax;
    y0 -= dmax;
    y1 += dmax;
    let sx = (x1 - x0) / CELLS as f64;
    let sy = (y1 - y0) / CELLS as f64;
    let mut best = Position::new(x0, y0);
    let mut best_f = f64::INFINITY;
    for i in 0..=CELLS {
        for j in 0..=CELLS {
            let p = Position::new(x0 + sx * i as f64, y0 + sy * j as f64);
            let f = objective(anchors, p);
            if f < best_f {
                best_f = f;
                best = p;
            }
        }
    }
    best
}

/// Sum of squared circle-equation residuals at `p`.
pub fn objective(anchors: &[(Position, f64)], p: Position) -> f64 {
    anchors
        .iter()
        .map(|&(c, d)| {
            let r = sq(p.x - c.x) + sq(p.y - c.y) - d * d;
            r * r
        })
        .sum()
}

fn sq(v: f64) -> f64 {
    v * v
}

/// Subtracting circle 0 from circle i gives, for each i ≥ 1:
/// `2(xᵢ−x₀)x + 2(yᵢ−y₀)y = d₀² − dᵢ² + xᵢ² − x₀² + yᵢ² − y₀²`.
fn linearized_start(anchors: &[(Position, f64)]) -> Result<Position> {
    let (c0, d0) = anchors[0];
    // Accumulate the 2×2 normal matrix AᵀA and right-hand side Aᵀb.
    let (mut n11, mut n12, mut n22) = (0.0, 0.0, 0.0);
    let (mut g1, mut g2) = (0.0, 0.0);
    for &(c, d) in &anchors[1..] {
        let ax = 2.0 * (c.x - c0.x);
        let ay = 2.0 * (c.y - c0.y);
        let b = d0 * d0 - d * d + sq(c.x) - sq(c0.x) + sq(c.y) - sq(c0.y);
        n11 += ax * ax;
        n12 += ax * ay;
        n22 += ay * ay;
        g1 += ax * b;
        g2 += ay * b;
    }

    let cond = condition_2x2(n11, n12, n22);
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::Geometry { condition: cond, limit: CONDITION_LIMIT });
    }

    let det = n11 * n22 - n12 * n12;
    Ok(Position::new((n22 * g1 - n12 * g2) / det, (n11 * g2 - n12 * g1) / det))
}

/// Condition number of a symmetric positive semi-definite 2×2 matrix
/// [[a, b], [b, c]] via its eigenvalue ratio.
fn condition_2x2(a: f64, b: f64, c: f64) -> f64 {
    let tr = a + c;
    let det = a * c - b * b;
    let disc = (sq(tr) - 4.0 * det).max(0.0).sqrt();
    let hi = (tr + disc) / 2.0;
    let lo = (tr - disc) / 2.0;
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn gauss_newton(anchors: &[(Position, f64)], start: Position) -> Position {
    let mut p = start;
    let mut f = objective(anchors, p);
    for _ in 0..GN_MAX_ITERS {
        // Residuals rᵢ = ‖p−cᵢ‖² − dᵢ², Jacobian rows ∇rᵢ = 2(p − cᵢ).
        let (mut n11, mut n12, mut n22) = (0.0, 0.0, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        let mut r_sum = 0.0;
        for &(c, d) in anchors {
            let jx = 2.0 * (p.x - c.x);
            let jy = 2.0 * (p.y - c.y);
            let r = sq(p.x - c.x) + sq(p.y - c.y) - d * d;
            n11 += jx * jx;
            n12 += jx * jy;
            n22 += jy * jy;
            g1 += jx * r;
            g2 += jy * r;
            r_sum += r;
        }
        // ∇²rᵢ = 2I, so the true Hessian is 2(JᵀJ + 2Σrᵢ·I). Prefer the full
        // Newton step while that matrix is positive definite (Gauss–Newton
        // alone crawls along nearly collinear valleys where the residuals
        // stay large); otherwise keep the plain Gauss–Newton direction.
        let (mut a11, mut a22) = (n11 + 2.0 * r_sum, n22 + 2.0 * r_sum);
        if !(a11 > 0.0 && a11 * a22 - n12 * n12 > 0.0) {
            a11 = n11;
            a22 = n22;
        }
        let det = a11 * a22 - n12 * n12;
        if det.abs() < 1e-300 {
            break;
        }
        let mut dx = -(a22 * g1 - n12 * g2) / det;
        let mut dy = -(a11 * g2 - n12 * g1) / det;
        if !dx.is_finite() || !dy.is_finite() {
            break;
        }

        // Backtrack on non-descending steps (GN can overshoot on inconsistent
        // circles); 30 halvings take any step below the tolerance scale.
        let mut stepped = false;
        for _ in 0..30 {
            let cand = Position::new(p.x + dx, p.y + dy);
            let fc = objective(anchors, cand);
            if fc < f {
                p = cand;
                f = fc;
                stepped = true;
                break;
            }
            dx /= 2.0;
            dy /= 2.0;
            if dx.hypot(dy) < GN_STEP_TOL_M {
                break;
            }
        }
        if !stepped || dx.hypot(dy) < GN_STEP_TOL_M {
            break;
        }
    }
    p
}
