//! Per-beacon RSSI stream smoothing: a scalar constant-state Kalman filter,
//! the look-back-k window heuristic with two outlier modes, and their
//! composition (Kalman first, then look-back).
//!
//! All filters are length-preserving and causal: output `j` depends only on
//! inputs `0..=j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default process noise `q`, dBm² per step.
pub const DEFAULT_PROCESS_NOISE: f64 = 0.05;
/// Default measurement noise `r`, dBm² (≈ stationary RSSI variance).
pub const DEFAULT_MEASUREMENT_NOISE: f64 = 4.0;
/// Error covariance assigned when a filter is seeded from its first sample.
pub const INITIAL_ERROR_COV: f64 = 1.0;
/// Default look-back window size.
pub const DEFAULT_LOOKBACK_K: usize = 50;

/// Scalar constant-state (random-walk) Kalman filter state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    /// Current RSSI estimate, dBm.
    pub estimate: f64,
    /// Estimate error covariance, dBm²; ≥ 0.
    pub error_cov: f64,
    /// Process noise added each prediction, dBm²; > 0.
    pub q: f64,
    /// Measurement noise, dBm²; > 0.
    pub r: f64,
}

impl KalmanState {
    pub fn new(estimate: f64, error_cov: f64, q: f64, r: f64) -> Result<Self> {
        if !estimate.is_finite() {
            return Err(Error::invalid("Kalman estimate must be finite"));
        }
        if !error_cov.is_finite() || error_cov < 0.0 {
            return Err(Error::invalid("Kalman error_cov must be finite and >= 0"));
        }
        if !q.is_finite() || q <= 0.0 || !r.is_finite() || r <= 0.0 {
            return Err(Error::invalid("Kalman q and r must be finite and > 0"));
        }
        Ok(KalmanState { estimate, error_cov, q, r })
    }
}

/// One predict+update cycle. The constant-state prediction leaves the
/// estimate unchanged and grows the covariance by `q`; the update blends in
/// the measurement with gain `g = cov / (cov + r)`, so the new estimate lies
/// in the closed interval between the prior estimate and the measurement.
pub fn kalman_step(state: KalmanState, measurement: f64) -> Result<KalmanState> {
    if !measurement.is_finite() {
        return Err(Error::invalid("Kalman measurement must be finite"));
    }
    let cov = state.error_cov + state.q;
    let gain = cov / (cov + state.r);
    Ok(KalmanState {
        estimate: state.estimate + gain * (measurement - state.estimate),
        error_cov: cov * (1.0 - gain),
        q: state.q,
        r: state.r,
    })
}

/// Folds [`kalman_step`] over a time-ordered stream. The state is seeded from
/// the first measurement (with covariance [`INITIAL_ERROR_COV`]), so the
/// first output equals the first input.
pub fn kalman_run(measurements: &[f64], q: f64, r: f64) -> Result<Vec<f64>> {
    let Some(&first) = measurements.first() else {
        return Err(Error::invalid("kalman_run needs a non-empty stream"));
    };
    let mut state = KalmanState::new(first, INITIAL_ERROR_COV, q, r)?;
    let mut out = Vec::with_capacity(measurements.len());
    out.push(first);
    for &m in &measurements[1..] {
        state = kalman_step(state, m)?;
        out.push(state.estimate);
    }
    Ok(out)
}

/// Outlier-removal rule applied to a look-back window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutlierMode {
    /// Remove one occurrence of the minimum and one of the maximum
    /// (skipped when the window has ≤ 2 values).
    MinMax,
    /// Remove values outside `[Q1 − 1.5·IQR, Q3 + 1.5·IQR]`, quartiles by
    /// linear interpolation.
    Iqr,
}

/// Parameters of the look-back-k heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookbackConfig {
    /// Window length; ≥ 1.
    pub k: usize,
    pub mode: OutlierMode,
}

impl LookbackConfig {
    pub fn new(k: usize, mode: OutlierMode) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("look-back window length k must be >= 1"));
        }
        Ok(LookbackConfig { k, mode })
    }
}

/// Reduces one window to a single robust value in four stages:
///
/// 1. outlier removal per [`OutlierMode`];
/// 2. mean `μ` and population standard deviation `σ` of the survivors;
/// 3. drop survivors outside `[μ−σ, μ+σ]`;
/// 4. mean of the remainder.
///
/// If a stage empties the set, the previous stage's mean is returned instead.
/// The window is sorted internally first, so the result depends only on the
/// multiset of values, never on their order.
pub fn lookback_reduce(window: &[f64], config: LookbackConfig) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::invalid("look-back window must be non-empty"));
    }
    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);

    let survivors = match config.mode {
        OutlierMode::MinMax => {
            if sorted.len() <= 2 {
                &sorted[..]
            } else {
                &sorted[1..sorted.len() - 1]
            }
        }
        OutlierMode::Iqr => {
            let q1 = quantile(&sorted, 0.25);
            let q3 = quantile(&sorted, 0.75);
            let iqr = q3 - q1;
            let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
            let start = sorted.partition_point(|&v| v < lo);
            let end = sorted.partition_point(|&v| v <= hi);
            &sorted[start..end]
        }
    };
    if survivors.is_empty() {
        return Ok(mean(&sorted));
    }

    let mu = mean(survivors);
    let sigma = (survivors.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>()
        / survivors.len() as f64)
        .sqrt();
    let kept: Vec<f64> = survivors
        .iter()
        .copied()
        .filter(|&v| (v - mu).abs() <= sigma)
        .collect();
    if kept.is_empty() {
        return Ok(mu);
    }
    Ok(mean(&kept))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Quantile of an ascending-sorted slice by linear interpolation at rank
/// `(len − 1)·q`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Applies [`lookback_reduce`] at every index over the trailing
/// `min(k, j+1)` values; warm-up indices use all values available so far.
pub fn lookback_stream(values: &[f64], config: LookbackConfig) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("look-back stream must be non-empty"));
    }
    let mut out = Vec::with_capacity(values.len());
    for j in 0..values.len() {
        let start = (j + 1).saturating_sub(config.k);
        out.push(lookback_reduce(&values[start..=j], config)?);
    }
    Ok(out)
}

/// The hybrid pipeline: Kalman smoothing first, then the look-back heuristic
/// over the smoothed stream.
pub fn hybrid_stream(values: &[f64], q: f64, r: f64, config: LookbackConfig) -> Result<Vec<f64>> {
    lookback_stream(&kalman_run(values, q, r)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, Normal};

    const MINMAX: LookbackConfig = LookbackConfig { k: 5, mode: OutlierMode::MinMax };
    const IQR: LookbackConfig = LookbackConfig { k: 5, mode: OutlierMode::Iqr };

    // --- Kalman ---

    #[test]
    fn zero_innovation_is_identity() {
        let s = KalmanState::new(-70.0, 1.0, 0.05, 4.0).unwrap();
        let s2 = kalman_step(s, -70.0).unwrap();
        assert_eq!(s2.estimate, -70.0);
    }

    #[test]
    fn step_is_convex_combination() {
        let s = KalmanState::new(-70.0, 1.0, 0.05, 4.0).unwrap();
        let s2 = kalman_step(s, -90.0).unwrap();
        assert!(s2.estimate > -90.0 && s2.estimate < -70.0);
        // gain = 1.05/5.05 ≈ 0.2079 applied to innovation −20 → ≈ −74.158.
        let expected = -70.0 + (1.05 / 5.05) * (-20.0);
        assert!((s2.estimate - expected).abs() < 1e-12);
    }

    #[test]
    fn repeated_measurement_converges_monotonically() {
        let mut s = KalmanState::new(-70.0, 1.0, 0.05, 4.0).unwrap();
        let mut prev_gap = (s.estimate - (-80.0)).abs();
        for _ in 0..100 {
            s = kalman_step(s, -80.0).unwrap();
            let gap = (s.estimate - (-80.0)).abs();
            assert!(gap < prev_gap, "convergence must be strict");
            prev_gap = gap;
        }
        assert!(prev_gap < 0.1);
    }

    #[test]
    fn run_constant_stream_is_identity() {
        let xs = vec![-70.0; 10];
        assert_eq!(kalman_run(&xs, 0.05, 4.0).unwrap(), xs);
    }

    #[test]
    fn run_single_element() {
        assert_eq!(kalman_run(&[-75.0], 0.05, 4.0).unwrap(), vec![-75.0]);
    }

    #[test]
    fn run_rejects_empty_and_nonfinite() {
        assert!(kalman_run(&[], 0.05, 4.0).is_err());
        assert!(kalman_run(&[-70.0, f64::NAN], 0.05, 4.0).is_err());
        let s = KalmanState::new(-70.0, 1.0, 0.05, 4.0).unwrap();
        assert!(kalman_step(s, f64::INFINITY).is_err());
    }

    #[test]
    fn run_reduces_mse_on_noisy_constant_streams() {
        let truth = -75.0;
        for seed in 0..20 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 4.0).unwrap();
            let xs: Vec<f64> = (0..100).map(|_| truth + normal.sample(&mut rng)).collect();
            let est = kalman_run(&xs, DEFAULT_PROCESS_NOISE, DEFAULT_MEASUREMENT_NOISE).unwrap();
            let mse = |vs: &[f64]| vs.iter().map(|v| (v - truth) * (v - truth)).sum::<f64>() / vs.len() as f64;
            assert!(mse(&est) <= mse(&xs), "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn step_stays_between_prior_and_measurement(
            est in -110.0f64..-30.0,
            cov in 0.0f64..10.0,
            m in -110.0f64..-30.0,
        ) {
            let s = KalmanState::new(est, cov, 0.05, 4.0).unwrap();
            let s2 = kalman_step(s, m).unwrap();
            let (lo, hi) = if est <= m { (est, m) } else { (m, est) };
            prop_assert!(s2.estimate >= lo && s2.estimate <= hi);
            prop_assert!(s2.error_cov >= 0.0);
        }

        #[test]
        fn run_bounded_by_seen_measurements(xs in proptest::collection::vec(-110.0f64..-30.0, 1..40)) {
            let est = kalman_run(&xs, 0.05, 4.0).unwrap();
            prop_assert_eq!(est.len(), xs.len());
            prop_assert_eq!(est[0], xs[0]);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (e, &x) in est.iter().zip(&xs) {
                lo = lo.min(x);
                hi = hi.max(x);
                prop_assert!(*e >= lo && *e <= hi);
            }
        }
    }

    // --- look-back ---

    #[test]
    fn minmax_all_equal() {
        assert_eq!(lookback_reduce(&[-70.0; 5], MINMAX).unwrap(), -70.0);
    }

    #[test]
    fn minmax_strips_extremes() {
        // Remove −60 and −95; μ = σ-trim survivors all −70.
        let v = [-60.0, -70.0, -70.0, -70.0, -95.0];
        assert_eq!(lookback_reduce(&v, MINMAX).unwrap(), -70.0);
    }

    #[test]
    fn iqr_excludes_far_outlier() {
        // Sorted: [−120, −70, −70, −70, −70]; Q1 = Q3 = −70, IQR = 0, so
        // −120 falls outside the (degenerate) fence.
        let v = [-70.0, -70.0, -70.0, -70.0, -120.0];
        assert_eq!(lookback_reduce(&v, IQR).unwrap(), -70.0);
    }

    #[test]
    fn minmax_sigma_trim_drops_straggler() {
        // Hand-derived: extremes −60/−95 removed leaves {−70,−71,−69,−90};
        // μ = −75 exactly, σ = √75.5 ≈ 8.69, so −90 (|Δ| = 15) is trimmed
        // and the mean of {−70,−71,−69} is exactly −70.
        let v = [-60.0, -70.0, -71.0, -69.0, -95.0, -90.0];
        let cfg = LookbackConfig { k: 6, mode: OutlierMode::MinMax };
        assert_eq!(lookback_reduce(&v, cfg).unwrap(), -70.0);
    }

    #[test]
    fn minmax_skips_tiny_windows() {
        // |window| ≤ 2: removal skipped; both values sit exactly at μ±σ and
        // survive the trim; result is the plain mean.
        assert_eq!(lookback_reduce(&[-60.0, -90.0], MINMAX).unwrap(), -75.0);
        assert_eq!(lookback_reduce(&[-82.5], MINMAX).unwrap(), -82.5);
        assert_eq!(lookback_reduce(&[-82.5], IQR).unwrap(), -82.5);
    }

    #[test]
    fn sigma_trim_can_empty_and_falls_back() {
        // Two levels straddling −85 by exactly δ ≈ 0.5000000105: every
        // deviation is exactly δ, but the six-term sum of squares rounds the
        // computed σ one ULP below δ, so the trim rejects all survivors and
        // the survivor mean −85 comes back through the fallback.
        let a = -85.50000001053678;
        let b = -84.49999998946322;
        let mu = -85.0;
        let delta = 0.5000000105367803;
        assert_eq!(mu - a, delta);
        assert_eq!(b - mu, delta);

        // Premise: the implementation's σ really is below δ for this core.
        let core = [a, a, a, b, b, b];
        let sigma = (core.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / 6.0).sqrt();
        assert!(sigma < delta);
        assert_eq!(delta.to_bits() - sigma.to_bits(), 1);

        let cfg = LookbackConfig { k: 6, mode: OutlierMode::Iqr };
        assert_eq!(lookback_reduce(&[b, a, b, a, a, b], cfg).unwrap(), mu);

        // Same core once min/max removal strips −95 and −75.
        let cfg = LookbackConfig { k: 8, mode: OutlierMode::MinMax };
        assert_eq!(lookback_reduce(&[-95.0, b, a, b, a, a, b, -75.0], cfg).unwrap(), mu);
    }

    #[test]
    fn empty_window_rejected() {
        assert!(lookback_reduce(&[], MINMAX).is_err());
        assert!(lookback_stream(&[], MINMAX).is_err());
        assert!(hybrid_stream(&[], 0.05, 4.0, MINMAX).is_err());
    }

    #[test]
    fn stream_constant_is_identity() {
        let xs = vec![-70.0; 8];
        assert_eq!(lookback_stream(&xs, MINMAX).unwrap(), xs);
    }

    #[test]
    fn k1_stream_is_bitwise_identity() {
        let xs = vec![-70.25, -71.5, -90.0, -30.125, -65.0];
        let cfg = LookbackConfig::new(1, OutlierMode::MinMax).unwrap();
        assert_eq!(lookback_stream(&xs, cfg).unwrap(), xs);
        let cfg = LookbackConfig::new(1, OutlierMode::Iqr).unwrap();
        assert_eq!(lookback_stream(&xs, cfg).unwrap(), xs);
    }

    #[test]
    fn warmup_uses_partial_windows() {
        let xs = [-60.0, -70.0, -70.0, -70.0, -95.0];
        let cfg = LookbackConfig { k: 5, mode: OutlierMode::MinMax };
        let out = lookback_stream(&xs, cfg).unwrap();
        assert_eq!(out[0], -60.0); // window [−60]
        assert_eq!(out[1], -65.0); // window [−60, −70], removal skipped
        // window [−60,−70,−70]: extremes removed → {−70}.
        assert_eq!(out[2], -70.0);
        assert_eq!(out[4], lookback_reduce(&xs, cfg).unwrap());
    }

    #[test]
    fn lookback_cuts_variance_on_noisy_constants() {
        let cfg = LookbackConfig { k: 50, mode: OutlierMode::MinMax };
        for seed in 0..5 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, 4.0).unwrap();
            let xs: Vec<f64> = (0..60).map(|_| -75.0 + normal.sample(&mut rng)).collect();
            let out = lookback_stream(&xs, cfg).unwrap();
            let var = |vs: &[f64]| {
                let m = vs.iter().sum::<f64>() / vs.len() as f64;
                vs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vs.len() as f64
            };
            assert!(var(&out) <= var(&xs), "seed {seed}");
        }
    }

    #[test]
    fn hybrid_equals_composition() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let normal = Normal::new(-70.0, 4.0).unwrap();
        let xs: Vec<f64> = (0..80).map(|_| normal.sample(&mut rng)).collect();
        let cfg = LookbackConfig { k: 10, mode: OutlierMode::Iqr };
        let direct = hybrid_stream(&xs, 0.05, 4.0, cfg).unwrap();
        let composed = lookback_stream(&kalman_run(&xs, 0.05, 4.0).unwrap(), cfg).unwrap();
        assert_eq!(direct, composed);
    }

    #[test]
    fn hybrid_constant_is_identity() {
        let xs = vec![-64.5; 12];
        let cfg = LookbackConfig { k: 5, mode: OutlierMode::MinMax };
        assert_eq!(hybrid_stream(&xs, 0.05, 4.0, cfg).unwrap(), xs);
    }

    #[test]
    fn zero_k_rejected() {
        assert!(LookbackConfig::new(0, OutlierMode::MinMax).is_err());
    }

    proptest! {
        #[test]
        fn reduce_bounded_by_window(
            window in proptest::collection::vec(-110.0f64..-30.0, 1..30),
            iqr in proptest::bool::ANY,
        ) {
            let mode = if iqr { OutlierMode::Iqr } else { OutlierMode::MinMax };
            let cfg = LookbackConfig { k: window.len(), mode };
            let out = lookback_reduce(&window, cfg).unwrap();
            let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out >= lo && out <= hi);
        }

        #[test]
        fn reduce_is_permutation_invariant(
            mut window in proptest::collection::vec(-110.0f64..-30.0, 1..20),
            seed in 0u64..1000,
            iqr in proptest::bool::ANY,
        ) {
            use rand::seq::SliceRandom;
            let mode = if iqr { OutlierMode::Iqr } else { OutlierMode::MinMax };
            let cfg = LookbackConfig { k: window.len(), mode };
            let original = lookback_reduce(&window, cfg).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            window.shuffle(&mut rng);
            let shuffled = lookback_reduce(&window, cfg).unwrap();
            prop_assert_eq!(original.to_bits(), shuffled.to_bits());
        }

        #[test]
        fn streams_are_causal_and_length_preserving(
            xs in proptest::collection::vec(-110.0f64..-30.0, 1..50),
            cut in 1usize..50,
            k in 1usize..8,
        ) {
            let cut = cut.min(xs.len());
            let cfg = LookbackConfig { k, mode: OutlierMode::MinMax };
            let full_lb = lookback_stream(&xs, cfg).unwrap();
            let cut_lb = lookback_stream(&xs[..cut], cfg).unwrap();
            prop_assert_eq!(full_lb.len(), xs.len());
            prop_assert_eq!(&full_lb[..cut], &cut_lb[..]);

            let full_k = kalman_run(&xs, 0.05, 4.0).unwrap();
            let cut_k = kalman_run(&xs[..cut], 0.05, 4.0).unwrap();
            prop_assert_eq!(&full_k[..cut], &cut_k[..]);

            let full_h = hybrid_stream(&xs, 0.05, 4.0, cfg).unwrap();
            let cut_h = hybrid_stream(&xs[..cut], 0.05, 4.0, cfg).unwrap();
            prop_assert_eq!(&full_h[..cut], &cut_h[..]);
        }
    }
}
