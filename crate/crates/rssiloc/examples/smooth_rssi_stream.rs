//! Smooth a noisy RSSI stream three ways — Kalman, look-back window, and
//! their composition — and compare residual spread around the true level.
//!
//! Run with: `cargo run --example smooth_rssi_stream`

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rssiloc::filters::{
    hybrid_stream, kalman_run, lookback_stream, LookbackConfig, OutlierMode,
    DEFAULT_MEASUREMENT_NOISE, DEFAULT_PROCESS_NOISE,
};

fn spread(values: &[f64], truth: f64) -> f64 {
    (values.iter().map(|v| (v - truth) * (v - truth)).sum::<f64>() / values.len() as f64).sqrt()
}

fn main() -> rssiloc::Result<()> {
    // A stationary −75 dBm beacon observed through 4 dB shadowing, with a few
    // heavy spikes like a person walking through the Fresnel zone.
    let truth = -75.0;
    let mut rng = ChaCha12Rng::seed_from_u64(9);
    let shadowing = Normal::new(0.0, 4.0).unwrap();
    let mut stream: Vec<f64> = (0..300).map(|_| truth + shadowing.sample(&mut rng)).collect();
    for i in (25..300).step_by(40) {
        stream[i] -= 18.0;
    }

    let (q, r) = (DEFAULT_PROCESS_NOISE, DEFAULT_MEASUREMENT_NOISE);
    let cfg = LookbackConfig::new(50, OutlierMode::MinMax)?;
    let kalman = kalman_run(&stream, q, r)?;
    let lookback = lookback_stream(&stream, cfg)?;
    let hybrid = hybrid_stream(&stream, q, r, cfg)?;

    // Skip the first 50 samples so every method is past its warm-up.
    let tail = 50..stream.len();
    println!("RMS deviation from the true level (steady state, {} samples):", stream.len() - 50);
    let row = |name: &str, values: &[f64]| println!("  {name:<24} {:>6.3} dB", spread(values, truth));
    row("raw:", &stream[tail.clone()]);
    row(&format!("kalman (q={q}, r={r}):"), &kalman[tail.clone()]);
    row("look-back-50:", &lookback[tail.clone()]);
    row("kalman + look-back-50:", &hybrid[tail]);

    // The same window reduced under the IQR rule instead of min/max removal.
    let iqr = LookbackConfig::new(50, OutlierMode::Iqr)?;
    let lookback_iqr = lookback_stream(&stream, iqr)?;
    row("look-back-50 (IQR):", &lookback_iqr[50..]);
    Ok(())
}
