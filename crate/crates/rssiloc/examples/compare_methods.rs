//! End-to-end accuracy comparison: simulate the home scenario, localize with
//! each smoothing method, and print the per-interval error table.
//!
//! Run with: `cargo run --example compare_methods`

use rssiloc::eval::{evaluate, parse_methods, render_reports_markdown, EvalConfig, MethodDefaults};
use rssiloc::simulator::{builtin_home, simulate, NoiseModel};

fn main() -> rssiloc::Result<()> {
    let scenario = builtin_home();
    let noise = NoiseModel::new(4.0, 7);
    let trace = simulate(&scenario, &noise)?;
    println!(
        "{} samples from {:?} at sigma = {} dB (seed {})\n",
        trace.len(),
        scenario.name,
        noise.shadowing_sigma_db,
        noise.seed
    );

    let methods = parse_methods("raw,lookback,kalman,hybrid", &MethodDefaults::default())?;
    let config = EvalConfig::default();
    let reports = methods
        .iter()
        .map(|m| evaluate(&trace, &scenario, m, &config))
        .collect::<rssiloc::Result<Vec<_>>>()?;

    // Cells are mean Euclidean errors in cm; "Avg. error" weights every
    // scored tick equally, "(eq)" weights every interval equally.
    print!("{}", render_reports_markdown(&reports));
    Ok(())
}
