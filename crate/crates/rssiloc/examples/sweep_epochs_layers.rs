//! Cross-validated accuracy over the full epochs x hidden-layers grid, on a
//! thinned dataset so the 25 cells finish in about a minute.
//!
//! Run with: `cargo run --release --example sweep_epochs_layers`

use rssiloc::locnet::{home_training_dataset, render_sweep_markdown, sweep, MlpConfig};

fn main() -> rssiloc::Result<()> {
    // Every 4th row (150 of 600) keeps all three labels balanced; 3 folds
    // instead of 10 cut per-cell cost further.
    let full = home_training_dataset(0);
    let indices: Vec<usize> = (0..full.len()).step_by(4).collect();
    let dataset = full.subset(&indices);
    println!("sweeping 25 (epochs, layers) cells on {} rows, 3-fold CV...\n", dataset.len());

    let base = MlpConfig { seed: 3, ..MlpConfig::default() };
    let report = sweep(&dataset, &base, 3)?;

    // Cells are cv mean +/- std in cm. Accuracy saturates with depth well
    // before the bottom of the table; the epoch trend dominates.
    print!("{}", render_sweep_markdown(&report));
    Ok(())
}
