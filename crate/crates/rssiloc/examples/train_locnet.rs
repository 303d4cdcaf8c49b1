//! Train the MLP coordinate regressor on the synthetic home dataset, report
//! stratified cross-validation accuracy, and predict from fresh readings.
//!
//! Run with: `cargo run --release --example train_locnet`

use rssiloc::locnet::{home_training_dataset, stratified_kfold_eval, train, MlpConfig};

fn main() -> rssiloc::Result<()> {
    let dataset = home_training_dataset(0);
    println!(
        "home dataset: {} rows, labels {:?}",
        dataset.len(),
        {
            let mut ls = dataset.labels.clone();
            ls.dedup();
            ls
        }
    );

    // 5-fold CV at a reduced epoch budget keeps this example quick; the
    // defaults (3 x 32, 1000 epochs) are what the full evaluation uses.
    let config = MlpConfig { epochs: 500, seed: 1, ..MlpConfig::default() };
    let cv = stratified_kfold_eval(&dataset, &config, 5, true)?;
    for (f, e) in cv.fold_errors_cm.iter().enumerate() {
        println!("  fold {f}: {e:.2} cm");
    }
    println!("cv mean = {:.2} +/- {:.2} cm\n", cv.mean_error_cm, cv.std_error_cm);

    // Final model on all rows, then locate a few held-out readings.
    let model = train(&dataset, &config)?;
    for (input, label) in [
        ([-88.5, -100.2, -101.0], "near the bedroom spot"),
        ([-101.3, -86.5, -99.8], "near the study spot"),
        ([-101.0, -96.3, -87.6], "near the hallway spot"),
    ] {
        let p = model.forward(&input)?;
        println!("rssi {input:>7.1?} -> ({:.2}, {:.2}) m  ({label})", p.x, p.y);
    }
    Ok(())
}
