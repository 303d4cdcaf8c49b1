//! Neural coordinate regression: datasets, the MLP, stratified k-fold
//! cross-validation, and the epochs × depth accuracy sweep.

pub mod data;
pub mod net;

pub use data::{
    dataset_from_trace, home_training_dataset, office_training_dataset, stratified_folds, Dataset,
    INPUTS_PER_SAMPLE,
};
pub use net::{
    gradient_check, train, train_traced, Layer, Mlp, MlpConfig, Standardizer,
    GRADIENT_CHECK_STEP, GRADIENT_KINK_MARGIN,
};

use rayon::prelude::*;

use crate::error::Result;
use crate::seed::derive_seed;

/// Cross-validation outcome; errors are mean Euclidean distances in cm.
#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub fold_errors_cm: Vec<f64>,
    pub mean_error_cm: f64,
    /// Population standard deviation across folds.
    pub std_error_cm: f64,
}

impl CvSummary {
    fn from_folds(fold_errors_cm: Vec<f64>) -> Self {
        let n = fold_errors_cm.len() as f64;
        let mean = fold_errors_cm.iter().sum::<f64>() / n;
        let var = fold_errors_cm.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        CvSummary { fold_errors_cm, mean_error_cm: mean, std_error_cm: var.sqrt() }
    }
}

/// Mean prediction error of a model over the dataset rows at `indices`, cm.
pub(crate) fn model_error_cm(model: &Mlp, dataset: &Dataset, indices: &[usize]) -> Result<f64> {
    let mut sum = 0.0;
    for &i in indices {
        let p = model.forward(&dataset.inputs[i])?;
        sum += p.distance_to(dataset.targets[i]);
    }
    Ok(sum / indices.len() as f64 * 100.0)
}

/// Stratified k-fold cross-validation. Each fold trains a fresh model on the
/// other folds with a fold-specific seed derived from `config.seed`, then
/// scores the held-out fold. `parallel` only changes scheduling, never the
/// numbers.
pub fn stratified_kfold_eval(
    dataset: &Dataset,
    config: &MlpConfig,
    folds: usize,
    parallel: bool,
) -> Result<CvSummary> {
    config.validate()?;
    dataset.validate()?;
    let assignment = stratified_folds(&dataset.labels, folds)?;

    let eval_fold = |f: usize| -> Result<f64> {
        let train_idx: Vec<usize> =
            (0..dataset.len()).filter(|i| assignment[*i] != f).collect();
        let test_idx: Vec<usize> = (0..dataset.len()).filter(|i| assignment[*i] == f).collect();
        let fold_config = MlpConfig { seed: derive_seed(config.seed, f as u64), ..*config };
        let model = net::train(&dataset.subset(&train_idx), &fold_config)?;
        model_error_cm(&model, dataset, &test_idx)
    };

    let fold_errors: Vec<f64> = if parallel {
        (0..folds).into_par_iter().map(eval_fold).collect::<Result<_>>()?
    } else {
        (0..folds).map(eval_fold).collect::<Result<_>>()?
    };
    Ok(CvSummary::from_folds(fold_errors))
}

/// Epoch counts of the accuracy sweep grid.
pub const SWEEP_EPOCHS: [usize; 5] = [100, 500, 1000, 2000, 3000];
/// Hidden-layer counts of the accuracy sweep grid.
pub const SWEEP_LAYERS: [usize; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub epochs: usize,
    pub hidden_layers: usize,
    pub summary: CvSummary,
}

/// Cross-validated accuracy over the full epochs × layers grid, row-major in
/// epochs then layers.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

/// Runs cross-validation for every (epochs, layers) combination. Cells get
/// distinct seeds derived from `base.seed` by grid index, and run across the
/// worker pool; the assembled report is identical regardless of scheduling.
pub fn sweep(dataset: &Dataset, base: &MlpConfig, folds: usize) -> Result<SweepReport> {
    base.validate()?;
    let grid: Vec<(usize, usize, usize)> = SWEEP_EPOCHS
        .iter()
        .enumerate()
        .flat_map(|(r, &e)| SWEEP_LAYERS.iter().enumerate().map(move |(c, &l)| (r * SWEEP_LAYERS.len() + c, e, l)))
        .collect();
    let cells: Vec<SweepCell> = grid
        .into_par_iter()
        .map(|(idx, epochs, hidden_layers)| {
            let config = MlpConfig {
                epochs,
                hidden_layers,
                seed: derive_seed(base.seed, idx as u64),
                ..*base
            };
            let summary = stratified_kfold_eval(dataset, &config, folds, false)?;
            Ok(SweepCell { epochs, hidden_layers, summary })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport { cells })
}

/// Renders the sweep as a markdown table: one row per epoch count, one
/// column per depth, cells `mean ± std` in cm.
pub fn render_sweep_markdown(report: &SweepReport) -> String {
    let mut out = String::from("| Epochs |");
    for l in SWEEP_LAYERS {
        out.push_str(&format!(" {l} hidden |"));
    }
    out.push('\n');
    out.push('|');
    out.push_str(&"---|".repeat(SWEEP_LAYERS.len() + 1));
    out.push('\n');
    for row in report.cells.chunks(SWEEP_LAYERS.len()) {
        out.push_str(&format!("| {} |", row[0].epochs));
        for cell in row {
            out.push_str(&format!(
                " {:.2} ± {:.2} |",
                cell.summary.mean_error_cm, cell.summary.std_error_cm
            ));
        }
        out.push('\n');
    }
    out
}

/// Renders the sweep as long-form CSV: one row per grid cell.
pub fn render_sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("epochs,hidden_layers,mean_error_cm,std_error_cm\n");
    for cell in &report.cells {
        out.push_str(&format!(
            "{},{},{:.2},{:.2}\n",
            cell.epochs, cell.hidden_layers, cell.summary.mean_error_cm, cell.summary.std_error_cm
        ));
    }
    out
}
