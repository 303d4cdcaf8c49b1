//! Command-line front end for the localization library.
//!
//! Subcommands: `simulate`, `calibrate`, `evaluate`, `train`, `predict`,
//! `sweep`. A JSON config file (`--config`) can supply any numeric knob;
//! explicit flags win over the config file, which wins over built-in
//! defaults.
//!
//! Exit codes: 0 success, 1 runtime failure (missing files, bad data,
//! degenerate geometry), 2 usage error (unknown flags, conflicting or
//! missing arguments).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use rssiloc::error::Error;
use rssiloc::eval::{self, EvalConfig, MethodDefaults};
use rssiloc::filters::{self, OutlierMode};
use rssiloc::locnet::{self, Dataset, MlpConfig};
use rssiloc::pathloss;
use rssiloc::simulator::{self, NoiseModel};
use rssiloc::types::Scenario;
use rssiloc::{io, trilateration};

const DEFAULT_SIGMA_DB: f64 = 4.0;
const DEFAULT_FOLDS: usize = 10;

#[derive(Parser)]
#[command(name = "rssiloc", version, about = "RSSI indoor localization toolkit")]
struct Cli {
    /// JSON config file supplying defaults for omitted flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic RSSI trace for a scenario.
    Simulate(SimulateArgs),
    /// Fit path-loss parameters (A, n) from a labeled calibration log.
    Calibrate(CalibrateArgs),
    /// Score localization methods against ground truth.
    Evaluate(EvaluateArgs),
    /// Train the MLP coordinate regressor.
    Train(TrainArgs),
    /// Predict a position from one RSSI triple with a trained model.
    Predict(PredictArgs),
    /// Cross-validated accuracy over the epochs x layers grid.
    Sweep(SweepArgs),
}

/// Floor-plan selection shared by trace-oriented subcommands.
#[derive(Args)]
struct ScenarioArgs {
    /// Builtin floor plan: home or office.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE", conflicts_with = "builtin")]
    scenario: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<Scenario, AppError> {
        match (&self.builtin, &self.scenario) {
            (Some(name), None) => simulator::builtin(name).ok_or_else(|| {
                AppError::Usage(format!("unknown builtin scenario {name:?} (expected home or office)"))
            }),
            (None, Some(path)) => Ok(io::read_scenario_json(path)?),
            (None, None) => Err(AppError::Usage("one of --builtin or --scenario is required".into())),
            (Some(_), Some(_)) => unreachable!("flags conflict"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutlierArg {
    Minmax,
    Iqr,
}

impl From<OutlierArg> for OutlierMode {
    fn from(a: OutlierArg) -> Self {
        match a {
            OutlierArg::Minmax => OutlierMode::MinMax,
            OutlierArg::Iqr => OutlierMode::Iqr,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Shadowing noise std-dev in dB.
    #[arg(long)]
    sigma: Option<f64>,
    /// Master seed; per-(interval, beacon) streams are derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Nominal per-beacon sampling period.
    #[arg(long)]
    period_ms: Option<u64>,
    /// Uniform timestamp jitter half-width.
    #[arg(long)]
    jitter_ms: Option<u64>,
    /// Output trace CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write the scenario's ground-truth intervals as CSV.
    #[arg(long, value_name = "FILE")]
    out_truth: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Calibration log CSV (grouped rows: timestamp, beacon, rssi, position).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Write the fitted model as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Trace CSV to evaluate; omitted = simulate one from the scenario.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Ground-truth CSV overriding the scenario's intervals.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    /// Shadowing noise for the simulated trace.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    period_ms: Option<u64>,
    #[arg(long)]
    jitter_ms: Option<u64>,
    /// Comma-separated methods: raw, lookback[:K], kalman, hybrid[:K].
    #[arg(long)]
    method: Option<String>,
    /// Default look-back window size for methods without :K.
    #[arg(long)]
    k: Option<usize>,
    /// Outlier-removal stage of the look-back window.
    #[arg(long, value_enum)]
    outlier: Option<OutlierArg>,
    /// Kalman process noise.
    #[arg(long)]
    q: Option<f64>,
    /// Kalman measurement noise.
    #[arg(long)]
    r: Option<f64>,
    /// Spacing of evaluation ticks.
    #[arg(long)]
    eval_period_ms: Option<u64>,
    /// Maximum sample age at a tick before the beacon counts as stale.
    #[arg(long)]
    staleness_ms: Option<u64>,
    /// Report base path; writes BASE.csv and BASE.md.
    #[arg(long, value_name = "BASE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset CSV.
    #[arg(long, value_name = "FILE", conflicts_with = "builtin")]
    dataset: Option<PathBuf>,
    /// Builtin dataset: home or office.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
    /// Seed for generating the builtin dataset.
    #[arg(long)]
    data_seed: Option<u64>,
    /// Hidden layers (1-5).
    #[arg(long)]
    layers: Option<usize>,
    /// Neurons per hidden layer.
    #[arg(long)]
    neurons: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Training seed (initialization and shuffling; fold seeds derive from it).
    #[arg(long)]
    seed: Option<u64>,
    /// Run stratified k-fold cross-validation and report fold errors.
    #[arg(long)]
    folds: Option<usize>,
    /// Write the model trained on the full dataset as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the resolved dataset as CSV (useful with --builtin).
    #[arg(long, value_name = "FILE")]
    out_dataset: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model JSON.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Three comma-separated RSSI values in dBm, e.g. "-70,-68,-75".
    #[arg(long, value_name = "R1,R2,R3", allow_hyphen_values = true)]
    rssi: String,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_name = "FILE", conflicts_with = "builtin")]
    dataset: Option<PathBuf>,
    /// Builtin dataset: home or office.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    neurons: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Base seed; each grid cell derives its own seed from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Report base path; writes BASE.csv and BASE.md.
    #[arg(long, value_name = "BASE")]
    out: PathBuf,
}

/// Optional knobs a JSON config file may provide; flags override these.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    sigma: Option<f64>,
    seed: Option<u64>,
    data_seed: Option<u64>,
    period_ms: Option<u64>,
    jitter_ms: Option<u64>,
    method: Option<String>,
    k: Option<usize>,
    outlier: Option<String>,
    q: Option<f64>,
    r: Option<f64>,
    eval_period_ms: Option<u64>,
    staleness_ms: Option<u64>,
    layers: Option<usize>,
    neurons: Option<usize>,
    epochs: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    folds: Option<usize>,
}

impl FileConfig {
    fn outlier_mode(&self) -> Result<Option<OutlierMode>, AppError> {
        match self.outlier.as_deref() {
            None => Ok(None),
            Some("minmax") => Ok(Some(OutlierMode::MinMax)),
            Some("iqr") => Ok(Some(OutlierMode::Iqr)),
            Some(other) => Err(AppError::Runtime(Error::InvalidInput(format!(
                "config outlier must be \"minmax\" or \"iqr\", got {other:?}"
            )))),
        }
    }
}

enum AppError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        AppError::Runtime(e)
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(AppError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, AppError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(Error::from)?;
            serde_json::from_str(&text).map_err(|e| AppError::Runtime(e.into()))
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let config = load_config(&cli.config)?;
    match cli.command {
        Command::Simulate(args) => run_simulate(args, &config),
        Command::Calibrate(args) => run_calibrate(args),
        Command::Evaluate(args) => run_evaluate(args, &config),
        Command::Train(args) => run_train(args, &config),
        Command::Predict(args) => run_predict(args),
        Command::Sweep(args) => run_sweep(args, &config),
    }
}

fn noise_model(
    sigma: Option<f64>,
    seed: Option<u64>,
    period_ms: Option<u64>,
    jitter_ms: Option<u64>,
    file: &FileConfig,
) -> NoiseModel {
    NoiseModel {
        shadowing_sigma_db: sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA_DB),
        seed: seed.or(file.seed).unwrap_or(0),
        sample_period_ms: period_ms
            .or(file.period_ms)
            .unwrap_or(simulator::DEFAULT_SAMPLE_PERIOD_MS),
        jitter_ms: jitter_ms.or(file.jitter_ms).unwrap_or(simulator::DEFAULT_JITTER_MS),
    }
}

fn run_simulate(args: SimulateArgs, file: &FileConfig) -> Result<(), AppError> {
    let scenario = args.scenario.resolve()?;
    let noise = noise_model(args.sigma, args.seed, args.period_ms, args.jitter_ms, file);
    let trace = simulator::simulate(&scenario, &noise)?;
    io::write_trace_csv(&args.out, &trace)?;
    println!("wrote {} samples to {}", trace.len(), args.out.display());
    if let Some(truth_path) = &args.out_truth {
        io::write_truth_csv(truth_path, &scenario.ground_truth)?;
        println!("wrote {} intervals to {}", scenario.ground_truth.len(), truth_path.display());
    }
    Ok(())
}

fn run_calibrate(args: CalibrateArgs) -> Result<(), AppError> {
    let scenario = args.scenario.resolve()?;
    let (points, beacon_order) = io::read_calibration_csv(&args.input)?;
    let anchors: Vec<_> = beacon_order
        .iter()
        .map(|id| {
            scenario
                .beacons
                .iter()
                .find(|b| b.beacon_id == *id)
                .map(|b| b.position)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("calibration beacon {id:?} not in scenario"))
                })
        })
        .collect::<Result<_, _>>()?;

    let model =
        pathloss::calibrate(&points, &anchors, &pathloss::default_n_grid(), &pathloss::default_a_grid())?;

    // Mean localization error of the fitted model over the calibration set.
    let mut total = 0.0;
    for p in &points {
        let circles: Vec<_> = anchors
            .iter()
            .zip(&p.rssi_dbm)
            .map(|(pos, &rssi)| model.rssi_to_distance(rssi).map(|d| (*pos, d)))
            .collect::<Result<_, _>>()?;
        let est = trilateration::trilaterate(&circles)?;
        total += eval::euclidean(est.position, p.position);
    }
    let mean_cm = total / points.len() as f64 * 100.0;

    println!("A = {} dBm", model.a_ref);
    println!("n = {:.2}", model.path_loss_exp);
    println!("mean error = {mean_cm:.2} cm over {} points", points.len());
    if let Some(out) = &args.out {
        let json = serde_json::json!({ "a_ref": model.a_ref, "path_loss_exp": model.path_loss_exp });
        std::fs::write(out, format!("{:#}\n", json)).map_err(Error::from)?;
        println!("wrote model to {}", out.display());
    }
    Ok(())
}

fn run_evaluate(args: EvaluateArgs, file: &FileConfig) -> Result<(), AppError> {
    let mut scenario = args.scenario.resolve()?;
    if let Some(truth_path) = &args.truth {
        scenario.ground_truth = io::read_truth_csv(truth_path)?;
        scenario.validate()?;
    }
    let trace = match &args.trace {
        Some(path) => io::read_trace_csv(path)?,
        None => {
            let noise = noise_model(args.sigma, args.seed, args.period_ms, args.jitter_ms, file);
            simulator::simulate(&scenario, &noise)?
        }
    };

    let defaults = MethodDefaults {
        k: args.k.or(file.k).unwrap_or(filters::DEFAULT_LOOKBACK_K),
        mode: match args.outlier {
            Some(a) => a.into(),
            None => file.outlier_mode()?.unwrap_or(OutlierMode::MinMax),
        },
        q: args.q.or(file.q).unwrap_or(filters::DEFAULT_PROCESS_NOISE),
        r: args.r.or(file.r).unwrap_or(filters::DEFAULT_MEASUREMENT_NOISE),
    };
    let method_list = args
        .method
        .or_else(|| file.method.clone())
        .unwrap_or_else(|| "raw,lookback,kalman,hybrid".to_string());
    let methods = eval::parse_methods(&method_list, &defaults)?;

    let eval_config = EvalConfig {
        eval_period_ms: args
            .eval_period_ms
            .or(file.eval_period_ms)
            .unwrap_or(eval::DEFAULT_EVAL_PERIOD_MS),
        max_staleness_ms: args
            .staleness_ms
            .or(file.staleness_ms)
            .unwrap_or(eval::DEFAULT_MAX_STALENESS_MS),
    };

    let reports = methods
        .iter()
        .map(|m| eval::evaluate(&trace, &scenario, m, &eval_config))
        .collect::<Result<Vec<_>, _>>()?;

    print!("{}", eval::render_reports_markdown(&reports));
    if let Some(base) = &args.out {
        write_report_pair(base, &eval::render_reports_csv(&reports), &eval::render_reports_markdown(&reports))?;
        eprintln!("wrote {} and {}", base.with_extension("csv").display(), base.with_extension("md").display());
    }
    Ok(())
}

fn write_report_pair(base: &Path, csv: &str, md: &str) -> Result<(), AppError> {
    std::fs::write(base.with_extension("csv"), csv).map_err(Error::from)?;
    std::fs::write(base.with_extension("md"), md).map_err(Error::from)?;
    Ok(())
}

fn resolve_dataset(
    dataset: &Option<PathBuf>,
    builtin: &Option<String>,
    data_seed: u64,
) -> Result<Dataset, AppError> {
    match (dataset, builtin) {
        (Some(path), None) => Ok(io::read_dataset_csv(path)?),
        (None, Some(name)) => match name.as_str() {
            "home" => Ok(locnet::home_training_dataset(data_seed)),
            "office" => Ok(locnet::office_training_dataset(data_seed)),
            _ => Err(AppError::Usage(format!(
                "unknown builtin dataset {name:?} (expected home or office)"
            ))),
        },
        (None, None) => Err(AppError::Usage("one of --dataset or --builtin is required".into())),
        (Some(_), Some(_)) => unreachable!("flags conflict"),
    }
}

fn mlp_config(
    layers: Option<usize>,
    neurons: Option<usize>,
    epochs: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    seed: Option<u64>,
    file: &FileConfig,
) -> MlpConfig {
    let d = MlpConfig::default();
    MlpConfig {
        hidden_layers: layers.or(file.layers).unwrap_or(d.hidden_layers),
        neurons_per_layer: neurons.or(file.neurons).unwrap_or(d.neurons_per_layer),
        epochs: epochs.or(file.epochs).unwrap_or(d.epochs),
        batch_size: batch.or(file.batch).unwrap_or(d.batch_size),
        learning_rate: lr.or(file.lr).unwrap_or(d.learning_rate),
        seed: seed.or(file.seed).unwrap_or(d.seed),
        ..d
    }
}

fn run_train(args: TrainArgs, file: &FileConfig) -> Result<(), AppError> {
    let data_seed = args.data_seed.or(file.data_seed).unwrap_or(0);
    let dataset = resolve_dataset(&args.dataset, &args.builtin, data_seed)?;
    if let Some(path) = &args.out_dataset {
        io::write_dataset_csv(path, &dataset)?;
        println!("wrote {} samples to {}", dataset.len(), path.display());
    }
    let config = mlp_config(args.layers, args.neurons, args.epochs, args.batch, args.lr, args.seed, file);

    if let Some(folds) = args.folds.or(file.folds) {
        let cv = locnet::stratified_kfold_eval(&dataset, &config, folds, true)?;
        for (f, err) in cv.fold_errors_cm.iter().enumerate() {
            println!("fold {f}: {err:.2} cm");
        }
        println!("cv mean = {:.2} ± {:.2} cm over {folds} folds", cv.mean_error_cm, cv.std_error_cm);
    }

    let (model, losses) = locnet::train_traced(&dataset, &config)?;
    println!(
        "trained {} hidden layer(s) x {} neurons for {} epochs; final loss {:.6} m^2",
        config.hidden_layers,
        config.neurons_per_layer,
        config.epochs,
        losses.last().copied().unwrap_or(f64::NAN)
    );
    if let Some(out) = &args.out {
        io::write_model_json(out, &model)?;
        println!("wrote model to {}", out.display());
    }
    Ok(())
}

fn parse_rssi(s: &str) -> Result<[f64; 3], AppError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(AppError::Usage(format!(
            "--rssi needs three comma-separated values, got {}",
            parts.len()
        )));
    }
    let mut out = [0.0; 3];
    for (i, part) in parts.iter().enumerate() {
        out[i] = part
            .parse()
            .map_err(|_| AppError::Usage(format!("invalid rssi value {part:?}")))?;
    }
    Ok(out)
}

fn run_predict(args: PredictArgs) -> Result<(), AppError> {
    let rssi = parse_rssi(&args.rssi)?;
    let model = io::read_model_json(&args.model)?;
    let p = model.forward(&rssi)?;
    println!("x_m,y_m");
    println!("{:.4},{:.4}", p.x, p.y);
    Ok(())
}

fn run_sweep(args: SweepArgs, file: &FileConfig) -> Result<(), AppError> {
    let data_seed = args.data_seed.or(file.data_seed).unwrap_or(0);
    let dataset = resolve_dataset(&args.dataset, &args.builtin, data_seed)?;
    let base_config = mlp_config(None, args.neurons, None, args.batch, args.lr, args.seed, file);
    let folds = args.folds.or(file.folds).unwrap_or(DEFAULT_FOLDS);
    let report = locnet::sweep(&dataset, &base_config, folds)?;
    let md = locnet::render_sweep_markdown(&report);
    print!("{md}");
    write_report_pair(&args.out, &locnet::render_sweep_csv(&report), &md)?;
    eprintln!(
        "wrote {} and {}",
        args.out.with_extension("csv").display(),
        args.out.with_extension("md").display()
    );
    Ok(())
}
