//! RSSI-based indoor localization over fixed Bluetooth beacons.
//!
//! The crate covers the full pipeline from raw received-signal strength to
//! position estimates and their evaluation:
//!
//! - [`pathloss`] — log-distance path-loss ranging and grid-search
//!   calibration of its `(A, n)` parameters from labeled walks
//! - [`trilateration`] — least-squares position solving from three or more
//!   (anchor, distance) circles, with degenerate-geometry detection
//! - [`filters`] — per-beacon stream smoothing: a scalar Kalman filter, the
//!   look-back-k outlier-trimming window, and their composition
//! - [`locnet`] — a small MLP that regresses (x, y) directly from RSSI
//!   triples, with stratified k-fold cross-validation and an
//!   epochs × depth accuracy sweep
//! - [`simulator`] — deterministic synthetic traces over two builtin floor
//!   plans (`home`, `office`) with wall attenuation and shadowing noise
//! - [`eval`] — causal tick-by-tick accuracy evaluation and report tables
//! - [`io`] — CSV/JSON readers and writers for traces, ground truth,
//!   calibration logs, datasets, scenarios, and trained models
//!
//! Every random process is seeded explicitly and independent work units get
//! their own derived streams ([`seed::derive_seed`]), so traces, trained
//! models, and reports are reproducible byte for byte.
//!
//! The `examples/` directory demonstrates each capability end to end:
//! `simulate_home_trace`, `calibrate_pathloss`, `trilaterate_position`,
//! `smooth_rssi_stream`, `compare_methods`, `train_locnet`, and
//! `sweep_epochs_layers`.

pub mod error;
pub mod eval;
pub mod filters;
pub mod io;
pub mod locnet;
pub mod pathloss;
pub mod seed;
pub mod simulator;
pub mod trilateration;
pub mod types;

pub use error::{Error, Result};
pub use types::Position;
