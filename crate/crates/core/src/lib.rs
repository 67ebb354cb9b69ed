//! Neural one-step forecasting of daily temperature and humidity.
//!
//! The crate is organised bottom-up:
//!
//! - [`math`]: dense matrices, activations, a reproducible RNG and an SVD
//!   least-squares solver.
//! - [`dataset`]: CSV ingestion, train/test and seasonal partitioning,
//!   min-max scaling and lag-window samples for testings 1-4.
//! - [`models`]: ANN, DNN, ELM, LSTM and peephole-LSTM forward passes.
//! - [`training`]: exact backpropagation (through time for the recurrent
//!   models), per-sample SGD and the closed-form ELM fit.
//! - [`metrics`]: RMSE, MAPE, MAE and Theil's U on original units.
//! - [`harness`]: experiment grids, result tables and report files.

pub mod dataset;
pub mod harness;
pub mod math;
pub mod metrics;
pub mod models;
pub mod training;

pub use dataset::{NormalizationParams, RawSeries, SampleSet, Season, TargetKind, WindowSpec};
pub use harness::{ExperimentSpec, GridConfig, ResultRow, RunManifest};
pub use math::{Matrix, SeededRng};
pub use metrics::MetricReport;
pub use models::{ModelKind, ModelParams};
pub use training::TrainConfig;
