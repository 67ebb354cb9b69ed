//! Experiment grids over (city × testing × season × model × lr × epochs).
//!
//! Every cell is independent: it re-derives its samples from the shared,
//! read-only series and draws its own seed from a hash of its spec, so the
//! set of results does not depend on scheduling or on which other cells are
//! in the grid.

mod config;
mod report;

use std::cmp::Ordering;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{GridConfig, GridDimensions, HiddenSizes, TrainingScope};
pub use report::{
    best_per_cell, emit_report, read_grid_csv, read_manifest, write_baseline_csv, write_fig_csv, write_grid_csv,
    write_manifest, write_summary_csv, BestEntry, RunManifest, BASELINE_CSV, GRID_CSV, MANIFEST_FILE,
};

use crate::dataset::{
    build_windows, chronological_split, seasonal_runs, DataError, NormalizationParams, RawSeries, SampleSet, Season,
    WindowSpec,
};
use crate::metrics::{evaluate, persistence_report, MetricError, MetricReport};
use crate::models::{ModelKind, ModelParams};
use crate::training::{elm_ensemble_fit, ensemble_seeds, train_iterative, TrainConfig, TrainError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed report file {path}: {message}")]
    Report { path: String, message: String },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        HarnessError::Io { path: path.display().to_string(), message: err.to_string() }
    }
}

/// Why a single cell produced no result.
#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("only {found} {partition} samples for {season} (need at least {needed})")]
    TooFewSamples {
        partition: &'static str,
        season: Season,
        found: usize,
        needed: usize,
    },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Data,
    InsufficientData,
    Divergence,
    Training,
    Metric,
}

impl ExperimentError {
    pub fn kind(&self) -> FailureKind {
        match self {
            ExperimentError::Data(_) => FailureKind::Data,
            ExperimentError::TooFewSamples { .. } => FailureKind::InsufficientData,
            ExperimentError::Train(TrainError::Diverged { .. }) => FailureKind::Divergence,
            ExperimentError::Train(_) => FailureKind::Training,
            ExperimentError::Metric(_) => FailureKind::Metric,
        }
    }
}

/// One grid cell. `learning_rate` and `epochs` are absent for ELM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub city: String,
    pub season: Season,
    pub testing: WindowSpec,
    pub model: ModelKind,
    pub learning_rate: Option<f64>,
    pub epochs: Option<u32>,
    pub base_seed: u64,
}

impl Eq for ExperimentSpec {}

impl Ord for ExperimentSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        let lr = |s: &Self| s.learning_rate.unwrap_or(f64::NEG_INFINITY);
        self.city
            .cmp(&other.city)
            .then(self.testing.cmp(&other.testing))
            .then(self.season.cmp(&other.season))
            .then(self.model.cmp(&other.model))
            .then(lr(self).total_cmp(&lr(other)))
            .then(self.epochs.cmp(&other.epochs))
            .then(self.base_seed.cmp(&other.base_seed))
    }
}

impl PartialOrd for ExperimentSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl ExperimentSpec {
    /// Seed for this cell: the first 8 bytes of SHA-256 over a canonical
    /// rendering of every field. Learning rates enter by bit pattern.
    pub fn cell_seed(&self) -> u64 {
        let key = format!(
            "{}|{}|{}|{}|{}|{}|{}",
            self.city,
            self.season,
            self.testing.testing_id(),
            self.model,
            self.learning_rate.map_or("-".to_string(), |lr| format!("{:016x}", lr.to_bits())),
            self.epochs.map_or("-".to_string(), |e| e.to_string()),
            self.base_seed
        );
        let digest = Sha256::digest(key.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    fn validate(&self) -> Result<(), TrainError> {
        let iterative = self.model.is_iterative();
        if iterative != self.learning_rate.is_some() || iterative != self.epochs.is_some() {
            return Err(TrainError::Config(format!(
                "{} needs learning rate and epochs {}",
                self.model,
                if iterative { "set" } else { "unset" }
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub spec: ExperimentSpec,
    pub metrics: MetricReport,
    /// Mean squared error on the normalized training targets after training.
    pub final_train_loss: f64,
    /// Wall-clock training time; excluded from the grid CSV.
    pub train_seconds: f64,
}

/// Cell that produced no result, kept so cell counts are conserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub spec: ExperimentSpec,
    pub kind: FailureKind,
    pub message: String,
}

/// Persistence forecast scores for one (city, testing, season) slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub city: String,
    pub testing: WindowSpec,
    pub season: Season,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridResult {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<FailedCell>,
    pub baselines: Vec<BaselineRow>,
}

/// Normalized train and test windows for one (season, testing) slice.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: SampleSet,
    pub test: SampleSet,
    pub norm: NormalizationParams,
}

/// Split, seasonal runs, normalization fitted on the training side, windows.
pub fn prepare_samples(
    data: &RawSeries,
    season: Season,
    testing: WindowSpec,
    config: &GridConfig,
) -> Result<PreparedData, ExperimentError> {
    let (train, test) = chronological_split(data, &config.split)?;
    let train_segments = match config.training_scope {
        TrainingScope::Season => seasonal_runs(&train, season),
        TrainingScope::AllSeasons => contiguous_runs(&train),
    };
    let test_segments = seasonal_runs(&test, season);
    if train_segments.is_empty() {
        return Err(ExperimentError::TooFewSamples { partition: "train", season, found: 0, needed: testing.lag_count() + 2 });
    }
    let norm = NormalizationParams::fit(&train_segments)?;
    let train_set = build_windows(&train_segments, testing, &norm);
    let test_set = build_windows(&test_segments, testing, &norm);
    let needed = testing.lag_count() + 2;
    if train_set.len() < needed {
        return Err(ExperimentError::TooFewSamples { partition: "train", season, found: train_set.len(), needed });
    }
    if test_set.is_empty() {
        return Err(ExperimentError::TooFewSamples { partition: "test", season, found: 0, needed: 1 });
    }
    Ok(PreparedData { train: train_set, test: test_set, norm })
}

fn contiguous_runs(series: &RawSeries) -> Vec<RawSeries> {
    let mut runs = Vec::new();
    let mut current = Vec::new();
    for rec in series.records() {
        if let Some(prev) = current.last() {
            let prev: &crate::dataset::DailyRecord = prev;
            if (rec.date - prev.date).num_days() != 1 {
                runs.push(std::mem::take(&mut current));
            }
        }
        current.push(*rec);
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs.into_iter()
        .map(|r| RawSeries::new(series.city(), r).expect("sub-run of a valid series"))
        .collect()
}

/// A trained cell: the result row plus the model that produced it.
#[derive(Debug, Clone)]
pub struct TrainedExperiment {
    pub row: ResultRow,
    pub model: ModelParams,
    pub norm: NormalizationParams,
}

pub fn run_experiment(spec: &ExperimentSpec, data: &RawSeries, config: &GridConfig) -> Result<ResultRow, ExperimentError> {
    train_experiment(spec, data, config).map(|t| t.row)
}

/// Runs one cell and keeps the trained model.
pub fn train_experiment(spec: &ExperimentSpec, data: &RawSeries, config: &GridConfig) -> Result<TrainedExperiment, ExperimentError> {
    spec.validate()?;
    let prepared = prepare_samples(data, spec.season, spec.testing, config)?;
    let seed = spec.cell_seed();
    let started = Instant::now();
    let (model, final_train_loss) = match (spec.learning_rate, spec.epochs) {
        (Some(lr), Some(epochs)) => {
            let train_cfg = TrainConfig { learning_rate: lr, epochs, seed, epoch_scale: config.epoch_scale, lstm_hidden: config.hidden.lstm };
            let (model, history) = train_iterative(spec.model, &prepared.train, &train_cfg)?;
            let loss = training_mse(&model, &prepared.train)?;
            debug_assert!(history.final_loss().is_some());
            (model, loss)
        }
        _ => {
            let ensemble = elm_ensemble_fit(&prepared.train, config.hidden.elm, &ensemble_seeds(seed))?;
            let model = ModelParams::Elm(ensemble);
            let loss = training_mse(&model, &prepared.train)?;
            (model, loss)
        }
    };
    let train_seconds = started.elapsed().as_secs_f64();
    let metrics = evaluate(&model, &prepared.test, &config.offsets)?;
    let row = ResultRow { spec: spec.clone(), metrics, final_train_loss, train_seconds };
    Ok(TrainedExperiment { row, model, norm: prepared.norm })
}

fn training_mse(model: &ModelParams, samples: &SampleSet) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (x, y) in samples.inputs.iter().zip(&samples.targets) {
        let e = model.predict(x, samples.spec)? - y;
        total += e * e;
    }
    let loss = total / samples.len() as f64;
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(TrainError::Diverged { epoch: 0, loss })
    }
}

/// Persistence forecast ("tomorrow equals today") on the same test windows a
/// model of this slice is scored on.
pub fn persistence_baseline(
    data: &RawSeries,
    season: Season,
    testing: WindowSpec,
    config: &GridConfig,
) -> Result<MetricReport, ExperimentError> {
    let prepared = prepare_samples(data, season, testing, config)?;
    Ok(persistence_report(&prepared.test, &config.offsets)?)
}

/// Every cell of the configured grid for the given cities, in sorted order.
pub fn grid_specs(cities: &[&str], config: &GridConfig) -> Vec<ExperimentSpec> {
    let g = &config.grid;
    let mut specs = Vec::new();
    for city in cities {
        for &testing in &g.testings {
            for &season in &g.seasons {
                for &model in &g.models {
                    let base = ExperimentSpec {
                        city: city.to_string(),
                        season,
                        testing,
                        model,
                        learning_rate: None,
                        epochs: None,
                        base_seed: config.base_seed,
                    };
                    if !model.is_iterative() {
                        specs.push(base);
                        continue;
                    }
                    for &lr in g.learning_rates(model) {
                        for &epochs in &g.epochs {
                            specs.push(ExperimentSpec { learning_rate: Some(lr), epochs: Some(epochs), ..base.clone() });
                        }
                    }
                }
            }
        }
    }
    specs.sort();
    specs.dedup();
    specs
}

/// Runs every grid cell on up to `jobs` threads. Results are merged in spec
/// order, so the output is independent of `jobs`.
pub fn run_grid(datasets: &[RawSeries], config: &GridConfig, jobs: usize) -> Result<GridResult, HarnessError> {
    use rayon::prelude::*;

    config.validate()?;
    let cities: Vec<&str> = datasets.iter().map(RawSeries::city).collect();
    let mut unique = cities.clone();
    unique.sort();
    unique.dedup();
    if unique.len() != cities.len() {
        return Err(HarnessError::Config("city names must be unique".into()));
    }
    let specs = grid_specs(&cities, config);
    let data_for = |city: &str| datasets.iter().find(|d| d.city() == city).expect("spec built from datasets");

    let mut slices: Vec<(String, WindowSpec, Season)> = specs.iter().map(|s| (s.city.clone(), s.testing, s.season)).collect();
    slices.dedup();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    let (outcomes, baselines): (Vec<_>, Vec<_>) = pool.install(|| {
        let outcomes: Vec<Result<ResultRow, FailedCell>> = specs
            .par_iter()
            .map(|spec| {
                run_experiment(spec, data_for(&spec.city), config).map_err(|e| FailedCell {
                    spec: spec.clone(),
                    kind: e.kind(),
                    message: e.to_string(),
                })
            })
            .collect();
        let baselines: Vec<Option<BaselineRow>> = slices
            .par_iter()
            .map(|(city, testing, season)| {
                persistence_baseline(data_for(city), *season, *testing, config).ok().map(|metrics| BaselineRow {
                    city: city.clone(),
                    testing: *testing,
                    season: *season,
                    metrics,
                })
            })
            .collect();
        (outcomes, baselines)
    });

    let mut result = GridResult { baselines: baselines.into_iter().flatten().collect(), ..GridResult::default() };
    for outcome in outcomes {
        match outcome {
            Ok(row) => result.rows.push(row),
            Err(failed) => result.failures.push(failed),
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticProfile};

    fn spec(model: ModelKind, lr: Option<f64>, epochs: Option<u32>) -> ExperimentSpec {
        ExperimentSpec {
            city: "c".into(),
            season: Season::Summer,
            testing: WindowSpec::new(3).unwrap(),
            model,
            learning_rate: lr,
            epochs,
            base_seed: 1,
        }
    }

    #[test]
    fn default_grid_has_61_cells_per_slice() {
        let mut config = GridConfig::default();
        config.grid.testings = vec![WindowSpec::new(3).unwrap()];
        config.grid.seasons = vec![Season::Winter];
        assert_eq!(grid_specs(&["x"], &config).len(), 61);
    }

    #[test]
    fn elm_only_grid() {
        let mut config = GridConfig::default();
        config.grid.models = vec![ModelKind::Elm];
        config.grid.testings = vec![WindowSpec::new(4).unwrap()];
        let specs = grid_specs(&["x"], &config);
        assert_eq!(specs.len(), 4);
        assert!(specs.iter().all(|s| s.learning_rate.is_none() && s.epochs.is_none()));
    }

    #[test]
    fn specs_sort_by_model_then_lr_then_epochs() {
        let mut v = [
            spec(ModelKind::Lstm, Some(0.001), Some(2500)),
            spec(ModelKind::Ann, Some(0.3), Some(2500)),
            spec(ModelKind::Ann, Some(0.1), Some(5000)),
            spec(ModelKind::Elm, None, None),
            spec(ModelKind::Ann, Some(0.1), Some(2500)),
        ];
        v.sort();
        let key: Vec<_> = v.iter().map(|s| (s.model, s.learning_rate, s.epochs)).collect();
        assert_eq!(
            key,
            vec![
                (ModelKind::Ann, Some(0.1), Some(2500)),
                (ModelKind::Ann, Some(0.1), Some(5000)),
                (ModelKind::Ann, Some(0.3), Some(2500)),
                (ModelKind::Elm, None, None),
                (ModelKind::Lstm, Some(0.001), Some(2500)),
            ]
        );
    }

    #[test]
    fn cell_seed_depends_on_every_field() {
        let a = spec(ModelKind::Ann, Some(0.1), Some(2500));
        assert_eq!(a.cell_seed(), a.clone().cell_seed());
        let variants = [
            ExperimentSpec { learning_rate: Some(0.3), ..a.clone() },
            ExperimentSpec { epochs: Some(5000), ..a.clone() },
            ExperimentSpec { season: Season::Winter, ..a.clone() },
            ExperimentSpec { base_seed: 2, ..a.clone() },
            ExperimentSpec { city: "d".into(), ..a.clone() },
        ];
        for v in variants {
            assert_ne!(v.cell_seed(), a.cell_seed());
        }
    }

    #[test]
    fn experiment_contract_and_determinism() {
        let data = generate_synthetic("synth", 3, 7, &SyntheticProfile::temperate());
        let config = GridConfig { epoch_scale: 0.004, ..GridConfig::default() };
        let s = spec(ModelKind::Ann, Some(0.1), Some(2500));
        let s = ExperimentSpec { city: "synth".into(), ..s };
        let a = run_experiment(&s, &data, &config).unwrap();
        let b = run_experiment(&s, &data, &config).unwrap();
        for v in [a.metrics.rmse, a.metrics.mape, a.metrics.mae, a.metrics.theils_u] {
            assert!(v.is_finite() && v >= 0.0);
        }
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.final_train_loss, b.final_train_loss);
    }

    #[test]
    fn missing_test_year_is_a_coverage_error() {
        let s = ExperimentSpec { city: "short".into(), ..spec(ModelKind::Elm, None, None) };
        let mut profile = SyntheticProfile::temperate();
        profile.start = chrono::NaiveDate::from_ymd_opt(2013, 7, 1).unwrap();
        let partial = generate_synthetic("short", 3, 6, &profile);
        let err = run_experiment(&s, &partial, &GridConfig::default()).unwrap_err();
        assert!(matches!(err, ExperimentError::Data(DataError::NotCovered { .. })), "{err}");
        assert_eq!(err.kind(), FailureKind::Data);

        profile.start = chrono::NaiveDate::from_ymd_opt(2013, 3, 1).unwrap();
        let none = generate_synthetic("short", 3, 6, &profile);
        let err = run_experiment(&s, &none, &GridConfig::default()).unwrap_err();
        assert!(matches!(err, ExperimentError::Data(DataError::EmptyPartition { .. })), "{err}");
    }

    #[test]
    fn malformed_spec_is_rejected() {
        let data = generate_synthetic("c", 3, 7, &SyntheticProfile::temperate());
        let err = run_experiment(&spec(ModelKind::Ann, None, Some(10)), &data, &GridConfig::default()).unwrap_err();
        assert_eq!(err.kind(), FailureKind::Training);
    }

    #[test]
    fn all_seasons_scope_trains_on_whole_year() {
        let data = generate_synthetic("c", 3, 7, &SyntheticProfile::temperate());
        let season = prepare_samples(&data, Season::Summer, WindowSpec::new(3).unwrap(), &GridConfig::default()).unwrap();
        let config = GridConfig { training_scope: TrainingScope::AllSeasons, ..GridConfig::default() };
        let all = prepare_samples(&data, Season::Summer, WindowSpec::new(3).unwrap(), &config).unwrap();
        assert!(all.train.len() > 3 * season.train.len());
        assert_eq!(all.test.len(), season.test.len());
    }
}
