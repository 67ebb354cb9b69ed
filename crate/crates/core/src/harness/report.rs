//! Report files: the full grid, per-metric best-of summaries, city × season
//! matrices, the persistence baseline and a JSON manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Season, WindowSpec};
use crate::metrics::{MetricName, MetricReport};
use crate::models::ModelKind;

use super::config::hex_digest;
use super::{BaselineRow, ExperimentSpec, FailedCell, GridConfig, GridResult, HarnessError, ResultRow};

pub const GRID_CSV: &str = "grid.csv";
pub const BASELINE_CSV: &str = "baseline.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: u32 = 1;

/// Caption carried by every summary file.
const SUMMARY_CAPTION: &str = "unit: %";

/// Flat form of a [`ResultRow`] as stored in `grid.csv`. Timing is left out
/// so the file is a pure function of data, config and seed.
#[derive(Debug, Serialize, Deserialize)]
struct GridRecord {
    city: String,
    testing: WindowSpec,
    season: Season,
    model: ModelKind,
    learning_rate: Option<f64>,
    epochs: Option<u32>,
    base_seed: u64,
    rmse: f64,
    mape: f64,
    mae: f64,
    theils_u: f64,
    offset: f64,
    final_train_loss: f64,
}

impl From<&ResultRow> for GridRecord {
    fn from(r: &ResultRow) -> Self {
        let s = &r.spec;
        let m = &r.metrics;
        GridRecord {
            city: s.city.clone(),
            testing: s.testing,
            season: s.season,
            model: s.model,
            learning_rate: s.learning_rate,
            epochs: s.epochs,
            base_seed: s.base_seed,
            rmse: m.rmse,
            mape: m.mape,
            mae: m.mae,
            theils_u: m.theils_u,
            offset: m.offset,
            final_train_loss: r.final_train_loss,
        }
    }
}

impl From<GridRecord> for ResultRow {
    fn from(g: GridRecord) -> Self {
        ResultRow {
            spec: ExperimentSpec {
                city: g.city,
                season: g.season,
                testing: g.testing,
                model: g.model,
                learning_rate: g.learning_rate,
                epochs: g.epochs,
                base_seed: g.base_seed,
            },
            metrics: MetricReport { rmse: g.rmse, mape: g.mape, mae: g.mae, theils_u: g.theils_u, offset: g.offset },
            final_train_loss: g.final_train_loss,
            train_seconds: 0.0,
        }
    }
}

const GRID_HEADER: [&str; 13] = [
    "city",
    "testing",
    "season",
    "model",
    "learning_rate",
    "epochs",
    "base_seed",
    "rmse",
    "mape",
    "mae",
    "theils_u",
    "offset",
    "final_train_loss",
];

/// Writes rows in the order given. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_grid_csv(rows: &[ResultRow], writer: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(GRID_HEADER)?;
    for row in rows {
        w.serialize(GridRecord::from(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_grid_csv`]; `train_seconds` comes back as zero.
pub fn read_grid_csv(reader: impl Read) -> Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_reader(reader)
        .deserialize::<GridRecord>()
        .map(|r| r.map(ResultRow::from))
        .collect()
}

/// Winner of one (city, testing, season) slice for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct BestEntry {
    pub city: String,
    pub testing: WindowSpec,
    pub season: Season,
    pub value: f64,
    pub spec: ExperimentSpec,
}

/// Lowest value of `metric` per (city, testing, season). Ties go to the
/// earlier model in `ModelKind` order, then the lower learning rate, then
/// fewer epochs. Output is sorted by (city, testing, season).
pub fn best_per_cell(rows: &[ResultRow], metric: MetricName) -> Vec<BestEntry> {
    let mut best: BTreeMap<(String, WindowSpec, Season), &ResultRow> = BTreeMap::new();
    for row in rows {
        let key = (row.spec.city.clone(), row.spec.testing, row.spec.season);
        let value = row.metrics.get(metric);
        match best.get(&key) {
            Some(cur) => {
                let cur_value = cur.metrics.get(metric);
                if value < cur_value || (value == cur_value && tie_key(&row.spec) < tie_key(&cur.spec)) {
                    best.insert(key, row);
                }
            }
            None => {
                best.insert(key, row);
            }
        }
    }
    best.into_iter()
        .map(|((city, testing, season), row)| BestEntry { city, testing, season, value: row.metrics.get(metric), spec: row.spec.clone() })
        .collect()
}

fn tie_key(spec: &ExperimentSpec) -> (ModelKind, OrdF64, Option<u32>) {
    (spec.model, OrdF64(spec.learning_rate.unwrap_or(0.0)), spec.epochs)
}

#[derive(PartialEq, PartialOrd)]
struct OrdF64(f64);

/// Summary layout: one line per (city, testing, season) with the best value
/// and the configuration that achieved it.
pub fn write_summary_csv(entries: &[BestEntry], metric: MetricName, writer: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "city",
        "testing",
        "target",
        "season",
        "metric",
        "best_value",
        "value_unit",
        "caption",
        "model",
        "learning_rate",
        "epochs",
    ])?;
    for e in entries {
        let target = e.testing.target();
        w.write_record([
            e.city.clone(),
            e.testing.testing_id().to_string(),
            target.name().to_string(),
            e.season.to_string(),
            metric.name().to_string(),
            e.value.to_string(),
            metric.unit(target).to_string(),
            SUMMARY_CAPTION.to_string(),
            e.spec.model.to_string(),
            e.spec.learning_rate.map(|v| v.to_string()).unwrap_or_default(),
            e.spec.epochs.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// City × season matrix of best values, one block of lines per testing.
pub fn write_fig_csv(entries: &[BestEntry], writer: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["city".to_string(), "testing".to_string()];
    header.extend(Season::ALL.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    let mut table: BTreeMap<(&str, WindowSpec), [Option<f64>; 4]> = BTreeMap::new();
    for e in entries {
        let slot = Season::ALL.iter().position(|s| *s == e.season).expect("season listed in ALL");
        table.entry((e.city.as_str(), e.testing)).or_default()[slot] = Some(e.value);
    }
    for ((city, testing), values) in table {
        let mut line = vec![city.to_string(), testing.testing_id().to_string()];
        line.extend(values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_baseline_csv(baselines: &[BaselineRow], writer: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["city", "testing", "season", "rmse", "mape", "mae", "theils_u", "offset"])?;
    for b in baselines {
        let m = &b.metrics;
        w.write_record([
            b.city.clone(),
            b.testing.testing_id().to_string(),
            b.season.to_string(),
            m.rmse.to_string(),
            m.mape.to_string(),
            m.mae.to_string(),
            m.theils_u.to_string(),
            m.offset.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to re-emit the report or audit a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub code_version: String,
    pub config: GridConfig,
    pub config_digest: String,
    /// City name to SHA-256 of its data file bytes.
    pub data_digests: BTreeMap<String, String>,
    pub base_seed: u64,
    /// RFC 3339 creation time.
    pub timestamp: String,
    pub rows: Vec<ResultRow>,
    pub failures: Vec<FailedCell>,
    pub baselines: Vec<BaselineRow>,
}

impl RunManifest {
    pub fn new(config: &GridConfig, data: &[(String, Vec<u8>)], result: GridResult) -> Self {
        RunManifest {
            format_version: MANIFEST_FORMAT,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            config_digest: config.digest(),
            data_digests: data.iter().map(|(city, bytes)| (city.clone(), hex_digest(bytes))).collect(),
            base_seed: config.base_seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            rows: result.rows,
            failures: result.failures,
            baselines: result.baselines,
        }
    }

    pub fn result(&self) -> GridResult {
        GridResult { rows: self.rows.clone(), failures: self.failures.clone(), baselines: self.baselines.clone() }
    }
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| HarnessError::io(path, e))?;
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Report { path: path.display().to_string(), message: e.to_string() })?;
    if manifest.format_version != MANIFEST_FORMAT {
        return Err(HarnessError::Report {
            path: path.display().to_string(),
            message: format!("unsupported format version {}", manifest.format_version),
        });
    }
    Ok(manifest)
}

/// Writes `grid.csv`, `summary_<metric>.csv`, `fig_<metric>.csv` and
/// `baseline.csv` into `out_dir`, creating it if needed. Returns the paths
/// written.
pub fn emit_report(result: &GridResult, out_dir: &Path) -> Result<Vec<std::path::PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: String, body: &dyn Fn(&mut Vec<u8>) -> Result<(), csv::Error>| {
        let path = out_dir.join(name);
        let mut buf = Vec::new();
        body(&mut buf).map_err(|e| HarnessError::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| HarnessError::io(&path, e))?;
        written.push(path);
        Ok::<_, HarnessError>(())
    };
    emit(GRID_CSV.to_string(), &|buf| write_grid_csv(&result.rows, buf))?;
    for metric in MetricName::ALL {
        let best = best_per_cell(&result.rows, metric);
        emit(format!("summary_{}.csv", metric.name()), &|buf| write_summary_csv(&best, metric, buf))?;
        emit(format!("fig_{}.csv", metric.name()), &|buf| write_fig_csv(&best, buf))?;
    }
    emit(BASELINE_CSV.to_string(), &|buf| write_baseline_csv(&result.baselines, buf))?;
    Ok(written)
}
