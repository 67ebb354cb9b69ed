//! `wxcast`: synthetic data, validation, single runs, grids and reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wxcast_core::dataset::{generate_synthetic, load_csv, read_csv, save_csv, chronological_split, DataError, RawSeries, SyntheticProfile};
use wxcast_core::harness::{
    emit_report, read_manifest, run_grid, train_experiment, write_manifest, ExperimentError, ExperimentSpec, FailureKind,
    GridConfig, HarnessError, RunManifest, MANIFEST_FILE,
};
use wxcast_core::models::persist::{self, SavedModel};
use wxcast_core::training::TrainError;
use wxcast_core::{ModelKind, Season, WindowSpec};

#[derive(Debug, Parser)]
#[command(name = "wxcast", version, about = "Daily temperature/humidity forecasting benchmark")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplier on every epoch setting; overrides the configuration.
    #[arg(long, global = true, value_name = "FACTOR")]
    epoch_scale: Option<f64>,
    /// Worker threads for grid runs.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    jobs: usize,
    /// Output file (synth) or directory (train, grid, report).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic city as CSV.
    Synth {
        #[arg(long, default_value_t = 7)]
        years: u32,
        /// temperate or coastal
        #[arg(long, default_value = "temperate")]
        profile: String,
        /// City name; defaults to the output file stem.
        #[arg(long)]
        city: Option<String>,
        /// First day of the series.
        #[arg(long, value_name = "YYYY-MM-DD")]
        start: Option<chrono::NaiveDate>,
    },
    /// Check a data CSV and its coverage of the configured split.
    Validate { data: PathBuf },
    /// Train and score one configuration.
    Train {
        data: PathBuf,
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        #[arg(long, value_parser = parse_season)]
        season: Season,
        /// 1-4
        #[arg(long, value_parser = parse_testing)]
        testing: WindowSpec,
        /// Defaults to the first learning rate of the model's grid.
        #[arg(long)]
        lr: Option<f64>,
        /// Defaults to the first epoch setting of the grid.
        #[arg(long)]
        epochs: Option<u32>,
    },
    /// Run the configured grid over one or more city CSVs (city = file stem).
    Grid {
        #[arg(required = true)]
        data: Vec<PathBuf>,
    },
    /// Re-emit report files from a manifest.
    Report { manifest: PathBuf },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: wxcast_core::models::UnknownModelKind| e.to_string())
}

fn parse_season(s: &str) -> Result<Season, String> {
    s.parse().map_err(|e: DataError| e.to_string())
}

fn parse_testing(s: &str) -> Result<WindowSpec, String> {
    let id: u8 = s.parse().map_err(|_| format!("`{s}` is not a testing number"))?;
    WindowSpec::new(id).map_err(|e| e.to_string())
}

/// Failure classes, one per exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Diverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Diverged(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Diverged(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e.kind() {
            FailureKind::Divergence => Failure::Diverged(e.to_string()),
            FailureKind::Training => match e {
                ExperimentError::Train(TrainError::Config(_)) => Failure::Usage(e.to_string()),
                _ => Failure::Data(e.to_string()),
            },
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = load_config(&cli.global)?;
    let g = &cli.global;
    match cli.command {
        Command::Synth { years, profile, city, start } => synth(g, &config, years, &profile, city, start),
        Command::Validate { data } => validate(&data, &config),
        Command::Train { data, model, season, testing, lr, epochs } => {
            train(g, &config, &data, model, season, testing, lr, epochs)
        }
        Command::Grid { data } => grid(g, &config, &data),
        Command::Report { manifest } => report(g, &manifest),
    }
}

fn load_config(g: &GlobalArgs) -> Result<GridConfig, Failure> {
    let mut config = match &g.config {
        Some(path) => GridConfig::load(path).map_err(|e| match e {
            HarnessError::Io { .. } => Failure::Usage(e.to_string()),
            other => Failure::from(other),
        })?,
        None => GridConfig::default(),
    };
    if let Some(seed) = g.seed {
        config.base_seed = seed;
    }
    if let Some(scale) = g.epoch_scale {
        config.epoch_scale = scale;
    }
    if g.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    config.validate()?;
    Ok(config)
}

fn synth(
    g: &GlobalArgs,
    config: &GridConfig,
    years: u32,
    profile: &str,
    city: Option<String>,
    start: Option<chrono::NaiveDate>,
) -> Result<(), Failure> {
    let mut shape = SyntheticProfile::by_name(profile)
        .ok_or_else(|| Failure::Usage(format!("unknown profile `{profile}` (expected temperate or coastal)")))?;
    if let Some(start) = start {
        shape.start = start;
    }
    if years == 0 {
        return Err(Failure::Usage("--years must be at least 1".into()));
    }
    let out = g.out.clone().unwrap_or_else(|| PathBuf::from("synthetic.csv"));
    let city = city.unwrap_or_else(|| city_name(&out));
    let series = generate_synthetic(city, config.base_seed, years, &shape);
    save_csv(&series, &out)?;
    println!("wrote {} days to {}", series.len(), out.display());
    Ok(())
}

fn validate(path: &Path, config: &GridConfig) -> Result<(), Failure> {
    let series = load_csv(path)?;
    let (train, test) = chronological_split(&series, &config.split)?;
    println!(
        "{}: {} days {}..{}, train {} / test {} days",
        series.city(),
        series.len(),
        series.first_date().expect("non-empty"),
        series.last_date().expect("non-empty"),
        train.len(),
        test.len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    g: &GlobalArgs,
    config: &GridConfig,
    path: &Path,
    model: ModelKind,
    season: Season,
    testing: WindowSpec,
    lr: Option<f64>,
    epochs: Option<u32>,
) -> Result<(), Failure> {
    let series = load_csv(path)?;
    let (learning_rate, epochs) = if model.is_iterative() {
        let lr = lr.or_else(|| config.grid.learning_rates(model).first().copied());
        let epochs = epochs.or_else(|| config.grid.epochs.first().copied());
        (lr, epochs)
    } else {
        if lr.is_some() || epochs.is_some() {
            return Err(Failure::Usage("ELM takes no learning rate or epochs".into()));
        }
        (None, None)
    };
    let spec = ExperimentSpec {
        city: series.city().to_string(),
        season,
        testing,
        model,
        learning_rate,
        epochs,
        base_seed: config.base_seed,
    };
    let trained = train_experiment(&spec, &series, config)?;
    let m = &trained.row.metrics;
    println!(
        "{} {} testing {} {}: rmse {:.4} mape {:.4} mae {:.4} theils_u {:.6} (train loss {:.6}, {:.2}s)",
        spec.city,
        spec.season,
        testing.testing_id(),
        model,
        m.rmse,
        m.mape,
        m.mae,
        m.theils_u,
        trained.row.final_train_loss,
        trained.row.train_seconds
    );
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))?;
    let file = dir.join(format!("{}_{}_t{}_{}.model", spec.city, spec.season, testing.testing_id(), model));
    let saved = SavedModel { params: trained.model, spec: testing, norm: trained.norm };
    persist::save(&saved, &file).map_err(|e| Failure::Data(e.to_string()))?;
    println!("model saved to {}", file.display());
    Ok(())
}

fn grid(g: &GlobalArgs, config: &GridConfig, paths: &[PathBuf]) -> Result<(), Failure> {
    let mut datasets: Vec<RawSeries> = Vec::new();
    let mut raw: Vec<(String, Vec<u8>)> = Vec::new();
    for path in paths {
        let bytes = std::fs::read(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
        let city = city_name(path);
        let series = read_csv(city.clone(), bytes.as_slice()).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        datasets.push(series);
        raw.push((city, bytes));
    }
    let result = run_grid(&datasets, config, g.jobs)?;
    for f in &result.failures {
        eprintln!("warning: {} {} testing {} {}: {}", f.spec.city, f.spec.season, f.spec.testing.testing_id(), f.spec.model, f.message);
    }
    let out = g.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    emit_report(&result, &out)?;
    let (rows, failed) = (result.rows.len(), result.failures.len());
    let manifest = RunManifest::new(config, &raw, result);
    write_manifest(&manifest, &out.join(MANIFEST_FILE))?;
    println!("{rows} cells done, {failed} failed; report in {}", out.display());
    Ok(())
}

fn report(g: &GlobalArgs, manifest: &Path) -> Result<(), Failure> {
    let m = read_manifest(manifest)?;
    let out = g.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    let files = emit_report(&m.result(), &out)?;
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn city_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "city".into())
}
