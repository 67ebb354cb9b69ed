//! Daily temperature/humidity series: CSV ingestion, chronological and
//! seasonal partitioning, min-max scaling and lag-window sample assembly.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::math::{Matrix, SeededRng};

pub const TEMPERATURE_RANGE: (f64, f64) = (-60.0, 60.0);
pub const HUMIDITY_RANGE: (f64, f64) = (0.0, 100.0);
pub const CSV_HEADER: [&str; 3] = ["date", "temperature_c", "humidity_pct"];

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: {field} value {value} outside [{lo}, {hi}]")]
    OutOfRange {
        line: u64,
        field: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("line {line}: date {date} does not follow {previous} (dates must strictly increase)")]
    NotMonotone {
        line: u64,
        date: NaiveDate,
        previous: NaiveDate,
    },
    #[error("degenerate range: lo {lo} must be below hi {hi}")]
    DegenerateRange { lo: f64, hi: f64 },
    #[error("{partition} partition is empty for split {train_start}..{train_end}..{test_end}")]
    EmptyPartition {
        partition: &'static str,
        train_start: NaiveDate,
        train_end: NaiveDate,
        test_end: NaiveDate,
    },
    #[error("series {first}..{last} does not cover {train_start}..{test_end}")]
    NotCovered {
        first: NaiveDate,
        last: NaiveDate,
        train_start: NaiveDate,
        test_end: NaiveDate,
    },
    #[error("series is empty")]
    EmptySeries,
    #[error("{0}")]
    Invalid(String),
}

/// One day of observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub temperature: f64,
    pub humidity: f64,
}

/// Validated daily series for one city.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    city: String,
    records: Vec<DailyRecord>,
}

impl RawSeries {
    /// Builds a series, enforcing strictly increasing dates and value ranges.
    /// Reported line numbers assume a header line precedes the records.
    pub fn new(city: impl Into<String>, records: Vec<DailyRecord>) -> Result<Self, DataError> {
        for (i, rec) in records.iter().enumerate() {
            let line = i as u64 + 2;
            check_range(line, "temperature_c", rec.temperature, TEMPERATURE_RANGE)?;
            check_range(line, "humidity_pct", rec.humidity, HUMIDITY_RANGE)?;
            if i > 0 && rec.date <= records[i - 1].date {
                return Err(DataError::NotMonotone { line, date: rec.date, previous: records[i - 1].date });
            }
        }
        Ok(RawSeries { city: city.into(), records })
    }

    pub fn city(&self) -> &str {
        &self.city
    }

    pub fn records(&self) -> &[DailyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.records.first().map(|r| r.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.records.last().map(|r| r.date)
    }

    /// Records whose date falls in `(after, until]`, as a new series.
    fn slice_dates(&self, after: Option<NaiveDate>, until: NaiveDate) -> RawSeries {
        let records = self
            .records
            .iter()
            .filter(|r| after.is_none_or(|a| r.date > a) && r.date <= until)
            .copied()
            .collect();
        RawSeries { city: self.city.clone(), records }
    }
}

fn check_range(line: u64, field: &'static str, value: f64, (lo, hi): (f64, f64)) -> Result<(), DataError> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(DataError::OutOfRange { line, field, value, lo, hi })
    }
}

/// Reads a series from a CSV file; the city name is the file stem.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawSeries, DataError> {
    let path = path.as_ref();
    let city = path.file_stem().and_then(|s| s.to_str()).unwrap_or("city").to_string();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    read_csv(city, file)
}

/// Parses the `date,temperature_c,humidity_pct` format from any reader.
pub fn read_csv(city: impl Into<String>, reader: impl Read) -> Result<RawSeries, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| DataError::Malformed { line: 1, message: e.to_string() })?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(DataError::Malformed {
            line: 1,
            message: format!("expected header `{}`, found `{}`", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut records: Vec<DailyRecord> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            DataError::Malformed { line, message: e.to_string() }
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |idx: usize, name: &str| -> Result<&str, DataError> {
            match row.get(idx) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(DataError::Malformed { line, message: format!("missing {name}") }),
            }
        };
        let date = NaiveDate::parse_from_str(field(0, "date")?, "%Y-%m-%d")
            .map_err(|e| DataError::Malformed { line, message: format!("bad date: {e}") })?;
        let number = |idx: usize, name: &str| -> Result<f64, DataError> {
            let raw = field(idx, name)?;
            raw.parse::<f64>().map_err(|_| DataError::Malformed { line, message: format!("bad {name} `{raw}`") })
        };
        let temperature = number(1, "temperature_c")?;
        let humidity = number(2, "humidity_pct")?;
        check_range(line, "temperature_c", temperature, TEMPERATURE_RANGE)?;
        check_range(line, "humidity_pct", humidity, HUMIDITY_RANGE)?;
        if let Some(prev) = records.last() {
            if date <= prev.date {
                return Err(DataError::NotMonotone { line, date, previous: prev.date });
            }
        }
        records.push(DailyRecord { date, temperature, humidity });
    }
    Ok(RawSeries { city: city.into(), records })
}

pub fn write_csv(series: &RawSeries, writer: impl Write) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for r in &series.records {
        wtr.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            format!("{:.2}", r.temperature),
            format!("{:.2}", r.humidity),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(series: &RawSeries, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io = |source| DataError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::create(path).map_err(io)?;
    write_csv(series, std::io::BufWriter::new(file)).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })
}

pub fn minmax_normalize(x: f64, lo: f64, hi: f64) -> Result<f64, DataError> {
    if lo < hi {
        Ok((x - lo) / (hi - lo))
    } else {
        Err(DataError::DegenerateRange { lo, hi })
    }
}

pub fn denormalize(u: f64, lo: f64, hi: f64) -> Result<f64, DataError> {
    if lo < hi {
        Ok(u * (hi - lo) + lo)
    } else {
        Err(DataError::DegenerateRange { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Spring,
    Summer,
    Autumn,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Autumn, Season::Winter];

    pub fn of_month(month: u32) -> Season {
        match month {
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            9..=11 => Season::Autumn,
            _ => Season::Winter,
        }
    }

    pub fn contains(self, date: NaiveDate) -> bool {
        Season::of_month(date.month()) == self
    }

    pub fn name(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
            Season::Winter => "winter",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Season {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spring" => Ok(Season::Spring),
            "summer" => Ok(Season::Summer),
            "autumn" | "fall" => Ok(Season::Autumn),
            "winter" => Ok(Season::Winter),
            other => Err(DataError::Invalid(format!("unknown season `{other}`"))),
        }
    }
}

/// Train/test boundaries. Train is `[train_start, train_end]`, test is
/// `(train_end, test_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_end: NaiveDate,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_start: NaiveDate::from_ymd_opt(2014, 3, 1).unwrap(),
            train_end: NaiveDate::from_ymd_opt(2019, 2, 28).unwrap(),
            test_end: NaiveDate::from_ymd_opt(2020, 2, 29).unwrap(),
        }
    }
}

pub fn chronological_split(series: &RawSeries, split: &SplitConfig) -> Result<(RawSeries, RawSeries), DataError> {
    let (first, last) = match (series.first_date(), series.last_date()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(DataError::EmptySeries),
    };
    let empty = |partition| DataError::EmptyPartition {
        partition,
        train_start: split.train_start,
        train_end: split.train_end,
        test_end: split.test_end,
    };
    if split.train_start > split.train_end || split.train_end >= split.test_end {
        return Err(DataError::Invalid(format!(
            "split dates must satisfy train_start <= train_end < test_end, got {}..{}..{}",
            split.train_start, split.train_end, split.test_end
        )));
    }
    let train = series.slice_dates(split.train_start.pred_opt(), split.train_end);
    let test = series.slice_dates(Some(split.train_end), split.test_end);
    if test.is_empty() {
        return Err(empty("test"));
    }
    if train.is_empty() {
        return Err(empty("train"));
    }
    if first > split.train_start || last < split.test_end {
        return Err(DataError::NotCovered { first, last, train_start: split.train_start, test_end: split.test_end });
    }
    Ok((train, test))
}

/// Maximal runs of consecutive days inside `season`. A gap of one or more
/// missing days ends a run, so December to February stays one run only when
/// the year boundary is fully observed.
pub fn seasonal_runs(series: &RawSeries, season: Season) -> Vec<RawSeries> {
    let mut runs = Vec::new();
    let mut current: Vec<DailyRecord> = Vec::new();
    for rec in &series.records {
        let continues = current.last().is_some_and(|prev| rec.date - prev.date == Duration::days(1));
        if (!season.contains(rec.date) || !continues) && !current.is_empty() {
            runs.push(RawSeries { city: series.city.clone(), records: std::mem::take(&mut current) });
        }
        if season.contains(rec.date) {
            current.push(*rec);
        }
    }
    if !current.is_empty() {
        runs.push(RawSeries { city: series.city.clone(), records: current });
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Temperature,
    Humidity,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Temperature => "temperature",
            TargetKind::Humidity => "humidity",
        }
    }
}

/// One of the four experiment configurations: lag depth and target variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct WindowSpec {
    testing_id: u8,
}

impl WindowSpec {
    pub fn new(testing_id: u8) -> Result<Self, DataError> {
        if (1..=4).contains(&testing_id) {
            Ok(WindowSpec { testing_id })
        } else {
            Err(DataError::Invalid(format!("testing id must be 1..=4, got {testing_id}")))
        }
    }

    pub fn testing_id(self) -> u8 {
        self.testing_id
    }

    /// Days per window: 2 for testings 1-2, 3 for testings 3-4.
    pub fn lag_count(self) -> usize {
        if self.testing_id <= 2 {
            2
        } else {
            3
        }
    }

    pub fn target(self) -> TargetKind {
        if self.testing_id % 2 == 1 {
            TargetKind::Temperature
        } else {
            TargetKind::Humidity
        }
    }

    pub fn input_width(self) -> usize {
        2 * self.lag_count()
    }
}

impl TryFrom<u8> for WindowSpec {
    type Error = DataError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        WindowSpec::new(v)
    }
}

impl From<WindowSpec> for u8 {
    fn from(w: WindowSpec) -> u8 {
        w.testing_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub t_min: f64,
    pub t_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl NormalizationParams {
    /// Extrema over every record of the given (training) segments.
    pub fn fit(segments: &[RawSeries]) -> Result<Self, DataError> {
        let mut recs = segments.iter().flat_map(|s| s.records.iter()).peekable();
        if recs.peek().is_none() {
            return Err(DataError::EmptySeries);
        }
        let mut p = NormalizationParams {
            t_min: f64::INFINITY,
            t_max: f64::NEG_INFINITY,
            h_min: f64::INFINITY,
            h_max: f64::NEG_INFINITY,
        };
        for r in recs {
            p.t_min = p.t_min.min(r.temperature);
            p.t_max = p.t_max.max(r.temperature);
            p.h_min = p.h_min.min(r.humidity);
            p.h_max = p.h_max.max(r.humidity);
        }
        if p.t_min >= p.t_max {
            return Err(DataError::DegenerateRange { lo: p.t_min, hi: p.t_max });
        }
        if p.h_min >= p.h_max {
            return Err(DataError::DegenerateRange { lo: p.h_min, hi: p.h_max });
        }
        Ok(p)
    }

    pub fn range(&self, kind: TargetKind) -> (f64, f64) {
        match kind {
            TargetKind::Temperature => (self.t_min, self.t_max),
            TargetKind::Humidity => (self.h_min, self.h_max),
        }
    }

    pub fn normalize(&self, kind: TargetKind, x: f64) -> f64 {
        let (lo, hi) = self.range(kind);
        (x - lo) / (hi - lo)
    }

    pub fn denormalize(&self, kind: TargetKind, u: f64) -> f64 {
        let (lo, hi) = self.range(kind);
        u * (hi - lo) + lo
    }
}

/// Normalized lag windows with their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    /// `n_samples x input_width`, T lags oldest first then H lags oldest first.
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub raw_targets: Vec<f64>,
    pub spec: WindowSpec,
    pub norm: NormalizationParams,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_matrix(&self) -> Option<Matrix> {
        Matrix::from_rows(&self.inputs).ok()
    }

    /// Raw value of the target variable on the last lag day of each window.
    pub fn last_observed(&self) -> Vec<f64> {
        let lags = self.spec.lag_count();
        let col = match self.spec.target() {
            TargetKind::Temperature => lags - 1,
            TargetKind::Humidity => 2 * lags - 1,
        };
        self.inputs.iter().map(|row| self.norm.denormalize(self.spec.target(), row[col])).collect()
    }
}

/// Number of windows a contiguous run of `len` days yields.
pub fn window_count(len: usize, lag_count: usize) -> usize {
    len.saturating_sub(lag_count)
}

pub fn build_windows(segments: &[RawSeries], spec: WindowSpec, norm: &NormalizationParams) -> SampleSet {
    let lags = spec.lag_count();
    let target = spec.target();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut raw_targets = Vec::new();
    for seg in segments {
        let recs = &seg.records;
        for end in lags..recs.len() {
            let window = &recs[end - lags..end];
            let mut row = Vec::with_capacity(2 * lags);
            row.extend(window.iter().map(|r| norm.normalize(TargetKind::Temperature, r.temperature)));
            row.extend(window.iter().map(|r| norm.normalize(TargetKind::Humidity, r.humidity)));
            let next = &recs[end];
            let raw = match target {
                TargetKind::Temperature => next.temperature,
                TargetKind::Humidity => next.humidity,
            };
            inputs.push(row);
            targets.push(norm.normalize(target, raw));
            raw_targets.push(raw);
        }
    }
    SampleSet { inputs, targets, raw_targets, spec, norm: *norm }
}

/// Shape of a synthetic climate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    pub start: NaiveDate,
    pub mean_temperature: f64,
    pub temperature_amplitude: f64,
    /// Day of year of the temperature peak.
    pub peak_day: f64,
    /// AR(1) coefficient of the temperature anomaly.
    pub persistence: f64,
    /// Innovation standard deviation of the anomaly in summer and in winter;
    /// spring/autumn interpolate along the annual cycle.
    pub summer_noise: f64,
    pub winter_noise: f64,
    pub mean_humidity: f64,
    pub humidity_amplitude: f64,
    pub humidity_noise: f64,
    /// How strongly humidity anomalies track temperature anomalies.
    pub humidity_coupling: f64,
}

impl SyntheticProfile {
    /// Mid-latitude continental climate: hot summers, cold dry winters.
    pub fn temperate() -> Self {
        SyntheticProfile {
            start: NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(),
            mean_temperature: 13.0,
            temperature_amplitude: 13.5,
            peak_day: 205.0,
            persistence: 0.4,
            summer_noise: 1.2,
            winter_noise: 2.8,
            mean_humidity: 65.0,
            humidity_amplitude: 10.0,
            humidity_noise: 6.0,
            humidity_coupling: -1.5,
        }
    }

    /// Maritime climate: damped annual cycle, smaller anomalies.
    pub fn coastal() -> Self {
        SyntheticProfile {
            mean_temperature: 15.0,
            temperature_amplitude: 9.5,
            peak_day: 215.0,
            summer_noise: 0.9,
            winter_noise: 2.0,
            mean_humidity: 70.0,
            humidity_amplitude: 8.0,
            humidity_noise: 5.0,
            ..SyntheticProfile::temperate()
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "temperate" => Some(Self::temperate()),
            "coastal" => Some(Self::coastal()),
            _ => None,
        }
    }
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        Self::temperate()
    }
}

/// Seeded synthetic city: temperature is an annual sinusoid plus an AR(1)
/// anomaly with season-dependent innovations; humidity is an anti-phase
/// sinusoid plus noise, clamped to `[0, 100]`.
pub fn generate_synthetic(city: impl Into<String>, seed: u64, years: u32, profile: &SyntheticProfile) -> RawSeries {
    assert!(years >= 1, "at least one year of data is required");
    let mut rng = SeededRng::new(seed);
    let end = profile
        .start
        .with_year(profile.start.year() + years as i32)
        .unwrap_or_else(|| profile.start + Duration::days(365 * years as i64))
        .pred_opt()
        .expect("valid end date");
    let mut records = Vec::new();
    let mut anomaly = 0.0;
    let mut date = profile.start;
    let year_days = 365.25;
    let phi = profile.persistence;
    while date <= end {
        let doy = date.ordinal() as f64;
        let phase = std::f64::consts::TAU * (doy - profile.peak_day) / year_days;
        let cycle = phase.cos();
        // 1 at the summer peak, 0 at the winter trough.
        let warmth = 0.5 * (1.0 + cycle);
        let sigma = profile.winter_noise + (profile.summer_noise - profile.winter_noise) * warmth;
        // Innovations scaled so the stationary anomaly std equals sigma.
        anomaly = phi * anomaly + sigma * (1.0 - phi * phi).sqrt() * rng.normal();
        let temperature = (profile.mean_temperature + profile.temperature_amplitude * cycle + anomaly)
            .clamp(TEMPERATURE_RANGE.0, TEMPERATURE_RANGE.1);
        let humidity = (profile.mean_humidity - profile.humidity_amplitude * cycle
            + profile.humidity_coupling * anomaly
            + profile.humidity_noise * rng.normal())
        .clamp(HUMIDITY_RANGE.0, HUMIDITY_RANGE.1);
        records.push(DailyRecord { date, temperature, humidity });
        date = date.succ_opt().expect("date in range");
    }
    RawSeries { city: city.into(), records }
}
