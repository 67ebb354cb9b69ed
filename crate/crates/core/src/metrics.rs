//! Forecast error statistics on original-unit values.
//!
//! MAPE and Theil's U accept an additive offset applied to the values in
//! their denominators. Temperatures are shifted by 273.15 so that both ratios
//! are taken against absolute temperature; humidity uses no offset.

use serde::{Deserialize, Serialize};

use crate::dataset::{SampleSet, TargetKind};
use crate::models::ModelParams;

pub const KELVIN_OFFSET: f64 = 273.15;

/// Denominators closer to zero than this are rejected by MAPE.
const MIN_DENOMINATOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("metric input is empty")]
    Empty,
    #[error("actual has {actual} values but predicted has {predicted}")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("MAPE denominator |y + offset| is ~0 at indices {0:?}")]
    ZeroDenominator(Vec<usize>),
    #[error("Theil's U denominator is zero (every value equals -offset)")]
    ZeroScale,
    #[error("prediction failed: {0}")]
    Prediction(String),
}

/// Paired actual and predicted values.
#[derive(Debug, Clone, Copy)]
pub struct MetricInput<'a> {
    actual: &'a [f64],
    predicted: &'a [f64],
}

impl<'a> MetricInput<'a> {
    pub fn new(actual: &'a [f64], predicted: &'a [f64]) -> Result<Self, MetricError> {
        if actual.len() != predicted.len() {
            return Err(MetricError::LengthMismatch { actual: actual.len(), predicted: predicted.len() });
        }
        if actual.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(i) = actual.iter().zip(predicted).position(|(a, p)| !a.is_finite() || !p.is_finite()) {
            return Err(MetricError::NonFinite(i));
        }
        Ok(MetricInput { actual, predicted })
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual.is_empty()
    }

    fn errors(&self) -> impl Iterator<Item = f64> + 'a {
        self.actual.iter().zip(self.predicted).map(|(y, p)| y - p)
    }
}

pub fn rmse(m: &MetricInput) -> f64 {
    (m.errors().map(|e| e * e).sum::<f64>() / m.len() as f64).sqrt()
}

pub fn mae(m: &MetricInput) -> f64 {
    m.errors().map(f64::abs).sum::<f64>() / m.len() as f64
}

/// Mean absolute percentage error, in percent.
pub fn mape(m: &MetricInput, offset: f64) -> Result<f64, MetricError> {
    let bad: Vec<usize> = m
        .actual
        .iter()
        .enumerate()
        .filter(|(_, y)| (*y + offset).abs() <= MIN_DENOMINATOR)
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(MetricError::ZeroDenominator(bad));
    }
    let sum: f64 = m.actual.iter().zip(m.predicted).map(|(y, p)| ((y - p) / (y + offset)).abs()).sum();
    Ok(100.0 * sum / m.len() as f64)
}

pub fn theils_u(m: &MetricInput, offset: f64) -> Result<f64, MetricError> {
    let n = m.len() as f64;
    let rms = |v: &[f64]| (v.iter().map(|x| (x + offset) * (x + offset)).sum::<f64>() / n).sqrt();
    let scale = rms(m.actual) + rms(m.predicted);
    if scale == 0.0 {
        return Err(MetricError::ZeroScale);
    }
    Ok(rmse(m) / scale)
}

/// The four statistics for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub mape: f64,
    pub mae: f64,
    pub theils_u: f64,
    /// Offset used by `mape` and `theils_u`.
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Rmse,
    Mape,
    Mae,
    TheilsU,
}

impl MetricName {
    pub const ALL: [MetricName; 4] = [MetricName::Rmse, MetricName::Mape, MetricName::Mae, MetricName::TheilsU];

    pub fn name(self) -> &'static str {
        match self {
            MetricName::Rmse => "rmse",
            MetricName::Mape => "mape",
            MetricName::Mae => "mae",
            MetricName::TheilsU => "theils_u",
        }
    }

    /// Unit of the metric for a given target variable.
    pub fn unit(self, target: TargetKind) -> &'static str {
        match (self, target) {
            (MetricName::Rmse | MetricName::Mae, TargetKind::Temperature) => "degC",
            (MetricName::Rmse | MetricName::Mae, TargetKind::Humidity) => "%RH",
            (MetricName::Mape, _) => "%",
            (MetricName::TheilsU, _) => "1",
        }
    }
}

impl std::str::FromStr for MetricName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

impl MetricReport {
    pub fn compute(actual: &[f64], predicted: &[f64], offset: f64) -> Result<Self, MetricError> {
        let m = MetricInput::new(actual, predicted)?;
        Ok(MetricReport { rmse: rmse(&m), mape: mape(&m, offset)?, mae: mae(&m), theils_u: theils_u(&m, offset)?, offset })
    }

    pub fn get(&self, metric: MetricName) -> f64 {
        match metric {
            MetricName::Rmse => self.rmse,
            MetricName::Mape => self.mape,
            MetricName::Mae => self.mae,
            MetricName::TheilsU => self.theils_u,
        }
    }
}

/// Denominator offsets per target variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOffsets {
    pub temperature: f64,
    pub humidity: f64,
}

impl Default for MetricOffsets {
    fn default() -> Self {
        MetricOffsets { temperature: KELVIN_OFFSET, humidity: 0.0 }
    }
}

impl MetricOffsets {
    pub fn for_target(&self, target: TargetKind) -> f64 {
        match target {
            TargetKind::Temperature => self.temperature,
            TargetKind::Humidity => self.humidity,
        }
    }
}

/// Predicts every test window, maps predictions and targets back to original
/// units and scores them.
pub fn evaluate(params: &ModelParams, test: &SampleSet, offsets: &MetricOffsets) -> Result<MetricReport, MetricError> {
    if test.is_empty() {
        return Err(MetricError::Empty);
    }
    let target = test.spec.target();
    let predicted = test
        .inputs
        .iter()
        .map(|x| params.predict(x, test.spec).map(|u| test.norm.denormalize(target, u)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| MetricError::Prediction(e.to_string()))?;
    MetricReport::compute(&test.raw_targets, &predicted, offsets.for_target(target))
}

/// Scores the naive forecast "tomorrow equals today" on the same windows.
pub fn persistence_report(test: &SampleSet, offsets: &MetricOffsets) -> Result<MetricReport, MetricError> {
    let predicted = test.last_observed();
    MetricReport::compute(&test.raw_targets, &predicted, offsets.for_target(test.spec.target()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input<'a>(a: &'a [f64], p: &'a [f64]) -> MetricInput<'a> {
        MetricInput::new(a, p).unwrap()
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&input(&[1.0, 5.0], &[1.0, 5.0])), 0.0);
        assert_eq!(rmse(&input(&[0.0, 0.0], &[1.0, 1.0])), 1.0);
        assert!((rmse(&input(&[1.0, 2.0], &[1.0, 0.0])) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&input(&[3.0, 4.0], &[3.0, 4.0])), 0.0);
        assert_eq!(mae(&input(&[1.0, -1.0], &[0.0, 0.0])), 1.0);
        assert_eq!(mae(&input(&[3.0], &[1.0])), 2.0);
    }

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&input(&[2.0], &[1.0]), 0.0).unwrap(), 50.0);
        assert_eq!(mape(&input(&[2.0, 3.0], &[2.0, 3.0]), 0.0).unwrap(), 0.0);
        let v = mape(&input(&[10.0, -10.0], &[9.0, -9.0]), KELVIN_OFFSET).unwrap();
        let expected = 100.0 * (1.0 / 283.15 + 1.0 / 263.15) / 2.0;
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.366_590_549_190_959_2).abs() < 1e-12);
    }

    #[test]
    fn mape_lists_zero_denominators() {
        let err = mape(&input(&[0.0, 1.0, 0.0], &[1.0, 1.0, 1.0]), 0.0).unwrap_err();
        assert_eq!(err, MetricError::ZeroDenominator(vec![0, 2]));
    }

    #[test]
    fn theils_u_examples() {
        assert_eq!(theils_u(&input(&[1.0, 2.0], &[1.0, 2.0]), 0.0).unwrap(), 0.0);
        assert_eq!(theils_u(&input(&[1.0], &[0.0]), 0.0).unwrap(), 1.0);
        let v = theils_u(&input(&[1.0, 2.0], &[2.0, 1.0]), 0.0).unwrap();
        assert!((v - 1.0 / (2.0 * 2.5f64.sqrt())).abs() < 1e-15);
        assert_eq!(theils_u(&input(&[-1.0], &[-1.0]), 1.0), Err(MetricError::ZeroScale));
    }

    #[test]
    fn input_validation() {
        assert_eq!(MetricInput::new(&[], &[]).unwrap_err(), MetricError::Empty);
        assert!(matches!(MetricInput::new(&[1.0], &[1.0, 2.0]), Err(MetricError::LengthMismatch { .. })));
        assert_eq!(MetricInput::new(&[1.0, f64::NAN], &[1.0, 2.0]).unwrap_err(), MetricError::NonFinite(1));
    }

    #[test]
    fn offset_leaves_rmse_alone() {
        let a = [20.0, 22.0, 25.0];
        let p = [21.0, 21.5, 26.0];
        let r0 = MetricReport::compute(&a, &p, 0.0).unwrap();
        let r1 = MetricReport::compute(&a, &p, KELVIN_OFFSET).unwrap();
        assert_eq!(r0.rmse, r1.rmse);
        assert_eq!(r0.mae, r1.mae);
        assert!(r1.mape < r0.mape && r1.theils_u < r0.theils_u);
    }
}
