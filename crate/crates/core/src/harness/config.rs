use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{Season, SplitConfig, WindowSpec};
use crate::metrics::MetricOffsets;
use crate::models::ModelKind;
use crate::training::{DEFAULT_ELM_HIDDEN, DEFAULT_LSTM_HIDDEN, EPOCH_SETTINGS, FEEDFORWARD_LEARNING_RATES, RECURRENT_LEARNING_RATES};

use super::HarnessError;

/// Which days a model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingScope {
    /// One model per season, trained on that season's training days.
    #[default]
    Season,
    /// One model per testing on every training day, scored per season.
    AllSeasons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridDimensions {
    pub testings: Vec<WindowSpec>,
    pub seasons: Vec<Season>,
    pub models: Vec<ModelKind>,
    pub feedforward_learning_rates: Vec<f64>,
    pub recurrent_learning_rates: Vec<f64>,
    pub epochs: Vec<u32>,
}

impl Default for GridDimensions {
    fn default() -> Self {
        GridDimensions {
            testings: vec![WindowSpec::new(3).unwrap(), WindowSpec::new(4).unwrap()],
            seasons: Season::ALL.to_vec(),
            models: ModelKind::ALL.to_vec(),
            feedforward_learning_rates: FEEDFORWARD_LEARNING_RATES.to_vec(),
            recurrent_learning_rates: RECURRENT_LEARNING_RATES.to_vec(),
            epochs: EPOCH_SETTINGS.to_vec(),
        }
    }
}

impl GridDimensions {
    pub fn learning_rates(&self, kind: ModelKind) -> &[f64] {
        if kind.is_recurrent() {
            &self.recurrent_learning_rates
        } else {
            &self.feedforward_learning_rates
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HiddenSizes {
    pub lstm: usize,
    pub elm: usize,
}

impl Default for HiddenSizes {
    fn default() -> Self {
        HiddenSizes { lstm: DEFAULT_LSTM_HIDDEN, elm: DEFAULT_ELM_HIDDEN }
    }
}

/// Everything that parameterizes a grid run. Loaded from TOML; every key is
/// optional and falls back to the defaults below.
///
/// ```toml
/// base_seed = 2024
/// epoch_scale = 0.1
/// training_scope = "season"      # or "all_seasons"
///
/// [split]
/// train_start = "2014-03-01"
/// train_end = "2019-02-28"
/// test_end = "2020-02-29"
///
/// [grid]
/// testings = [3, 4]
/// seasons = ["spring", "summer", "autumn", "winter"]
/// models = ["ANN", "DNN", "ELM", "LSTM", "LSTM_PC"]
/// feedforward_learning_rates = [0.1, 0.3, 0.5, 0.7, 0.9]
/// recurrent_learning_rates = [0.001, 0.003, 0.005, 0.007, 0.009]
/// epochs = [2500, 5000, 7500]
///
/// [hidden]
/// lstm = 4
/// elm = 20
///
/// [offsets]
/// temperature = 273.15
/// humidity = 0.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub base_seed: u64,
    pub epoch_scale: f64,
    pub training_scope: TrainingScope,
    pub split: SplitConfig,
    pub grid: GridDimensions,
    pub hidden: HiddenSizes,
    pub offsets: MetricOffsets,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            base_seed: 2014,
            epoch_scale: 1.0,
            training_scope: TrainingScope::default(),
            split: SplitConfig::default(),
            grid: GridDimensions::default(),
            hidden: HiddenSizes::default(),
            offsets: MetricOffsets::default(),
        }
    }
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: GridConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if !(self.epoch_scale > 0.0 && self.epoch_scale.is_finite()) {
            return fail("epoch_scale must be positive");
        }
        let g = &self.grid;
        let positive = |v: &[f64]| v.iter().all(|&x| x > 0.0 && x.is_finite());
        if !positive(&g.feedforward_learning_rates) || !positive(&g.recurrent_learning_rates) {
            return fail("learning rates must be positive");
        }
        if g.epochs.contains(&0) {
            return fail("epoch settings must be positive");
        }
        let iterative = g.models.iter().any(|m| m.is_iterative());
        if iterative && g.epochs.is_empty() {
            return fail("iterative models need at least one epoch setting");
        }
        if g.models.iter().any(|m| m.is_feedforward()) && g.feedforward_learning_rates.is_empty()
            || g.models.iter().any(|m| m.is_recurrent()) && g.recurrent_learning_rates.is_empty()
        {
            return fail("every selected model family needs at least one learning rate");
        }
        if self.hidden.lstm == 0 || self.hidden.elm == 0 {
            return fail("hidden sizes must be positive");
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_digest(json.as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_default() {
        assert_eq!(GridConfig::from_toml("").unwrap(), GridConfig::default());
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"
base_seed = 2024
epoch_scale = 0.1
training_scope = "all_seasons"

[split]
train_start = "2014-03-01"
train_end = "2019-02-28"
test_end = "2020-02-29"

[grid]
testings = [1, 2]
seasons = ["summer"]
models = ["ELM", "LSTM_PC"]
epochs = [2500]

[hidden]
lstm = 2

[offsets]
temperature = 0.0
"#;
        let c = GridConfig::from_toml(text).unwrap();
        assert_eq!(c.base_seed, 2024);
        assert_eq!(c.training_scope, TrainingScope::AllSeasons);
        assert_eq!(c.grid.testings.iter().map(|t| t.testing_id()).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(c.grid.models, vec![ModelKind::Elm, ModelKind::LstmPc]);
        assert_eq!(c.hidden, HiddenSizes { lstm: 2, elm: DEFAULT_ELM_HIDDEN });
        assert_eq!(c.offsets.temperature, 0.0);
        assert_eq!(c.offsets.humidity, 0.0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(GridConfig::from_toml("seed = 1").is_err());
        assert!(GridConfig::from_toml("[grid]\ntestings = [7]").is_err());
        assert!(GridConfig::from_toml("epoch_scale = 0").is_err());
        assert!(GridConfig::from_toml("[grid]\nepochs = [0]").is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = GridConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.base_seed += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
