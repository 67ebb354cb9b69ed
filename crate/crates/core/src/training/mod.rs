//! Gradient-descent training for the iterative models and the closed-form
//! ELM fit.
//!
//! Iterative training is per-sample SGD over the samples in chronological
//! order, with no shuffling, so a seed and a sample set fully determine the
//! resulting parameters.

mod backprop;
mod elm;

use serde::{Deserialize, Serialize};

pub use backprop::{accumulate_bptt, accumulate_feedforward, backprop_feedforward, bptt, RecurrentGrad};
pub use elm::{elm_ensemble_fit, elm_ensemble_predict, elm_fit, ensemble_seeds, DEFAULT_ELM_HIDDEN, ELM_ENSEMBLE_SIZE};

use crate::dataset::{SampleSet, WindowSpec};
use crate::math::{expect_len, SeededRng, ShapeError};
use crate::models::{FeedforwardParams, LstmParams, LstmPcParams, ModelKind, ModelParams, Params};

pub const DEFAULT_LSTM_HIDDEN: usize = 4;
pub const FEEDFORWARD_LEARNING_RATES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const RECURRENT_LEARNING_RATES: [f64; 5] = [0.001, 0.003, 0.005, 0.007, 0.009];
pub const EPOCH_SETTINGS: [u32; 3] = [2500, 5000, 7500];

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("no training samples")]
    EmptySamples,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: u32,
    pub seed: u64,
    /// Multiplies `epochs`; below 1 for quick runs.
    pub epoch_scale: f64,
    pub lstm_hidden: usize,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, epochs: u32, seed: u64) -> Self {
        TrainConfig { learning_rate, epochs, seed, epoch_scale: 1.0, lstm_hidden: DEFAULT_LSTM_HIDDEN }
    }

    /// `round(epochs × epoch_scale)`, at least one.
    pub fn effective_epochs(&self) -> usize {
        ((self.epochs as f64 * self.epoch_scale).round() as usize).max(1)
    }

    fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 || !(self.epoch_scale > 0.0 && self.epoch_scale.is_finite()) {
            return Err(TrainError::Config("epochs and epoch scale must be positive".into()));
        }
        if self.lstm_hidden == 0 {
            return Err(TrainError::Config("LSTM hidden size must be positive".into()));
        }
        Ok(())
    }
}

/// Mean per-sample squared error of each epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossHistory {
    pub epoch_losses: Vec<f64>,
}

impl LossHistory {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

pub fn mse_loss(yhat: f64, y: f64) -> f64 {
    (yhat - y) * (yhat - y)
}

/// `θ ← θ − lr · g` for every parameter.
pub fn sgd_update<P: Params>(params: &mut P, grads: &P, lr: f64) -> Result<(), ShapeError> {
    let grad_tensors = grads.tensors();
    let mut tensors = params.tensors_mut();
    expect_len("gradient tensor count", tensors.len(), grad_tensors.len())?;
    for (w, (_, g)) in tensors.iter_mut().zip(&grad_tensors) {
        expect_len("gradient tensor", w.len(), g.len())?;
        for (wi, gi) in w.iter_mut().zip(g.iter()) {
            *wi -= lr * gi;
        }
    }
    Ok(())
}

/// Models trained by [`train_iterative`].
trait Trainable: Params {
    fn accumulate(&self, x: &[f64], y: f64, spec: WindowSpec, grads: &mut Self) -> Result<f64, ShapeError>;
}

impl Trainable for FeedforwardParams {
    fn accumulate(&self, x: &[f64], y: f64, _spec: WindowSpec, grads: &mut Self) -> Result<f64, ShapeError> {
        accumulate_feedforward(self, x, y, grads)
    }
}

impl Trainable for LstmParams {
    fn accumulate(&self, x: &[f64], y: f64, spec: WindowSpec, grads: &mut Self) -> Result<f64, ShapeError> {
        accumulate_bptt(self, x, y, spec, grads)
    }
}

impl Trainable for LstmPcParams {
    fn accumulate(&self, x: &[f64], y: f64, spec: WindowSpec, grads: &mut Self) -> Result<f64, ShapeError> {
        accumulate_bptt(self, x, y, spec, grads)
    }
}

fn sgd_epochs<P: Trainable>(mut params: P, samples: &SampleSet, config: &TrainConfig) -> Result<(P, LossHistory), TrainError> {
    let epochs = config.effective_epochs();
    let mut grads = params.zeros_like();
    let mut history = LossHistory { epoch_losses: Vec::with_capacity(epochs) };
    for epoch in 1..=epochs {
        let mut total = 0.0;
        for (x, &y) in samples.inputs.iter().zip(&samples.targets) {
            for t in grads.tensors_mut() {
                t.fill(0.0);
            }
            total += params.accumulate(x, y, samples.spec, &mut grads)?;
            sgd_update(&mut params, &grads, config.learning_rate)?;
        }
        let loss = total / samples.len() as f64;
        if !loss.is_finite() || !params.is_finite() {
            return Err(TrainError::Diverged { epoch, loss });
        }
        history.epoch_losses.push(loss);
    }
    Ok((params, history))
}

/// Initializes a model of `kind` from `config.seed` and runs per-sample SGD.
pub fn train_iterative(kind: ModelKind, samples: &SampleSet, config: &TrainConfig) -> Result<(ModelParams, LossHistory), TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptySamples);
    }
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    let width = samples.spec.input_width();
    match kind {
        ModelKind::Ann | ModelKind::Dnn => {
            let init = FeedforwardParams::init(kind, width, &mut rng);
            let (p, h) = sgd_epochs(init, samples, config)?;
            Ok((ModelParams::Feedforward(p), h))
        }
        ModelKind::Lstm => {
            let (p, h) = sgd_epochs(LstmParams::init(config.lstm_hidden, &mut rng), samples, config)?;
            Ok((ModelParams::Lstm(p), h))
        }
        ModelKind::LstmPc => {
            let (p, h) = sgd_epochs(LstmPcParams::init(config.lstm_hidden, &mut rng), samples, config)?;
            Ok((ModelParams::LstmPc(p), h))
        }
        ModelKind::Elm => Err(TrainError::Config("ELM is fitted in closed form, not by SGD".into())),
    }
}
