//! The five forecasting architectures and their forward passes.
//!
//! Feedforward nets (ANN with one hidden layer, DNN with two) use sigmoid
//! units throughout. The extreme learning machine keeps random, frozen hidden
//! weights and a linear output layer. The recurrent models run one cell step
//! per lag day on the pair `(T, H)` and read the last hidden state out through
//! a linear layer.

mod elm;
mod feedforward;
mod lstm;
pub mod persist;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use elm::{elm_predict, ElmEnsemble, ElmParams};
pub use feedforward::{feedforward_forward, FeedforwardCache, FeedforwardParams, Layer, FEEDFORWARD_HIDDEN};
pub use lstm::{
    lstm_pc_step, lstm_step, sequence_forward, GateWeights, LstmPcParams, LstmParams, Peepholes, Recurrent,
    SequenceCache, StepCache, LSTM_INPUT_WIDTH,
};

use crate::dataset::WindowSpec;
use crate::math::ShapeError;

/// Architecture tag. The declaration order is the tie-break order used when
/// ranking results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "ANN")]
    Ann,
    #[serde(rename = "DNN")]
    Dnn,
    #[serde(rename = "ELM")]
    Elm,
    #[serde(rename = "LSTM")]
    Lstm,
    #[serde(rename = "LSTM_PC")]
    LstmPc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Ann, ModelKind::Dnn, ModelKind::Elm, ModelKind::Lstm, ModelKind::LstmPc];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ann => "ANN",
            ModelKind::Dnn => "DNN",
            ModelKind::Elm => "ELM",
            ModelKind::Lstm => "LSTM",
            ModelKind::LstmPc => "LSTM_PC",
        }
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, ModelKind::Lstm | ModelKind::LstmPc)
    }

    pub fn is_feedforward(self) -> bool {
        matches!(self, ModelKind::Ann | ModelKind::Dnn)
    }

    /// Whether the model is trained by gradient descent (has lr and epochs).
    pub fn is_iterative(self) -> bool {
        self != ModelKind::Elm
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("unknown model kind `{0}` (expected ANN, DNN, ELM, LSTM or LSTM_PC)")]
pub struct UnknownModelKind(pub String);

impl FromStr for ModelKind {
    type Err = UnknownModelKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "ANN" => Ok(ModelKind::Ann),
            "DNN" => Ok(ModelKind::Dnn),
            "ELM" => Ok(ModelKind::Elm),
            "LSTM" => Ok(ModelKind::Lstm),
            "LSTM_PC" | "LSTMPC" => Ok(ModelKind::LstmPc),
            _ => Err(UnknownModelKind(s.to_string())),
        }
    }
}

/// Uniform access to every trainable array of a model, in a fixed order.
///
/// Gradients share the parameter type: a gradient set is a value of the same
/// shape whose entries hold partial derivatives.
pub trait Params: Clone {
    /// Named views of every parameter array, in declaration order.
    fn tensors(&self) -> Vec<(&'static str, &[f64])>;

    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// Same shapes, all entries zero.
    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// A trained model of any architecture.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Feedforward(FeedforwardParams),
    Elm(ElmEnsemble),
    Lstm(LstmParams),
    LstmPc(LstmPcParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Feedforward(p) => p.kind(),
            ModelParams::Elm(_) => ModelKind::Elm,
            ModelParams::Lstm(_) => ModelKind::Lstm,
            ModelParams::LstmPc(_) => ModelKind::LstmPc,
        }
    }

    /// Normalized one-step prediction for one input window.
    pub fn predict(&self, window: &[f64], spec: WindowSpec) -> Result<f64, ShapeError> {
        match self {
            ModelParams::Feedforward(p) => feedforward_forward(p, window).map(|(y, _)| y),
            ModelParams::Elm(e) => e.predict(window),
            ModelParams::Lstm(p) => sequence_forward(p, window, spec).map(|(y, _)| y),
            ModelParams::LstmPc(p) => sequence_forward(p, window, spec).map(|(y, _)| y),
        }
    }
}
