use crate::dataset::WindowSpec;
use crate::math::{expect_len, sigmoid, uniform_matrix, Matrix, SeededRng, ShapeError};

use super::Params;

/// Each recurrent step sees one lag day: `(temperature, humidity)`.
pub const LSTM_INPUT_WIDTH: usize = 2;

/// Input, recurrent and bias terms of one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateWeights {
    /// `hidden x 2`
    pub input: Matrix,
    /// `hidden x hidden`
    pub recurrent: Matrix,
    pub bias: Vec<f64>,
}

impl GateWeights {
    fn init(hidden: usize, rng: &mut SeededRng) -> Self {
        let in_bound = (6.0 / (LSTM_INPUT_WIDTH + hidden) as f64).sqrt();
        let rec_bound = (6.0 / (2 * hidden) as f64).sqrt();
        GateWeights {
            input: uniform_matrix(rng, hidden, LSTM_INPUT_WIDTH, -in_bound, in_bound),
            recurrent: uniform_matrix(rng, hidden, hidden, -rec_bound, rec_bound),
            bias: vec![0.0; hidden],
        }
    }

    fn zeros(hidden: usize) -> Self {
        GateWeights {
            input: Matrix::zeros(hidden, LSTM_INPUT_WIDTH),
            recurrent: Matrix::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }

    /// `bias + input·x + recurrent·h`
    fn preactivation(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut a = self.bias.clone();
        self.input.matvec_acc(x, &mut a);
        self.recurrent.matvec_acc(h, &mut a);
        a
    }

    fn check(&self, hidden: usize) -> Result<(), ShapeError> {
        expect_len("gate input rows", hidden, self.input.rows())?;
        expect_len("gate input cols", LSTM_INPUT_WIDTH, self.input.cols())?;
        expect_len("gate recurrent rows", hidden, self.recurrent.rows())?;
        expect_len("gate recurrent cols", hidden, self.recurrent.cols())?;
        expect_len("gate bias", hidden, self.bias.len())
    }

    fn tensors(&self) -> [&[f64]; 3] {
        [self.input.as_slice(), self.recurrent.as_slice(), self.bias.as_slice()]
    }

    fn tensors_mut(&mut self) -> [&mut [f64]; 3] {
        [self.input.as_mut_slice(), self.recurrent.as_mut_slice(), self.bias.as_mut_slice()]
    }
}

/// Standard LSTM cell plus a linear readout of the final hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_gate: GateWeights,
    pub forget_gate: GateWeights,
    pub candidate: GateWeights,
    pub output_gate: GateWeights,
    pub readout: Vec<f64>,
    pub readout_bias: f64,
}

impl LstmParams {
    pub fn zeros(hidden: usize) -> Self {
        LstmParams {
            input_gate: GateWeights::zeros(hidden),
            forget_gate: GateWeights::zeros(hidden),
            candidate: GateWeights::zeros(hidden),
            output_gate: GateWeights::zeros(hidden),
            readout: vec![0.0; hidden],
            readout_bias: 0.0,
        }
    }

    /// Glorot-uniform weight matrices, zero biases.
    pub fn init(hidden: usize, rng: &mut SeededRng) -> Self {
        let input_gate = GateWeights::init(hidden, rng);
        let forget_gate = GateWeights::init(hidden, rng);
        let candidate = GateWeights::init(hidden, rng);
        let output_gate = GateWeights::init(hidden, rng);
        let bound = (6.0 / (hidden + 1) as f64).sqrt();
        let readout = (0..hidden).map(|_| rng.uniform(-bound, bound)).collect();
        LstmParams { input_gate, forget_gate, candidate, output_gate, readout, readout_bias: 0.0 }
    }

    pub fn hidden_size(&self) -> usize {
        self.readout.len()
    }

    pub fn check(&self) -> Result<(), ShapeError> {
        let n = self.hidden_size();
        for g in [&self.input_gate, &self.forget_gate, &self.candidate, &self.output_gate] {
            g.check(n)?;
        }
        Ok(())
    }

    pub(crate) fn gates(&self) -> [&GateWeights; 4] {
        [&self.input_gate, &self.forget_gate, &self.candidate, &self.output_gate]
    }

    pub(crate) fn gates_mut(&mut self) -> [&mut GateWeights; 4] {
        [&mut self.input_gate, &mut self.forget_gate, &mut self.candidate, &mut self.output_gate]
    }
}

const GATE_TENSOR_NAMES: [&str; 12] = [
    "input_gate.input",
    "input_gate.recurrent",
    "input_gate.bias",
    "forget_gate.input",
    "forget_gate.recurrent",
    "forget_gate.bias",
    "candidate.input",
    "candidate.recurrent",
    "candidate.bias",
    "output_gate.input",
    "output_gate.recurrent",
    "output_gate.bias",
];

impl Params for LstmParams {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let mut out: Vec<(&'static str, &[f64])> = GATE_TENSOR_NAMES
            .iter()
            .copied()
            .zip(self.gates().into_iter().flat_map(GateWeights::tensors))
            .collect();
        out.push(("readout", &self.readout));
        out.push(("readout_bias", std::slice::from_ref(&self.readout_bias)));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let LstmParams { input_gate, forget_gate, candidate, output_gate, readout, readout_bias } = self;
        let mut out: Vec<&mut [f64]> = [input_gate, forget_gate, candidate, output_gate]
            .into_iter()
            .flat_map(GateWeights::tensors_mut)
            .collect();
        out.push(readout.as_mut_slice());
        out.push(std::slice::from_mut(readout_bias));
        out
    }
}

/// Elementwise cell-to-gate weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Peepholes {
    /// Previous cell state into the input gate.
    pub input: Vec<f64>,
    /// Previous cell state into the forget gate.
    pub forget: Vec<f64>,
    /// Current cell state into the output gate.
    pub output: Vec<f64>,
}

impl Peepholes {
    pub fn zeros(hidden: usize) -> Self {
        Peepholes { input: vec![0.0; hidden], forget: vec![0.0; hidden], output: vec![0.0; hidden] }
    }
}

/// LSTM with peephole connections.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmPcParams {
    pub lstm: LstmParams,
    pub peepholes: Peepholes,
}

impl LstmPcParams {
    pub fn zeros(hidden: usize) -> Self {
        LstmPcParams { lstm: LstmParams::zeros(hidden), peepholes: Peepholes::zeros(hidden) }
    }

    /// Same initialization as [`LstmParams::init`]; peepholes start at zero.
    pub fn init(hidden: usize, rng: &mut SeededRng) -> Self {
        LstmPcParams { lstm: LstmParams::init(hidden, rng), peepholes: Peepholes::zeros(hidden) }
    }

    pub fn hidden_size(&self) -> usize {
        self.lstm.hidden_size()
    }
}

impl Params for LstmPcParams {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        let mut out = self.lstm.tensors();
        out.push(("peephole.input", &self.peepholes.input));
        out.push(("peephole.forget", &self.peepholes.forget));
        out.push(("peephole.output", &self.peepholes.output));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let LstmPcParams { lstm, peepholes } = self;
        let mut out = lstm.tensors_mut();
        out.push(peepholes.input.as_mut_slice());
        out.push(peepholes.forget.as_mut_slice());
        out.push(peepholes.output.as_mut_slice());
        out
    }
}

/// Anything that runs the shared LSTM cell, with or without peepholes.
pub trait Recurrent: Params {
    fn lstm(&self) -> &LstmParams;
    fn peepholes(&self) -> Option<&Peepholes>;

    fn hidden_size(&self) -> usize {
        self.lstm().hidden_size()
    }
}

impl Recurrent for LstmParams {
    fn lstm(&self) -> &LstmParams {
        self
    }

    fn peepholes(&self) -> Option<&Peepholes> {
        None
    }
}

impl Recurrent for LstmPcParams {
    fn lstm(&self) -> &LstmParams {
        &self.lstm
    }

    fn peepholes(&self) -> Option<&Peepholes> {
        Some(&self.peepholes)
    }
}

/// Everything one cell step computed.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub input_gate: Vec<f64>,
    pub forget_gate: Vec<f64>,
    pub candidate: Vec<f64>,
    pub cell: Vec<f64>,
    pub output_gate: Vec<f64>,
    pub cell_tanh: Vec<f64>,
    pub hidden: Vec<f64>,
}

fn check_step(hidden: usize, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(), ShapeError> {
    expect_len("step input", LSTM_INPUT_WIDTH, x.len())?;
    expect_len("previous hidden state", hidden, h_prev.len())?;
    expect_len("previous cell state", hidden, c_prev.len())
}

pub(crate) fn cell_step(lstm: &LstmParams, peep: Option<&Peepholes>, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let n = lstm.hidden_size();
    let mut input_gate = lstm.input_gate.preactivation(x, h_prev);
    let mut forget_gate = lstm.forget_gate.preactivation(x, h_prev);
    if let Some(p) = peep {
        for k in 0..n {
            input_gate[k] += p.input[k] * c_prev[k];
            forget_gate[k] += p.forget[k] * c_prev[k];
        }
    }
    input_gate.iter_mut().for_each(|v| *v = sigmoid(*v));
    forget_gate.iter_mut().for_each(|v| *v = sigmoid(*v));

    let mut candidate = lstm.candidate.preactivation(x, h_prev);
    candidate.iter_mut().for_each(|v| *v = v.tanh());

    let cell: Vec<f64> = (0..n).map(|k| forget_gate[k] * c_prev[k] + input_gate[k] * candidate[k]).collect();

    let mut output_gate = lstm.output_gate.preactivation(x, h_prev);
    if let Some(p) = peep {
        // The output gate looks at the freshly updated cell.
        for k in 0..n {
            output_gate[k] += p.output[k] * cell[k];
        }
    }
    output_gate.iter_mut().for_each(|v| *v = sigmoid(*v));

    let cell_tanh: Vec<f64> = cell.iter().map(|c| c.tanh()).collect();
    let hidden = (0..n).map(|k| output_gate[k] * cell_tanh[k]).collect();
    StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        input_gate,
        forget_gate,
        candidate,
        cell,
        output_gate,
        cell_tanh,
        hidden,
    }
}

/// One LSTM step; returns `(h_t, c_t, cache)`.
pub fn lstm_step(
    params: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, StepCache), ShapeError> {
    params.check()?;
    check_step(params.hidden_size(), x, h_prev, c_prev)?;
    let cache = cell_step(params, None, x, h_prev, c_prev);
    Ok((cache.hidden.clone(), cache.cell.clone(), cache))
}

/// One peephole-LSTM step; returns `(h_t, c_t, cache)`.
pub fn lstm_pc_step(
    params: &LstmPcParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, StepCache), ShapeError> {
    params.lstm.check()?;
    let n = params.hidden_size();
    expect_len("input peephole", n, params.peepholes.input.len())?;
    expect_len("forget peephole", n, params.peepholes.forget.len())?;
    expect_len("output peephole", n, params.peepholes.output.len())?;
    check_step(n, x, h_prev, c_prev)?;
    let cache = cell_step(&params.lstm, Some(&params.peepholes), x, h_prev, c_prev);
    Ok((cache.hidden.clone(), cache.cell.clone(), cache))
}

/// Per-step caches of a full window, oldest step first.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceCache {
    pub steps: Vec<StepCache>,
}

/// Runs the cell over a lag window laid out as `[T oldest..newest, H oldest..newest]`
/// from zero state and applies the linear readout to the last hidden state.
pub fn sequence_forward<R: Recurrent>(model: &R, window: &[f64], spec: WindowSpec) -> Result<(f64, SequenceCache), ShapeError> {
    let lags = spec.lag_count();
    expect_len("recurrent window", 2 * lags, window.len())?;
    let lstm = model.lstm();
    lstm.check()?;
    let n = lstm.hidden_size();
    let peep = model.peepholes();
    if let Some(p) = peep {
        expect_len("input peephole", n, p.input.len())?;
        expect_len("forget peephole", n, p.forget.len())?;
        expect_len("output peephole", n, p.output.len())?;
    }
    let mut steps: Vec<StepCache> = Vec::with_capacity(lags);
    let zeros = vec![0.0; n];
    for t in 0..lags {
        let x = [window[t], window[lags + t]];
        let (h, c) = match steps.last() {
            Some(prev) => (prev.hidden.as_slice(), prev.cell.as_slice()),
            None => (zeros.as_slice(), zeros.as_slice()),
        };
        let step = cell_step(lstm, peep, &x, h, c);
        steps.push(step);
    }
    let h_last = &steps.last().expect("lag count is positive").hidden;
    let yhat = lstm.readout_bias + h_last.iter().zip(&lstm.readout).map(|(h, w)| h * w).sum::<f64>();
    Ok((yhat, SequenceCache { steps }))
}
