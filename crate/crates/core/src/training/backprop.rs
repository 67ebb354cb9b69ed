//! Exact gradients of the squared one-step error.

use crate::dataset::WindowSpec;
use crate::math::{expect_len, ShapeError};
use crate::models::{
    feedforward_forward, sequence_forward, FeedforwardParams, LstmParams, LstmPcParams, Params, Peepholes, Recurrent,
};

/// Recurrent parameter sets that can be rebuilt from cell and peephole parts,
/// which is how gradients of either flavour are assembled.
pub trait RecurrentGrad: Recurrent {
    fn gradient_parts(&mut self) -> (&mut LstmParams, Option<&mut Peepholes>);
}

impl RecurrentGrad for LstmParams {
    fn gradient_parts(&mut self) -> (&mut LstmParams, Option<&mut Peepholes>) {
        (self, None)
    }
}

impl RecurrentGrad for LstmPcParams {
    fn gradient_parts(&mut self) -> (&mut LstmParams, Option<&mut Peepholes>) {
        (&mut self.lstm, Some(&mut self.peepholes))
    }
}

/// Adds `∂L/∂θ` for `L = (ŷ − y)²` into `grads`; returns `L`.
pub fn accumulate_feedforward(
    params: &FeedforwardParams,
    x: &[f64],
    y: f64,
    grads: &mut FeedforwardParams,
) -> Result<f64, ShapeError> {
    let (yhat, cache) = feedforward_forward(params, x)?;
    let layers = params.layers();
    let err = yhat - y;
    // δ at the output pre-activation.
    let mut delta = vec![2.0 * err * yhat * (1.0 - yhat)];
    for l in (0..layers.len()).rev() {
        let input = &cache.activations[l];
        let g = &mut grads.layers_mut()[l];
        g.weights.add_outer(&delta, input);
        for (b, d) in g.biases.iter_mut().zip(&delta) {
            *b += d;
        }
        if l > 0 {
            let mut back = vec![0.0; input.len()];
            layers[l].weights.matvec_t_acc(&delta, &mut back);
            for (b, &a) in back.iter_mut().zip(input) {
                *b *= a * (1.0 - a);
            }
            delta = back;
        }
    }
    Ok(err * err)
}

pub fn backprop_feedforward(params: &FeedforwardParams, x: &[f64], y: f64) -> Result<FeedforwardParams, ShapeError> {
    let mut grads = params.zeros_like();
    accumulate_feedforward(params, x, y, &mut grads)?;
    Ok(grads)
}

/// Backpropagation through time over one lag window; adds into `grads` and
/// returns the squared error.
pub fn accumulate_bptt<R: RecurrentGrad>(
    model: &R,
    window: &[f64],
    y: f64,
    spec: WindowSpec,
    grads: &mut R,
) -> Result<f64, ShapeError> {
    let (yhat, cache) = sequence_forward(model, window, spec)?;
    let lstm = model.lstm();
    let peep = model.peepholes();
    let n = lstm.hidden_size();
    let (g, mut g_peep) = grads.gradient_parts();
    expect_len("gradient hidden size", n, g.hidden_size())?;

    let err = yhat - y;
    let dy = 2.0 * err;
    let last = cache.steps.last().expect("window has at least one step");
    for k in 0..n {
        g.readout[k] += dy * last.hidden[k];
    }
    g.readout_bias += dy;

    let mut dh: Vec<f64> = lstm.readout.iter().map(|w| w * dy).collect();
    let mut dc = vec![0.0; n];
    let mut da_i = vec![0.0; n];
    let mut da_f = vec![0.0; n];
    let mut da_g = vec![0.0; n];
    let mut da_o = vec![0.0; n];

    for step in cache.steps.iter().rev() {
        for k in 0..n {
            let o = step.output_gate[k];
            let tc = step.cell_tanh[k];
            da_o[k] = dh[k] * tc * o * (1.0 - o);
            dc[k] += dh[k] * o * (1.0 - tc * tc);
            if let Some(p) = peep {
                dc[k] += da_o[k] * p.output[k];
            }
            let i = step.input_gate[k];
            let f = step.forget_gate[k];
            let cand = step.candidate[k];
            da_i[k] = dc[k] * cand * i * (1.0 - i);
            da_f[k] = dc[k] * step.c_prev[k] * f * (1.0 - f);
            da_g[k] = dc[k] * i * (1.0 - cand * cand);
        }

        let deltas = [&da_i, &da_f, &da_g, &da_o];
        for (gate, delta) in g.gates_mut().into_iter().zip(deltas) {
            gate.input.add_outer(delta, &step.x);
            gate.recurrent.add_outer(delta, &step.h_prev);
            for (b, d) in gate.bias.iter_mut().zip(delta.iter()) {
                *b += d;
            }
        }
        if let Some(gp) = g_peep.as_deref_mut() {
            for k in 0..n {
                gp.input[k] += da_i[k] * step.c_prev[k];
                gp.forget[k] += da_f[k] * step.c_prev[k];
                gp.output[k] += da_o[k] * step.cell[k];
            }
        }

        // Carry to the previous step.
        let mut dh_prev = vec![0.0; n];
        for (gate, delta) in lstm.gates().into_iter().zip(deltas) {
            gate.recurrent.matvec_t_acc(delta, &mut dh_prev);
        }
        for k in 0..n {
            let mut carry = dc[k] * step.forget_gate[k];
            if let Some(p) = peep {
                carry += da_i[k] * p.input[k] + da_f[k] * p.forget[k];
            }
            dc[k] = carry;
        }
        dh = dh_prev;
    }
    Ok(err * err)
}

pub fn bptt<R: RecurrentGrad>(model: &R, window: &[f64], y: f64, spec: WindowSpec) -> Result<R, ShapeError> {
    let mut grads = model.zeros_like();
    accumulate_bptt(model, window, y, spec, &mut grads)?;
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SeededRng;
    use crate::models::ModelKind;

    fn randomize<P: Params>(p: &mut P, rng: &mut SeededRng) {
        for t in p.tensors_mut() {
            rng.fill_uniform(t, -1.0, 1.0);
        }
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let p = FeedforwardParams::init(ModelKind::Dnn, 4, &mut SeededRng::new(2));
        let x = [0.2, 0.4, 0.6, 0.8];
        let (yhat, _) = feedforward_forward(&p, &x).unwrap();
        let g = backprop_feedforward(&p, &x, yhat).unwrap();
        assert!(g.tensors().iter().all(|(_, t)| t.iter().all(|&v| v == 0.0)));

        let mut l = LstmPcParams::zeros(2);
        randomize(&mut l, &mut SeededRng::new(4));
        let spec = WindowSpec::new(1).unwrap();
        let w = [0.1, 0.3, 0.5, 0.7];
        let (yhat, _) = sequence_forward(&l, &w, spec).unwrap();
        let g = bptt(&l, &w, yhat, spec).unwrap();
        assert!(g.tensors().iter().all(|(_, t)| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn accumulating_twice_doubles() {
        let p = FeedforwardParams::init(ModelKind::Ann, 6, &mut SeededRng::new(8));
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let once = backprop_feedforward(&p, &x, 0.9).unwrap();
        let mut twice = p.zeros_like();
        accumulate_feedforward(&p, &x, 0.9, &mut twice).unwrap();
        accumulate_feedforward(&p, &x, 0.9, &mut twice).unwrap();
        for ((_, a), (_, b)) in once.tensors().iter().zip(twice.tensors().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(2.0 * x, *y);
            }
        }
    }

    #[test]
    fn readout_gradient_is_error_times_state() {
        let mut l = LstmParams::zeros(3);
        randomize(&mut l, &mut SeededRng::new(12));
        let spec = WindowSpec::new(3).unwrap();
        let w = [0.1, 0.2, 0.3, 0.9, 0.8, 0.7];
        let (yhat, cache) = sequence_forward(&l, &w, spec).unwrap();
        let g = bptt(&l, &w, 0.25, spec).unwrap();
        let dy = 2.0 * (yhat - 0.25);
        assert_eq!(g.readout_bias, dy);
        for k in 0..3 {
            assert_eq!(g.readout[k], dy * cache.steps[2].hidden[k]);
        }
    }
}
