//! Analytic gradients against central finite differences, and the peephole
//! cell against the plain cell.

use wxcast_core::dataset::WindowSpec;
use wxcast_core::math::SeededRng;
use wxcast_core::models::{
    feedforward_forward, sequence_forward, FeedforwardParams, LstmParams, LstmPcParams, ModelKind, Params, Peepholes, Recurrent,
};
use wxcast_core::training::{backprop_feedforward, bptt, RecurrentGrad};

const STEP: f64 = 1e-5;

fn randomize<P: Params>(p: &mut P, rng: &mut SeededRng) {
    for t in p.tensors_mut() {
        rng.fill_uniform(t, -1.0, 1.0);
    }
}

fn random_vec(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(0.0, 1.0)).collect()
}

/// Largest violation of `|a - n| <= max(1e-4 * max(|a|, |n|), 1e-7)`, as a
/// ratio to the allowed error (<= 1 passes).
fn worst_ratio<P: Params>(model: &P, grads: &P, loss: impl Fn(&P) -> f64) -> f64 {
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|(_, t)| t.to_vec()).collect();
    let mut worst: f64 = 0.0;
    for (ti, tensor) in analytic.iter().enumerate() {
        for (j, &a) in tensor.iter().enumerate() {
            let mut plus = model.clone();
            plus.tensors_mut()[ti][j] += STEP;
            let mut minus = model.clone();
            minus.tensors_mut()[ti][j] -= STEP;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * STEP);
            let allowed = (1e-4 * a.abs().max(numeric.abs())).max(1e-7);
            worst = worst.max((a - numeric).abs() / allowed);
        }
    }
    worst
}

fn feedforward_case(kind: ModelKind, width: usize, rng: &mut SeededRng) -> f64 {
    let mut p = FeedforwardParams::init(kind, width, rng);
    randomize(&mut p, rng);
    let x = random_vec(rng, width);
    let y = rng.uniform(0.0, 1.0);
    let grads = backprop_feedforward(&p, &x, y).unwrap();
    worst_ratio(&p, &grads, |q| (feedforward_forward(q, &x).unwrap().0 - y).powi(2))
}

fn recurrent_case<R: RecurrentGrad>(model: R, testing: u8, rng: &mut SeededRng) -> f64 {
    let spec = WindowSpec::new(testing).unwrap();
    let window = random_vec(rng, spec.input_width());
    let y = rng.uniform(0.0, 1.0);
    let grads = bptt(&model, &window, y, spec).unwrap();
    worst_ratio(&model, &grads, |q| (sequence_forward(q, &window, spec).unwrap().0 - y).powi(2))
}

#[test]
fn feedforward_gradients_match_finite_differences() {
    let mut rng = SeededRng::new(11);
    for kind in [ModelKind::Ann, ModelKind::Dnn] {
        for i in 0..20 {
            let width = if i % 2 == 0 { 4 } else { 6 };
            let r = feedforward_case(kind, width, &mut rng);
            assert!(r <= 1.0, "{kind} width {width}: error ratio {r}");
        }
    }
}

#[test]
fn lstm_gradients_match_finite_differences() {
    let mut rng = SeededRng::new(12);
    for hidden in [1, 2, 4] {
        for testing in 1..=4 {
            let mut m = LstmParams::init(hidden, &mut rng);
            randomize(&mut m, &mut rng);
            let r = recurrent_case(m, testing, &mut rng);
            assert!(r <= 1.0, "hidden {hidden} testing {testing}: error ratio {r}");
        }
    }
}

#[test]
fn peephole_gradients_match_finite_differences() {
    let mut rng = SeededRng::new(13);
    for hidden in [1, 2, 4] {
        for testing in 1..=4 {
            let mut m = LstmPcParams::init(hidden, &mut rng);
            randomize(&mut m, &mut rng);
            let r = recurrent_case(m, testing, &mut rng);
            assert!(r <= 1.0, "hidden {hidden} testing {testing}: error ratio {r}");
        }
    }
}

#[test]
fn zero_peepholes_reduce_to_plain_cell() {
    let mut rng = SeededRng::new(14);
    for case in 0..200 {
        let hidden = 1 + case % 5;
        let spec = WindowSpec::new(1 + (case % 4) as u8).unwrap();
        let mut plain = LstmParams::init(hidden, &mut rng);
        randomize(&mut plain, &mut rng);
        let pc = LstmPcParams { lstm: plain.clone(), peepholes: Peepholes::zeros(hidden) };
        let window = random_vec(&mut rng, spec.input_width());
        let y = rng.uniform(0.0, 1.0);

        let a = sequence_forward(&plain, &window, spec).unwrap().0;
        let b = sequence_forward(&pc, &window, spec).unwrap().0;
        assert!((a - b).abs() <= 1e-12);

        let ga = bptt(&plain, &window, y, spec).unwrap();
        let gb = bptt(&pc, &window, y, spec).unwrap();
        for ((name, x), (_, z)) in ga.tensors().iter().zip(gb.lstm().tensors().iter()) {
            for (u, v) in x.iter().zip(z.iter()) {
                assert!((u - v).abs() <= 1e-12, "{name}: {u} vs {v}");
            }
        }
    }
}
