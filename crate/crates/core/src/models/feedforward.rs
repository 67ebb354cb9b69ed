use crate::math::{expect_len, sigmoid, uniform_matrix, Matrix, SeededRng, ShapeError};

use super::{ModelKind, Params};

/// Hidden nodes per layer for both ANN and DNN.
pub const FEEDFORWARD_HIDDEN: usize = 3;

/// One fully connected sigmoid layer, `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardParams {
    kind: ModelKind,
    layers: Vec<Layer>,
}

impl FeedforwardParams {
    /// Checks that layer dimensions chain and end in a single output.
    pub fn new(kind: ModelKind, layers: Vec<Layer>) -> Result<Self, ShapeError> {
        assert!(kind.is_feedforward(), "{kind} is not a feedforward architecture");
        let Some(last) = layers.last() else {
            return Err(ShapeError::Empty { rows: 0, cols: 0 });
        };
        expect_len("output layer width", 1, last.weights.rows())?;
        for (i, layer) in layers.iter().enumerate() {
            expect_len("layer bias", layer.weights.rows(), layer.biases.len())?;
            if i > 0 {
                expect_len("layer input width", layers[i - 1].weights.rows(), layer.weights.cols())?;
            }
        }
        Ok(FeedforwardParams { kind, layers })
    }

    /// Glorot-uniform weights and zero biases for the standard network:
    /// `input -> 3 -> 1` (ANN) or `input -> 3 -> 3 -> 1` (DNN).
    pub fn init(kind: ModelKind, input_width: usize, rng: &mut SeededRng) -> Self {
        let hidden_layers = match kind {
            ModelKind::Ann => 1,
            ModelKind::Dnn => 2,
            other => panic!("{other} is not a feedforward architecture"),
        };
        let mut widths = vec![input_width];
        widths.extend(std::iter::repeat_n(FEEDFORWARD_HIDDEN, hidden_layers));
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Layer { weights: uniform_matrix(rng, w[1], w[0], -bound, bound), biases: vec![0.0; w[1]] }
            })
            .collect();
        FeedforwardParams { kind, layers }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weights.cols()
    }
}

impl Params for FeedforwardParams {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        self.layers
            .iter()
            .flat_map(|l| [("weights", l.weights.as_slice()), ("biases", l.biases.as_slice())])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
            .collect()
    }
}

/// Activations of every layer; `activations[0]` is the input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedforwardCache {
    pub activations: Vec<Vec<f64>>,
}

impl FeedforwardCache {
    pub fn output(&self) -> f64 {
        self.activations.last().expect("cache holds the input at least")[0]
    }
}

pub fn feedforward_forward(params: &FeedforwardParams, x: &[f64]) -> Result<(f64, FeedforwardCache), ShapeError> {
    expect_len("feedforward input", params.input_width(), x.len())?;
    let mut activations = Vec::with_capacity(params.layers.len() + 1);
    activations.push(x.to_vec());
    for layer in &params.layers {
        let mut z = layer.biases.clone();
        layer.weights.matvec_acc(activations.last().unwrap(), &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));
        activations.push(z);
    }
    let cache = FeedforwardCache { activations };
    Ok((cache.output(), cache))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_half() {
        let mut p = FeedforwardParams::init(ModelKind::Dnn, 6, &mut SeededRng::new(1));
        for t in p.tensors_mut() {
            t.fill(0.0);
        }
        let (y, cache) = feedforward_forward(&p, &[0.3; 6]).unwrap();
        assert_eq!(y, 0.5);
        for layer in &cache.activations[1..] {
            assert!(layer.iter().all(|&a| a == 0.5));
        }
    }

    #[test]
    fn saturated_single_unit() {
        let layer = Layer { weights: Matrix::from_vec(1, 1, vec![0.0]).unwrap(), biases: vec![50.0] };
        let p = FeedforwardParams::new(ModelKind::Ann, vec![layer]).unwrap();
        let (y, _) = feedforward_forward(&p, &[0.7]).unwrap();
        assert!((y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matches_hand_rolled_loops() {
        let mut rng = SeededRng::new(99);
        let p = FeedforwardParams::init(ModelKind::Ann, 4, &mut rng);
        let mut p = p;
        for t in p.tensors_mut() {
            rng.fill_uniform(t, -1.0, 1.0);
        }
        let x = [0.1, 0.9, 0.4, 0.6];
        let (w1, b1) = (&p.layers()[0].weights, &p.layers()[0].biases);
        let (w2, b2) = (&p.layers()[1].weights, &p.layers()[1].biases);
        let mut hidden = [0.0; 3];
        for j in 0..3 {
            let mut s = b1[j];
            for i in 0..4 {
                s += w1[(j, i)] * x[i];
            }
            hidden[j] = 1.0 / (1.0 + (-s).exp());
        }
        let mut s = b2[0];
        for j in 0..3 {
            s += w2[(0, j)] * hidden[j];
        }
        let expected = 1.0 / (1.0 + (-s).exp());
        let (y, _) = feedforward_forward(&p, &x).unwrap();
        assert!((y - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_wrong_input_width() {
        let p = FeedforwardParams::init(ModelKind::Ann, 4, &mut SeededRng::new(0));
        assert!(matches!(feedforward_forward(&p, &[0.0; 6]), Err(ShapeError::Length { .. })));
    }

    #[test]
    fn layer_widths_follow_architecture() {
        let ann = FeedforwardParams::init(ModelKind::Ann, 6, &mut SeededRng::new(0));
        let dnn = FeedforwardParams::init(ModelKind::Dnn, 4, &mut SeededRng::new(0));
        let shape = |p: &FeedforwardParams| p.layers().iter().map(|l| l.weights.shape()).collect::<Vec<_>>();
        assert_eq!(shape(&ann), vec![(3, 6), (1, 3)]);
        assert_eq!(shape(&dnn), vec![(3, 4), (3, 3), (1, 3)]);
        assert_eq!(ann.parameter_count(), 18 + 3 + 3 + 1);
    }
}
