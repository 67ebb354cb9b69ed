use crate::math::{expect_len, sigmoid, Matrix, ShapeError};

/// Extreme learning machine: `z = Σ αᵢ · sigmoid(wᵢ·x + bᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmParams {
    /// `n_hidden x input_width`, frozen after the random draw.
    pub input_weights: Matrix,
    pub biases: Vec<f64>,
    /// One output weight per hidden node (single output).
    pub output_weights: Vec<f64>,
}

impl ElmParams {
    pub fn hidden_count(&self) -> usize {
        self.input_weights.rows()
    }

    pub fn input_width(&self) -> usize {
        self.input_weights.cols()
    }

    /// Hidden-layer activations for one input.
    pub fn hidden(&self, x: &[f64]) -> Result<Vec<f64>, ShapeError> {
        expect_len("ELM input", self.input_width(), x.len())?;
        let mut h = self.biases.clone();
        self.input_weights.matvec_acc(x, &mut h);
        h.iter_mut().for_each(|v| *v = sigmoid(*v));
        Ok(h)
    }

    /// Hidden-layer output matrix `G`, one row per input row.
    pub fn hidden_matrix(&self, inputs: &[Vec<f64>]) -> Result<Matrix, ShapeError> {
        let rows = inputs.iter().map(|x| self.hidden(x)).collect::<Result<Vec<_>, _>>()?;
        Matrix::from_rows(&rows)
    }
}

pub fn elm_predict(params: &ElmParams, x: &[f64]) -> Result<f64, ShapeError> {
    let h = params.hidden(x)?;
    Ok(h.iter().zip(&params.output_weights).map(|(a, b)| a * b).sum())
}

/// Independently drawn ELMs whose predictions are averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmEnsemble {
    pub members: Vec<ElmParams>,
}

impl ElmEnsemble {
    pub fn predict(&self, x: &[f64]) -> Result<f64, ShapeError> {
        let mut sum = 0.0;
        for m in &self.members {
            sum += elm_predict(m, x)?;
        }
        Ok(sum / self.members.len() as f64)
    }
}
