//! Closed-form fitting of extreme learning machines.

use crate::dataset::SampleSet;
use crate::math::{lstsq, uniform_matrix, SeededRng};
use crate::models::{ElmEnsemble, ElmParams};

use super::TrainError;

pub const DEFAULT_ELM_HIDDEN: usize = 20;

/// Members per ensemble, one per epoch setting of the iterative models.
pub const ELM_ENSEMBLE_SIZE: usize = 3;

/// Range of the random hidden weights and biases.
const HIDDEN_INIT_RANGE: (f64, f64) = (-1.0, 1.0);

/// Draws hidden weights from `seed` and solves the output weights as the
/// minimum-norm least-squares solution of `G α ≈ C`.
pub fn elm_fit(samples: &SampleSet, n_hidden: usize, seed: u64) -> Result<ElmParams, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptySamples);
    }
    if n_hidden == 0 {
        return Err(TrainError::Config("ELM needs at least one hidden node".into()));
    }
    let width = samples.inputs[0].len();
    let mut rng = SeededRng::new(seed);
    let (lo, hi) = HIDDEN_INIT_RANGE;
    let input_weights = uniform_matrix(&mut rng, n_hidden, width, lo, hi);
    let biases = (0..n_hidden).map(|_| rng.uniform(lo, hi)).collect();
    let mut params = ElmParams { input_weights, biases, output_weights: vec![0.0; n_hidden] };
    let g = params.hidden_matrix(&samples.inputs)?;
    params.output_weights = lstsq(&g, &samples.targets)?;
    Ok(params)
}

/// Member seeds derived from a base seed.
pub fn ensemble_seeds(base_seed: u64) -> [u64; ELM_ENSEMBLE_SIZE] {
    let mut out = [0; ELM_ENSEMBLE_SIZE];
    for (i, s) in out.iter_mut().enumerate() {
        *s = SeededRng::new(base_seed ^ (0xA5A5_0000 + i as u64)).next_u64();
    }
    out
}

pub fn elm_ensemble_fit(samples: &SampleSet, n_hidden: usize, seeds: &[u64]) -> Result<ElmEnsemble, TrainError> {
    if seeds.is_empty() {
        return Err(TrainError::Config("ensemble needs at least one seed".into()));
    }
    let members = seeds.iter().map(|&s| elm_fit(samples, n_hidden, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(ElmEnsemble { members })
}

/// Fits the three-member ensemble for `base_seed` and predicts `x`.
pub fn elm_ensemble_predict(samples: &SampleSet, n_hidden: usize, base_seed: u64, x: &[f64]) -> Result<f64, TrainError> {
    let ensemble = elm_ensemble_fit(samples, n_hidden, &ensemble_seeds(base_seed))?;
    Ok(ensemble.predict(x)?)
}
