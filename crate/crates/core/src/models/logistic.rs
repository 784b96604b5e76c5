//! Convex binary classification on synthetic Gaussian blobs: sigmoid plus
//! mean binary cross-entropy, with an L2 term (weight 5e-4).

use crate::error::{Error, Result};
use crate::rng::Rng64;
use crate::vector::ParamVector;

use super::Task;

const WEIGHT_DECAY: f64 = 5e-4;

pub struct LogisticTask {
    dim: usize,
    /// Feature rows of length dim; the last entry is the bias input 1.0
    /// for generated data, or a raw feature for CSV data.
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable -[y ln s + (1-y) ln(1-s)] for s = sigmoid(z).
fn bce(z: f64, y: f64) -> f64 {
    // ln(1 + e^-|z|) + max(z, 0) - y z
    (-z.abs()).exp().ln_1p() + z.max(0.0) - y * z
}

impl LogisticTask {
    /// Two-class Gaussian blobs in dim-1 features plus a bias input.
    pub fn new(dim: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidConfig("logistic task needs dim >= 2".into()));
        }
        if n_samples < 2 {
            return Err(Error::InvalidConfig(
                "logistic task needs at least 2 samples".into(),
            ));
        }
        let mut rng = Rng64::new(seed);
        let feature_dim = dim - 1;
        let mut features = Vec::with_capacity(n_samples);
        let mut labels = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let label = (i % 2) as f64;
            let center = if label > 0.5 { 1.5 } else { -1.5 };
            let mut row: Vec<f64> = (0..feature_dim)
                .map(|_| center + rng.next_gaussian())
                .collect();
            row.push(1.0); // bias input
            features.push(row);
            labels.push(label);
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    /// Build from an explicit dataset with binary integer labels.
    pub fn from_data(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Dataset("empty dataset".into()));
        }
        let dim = features[0].len();
        if dim < 2 {
            return Err(Error::InvalidConfig("logistic task needs dim >= 2".into()));
        }
        if features.iter().any(|r| r.len() != dim) {
            return Err(Error::Dataset("ragged feature rows".into()));
        }
        if labels.len() != features.len() {
            return Err(Error::Dataset("label/feature count mismatch".into()));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Dataset(
                "logistic task requires binary labels 0/1".into(),
            ));
        }
        Ok(Self {
            dim,
            features,
            labels: labels.into_iter().map(|l| l as f64).collect(),
        })
    }

    pub fn accuracy(&self, params: &ParamVector, indices: &[usize]) -> f64 {
        let w = params.as_slice();
        let correct = indices
            .iter()
            .filter(|&&i| {
                let z: f64 = self.features[i].iter().zip(w).map(|(a, b)| a * b).sum();
                (z > 0.0) == (self.labels[i] > 0.5)
            })
            .count();
        correct as f64 / indices.len() as f64
    }
}

impl Task for LogisticTask {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.features.len()
    }

    fn loss(&self, params: &ParamVector, indices: &[usize]) -> f64 {
        let w = params.as_slice();
        let mut total = 0.0;
        for &i in indices {
            let z: f64 = self.features[i].iter().zip(w).map(|(a, b)| a * b).sum();
            total += bce(z, self.labels[i]);
        }
        let l2: f64 = 0.5 * WEIGHT_DECAY * w.iter().map(|v| v * v).sum::<f64>();
        total / indices.len() as f64 + l2
    }

    fn grad(&self, params: &ParamVector, indices: &[usize]) -> ParamVector {
        let w = params.as_slice();
        let mut g = vec![0.0; self.dim];
        for &i in indices {
            let z: f64 = self.features[i].iter().zip(w).map(|(a, b)| a * b).sum();
            let err = sigmoid(z) - self.labels[i];
            for (gj, xj) in g.iter_mut().zip(&self.features[i]) {
                *gj += err * xj;
            }
        }
        let inv = 1.0 / indices.len() as f64;
        for (gj, wj) in g.iter_mut().zip(w) {
            *gj = *gj * inv + WEIGHT_DECAY * wj;
        }
        ParamVector::new(g).expect("finite gradient")
    }

    fn f_star(&self) -> Option<f64> {
        None
    }
}
