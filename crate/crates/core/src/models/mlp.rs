//! Non-convex testbed: one-hidden-layer tanh network with softmax
//! cross-entropy and hand-written backpropagation. tanh keeps the loss
//! smooth, which the convergence analysis assumes.

use crate::error::{Error, Result};
use crate::rng::Rng64;
use crate::vector::ParamVector;

use super::Task;

pub struct MlpTask {
    in_dim: usize,
    hidden: usize,
    classes: usize,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    init: Vec<f64>,
}

impl MlpTask {
    pub fn new(
        in_dim: usize,
        hidden: usize,
        classes: usize,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if hidden < 1 || in_dim < 1 || classes < 2 {
            return Err(Error::InvalidConfig(
                "mlp task needs in_dim >= 1, hidden >= 1, classes >= 2".into(),
            ));
        }
        if n_samples < classes {
            return Err(Error::InvalidConfig(
                "mlp task needs at least one sample per class".into(),
            ));
        }
        let mut rng = Rng64::new(seed);
        // Class blobs on scaled coordinate directions.
        let mut features = Vec::with_capacity(n_samples);
        let mut labels = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let label = i % classes;
            let row: Vec<f64> = (0..in_dim)
                .map(|d| {
                    let center = if d % classes == label { 2.0 } else { -0.5 };
                    center + 0.7 * rng.next_gaussian()
                })
                .collect();
            features.push(row);
            labels.push(label);
        }
        let dim = Self::param_count(in_dim, hidden, classes);
        let mut init = Vec::with_capacity(dim);
        // W1 and b1 use fan_in = in_dim, W2 and b2 use fan_in = hidden.
        let bound1 = 1.0 / (in_dim as f64).sqrt();
        for _ in 0..hidden * in_dim + hidden {
            init.push((2.0 * rng.next_f64() - 1.0) * bound1);
        }
        let bound2 = 1.0 / (hidden as f64).sqrt();
        for _ in 0..classes * hidden + classes {
            init.push((2.0 * rng.next_f64() - 1.0) * bound2);
        }
        Ok(Self {
            in_dim,
            hidden,
            classes,
            features,
            labels,
            init,
        })
    }

    pub fn param_count(in_dim: usize, hidden: usize, classes: usize) -> usize {
        hidden * in_dim + hidden + classes * hidden + classes
    }

    fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let w1 = self.hidden * self.in_dim;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.classes * self.hidden;
        (&p[..w1], &p[w1..b1], &p[b1..w2], &p[w2..])
    }

    /// Forward pass returning hidden activations and class log-probs.
    fn forward(&self, p: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (w1, b1, w2, b2) = self.split(p);
        let mut h = vec![0.0; self.hidden];
        for j in 0..self.hidden {
            let mut z = b1[j];
            for d in 0..self.in_dim {
                z += w1[j * self.in_dim + d] * x[d];
            }
            h[j] = z.tanh();
        }
        let mut logits = vec![0.0; self.classes];
        for c in 0..self.classes {
            let mut z = b2[c];
            for j in 0..self.hidden {
                z += w2[c * self.hidden + j] * h[j];
            }
            logits[c] = z;
        }
        let max = logits.iter().cloned().fold(f64::MIN, f64::max);
        let lse = max
            + logits
                .iter()
                .map(|z| (z - max).exp())
                .sum::<f64>()
                .ln();
        let log_probs = logits.iter().map(|z| z - lse).collect();
        (h, log_probs)
    }
}

impl Task for MlpTask {
    fn dim(&self) -> usize {
        Self::param_count(self.in_dim, self.hidden, self.classes)
    }

    fn num_samples(&self) -> usize {
        self.features.len()
    }

    fn loss(&self, params: &ParamVector, indices: &[usize]) -> f64 {
        let p = params.as_slice();
        let mut total = 0.0;
        for &i in indices {
            let (_, log_probs) = self.forward(p, &self.features[i]);
            total -= log_probs[self.labels[i]];
        }
        total / indices.len() as f64
    }

    fn grad(&self, params: &ParamVector, indices: &[usize]) -> ParamVector {
        let p = params.as_slice();
        let (w1, _b1, w2, _b2) = self.split(p);
        let mut g = vec![0.0; self.dim()];
        let w1_len = self.hidden * self.in_dim;
        let b1_off = w1_len;
        let w2_off = b1_off + self.hidden;
        let b2_off = w2_off + self.classes * self.hidden;
        let _ = w1;
        for &i in indices {
            let x = &self.features[i];
            let (h, log_probs) = self.forward(p, x);
            // dL/dlogit_c = softmax_c - 1{c = label}
            let mut dlogit: Vec<f64> =
                log_probs.iter().map(|lp| lp.exp()).collect();
            dlogit[self.labels[i]] -= 1.0;
            // Output layer.
            for c in 0..self.classes {
                for j in 0..self.hidden {
                    g[w2_off + c * self.hidden + j] += dlogit[c] * h[j];
                }
                g[b2_off + c] += dlogit[c];
            }
            // Hidden layer through tanh'(z) = 1 - h^2.
            for j in 0..self.hidden {
                let mut dh = 0.0;
                for c in 0..self.classes {
                    dh += dlogit[c] * w2[c * self.hidden + j];
                }
                let dz = dh * (1.0 - h[j] * h[j]);
                for d in 0..self.in_dim {
                    g[j * self.in_dim + d] += dz * x[d];
                }
                g[b1_off + j] += dz;
            }
        }
        let inv = 1.0 / indices.len() as f64;
        for v in &mut g {
            *v *= inv;
        }
        ParamVector::new(g).expect("finite gradient")
    }

    fn f_star(&self) -> Option<f64> {
        None
    }

    fn initial_params(&self) -> ParamVector {
        ParamVector::new(self.init.clone()).expect("finite init")
    }
}
