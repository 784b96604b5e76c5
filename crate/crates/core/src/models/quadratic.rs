//! Smooth convex testbed: per-sample loss 1/2 ||x - c_j||^2 with seeded
//! Gaussian centers. The full loss has closed-form minimizer mean(c_j) and
//! smoothness constant exactly 1.

use crate::error::{Error, Result};
use crate::rng::Rng64;
use crate::vector::ParamVector;

use super::Task;

pub struct QuadraticTask {
    dim: usize,
    centers: Vec<Vec<f64>>,
    minimizer: Vec<f64>,
    f_star: f64,
}

impl QuadraticTask {
    pub fn new(dim: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if dim < 1 || n_samples < 1 {
            return Err(Error::InvalidConfig(
                "quadratic task needs dim >= 1 and samples >= 1".into(),
            ));
        }
        let mut rng = Rng64::new(seed);
        let centers: Vec<Vec<f64>> = (0..n_samples)
            .map(|_| (0..dim).map(|_| rng.next_gaussian()).collect())
            .collect();
        Ok(Self::from_centers(dim, centers))
    }

    pub fn from_centers(dim: usize, centers: Vec<Vec<f64>>) -> Self {
        let m = centers.len() as f64;
        let mut minimizer = vec![0.0; dim];
        for c in &centers {
            for (s, v) in minimizer.iter_mut().zip(c) {
                *s += v;
            }
        }
        for v in &mut minimizer {
            *v /= m;
        }
        // f* = mean_j 1/2 ||c_j - x*||^2
        let f_star = centers
            .iter()
            .map(|c| {
                0.5 * c
                    .iter()
                    .zip(&minimizer)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / m;
        Self {
            dim,
            centers,
            minimizer,
            f_star,
        }
    }

    pub fn minimizer(&self) -> ParamVector {
        ParamVector::new(self.minimizer.clone()).expect("finite minimizer")
    }
}

impl Task for QuadraticTask {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_samples(&self) -> usize {
        self.centers.len()
    }

    fn loss(&self, params: &ParamVector, indices: &[usize]) -> f64 {
        let x = params.as_slice();
        let mut total = 0.0;
        for &idx in indices {
            let c = &self.centers[idx];
            total += 0.5
                * x.iter()
                    .zip(c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
        }
        total / indices.len() as f64
    }

    fn grad(&self, params: &ParamVector, indices: &[usize]) -> ParamVector {
        // grad = x - mean(c_batch)
        let x = params.as_slice();
        let mut g = vec![0.0; self.dim];
        for &idx in indices {
            for (s, v) in g.iter_mut().zip(&self.centers[idx]) {
                *s += v;
            }
        }
        let inv = 1.0 / indices.len() as f64;
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi = xi - *gi * inv;
        }
        ParamVector::new(g).expect("finite gradient")
    }

    fn f_star(&self) -> Option<f64> {
        Some(self.f_star)
    }
}
