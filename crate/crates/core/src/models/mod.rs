//! Differentiable optimization tasks at desk scale.
//!
//! Each task exposes minibatch loss/gradient over sample indices plus its
//! analytic optimum when one exists. Gradients are verified against central
//! finite differences in the per-task tests.

mod dataset;
mod logistic;
mod mlp;
mod quadratic;

pub use dataset::load_csv_dataset;
pub use logistic::LogisticTask;
pub use mlp::MlpTask;
pub use quadratic::QuadraticTask;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng64;
use crate::vector::ParamVector;

pub trait Task: Send + Sync {
    /// Parameter count.
    fn dim(&self) -> usize;

    /// Dataset size.
    fn num_samples(&self) -> usize;

    /// Mean loss over the given sample indices (plus any regularizer).
    fn loss(&self, params: &ParamVector, indices: &[usize]) -> f64;

    /// Mean gradient over the given sample indices (plus any regularizer).
    fn grad(&self, params: &ParamVector, indices: &[usize]) -> ParamVector;

    /// Analytic (or surrogate) global minimum of the full-dataset loss.
    fn f_star(&self) -> Option<f64>;

    /// Starting point for training runs.
    fn initial_params(&self) -> ParamVector {
        ParamVector::zeros(self.dim())
    }

    fn full_loss(&self, params: &ParamVector) -> f64 {
        let all: Vec<usize> = (0..self.num_samples()).collect();
        self.loss(params, &all)
    }

    fn full_grad(&self, params: &ParamVector) -> ParamVector {
        let all: Vec<usize> = (0..self.num_samples()).collect();
        self.grad(params, &all)
    }
}

/// Task selection as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    Quadratic {
        dim: usize,
        samples: usize,
    },
    Logistic {
        dim: usize,
        samples: usize,
    },
    Mlp {
        in_dim: usize,
        hidden: usize,
        classes: usize,
        samples: usize,
    },
    /// Logistic regression over a CSV dataset (features..., integer label).
    CsvLogistic {
        path: String,
    },
}

impl TaskSpec {
    pub fn build(&self, seed: u64) -> Result<Box<dyn Task>> {
        Ok(match self {
            TaskSpec::Quadratic { dim, samples } => {
                Box::new(QuadraticTask::new(*dim, *samples, seed)?)
            }
            TaskSpec::Logistic { dim, samples } => {
                Box::new(LogisticTask::new(*dim, *samples, seed)?)
            }
            TaskSpec::Mlp {
                in_dim,
                hidden,
                classes,
                samples,
            } => Box::new(MlpTask::new(*in_dim, *hidden, *classes, *samples, seed)?),
            TaskSpec::CsvLogistic { path } => {
                let (features, labels) = load_csv_dataset(std::path::Path::new(path))?;
                Box::new(LogisticTask::from_data(features, labels)?)
            }
        })
    }
}

/// Empirically estimates the smoothness constant L and gradient bound M by
/// probing full-dataset gradients in a unit ball around the initialization.
pub fn estimate_constants(
    task: &dyn Task,
    probe_count: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if probe_count < 2 {
        return Err(Error::InvalidConfig(
            "constant estimation needs at least 2 probes".into(),
        ));
    }
    let x0 = task.initial_params();
    let mut rng = Rng64::new(seed);
    let mut points = Vec::with_capacity(probe_count);
    for _ in 0..probe_count {
        // Uniform direction scaled by U^(1/d): uniform in the unit ball.
        let mut dir: Vec<f64> = (0..task.dim()).map(|_| rng.next_gaussian()).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let radius = rng.next_f64().powf(1.0 / task.dim() as f64);
        for d in dir.iter_mut() {
            *d = *d / norm * radius;
        }
        let point = crate::vector::vec_axpy(1.0, &ParamVector::new(dir)?, &x0)?;
        points.push(point);
    }
    let grads: Vec<ParamVector> = points.iter().map(|p| task.full_grad(p)).collect();

    let mut m_hat = 0.0f64;
    for g in &grads {
        m_hat = m_hat.max(g.norm());
    }
    let mut l_hat = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dx = points[i].distance(&points[j])?;
            if dx == 0.0 {
                continue; // degenerate probe pair
            }
            let dg = grads[i].distance(&grads[j])?;
            l_hat = l_hat.max(dg / dx);
        }
    }
    Ok((l_hat, m_hat))
}

/// Central finite-difference gradient, the independent oracle used by the
/// per-task gradient checks.
pub fn finite_difference_grad(
    task: &dyn Task,
    params: &ParamVector,
    indices: &[usize],
    h: f64,
) -> ParamVector {
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus.as_mut_slice()[i] += h;
        let mut minus = params.clone();
        minus.as_mut_slice()[i] -= h;
        out.push((task.loss(&plus, indices) - task.loss(&minus, indices)) / (2.0 * h));
    }
    ParamVector::new(out).expect("finite differences produced non-finite values")
}

#[cfg(test)]
pub(crate) fn assert_grad_matches_fd(
    task: &dyn Task,
    params: &ParamVector,
    indices: &[usize],
    h: f64,
    rel_tol: f64,
) {
    let analytic = task.grad(params, indices);
    let numeric = finite_difference_grad(task, params, indices, h);
    for (a, b) in analytic.as_slice().iter().zip(numeric.as_slice()) {
        let scale = a.abs().max(b.abs()).max(1.0);
        assert!(
            (a - b).abs() <= rel_tol * scale,
            "analytic {a} vs numeric {b}"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_point(dim: usize, seed: u64) -> ParamVector {
        let mut rng = Rng64::new(seed);
        ParamVector::new((0..dim).map(|_| rng.next_gaussian()).collect()).unwrap()
    }

    #[test]
    fn all_tasks_pass_fd_check_at_ten_random_points() {
        let tasks: Vec<(Box<dyn Task>, f64, f64)> = vec![
            (Box::new(QuadraticTask::new(3, 24, 7).unwrap()), 1e-6, 1e-6),
            (Box::new(LogisticTask::new(4, 64, 7).unwrap()), 1e-5, 1e-5),
            (
                Box::new(MlpTask::new(3, 4, 3, 32, 7).unwrap()),
                1e-5,
                1e-4,
            ),
        ];
        for (task, h, tol) in &tasks {
            let batch: Vec<usize> = (0..task.num_samples().min(16)).collect();
            for p in 0..10 {
                let x = random_point(task.dim(), 1000 + p);
                assert_grad_matches_fd(task.as_ref(), &x, &batch, *h, *tol);
            }
        }
    }

    #[test]
    fn per_sample_gradients_average_to_full_gradient() {
        // Linearity, the checkable face of the unbiasedness assumption.
        let task = QuadraticTask::new(4, 20, 3).unwrap();
        let x = random_point(4, 8);
        let full = task.full_grad(&x);
        let mut acc = ParamVector::zeros(4);
        for i in 0..task.num_samples() {
            acc.axpy_in_place(1.0, &task.grad(&x, &[i])).unwrap();
        }
        acc.scale_in_place(1.0 / task.num_samples() as f64);
        for (a, b) in acc.as_slice().iter().zip(full.as_slice()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn quadratic_constants_estimates() {
        let task = QuadraticTask::new(3, 32, 5).unwrap();
        // L is exactly 1; estimates approach it from below.
        let (l_few, _) = estimate_constants(&task, 4, 9).unwrap();
        let (l_many, m_many) = estimate_constants(&task, 64, 9).unwrap();
        assert!(l_few <= 1.0 + 1e-9);
        assert!(l_many <= 1.0 + 1e-9);
        assert!(l_many >= l_few - 1e-12);
        assert!(l_many > 0.9);
        assert!(m_many.is_finite() && m_many > 0.0);
    }

    #[test]
    fn constants_stable_across_seeds_on_logistic() {
        let task = LogisticTask::new(4, 128, 11).unwrap();
        let mut ls = Vec::new();
        let mut ms = Vec::new();
        for seed in 0..5u64 {
            let (l, m) = estimate_constants(&task, 48, 100 + seed).unwrap();
            ls.push(l);
            ms.push(m);
        }
        let spread = |v: &[f64]| {
            let max = v.iter().cloned().fold(f64::MIN, f64::max);
            let min = v.iter().cloned().fold(f64::MAX, f64::min);
            (max - min) / max
        };
        assert!(spread(&ls) < 0.2, "L estimates: {ls:?}");
        assert!(spread(&ms) < 0.2, "M estimates: {ms:?}");
    }

    #[test]
    fn probe_count_below_two_rejected() {
        let task = QuadraticTask::new(2, 8, 1).unwrap();
        assert!(estimate_constants(&task, 1, 0).is_err());
    }
}
