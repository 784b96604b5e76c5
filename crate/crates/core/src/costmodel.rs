//! Closed-form communication cost formulas, independent of the event
//! simulator, used to cross-validate it and to generate sweep predictions.
//!
//! The exact form 2(m-1)(G/(m nu) + t_tau) is primary; asymptotic
//! approximations are separate, documented functions and never substituted.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netsim::{idle_proportion, simulate_overlapped_iteration, LayerProfile, LinkModel};

/// Inputs for one analytic cost evaluation.
#[derive(Clone, Copy, Debug)]
pub struct CostInputs {
    /// Message bytes per tensor.
    pub bytes: f64,
    /// Bandwidth, bytes/second.
    pub nu: f64,
    /// Per-handshake latency, seconds.
    pub tau: f64,
    pub n: usize,
    pub k: usize,
    /// Tensors communicated per iteration.
    pub tensors: usize,
}

impl CostInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.bytes >= 0.0) || !(self.nu > 0.0) || !(self.tau >= 0.0) {
            return Err(Error::InvalidConfig("cost inputs must be positive".into()));
        }
        if self.n == 0 || self.k == 0 || self.n % self.k != 0 {
            return Err(Error::GroupSizeMismatch {
                n: self.n,
                k: self.k,
            });
        }
        if self.tensors == 0 {
            return Err(Error::InvalidConfig("tensor count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Ring allreduce time over m workers: 2(m-1)(G/(m nu) + t_tau).
pub fn ring_time(bytes: f64, nu: f64, tau: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::EmptyGroup);
    }
    let m_f = m as f64;
    Ok(2.0 * (m_f - 1.0) * (bytes / (m_f * nu) + tau))
}

/// Large-m asymptote of `ring_time`: 2G/nu + 2m t_tau.
pub fn ring_time_asymptotic(bytes: f64, nu: f64, tau: f64, m: usize) -> f64 {
    2.0 * bytes / nu + 2.0 * m as f64 * tau
}

/// SESGD group allreduce time: `ring_time` at group size n/k.
pub fn sesgd_time(bytes: f64, nu: f64, tau: f64, n: usize, k: usize) -> Result<f64> {
    if k == 0 || n == 0 || n % k != 0 {
        return Err(Error::GroupSizeMismatch { n, k });
    }
    ring_time(bytes, nu, tau, n / k)
}

/// Non-overlapped upper-bound speedup estimate:
/// (compute + tensors * ring) / (compute + tensors * sesgd).
pub fn predicted_speedup(inputs: &CostInputs, compute_s_per_iter: f64) -> Result<f64> {
    inputs.validate()?;
    if !(compute_s_per_iter >= 0.0) {
        return Err(Error::InvalidConfig("compute time must be nonnegative".into()));
    }
    let t = inputs.tensors as f64;
    let ring = compute_s_per_iter + t * ring_time(inputs.bytes, inputs.nu, inputs.tau, inputs.n)?;
    let sesgd = compute_s_per_iter
        + t * sesgd_time(inputs.bytes, inputs.nu, inputs.tau, inputs.n, inputs.k)?;
    Ok(ring / sesgd)
}

/// One row of the idle-time table.
#[derive(Clone, Debug, Serialize)]
pub struct IdleRow {
    pub model: String,
    pub workers: usize,
    pub idle_s: f64,
    pub proportion: f64,
}

/// Runs the overlapped iteration simulation for every (profile, n) pair and
/// reports latency-attributable idle time. n = 1 rows report proportion 0.
pub fn idle_table(
    profiles: &[(String, LayerProfile)],
    n_list: &[usize],
    link: &LinkModel,
) -> Result<Vec<IdleRow>> {
    let mut rows = Vec::new();
    for (name, profile) in profiles {
        for &n in n_list {
            let (_, stats) = simulate_overlapped_iteration(profile, n, link)?;
            let proportion = if stats.total_time > 0.0 {
                idle_proportion(&stats)?
            } else {
                0.0
            };
            rows.push(IdleRow {
                model: name.clone(),
                workers: n,
                idle_s: stats.idle_time,
                proportion,
            });
        }
    }
    Ok(rows)
}
