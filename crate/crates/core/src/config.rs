//! Shared worker/network/training configuration types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Worker index in `[0, n)`.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct WorkerId(pub usize);

/// Link parameters: bandwidth in bytes/second, per-handshake latency in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub bandwidth_nu: f64,
    pub latency_tau: f64,
}

impl NetworkConfig {
    pub fn new(bandwidth_nu: f64, latency_tau: f64) -> Result<Self> {
        let cfg = Self {
            bandwidth_nu,
            latency_tau,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_nu > 0.0) || !self.bandwidth_nu.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_nu
            )));
        }
        if !(self.latency_tau >= 0.0) || !self.latency_tau.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "latency must be nonnegative, got {}",
                self.latency_tau
            )));
        }
        Ok(())
    }
}

/// Training hyper-parameters shared by all four algorithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Worker count n.
    pub n: usize,
    /// Group count k; must divide n.
    pub k: usize,
    /// Minibatch size b per worker.
    pub b: usize,
    /// Iteration count T.
    pub iterations: u64,
    /// Learning rate.
    pub eta: f64,
    /// Shared random seed.
    pub seed: u64,
    /// Local-SGD / Local-SESGD synchronization period H.
    #[serde(default = "default_local_period")]
    pub local_period: u64,
    /// Experimental: local momentum factor; buffers are never communicated.
    #[serde(default)]
    pub momentum: Option<f64>,
}

fn default_local_period() -> u64 {
    2
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidConfig("worker count must be >= 1".into()));
        }
        if self.k < 1 || self.k > self.n {
            return Err(Error::InvalidConfig(format!(
                "group count must be in [1, n]; got k={} n={}",
                self.k, self.n
            )));
        }
        if self.n % self.k != 0 {
            return Err(Error::GroupSizeMismatch {
                n: self.n,
                k: self.k,
            });
        }
        if self.b < 1 {
            return Err(Error::InvalidConfig("minibatch size must be >= 1".into()));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("iteration count must be >= 1".into()));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.eta
            )));
        }
        if self.local_period < 1 {
            return Err(Error::InvalidConfig("local period must be >= 1".into()));
        }
        if let Some(mu) = self.momentum {
            if !(0.0..1.0).contains(&mu) {
                return Err(Error::InvalidConfig(format!(
                    "momentum must lie in [0, 1), got {mu}"
                )));
            }
        }
        Ok(())
    }

    /// Group size n/k.
    pub fn group_size(&self) -> usize {
        self.n / self.k
    }
}
