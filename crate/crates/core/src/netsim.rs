//! Deterministic discrete-event model of an n-worker full-duplex network.
//!
//! A "handshake" is one bulk-synchronous ring round: every worker sends one
//! slice to its successor while receiving one from its predecessor, costing
//! `latency_tau + slice_bytes / bandwidth_nu`. Idle time is the latency
//! component; busy time is the payload component.

use serde::{Deserialize, Serialize};

use crate::collectives::slice_bounds;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Full-duplex point-to-point link: send and receive do not contend.
#[derive(Clone, Copy, Debug)]
pub struct LinkModel {
    pub config: NetworkConfig,
}

impl LinkModel {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    /// Time to move `bytes` across the link including one handshake.
    pub fn transfer_time(&self, bytes: u64) -> f64 {
        self.config.latency_tau + bytes as f64 / self.config.bandwidth_nu
    }
}

/// Communication accounting for one or more collectives.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommStats {
    /// Ring rounds performed by each worker (identical across workers in
    /// the bulk-synchronous model).
    pub handshakes_per_worker: u64,
    /// Payload bytes sent, per worker.
    pub bytes_sent: Vec<u64>,
    /// Seconds the link carried payload (bytes / nu terms).
    pub busy_time: f64,
    /// Seconds attributable to latency (t_tau per handshake).
    pub idle_time: f64,
    /// Total communication time (busy + idle).
    pub total_time: f64,
}

impl CommStats {
    pub fn merge(&mut self, other: &CommStats) {
        self.handshakes_per_worker += other.handshakes_per_worker;
        if self.bytes_sent.is_empty() {
            self.bytes_sent = other.bytes_sent.clone();
        } else if self.bytes_sent.len() == other.bytes_sent.len() {
            for (a, b) in self.bytes_sent.iter_mut().zip(&other.bytes_sent) {
                *a += b;
            }
        }
        self.busy_time += other.busy_time;
        self.idle_time += other.idle_time;
        self.total_time += other.total_time;
    }
}

/// Per-layer gradient sizes and backward compute, ordered output-layer-first
/// (the order gradients become available during backprop).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerProfile {
    pub layers: Vec<Layer>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub bytes: u64,
    pub compute_s: f64,
}

impl LayerProfile {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.iter().any(|l| !(l.compute_s >= 0.0)) {
            return Err(Error::InvalidConfig(
                "layer compute time must be nonnegative".into(),
            ));
        }
        Ok(Self { layers })
    }

    /// Single tensor of `bytes` with no compute; the degenerate profile used
    /// when a run only needs value-level collectives.
    pub fn single_tensor(bytes: u64) -> Self {
        Self {
            layers: vec![Layer {
                bytes,
                compute_s: 0.0,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.layers.iter().map(|l| l.bytes).sum()
    }

    pub fn total_compute(&self) -> f64 {
        self.layers.iter().map(|l| l.compute_s).sum()
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let profile: LayerProfile = serde_json::from_str(&text)?;
        LayerProfile::new(profile.layers)
    }

    /// Bundled synthetic profiles. Layer counts and sizes approximate the
    /// named architectures; they are illustrative, not measured data.
    pub fn builtin(name: &str) -> Option<Self> {
        let layers: Vec<(u64, f64)> = match name {
            // ~11.7M params over 21 gradient tensors, output first.
            "resnet18-like" => {
                let sizes: [u64; 21] = [
                    512_000, 2_359_296, 2_359_296, 2_359_296, 2_359_296, 1_179_648,
                    589_824, 589_824, 589_824, 589_824, 294_912, 147_456, 147_456,
                    147_456, 147_456, 73_728, 36_864, 36_864, 36_864, 36_864, 9_408,
                ];
                sizes
                    .iter()
                    .map(|&p| (p * 4, p as f64 * 4e-10 + 2e-4))
                    .collect()
            }
            // ~8M params spread thin over 121 tensors.
            "densenet121-like" => (0..121)
                .map(|i| {
                    let params = 20_000 + (i as u64 % 12) * 11_000;
                    (params * 4, params as f64 * 4e-10 + 1.5e-4)
                })
                .collect(),
            // ~138M params in 16 fat tensors.
            "vgg16-like" => {
                let sizes: [u64; 16] = [
                    4_097_000, 16_781_312, 102_764_544, 2_359_296, 2_359_296,
                    2_359_296, 2_359_296, 2_359_296, 1_179_648, 589_824, 589_824,
                    294_912, 147_456, 147_456, 73_728, 1_728,
                ];
                sizes
                    .iter()
                    .map(|&p| (p * 4, p as f64 * 4e-10 + 3e-4))
                    .collect()
            }
            _ => return None,
        };
        Some(Self {
            layers: layers
                .into_iter()
                .map(|(bytes, compute_s)| Layer { bytes, compute_s })
                .collect(),
        })
    }

    pub const BUILTIN_NAMES: [&'static str; 3] =
        ["resnet18-like", "densenet121-like", "vgg16-like"];
}

/// Simulate one ring allreduce of `message_bytes` over `m` workers.
///
/// 2(m-1) bulk-synchronous rounds; each round costs one latency plus the
/// transfer of that round's largest slice. For byte counts divisible by m
/// the elapsed time is exactly `2(m-1)(G/(m nu) + t_tau)`.
pub fn simulate_ring_allreduce(
    m: usize,
    message_bytes: u64,
    link: &LinkModel,
) -> Result<(f64, CommStats)> {
    if m == 0 {
        return Err(Error::EmptyGroup);
    }
    if m == 1 {
        return Ok((
            0.0,
            CommStats {
                bytes_sent: vec![0],
                ..CommStats::default()
            },
        ));
    }
    let slice_len = |s: usize| -> Result<u64> {
        let (lo, hi) = slice_bounds(message_bytes as usize, m, s)?;
        Ok((hi - lo) as u64)
    };
    let slice_lens = (0..m).map(slice_len).collect::<Result<Vec<_>>>()?;
    let round_max = *slice_lens.iter().max().unwrap();

    let rounds = 2 * (m - 1) as u64;
    let mut clock = 0.0f64;
    let mut busy = 0.0f64;
    for _round in 0..rounds {
        // All m slices are in flight each round; the round completes when
        // the largest one lands.
        clock += link.transfer_time(round_max);
        busy += round_max as f64 / link.config.bandwidth_nu;
    }

    // Worker i sends every slice except i during scatter-reduce and every
    // slice except (i+1) mod m during all-gather.
    let total: u64 = slice_lens.iter().sum();
    let mut bytes_sent = Vec::with_capacity(m);
    for i in 0..m {
        bytes_sent.push(2 * total - slice_lens[i] - slice_lens[(i + 1) % m]);
    }

    let idle = rounds as f64 * link.config.latency_tau;
    Ok((
        clock,
        CommStats {
            handshakes_per_worker: rounds,
            bytes_sent,
            busy_time: busy,
            idle_time: idle,
            total_time: clock,
        },
    ))
}

/// Simulate one overlapped training iteration: layer gradients become ready
/// in profile order as backward compute accumulates; each layer's allreduce
/// starts once its gradient is ready and the link is free; the link serves
/// one allreduce at a time.
pub fn simulate_overlapped_iteration(
    profile: &LayerProfile,
    group_size: usize,
    link: &LinkModel,
) -> Result<(f64, CommStats)> {
    if profile.is_empty() {
        return Err(Error::InvalidConfig("layer profile must not be empty".into()));
    }
    let mut stats = CommStats::default();
    let mut ready = 0.0f64;
    let mut link_free = 0.0f64;
    let mut elapsed = 0.0f64;
    for layer in &profile.layers {
        ready += layer.compute_s;
        let (comm, layer_stats) = simulate_ring_allreduce(group_size, layer.bytes, link)?;
        let start = ready.max(link_free);
        link_free = start + comm;
        elapsed = link_free;
        stats.merge(&layer_stats);
    }
    Ok((elapsed.max(ready), stats))
}

/// Fraction of communication time spent on latency. Communication time only;
/// compute is excluded by construction of `CommStats`.
pub fn idle_proportion(stats: &CommStats) -> Result<f64> {
    if stats.total_time <= 0.0 {
        return Err(Error::ZeroTotalTime);
    }
    Ok(stats.idle_time / stats.total_time)
}
