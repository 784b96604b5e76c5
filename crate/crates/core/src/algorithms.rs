//! The four training algorithms: Ring-SGD, Local-SGD, SESGD and
//! Local-SESGD, plus the gradient-averaging ablation used in tests.
//!
//! All workers execute in lockstep inside one deterministic loop; an
//! optional threaded mode runs the collectives over per-worker channels
//! and produces byte-identical results.

use std::str::FromStr;

use crate::collectives::{ring_allreduce_mean, ring_allreduce_mean_threaded, RingGroup};
use crate::config::{TrainConfig, WorkerId};
use crate::error::{Error, Result};
use crate::models::Task;
use crate::netsim::{simulate_overlapped_iteration, simulate_ring_allreduce, LayerProfile, LinkModel};
use crate::rng::{mix64, Rng64};
use crate::shuffle::generate_groups;
use crate::vector::ParamVector;

const SAMPLE_SEED_SALT: u64 = 0xDA7A;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    RingSgd,
    LocalSgd,
    Sesgd,
    LocalSesgd,
    /// Ablation: group-averages gradients instead of parameters, so
    /// inter-group errors are discarded. Used by tests to demonstrate
    /// the divergence that gradient correction removes; not selectable
    /// by name.
    #[doc(hidden)]
    GradientAveragingAblation,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::RingSgd => "ring-sgd",
            Algorithm::LocalSgd => "local-sgd",
            Algorithm::Sesgd => "sesgd",
            Algorithm::LocalSesgd => "local-sesgd",
            Algorithm::GradientAveragingAblation => "gradient-averaging-ablation",
        }
    }

    pub const NAMED: [Algorithm; 4] = [
        Algorithm::RingSgd,
        Algorithm::LocalSgd,
        Algorithm::Sesgd,
        Algorithm::LocalSesgd,
    ];
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring-sgd" => Ok(Algorithm::RingSgd),
            "local-sgd" => Ok(Algorithm::LocalSgd),
            "sesgd" => Ok(Algorithm::Sesgd),
            "local-sesgd" => Ok(Algorithm::LocalSesgd),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected ring-sgd | local-sgd | sesgd | local-sesgd)"
            ))),
        }
    }
}

/// How the value-level collectives execute. Both modes produce
/// byte-identical traces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CollectiveMode {
    #[default]
    Lockstep,
    Threaded,
}

fn allreduce(
    mode: CollectiveMode,
    group: &RingGroup,
    inputs: &[ParamVector],
) -> Result<(Vec<ParamVector>, u64)> {
    match mode {
        CollectiveMode::Lockstep => ring_allreduce_mean(group, inputs),
        CollectiveMode::Threaded => ring_allreduce_mean_threaded(group, inputs),
    }
}

/// Per-worker mutable training state.
pub struct WorkerState {
    pub worker: WorkerId,
    pub params: ParamVector,
    /// Updated-but-not-synchronized parameters within an iteration.
    pub staging: ParamVector,
    pub shard: std::ops::Range<usize>,
    pub sample_rng: Rng64,
    momentum_buf: Option<ParamVector>,
}

impl WorkerState {
    fn minibatch(&mut self, b: usize) -> Result<Vec<usize>> {
        let len = self.shard.len() as u64;
        let mut batch = Vec::with_capacity(b);
        for _ in 0..b {
            batch.push(self.shard.start + self.sample_rng.next_bounded(len)? as usize);
        }
        Ok(batch)
    }
}

/// One per-iteration trace record. State quantities (mean parameters, loss,
/// divergence) are measured at iteration start; the clock and handshake
/// fields account for the iteration that then executes.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub t: u64,
    /// Simulated clock after this iteration completes.
    pub sim_time_s: f64,
    /// Handshakes per worker performed by this iteration.
    pub handshakes: u64,
    /// Full-dataset loss at the worker-mean parameters x̄_t.
    pub loss: f64,
    /// Max pairwise parameter distance across workers at iteration start.
    pub max_divergence: f64,
    /// Digest of the group assignment used (0 for global/no-shuffle steps).
    pub group_digest: u64,
    /// Worker-mean parameters x̄_t at iteration start.
    pub mean_params: ParamVector,
}

#[derive(Clone, Debug, Default)]
pub struct SimTrace {
    pub records: Vec<TraceRecord>,
    /// Simulated clock including the final global average.
    pub total_sim_time_s: f64,
    /// Total handshakes per worker over the whole run.
    pub total_handshakes: u64,
}

fn mean_params(states: &[WorkerState]) -> Result<ParamVector> {
    let refs: Vec<&ParamVector> = states.iter().map(|s| &s.params).collect();
    crate::vector::sequential_mean(&refs)
}

fn max_pairwise_distance(states: &[WorkerState]) -> Result<f64> {
    let mut max = 0.0f64;
    for i in 0..states.len() {
        for j in (i + 1)..states.len() {
            max = max.max(states[i].params.distance(&states[j].params)?);
        }
    }
    Ok(max)
}

/// Initialize worker states: contiguous equal data shards by worker id,
/// private sampling streams derived from the shared seed.
pub fn init_workers(
    cfg: &TrainConfig,
    task: &dyn Task,
    x0: &ParamVector,
) -> Result<Vec<WorkerState>> {
    cfg.validate()?;
    if x0.len() != task.dim() {
        return Err(Error::LengthMismatch {
            left: x0.len(),
            right: task.dim(),
        });
    }
    if task.num_samples() < cfg.n {
        return Err(Error::InvalidConfig(format!(
            "dataset of {} samples cannot be sharded over {} workers",
            task.num_samples(),
            cfg.n
        )));
    }
    let total = task.num_samples();
    (0..cfg.n)
        .map(|i| {
            let (lo, hi) = crate::collectives::slice_bounds(total, cfg.n, i)?;
            Ok(WorkerState {
                worker: WorkerId(i),
                params: x0.clone(),
                staging: x0.clone(),
                shard: lo..hi,
                sample_rng: Rng64::new(mix64(
                    cfg.seed ^ (i as u64 + 1) ^ SAMPLE_SEED_SALT,
                )),
                momentum_buf: None,
            })
        })
        .collect()
}

/// Minibatch gradient at the iteration-start parameters, with the optional
/// experimental local-momentum smoothing applied.
fn local_direction(
    state: &mut WorkerState,
    task: &dyn Task,
    cfg: &TrainConfig,
) -> Result<ParamVector> {
    let batch = state.minibatch(cfg.b)?;
    let grad = task.grad(&state.params, &batch);
    match cfg.momentum {
        None => Ok(grad),
        Some(mu) => {
            let buf = state
                .momentum_buf
                .get_or_insert_with(|| ParamVector::zeros(grad.len()));
            buf.scale_in_place(mu);
            buf.axpy_in_place(1.0, &grad)?;
            Ok(buf.clone())
        }
    }
}

struct StepOutcome {
    elapsed: f64,
    handshakes: u64,
    group_digest: u64,
}

fn global_group(n: usize) -> Result<RingGroup> {
    RingGroup::new((0..n).map(WorkerId).collect())
}

fn ring_sgd_step(
    states: &mut [WorkerState],
    task: &dyn Task,
    cfg: &TrainConfig,
    profile: &LayerProfile,
    link: &LinkModel,
    mode: CollectiveMode,
) -> Result<StepOutcome> {
    let grads: Vec<ParamVector> = states
        .iter_mut()
        .map(|s| local_direction(s, task, cfg))
        .collect::<Result<_>>()?;
    let group = global_group(cfg.n)?;
    let (avg, _) = allreduce(mode, &group, &grads)?;
    for (state, g) in states.iter_mut().zip(&avg) {
        state.params.axpy_in_place(-cfg.eta, g)?;
    }
    let (elapsed, stats) = simulate_overlapped_iteration(profile, cfg.n, link)?;
    Ok(StepOutcome {
        elapsed,
        handshakes: stats.handshakes_per_worker,
        group_digest: 0,
    })
}

fn local_update(states: &mut [WorkerState], task: &dyn Task, cfg: &TrainConfig) -> Result<()> {
    for state in states.iter_mut() {
        let dir = local_direction(state, task, cfg)?;
        state.staging = state.params.clone();
        state.staging.axpy_in_place(-cfg.eta, &dir)?;
    }
    Ok(())
}

fn group_average_staging(
    states: &mut [WorkerState],
    cfg: &TrainConfig,
    t: u64,
    mode: CollectiveMode,
) -> Result<(u64, u64)> {
    let assignment = generate_groups(cfg.seed, t, cfg.n, cfg.k)?;
    let mut handshakes = 0;
    for members in &assignment.groups {
        let group = RingGroup::new(members.clone())?;
        let inputs: Vec<ParamVector> = members
            .iter()
            .map(|w| states[w.0].staging.clone())
            .collect();
        let (outputs, hs) = allreduce(mode, &group, &inputs)?;
        handshakes = hs; // identical for every equal-size group
        for (w, out) in members.iter().zip(outputs) {
            states[w.0].params = out;
        }
    }
    Ok((handshakes, assignment.digest()))
}

fn sesgd_step(
    states: &mut [WorkerState],
    task: &dyn Task,
    cfg: &TrainConfig,
    profile: &LayerProfile,
    link: &LinkModel,
    t: u64,
    mode: CollectiveMode,
) -> Result<StepOutcome> {
    local_update(states, task, cfg)?;
    let (_, digest) = group_average_staging(states, cfg, t, mode)?;
    let (elapsed, stats) = simulate_overlapped_iteration(profile, cfg.group_size(), link)?;
    Ok(StepOutcome {
        elapsed,
        handshakes: stats.handshakes_per_worker,
        group_digest: digest,
    })
}

fn local_sgd_step(
    states: &mut [WorkerState],
    task: &dyn Task,
    cfg: &TrainConfig,
    profile: &LayerProfile,
    link: &LinkModel,
    t: u64,
    mode: CollectiveMode,
) -> Result<StepOutcome> {
    local_update(states, task, cfg)?;
    if (t + 1) % cfg.local_period == 0 {
        let group = global_group(cfg.n)?;
        let inputs: Vec<ParamVector> =
            states.iter().map(|s| s.staging.clone()).collect();
        let (outputs, _) = allreduce(mode, &group, &inputs)?;
        for (state, out) in states.iter_mut().zip(outputs) {
            state.params = out;
        }
        let (elapsed, stats) = simulate_overlapped_iteration(profile, cfg.n, link)?;
        Ok(StepOutcome {
            elapsed,
            handshakes: stats.handshakes_per_worker,
            group_digest: 0,
        })
    } else {
        for state in states.iter_mut() {
            state.params = state.staging.clone();
        }
        Ok(StepOutcome {
            elapsed: profile.total_compute(),
            handshakes: 0,
            group_digest: 0,
        })
    }
}

fn local_sesgd_step(
    states: &mut [WorkerState],
    task: &dyn Task,
    cfg: &TrainConfig,
    profile: &LayerProfile,
    link: &LinkModel,
    t: u64,
    mode: CollectiveMode,
) -> Result<StepOutcome> {
    if (t + 1) % cfg.local_period == 0 {
        sesgd_step(states, task, cfg, profile, link, t, mode)
    } else {
        local_update(states, task, cfg)?;
        for state in states.iter_mut() {
            state.params = state.staging.clone();
        }
        Ok(StepOutcome {
            elapsed: profile.total_compute(),
            handshakes: 0,
            group_digest: 0,
        })
    }
}

/// Ablation step: shuffle, then group-average raw gradients. Inter-group
/// parameter error is never corrected.
fn gradient_averaging_step(
    states: &mut [WorkerState],
    task: &dyn Task,
    cfg: &TrainConfig,
    profile: &LayerProfile,
    link: &LinkModel,
    t: u64,
    mode: CollectiveMode,
) -> Result<StepOutcome> {
    let assignment = generate_groups(cfg.seed, t, cfg.n, cfg.k)?;
    let grads: Vec<ParamVector> = states
        .iter_mut()
        .map(|s| local_direction(s, task, cfg))
        .collect::<Result<_>>()?;
    for members in &assignment.groups {
        let group = RingGroup::new(members.clone())?;
        let inputs: Vec<ParamVector> =
            members.iter().map(|w| grads[w.0].clone()).collect();
        let (outputs, _) = allreduce(mode, &group, &inputs)?;
        for (w, avg) in members.iter().zip(outputs) {
            states[w.0].params.axpy_in_place(-cfg.eta, &avg)?;
        }
    }
    let (elapsed, stats) = simulate_overlapped_iteration(profile, cfg.group_size(), link)?;
    Ok(StepOutcome {
        elapsed,
        handshakes: stats.handshakes_per_worker,
        group_digest: assignment.digest(),
    })
}

/// Ring-allreduce the final parameters over all workers; every worker ends
/// holding the global mean, which is the model evaluated for loss.
pub fn final_global_average(
    states: &mut [WorkerState],
    mode: CollectiveMode,
) -> Result<ParamVector> {
    let group = global_group(states.len())?;
    let inputs: Vec<ParamVector> = states.iter().map(|s| s.params.clone()).collect();
    let (outputs, _) = allreduce(mode, &group, &inputs)?;
    for (state, out) in states.iter_mut().zip(&outputs) {
        state.params = out.clone();
    }
    Ok(outputs.into_iter().next().ok_or(Error::EmptyGroup)?)
}

/// Runs `iterations` steps of the chosen algorithm and a final global
/// average. Fully deterministic for a fixed config and seed.
pub fn run_training(
    algorithm: Algorithm,
    cfg: &TrainConfig,
    task: &dyn Task,
    profile: &LayerProfile,
    link: &LinkModel,
    x0: Option<&ParamVector>,
    mode: CollectiveMode,
) -> Result<(SimTrace, ParamVector)> {
    let default_x0 = task.initial_params();
    let x0 = x0.unwrap_or(&default_x0);
    let mut states = init_workers(cfg, task, x0)?;
    let mut trace = SimTrace::default();
    let mut clock = 0.0f64;

    for t in 0..cfg.iterations {
        let mean = mean_params(&states)?;
        let loss = task.full_loss(&mean);
        let max_divergence = max_pairwise_distance(&states)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite { context: "training loss" });
        }
        let outcome = match algorithm {
            Algorithm::RingSgd => ring_sgd_step(&mut states, task, cfg, profile, link, mode)?,
            Algorithm::Sesgd => sesgd_step(&mut states, task, cfg, profile, link, t, mode)?,
            Algorithm::LocalSgd => {
                local_sgd_step(&mut states, task, cfg, profile, link, t, mode)?
            }
            Algorithm::LocalSesgd => {
                local_sesgd_step(&mut states, task, cfg, profile, link, t, mode)?
            }
            Algorithm::GradientAveragingAblation => {
                gradient_averaging_step(&mut states, task, cfg, profile, link, t, mode)?
            }
        };
        clock += outcome.elapsed;
        trace.total_handshakes += outcome.handshakes;
        trace.records.push(TraceRecord {
            t,
            sim_time_s: clock,
            handshakes: outcome.handshakes,
            loss,
            max_divergence,
            group_digest: outcome.group_digest,
            mean_params: mean,
        });
    }

    let final_model = final_global_average(&mut states, mode)?;
    let (final_comm, final_stats) =
        simulate_ring_allreduce(cfg.n, profile.total_bytes(), link)?;
    clock += final_comm;
    trace.total_handshakes += final_stats.handshakes_per_worker;
    trace.total_sim_time_s = clock;
    Ok((trace, final_model))
}
