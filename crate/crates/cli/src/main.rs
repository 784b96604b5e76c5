//! `sesgd` — experiment runner: training traces, latency sweeps, idle-time
//! tables and convergence-bound reports, all as plot-ready CSV/JSON files.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use sesgd_core::algorithms::{run_training, Algorithm, CollectiveMode};
use sesgd_core::costmodel::{idle_table, ring_time};
use sesgd_core::error::{Error, Result};
use sesgd_core::models::{estimate_constants, Task};
use sesgd_core::netsim::{simulate_overlapped_iteration, LayerProfile, LinkModel};
use sesgd_core::theory::{
    check_lemma, divergence_bound, lemma_rhs_terms, theorem_eta, theorem_min_iters,
    TheoryParams, TheoryReport,
};
use sesgd_core::{NetworkConfig, ParamVector, TrainConfig};

use config::ExperimentConfig;

const SEED_ENV: &str = "SESGD_SIM_SEED";

#[derive(Parser)]
#[command(name = "sesgd", version, about = "Shuffle-Exchange SGD experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training experiment; writes trace.csv and final_model.json.
    Train(RunArgs),
    /// Sweep network latency; writes sweep.csv.
    LatencySweep(RunArgs),
    /// Idle-time table over profiles and worker counts; writes idle.csv.
    IdleTable(RunArgs),
    /// Multi-seed convergence-bound campaign; writes theory_report.json.
    Theory(RunArgs),
    /// Print the version.
    Version,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (strict JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the base seed (precedence: flag > SESGD_SIM_SEED > config).
    #[arg(long)]
    seed: Option<u64>,
    /// Seed count for multi-seed campaigns.
    #[arg(long)]
    seeds: Option<u32>,
    /// Worker threads for independent sweep/campaign cells.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Version => {
            println!("sesgd {}", env!("CARGO_PKG_VERSION"));
            0
        }
        Command::Train(args) => run(&args, cmd_train),
        Command::LatencySweep(args) => run(&args, cmd_latency_sweep),
        Command::IdleTable(args) => run(&args, cmd_idle_table),
        Command::Theory(args) => run(&args, cmd_theory),
    };
    std::process::exit(code);
}

fn run(args: &RunArgs, body: fn(&RunArgs, ExperimentConfig) -> Result<()>) -> i32 {
    let result = load_config(args).and_then(|cfg| {
        std::fs::create_dir_all(&args.out)?;
        body(args, cfg)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonFinite { .. } => 3,
                _ => 2,
            }
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    } else if let Ok(value) = std::env::var(SEED_ENV) {
        cfg.seed = value.parse().map_err(|_| {
            Error::InvalidConfig(format!("{SEED_ENV} must be an unsigned integer"))
        })?;
    }
    if let Some(seeds) = args.seeds {
        cfg.seeds = Some(seeds);
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn link_from(cfg: &ExperimentConfig) -> Result<LinkModel> {
    LinkModel::new(cfg.network)
}

fn cmd_train(args: &RunArgs, cfg: ExperimentConfig) -> Result<()> {
    let algorithm = Algorithm::from_str(cfg.require_algorithm()?)?;
    let task = cfg.require_task()?.build(cfg.seed)?;
    let train_cfg = cfg.train_config()?;
    let profile = cfg.training_profile(task.dim())?;
    let link = link_from(&cfg)?;
    let x0 = cfg
        .init_value
        .map(|v| ParamVector::new(vec![v; task.dim()]))
        .transpose()?;

    let (trace, model) = run_training(
        algorithm,
        &train_cfg,
        task.as_ref(),
        &profile,
        &link,
        x0.as_ref(),
        CollectiveMode::Lockstep,
    )?;

    let mut csv = String::from("iter,sim_time_s,handshakes,loss,max_divergence\n");
    for r in &trace.records {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.t, r.sim_time_s, r.handshakes, r.loss, r.max_divergence
        ));
    }
    write_file(&args.out.join("trace.csv"), &csv)?;

    let final_loss = task.full_loss(&model);
    if !final_loss.is_finite() {
        return Err(Error::NonFinite { context: "final loss" });
    }
    let model_json = serde_json::json!({
        "algorithm": algorithm.name(),
        "dim": model.len(),
        "final_loss": final_loss,
        "total_sim_time_s": trace.total_sim_time_s,
        "total_handshakes": trace.total_handshakes,
        "params": model.as_slice(),
    });
    write_file(
        &args.out.join("final_model.json"),
        &format!("{}\n", serde_json::to_string_pretty(&model_json)?),
    )?;
    Ok(())
}

/// Per-iteration simulated and analytic times for one (algorithm, tau) cell.
/// Timing is value-independent, so no training runs are needed.
fn sweep_cell(
    algorithm: Algorithm,
    tau: f64,
    cfg: &TrainConfig,
    profile: &LayerProfile,
    bandwidth: f64,
) -> Result<(f64, f64, f64)> {
    let link = LinkModel::new(NetworkConfig::new(bandwidth, tau)?)?;
    let group = match algorithm {
        Algorithm::RingSgd | Algorithm::LocalSgd => cfg.n,
        _ => cfg.group_size(),
    };
    let (sync_time, sync_stats) = simulate_overlapped_iteration(profile, group, &link)?;
    let analytic_sync: f64 = profile.total_compute()
        + profile
            .layers
            .iter()
            .map(|l| ring_time(l.bytes as f64, bandwidth, tau, group))
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum::<f64>();
    let local = matches!(algorithm, Algorithm::LocalSgd | Algorithm::LocalSesgd);
    let period = if local { cfg.local_period as f64 } else { 1.0 };
    let idle_iters = period - 1.0;
    let sim = (sync_time + idle_iters * profile.total_compute()) / period;
    let analytic = (analytic_sync + idle_iters * profile.total_compute()) / period;
    let handshakes = sync_stats.handshakes_per_worker as f64 / period;
    Ok((sim, analytic, handshakes))
}

fn cmd_latency_sweep(args: &RunArgs, cfg: ExperimentConfig) -> Result<()> {
    let taus = cfg
        .sweep_taus
        .clone()
        .ok_or_else(|| Error::InvalidConfig("config is missing 'sweep_taus'".into()))?;
    if taus.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidConfig("sweep taus must be nonnegative".into()));
    }
    let train_cfg = cfg.train_config()?;
    let profile = match &cfg.profile {
        Some(name) => cfg.resolve_profile(name)?,
        None => {
            return Err(Error::InvalidConfig(
                "latency-sweep requires a 'profile'".into(),
            ))
        }
    };

    let cells: Vec<(f64, Algorithm)> = taus
        .iter()
        .flat_map(|&tau| Algorithm::NAMED.iter().map(move |&a| (tau, a)))
        .collect();
    let results = parallel_map(&cells, args.parallel.max(1), |&(tau, algorithm)| {
        sweep_cell(algorithm, tau, &train_cfg, &profile, cfg.network.bandwidth_nu)
    })?;

    let mut csv = String::from("tau_s,algorithm,sim_iter_time_s,analytic_time_s,handshakes\n");
    for ((tau, algorithm), (sim, analytic, handshakes)) in cells.iter().zip(&results) {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            tau,
            algorithm.name(),
            sim,
            analytic,
            handshakes
        ));
    }
    write_file(&args.out.join("sweep.csv"), &csv)?;
    Ok(())
}

fn cmd_idle_table(args: &RunArgs, cfg: ExperimentConfig) -> Result<()> {
    let names: Vec<String> = cfg.profiles.clone().unwrap_or_else(|| {
        LayerProfile::BUILTIN_NAMES
            .iter()
            .map(|s| s.to_string())
            .collect()
    });
    let n_list = cfg.sweep_workers.clone().unwrap_or_else(|| vec![1, 4, 16]);
    let profiles: Vec<(String, LayerProfile)> = names
        .iter()
        .map(|n| Ok((n.clone(), cfg.resolve_profile(n)?)))
        .collect::<Result<_>>()?;
    let link = link_from(&cfg)?;
    let rows = idle_table(&profiles, &n_list, &link)?;
    let mut csv = String::from("model,workers,idle_s,proportion\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.model, row.workers, row.idle_s, row.proportion
        ));
    }
    write_file(&args.out.join("idle.csv"), &csv)?;
    Ok(())
}

/// Surrogate optimum for tasks without an analytic one: best loss seen along
/// a long full-batch descent from the initialization.
fn surrogate_f_star(task: &dyn Task, eta: f64) -> Result<f64> {
    let mut x = task.initial_params();
    let mut best = task.full_loss(&x);
    for _ in 0..2000 {
        let g = task.full_grad(&x);
        x.axpy_in_place(-eta, &g)?;
        best = best.min(task.full_loss(&x));
    }
    Ok(best)
}

fn cmd_theory(args: &RunArgs, cfg: ExperimentConfig) -> Result<()> {
    let train_cfg = cfg.train_config()?;
    if train_cfg.k >= train_cfg.n {
        return Err(Error::InvalidConfig(format!(
            "theory bounds require k < n; got k={} n={}",
            train_cfg.k, train_cfg.n
        )));
    }
    let epsilon = cfg.epsilon.unwrap_or(0.05);
    let seeds = cfg.seeds.unwrap_or(20).max(1);
    let task = cfg.require_task()?.build(cfg.seed)?;
    let link = link_from(&cfg)?;
    let profile = cfg.training_profile(task.dim())?;

    let (l_hat, m_hat) = estimate_constants(task.as_ref(), 64, cfg.seed ^ 0x5EED)?;
    let eta = theorem_eta(epsilon, l_hat, m_hat, train_cfg.n, train_cfg.k)?;
    let x0 = task.initial_params();
    let f_x0 = task.full_loss(&x0);
    let f_star = match task.f_star() {
        Some(v) => v,
        None => surrogate_f_star(task.as_ref(), eta)?,
    };
    let iterations = theorem_min_iters(epsilon, eta, f_x0, f_star)?.max(1);

    let params = TheoryParams {
        l: l_hat,
        m: m_hat,
        epsilon,
        f_star,
        n: train_cfg.n,
        k: train_cfg.k,
        eta,
    };

    let seed_list: Vec<u64> = (0..seeds as u64).collect();
    let campaign = parallel_map(&seed_list, args.parallel.max(1), |&i| {
        let mut run_cfg = train_cfg.clone();
        run_cfg.eta = eta;
        run_cfg.iterations = iterations;
        run_cfg.seed = sesgd_core::rng::mix64(cfg.seed ^ (i + 1));
        let (trace, _) = run_training(
            Algorithm::Sesgd,
            &run_cfg,
            task.as_ref(),
            &profile,
            &link,
            None,
            CollectiveMode::Lockstep,
        )?;
        let report = check_lemma(&trace, task.as_ref(), &params)?;
        let mean_div = trace
            .records
            .iter()
            .map(|r| r.max_divergence)
            .sum::<f64>()
            / trace.records.len() as f64;
        Ok((report.lhs, mean_div))
    })?;

    let lhs = campaign.iter().map(|(l, _)| l).sum::<f64>() / campaign.len() as f64;
    let mean_divergence =
        campaign.iter().map(|(_, d)| d).sum::<f64>() / campaign.len() as f64;
    let (a, b1, b2) = lemma_rhs_terms(&params, iterations, f_x0)?;
    let bound = divergence_bound(eta, train_cfg.n, train_cfg.k, m_hat)?;

    let report = TheoryReport {
        lhs,
        rhs_terms: [a, b1, b2],
        eta,
        iterations,
        holds: lhs <= a + b1 + b2,
        seeds,
        epsilon,
        l_hat,
        m_hat,
        mean_divergence,
        divergence_bound: bound,
        divergence_holds: mean_divergence <= bound,
    };
    write_file(
        &args.out.join("theory_report.json"),
        &format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    Ok(())
}

/// Runs `f` over `items` on up to `threads` workers; output order matches
/// input order, so parallelism never changes results.
fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut slots: Vec<Option<Result<R>>> = items.iter().map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots_mutex = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots_mutex.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|s| s.expect("cell completed")).collect()
}
