//! Per-seed pipelines and their parallel execution.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sle_core::{
    compute_trace, crossing_report, diameter, extract_path_bubbles, indicator_sequence, mc_hitting,
    sample_sle_driving, summarize_trials, hitting_trial_with, HittingEstimate,
};

use crate::config::RunConfig;
use crate::report::{csv_bytes, ReportRow, Summary};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Simulate,
    Bubbles,
    Crossings,
    Hitprob,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Bubbles => "bubbles",
            Task::Crossings => "crossings",
            Task::Hitprob => "hitprob",
        }
    }
}

type Obs = Vec<(&'static str, usize, f64)>;

fn simulate(cfg: &RunConfig, seed: u64) -> sle_core::Result<Obs> {
    let path = sample_sle_driving(cfg.kappa, cfg.horizon, cfg.steps, seed)?;
    let trace = compute_trace(&path, 1)?;
    let tip = *trace.points.last().expect("trace has the origin");
    Ok(vec![
        ("tip", 0, tip.re),
        ("tip", 1, tip.im),
        ("hcap", 0, 2.0 * path.chain().capacity_sum().value()),
        ("max_abs_driving", 0, path.u.iter().fold(0.0, |m, x| m.max(x.abs()))),
        ("trace_diameter", 0, diameter(&trace.points)),
        ("median_gap", 0, trace.median_gap()),
    ])
}

fn bubbles(cfg: &RunConfig, seed: u64) -> sle_core::Result<Obs> {
    let path = sample_sle_driving(cfg.kappa, cfg.horizon, cfg.steps, seed)?;
    let bs = extract_path_bubbles(&path, &cfg.bbox(), cfg.resolution, &cfg.bubble_params())?;
    let mut out: Obs = (0..4u8)
        .map(|t| ("bubble_count", t as usize, bs.bubbles.iter().filter(|b| b.type_code == t).count() as f64))
        .collect();
    for (i, k) in bs.type3_indices().into_iter().enumerate() {
        out.push(("type3_diameter", i, bs.bubbles[k].diameter));
    }
    if let Some(a) = bs.anchor {
        out.push(("anchor", 0, a as f64));
    }
    if let Ok(ind) = indicator_sequence(&bs) {
        out.extend(ind.bits.iter().enumerate().map(|(i, &b)| ("indicator", i, b as f64)));
    }
    Ok(out)
}

fn crossings(cfg: &RunConfig, seed: u64) -> sle_core::Result<Obs> {
    let path = sample_sle_driving(cfg.kappa, cfg.horizon, cfg.steps, seed)?;
    let rep = crossing_report(&path, &cfg.crossing_params())?;
    let mut out: Obs = vec![
        ("crossings", 0, rep.crossings.len() as f64),
        ("excursion_j", 0, rep.excursion.j as f64),
        ("excursion_diam", 0, rep.excursion.diam),
        ("excursion_side", 0, rep.excursion.side as f64),
    ];
    out.extend(rep.marked.xs.iter().enumerate().map(|(k, &x)| ("marked_point", k, x)));
    out.extend(rep.counts.counts.iter().enumerate().map(|(k, &n)| ("count", k, n as f64)));
    out.push(("outside", 0, rep.counts.outside as f64));
    Ok(out)
}

/// Hitting estimate for one seed, as the library computes it.
pub fn hitting_estimate(cfg: &RunConfig, seed: u64) -> sle_core::Result<HittingEstimate> {
    let q = cfg.hitting_query()?;
    if cfg.collision_tol_factor == 0.0 {
        return mc_hitting(&q, cfg.trials, cfg.steps, cfg.horizon, seed);
    }
    let outcomes = (0..cfg.trials)
        .map(|i| {
            let s = sle_core::rng::derive_seed(seed, i as u64);
            hitting_trial_with(&q, cfg.steps, cfg.horizon, s, cfg.collision_tol_factor)
        })
        .collect::<sle_core::Result<Vec<_>>>()?;
    summarize_trials(&q, &outcomes)
}

fn hitprob(cfg: &RunConfig, seed: u64) -> sle_core::Result<Obs> {
    let e = hitting_estimate(cfg, seed)?;
    Ok(vec![
        ("p_hat", 0, e.p_hat),
        ("stderr", 0, e.stderr),
        ("n_traces", 0, e.n_traces as f64),
        ("unresolved", 0, e.unresolved as f64),
        ("f_theory", 0, e.f_theory),
    ])
}

/// Rows of one seed. Errors and panics become a single error row.
pub fn seed_rows(cfg: &RunConfig, task: Task, seed: u64) -> Vec<ReportRow> {
    let row = |name: &str, index: usize, value: Option<f64>, error: String| ReportRow {
        seed,
        kappa: cfg.kappa,
        horizon: cfg.horizon,
        steps: cfg.steps,
        name: name.to_string(),
        index,
        value,
        error,
    };
    let run = || match task {
        Task::Simulate => simulate(cfg, seed),
        Task::Bubbles => bubbles(cfg, seed),
        Task::Crossings => crossings(cfg, seed),
        Task::Hitprob => hitprob(cfg, seed),
    };
    match catch_unwind(AssertUnwindSafe(run)) {
        Ok(Ok(obs)) => obs.into_iter().map(|(n, i, v)| row(n, i, Some(v), String::new())).collect(),
        Ok(Err(e)) => vec![row(task.name(), 0, None, e.to_string())],
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            vec![row(task.name(), 0, None, format!("panic: {msg}"))]
        }
    }
}

/// Maps `f` over the seeds on a pool of `workers` threads (0 = rayon's
/// default), keeping seed order.
pub fn par_map_seeds<T, F>(seeds: &[u64], workers: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(|| seeds.par_iter().map(|&s| f(s)).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
    pub snapshot: String,
}

pub fn run_ensemble(cfg: &RunConfig, task: Task, workers: usize) -> Result<EnsembleOutput, HarnessError> {
    cfg.validate()?;
    let resolved = cfg.resolved();
    let seeds = resolved.seeds.clone();
    let per_seed = par_map_seeds(&seeds, workers, |s| seed_rows(&resolved, task, s))?;
    let rows: Vec<ReportRow> = per_seed.into_iter().flatten().collect();
    let summary = Summary::from_rows(&rows, task.name(), &resolved.hash(), seeds.len());
    Ok(EnsembleOutput {
        rows,
        summary,
        snapshot: resolved.to_toml(),
    })
}

/// Writes `results.csv`, `summary.json` and `config.snapshot` into `dir`.
pub fn write_outputs(out: &EnsembleOutput, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| HarnessError::io(&p, e))
    };
    write("results.csv", &csv_bytes(&out.rows))?;
    write("summary.json", out.summary.to_json().as_bytes())?;
    write("config.snapshot", out.snapshot.as_bytes())
}
