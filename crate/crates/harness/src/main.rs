use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sle_harness::acceptance::Suite;
use sle_harness::config::RunConfig;
use sle_harness::ensemble::{run_ensemble, write_outputs, Task};
use sle_harness::HarnessError;

/// Seeded SLE ensembles and the acceptance self-test.
#[derive(Parser)]
#[command(name = "slelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Driving paths and traces.
    Simulate(RunArgs),
    /// Bubble types and indicator bits.
    Bubbles(RunArgs),
    /// Crossings, marked points and future counts.
    Crossings(RunArgs),
    /// Monte Carlo hitting probability against the formula.
    Hitprob(RunArgs),
    /// Runs the acceptance checks and prints a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated seeds, or `BASE:COUNT` for derived seeds.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core). Does not affect the output.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    FSymmetry,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criterion numbers (default: all).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, hide = true)]
    inject_fault: Option<Fault>,
}

fn parse_seeds(text: &str, cfg: &mut RunConfig) -> Result<(), HarnessError> {
    let bad = || HarnessError::Usage(format!("cannot parse seeds {text:?}"));
    if let Some((base, count)) = text.split_once(':') {
        cfg.base_seed = base.trim().parse().map_err(|_| bad())?;
        cfg.count = count.trim().parse().map_err(|_| bad())?;
        cfg.seeds.clear();
    } else {
        cfg.seeds = text
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
    }
    Ok(())
}

fn resolve(args: &RunArgs) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = args.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = args.steps {
        cfg.steps = v;
    }
    if let Some(s) = &args.seeds {
        parse_seeds(s, &mut cfg)?;
    }
    if let Some(v) = args.resolution {
        cfg.resolution = v;
    }
    if let Some(v) = args.r {
        cfg.r = v;
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = &args.out {
        cfg.output_dir = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_task(task: Task, args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = resolve(args)?;
    let out = run_ensemble(&cfg, task, args.workers)?;
    write_outputs(&out, &cfg.output_dir)?;
    println!(
        "{}: {} seeds, {} rows, {} failed seeds -> {}",
        task.name(),
        out.summary.seeds,
        out.rows.len(),
        out.summary.failed_seeds,
        cfg.output_dir.display()
    );
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), HarnessError> {
    if let Some(Fault::FSymmetry) = args.inject_fault {
        sle_core::hitting::inject_symmetry_fault(true);
    }
    let ids: Vec<u8> = if args.only.is_empty() { (1..=10).collect() } else { args.only.clone() };
    let mut suite = Suite::new(args.workers);
    let mut failed = Vec::new();
    for id in ids {
        let r = suite.run(id);
        println!("{} ({:.1} s)", r.line(), r.seconds);
        if !r.pass {
            failed.push(format!("{} ({})", r.id, r.title));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Acceptance(format!("failing criteria: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => run_task(Task::Simulate, a),
        Command::Bubbles(a) => run_task(Task::Bubbles, a),
        Command::Crossings(a) => run_task(Task::Crossings, a),
        Command::Hitprob(a) => run_task(Task::Hitprob, a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
