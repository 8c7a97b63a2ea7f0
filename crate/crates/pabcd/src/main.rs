use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::info;
use pabcd::bench::{report, run_benchmark, write_report, BenchConfig};
use pabcd::io::{load_instance, save_instance};
use pabcd::solve;
use pabcd_core::solvers::{Mode, SolverParams};
use pabcd_core::verify::standard_suite;
use pabcd_core::{build_lasso, describe, generate, GeneratorSpec};

#[derive(Debug, Parser)]
#[command(name = "pabcd", version, about = "Parallel active block coordinate descent for the Lasso")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance (.mtx with .json sidecar, or libsvm text).
    Solve(SolveArgs),
    /// Generate an instance with a known optimum.
    Gen(GenArgs),
    /// Run a benchmark grid from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the statistical checks.
    Verify {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, env = "PABCD_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, clap::Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "parallel-active")]
    mode: Mode,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 10)]
    delta_dp: usize,
    #[arg(long, default_value_t = 1)]
    delta_f: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long)]
    lmax: Option<u64>,
    /// Objective target; defaults to F*(1 + 1e-4) when the sidecar knows F*.
    #[arg(long)]
    target: Option<f64>,
    /// Overrides the sidecar value, or 0.1·‖Aᵀb‖∞ for libsvm data.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, env = "PABCD_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the run record as JSON.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct GenArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    nnz_per_col: usize,
    #[arg(long)]
    support: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, env = "PABCD_SEED", default_value_t = 0)]
    seed: u64,
    /// Output base path; writes PATH.mtx and PATH.json.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<()> {
    let loaded = load_instance(&args.instance, args.lambda)
        .with_context(|| format!("loading {}", args.instance.display()))?;
    let f_star = loaded.f_star;
    let p = build_lasso(loaded.a, loaded.b, loaded.lambda)?;
    let params = SolverParams {
        mode: args.mode,
        tau: args.threads,
        delta_dp: args.delta_dp,
        delta_f: args.delta_f,
        alpha: args.alpha,
        c0: None,
        epsilon: args.epsilon,
        l_max: args.lmax,
        f_target: args.target.or(f_star.map(|f| f * (1.0 + 1e-4))),
        seed: args.seed,
    };
    let out = solve(&p, &params, vec![0.0; p.n_vars()])?;
    let r = &out.record;
    println!("mode          {}", r.params.mode.as_str());
    println!("threads       {}", r.params.tau);
    println!("termination   {:?}", r.termination);
    println!("updates       {}", r.total_updates);
    println!("cycles        {}", r.epochs.len());
    println!("objective     {:.12e}", r.final_objective);
    if let Some(f) = f_star {
        println!("f_star        {f:.12e}");
    }
    println!("nonzeros      {}", r.final_x_nnz);
    println!("time_s        {:.6}", r.wall_time);
    if let Some(path) = args.record {
        std::fs::write(&path, serde_json::to_string_pretty(r)?)?;
        info!("record written to {}", path.display());
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let mut spec = GeneratorSpec::new(args.rows, args.cols, args.nnz_per_col, args.seed)
        .with_lambda(args.lambda);
    spec.support_size = args.support;
    let inst = generate(&spec)?;
    let (mtx, json) = save_instance(&inst, args.seed, &args.out)?;
    let d = describe(&inst.a, &inst.x_star);
    println!("wrote {} and {}", mtx.display(), json.display());
    println!(
        "rows {} cols {} omega {} zero% {:.2} f_star {:.12e}",
        d.rows, d.cols, d.omega, d.zero_percent, inst.f_star
    );
    Ok(())
}

fn cmd_bench(config: PathBuf) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&config)
        .with_context(|| format!("reading {}", config.display()))?;
    let cfg = BenchConfig::from_json(&text)?;
    let cells = run_benchmark(&cfg);
    for c in &cells {
        match &c.error {
            Some(e) => println!("{} {} tau={} FAILED: {e}", c.instance, c.method, c.tau),
            None => println!(
                "{} {} tau={} runs={} time={:.6} updates={:.0} success={:.2}",
                c.instance, c.method, c.tau, c.runs, c.mean_time, c.mean_updates, c.success_rate
            ),
        }
    }
    let rep = report(&cfg, cells);
    for row in &rep.speedups {
        println!("{} {} {}", row.instance, row.method, row.formatted().join("  "));
    }
    if let Some(out) = &cfg.output {
        for path in write_report(&rep, out)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_verify(trials: u64, seed: u64) -> anyhow::Result<bool> {
    let outcomes = standard_suite(trials, seed)?;
    let mut ok = true;
    for o in &outcomes {
        println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        ok &= o.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Gen(a) => cmd_gen(a).map(|_| true),
        Command::Bench { config } => cmd_bench(config).map(|_| true),
        Command::Verify { trials, seed } => cmd_verify(trials, seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
