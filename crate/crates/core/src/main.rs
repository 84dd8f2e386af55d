//! Command-line experiment runner.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or config
//! errors (clap uses 2 for bad arguments as well).

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mec_cache::error::Error;
use mec_cache::evaluation::{arl_optimization, simulate_sessions};
use mec_cache::experiment::{
    bench_solver, run_algorithm, run_experiment, write_csv, Algorithm, ExperimentConfig,
    InstanceConfig,
};
use mec_cache::ksp::StopPolicy;
use mec_cache::model::{compute_profits, CacheTable};
use mec_cache::workload::generate_workload;

#[derive(Parser)]
#[command(name = "mec-cache", about = "Cooperative edge-cache placement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance config (JSON with domain, workload, optional sim).
    #[arg(long)]
    config: PathBuf,
    /// Override the workload rng seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// oksp | ksp | self-top | distributed | mixco | brute.
    #[arg(long, default_value = "oksp")]
    algorithm: Algorithm,
    /// Keep placing tiles at zero marginal profit until capacity is full.
    #[arg(long)]
    fill_capacity: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a request workload and emit it as JSON.
    GenWorkload(InstanceArgs),
    /// Compute a placement for one instance.
    Solve(SolveArgs),
    /// Compute a placement and report its ARL optimization.
    Evaluate(SolveArgs),
    /// Run the session simulator against a computed placement.
    Simulate(SolveArgs),
    /// Time a single solve on a synthetic instance.
    Bench {
        #[arg(long, default_value_t = 500_000)]
        tiles: usize,
        #[arg(long, default_value_t = 10)]
        mecs: usize,
        /// Per-MEC capacity in tiles.
        #[arg(long, default_value_t = 10_000)]
        capacity: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full sweep from an experiment config and emit CSV.
    Experiment {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep points (default: rayon's choice).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}:{}: {e}", path.display(), e.line())))
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| Error::InvalidArgument(format!("stdout: {e}")))
        }
    }
}

fn load_instance(args: &InstanceArgs) -> Result<InstanceConfig, Error> {
    let mut cfg: InstanceConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.workload.rng_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SolveOutput {
    algorithm: String,
    profit_ns: i64,
    solve_time_ns: i64,
    placements: Vec<Vec<usize>>,
}

fn solve_instance(args: &SolveArgs) -> Result<(InstanceConfig, CacheTable, SolveOutput), Error> {
    let cfg = load_instance(&args.instance)?;
    let agg = generate_workload(&cfg.workload, &cfg.domain)?;
    let profits = compute_profits(&agg, &cfg.domain)?;
    let policy =
        if args.fill_capacity { StopPolicy::FillCapacity } else { StopPolicy::SkipNonImproving };
    let (cache, solve_time_ns) =
        run_algorithm(args.algorithm, &agg, &profits, &cfg.domain, policy)?;
    let profit = arl_optimization(&agg, &cache, &cfg.domain)?.total_saving_ns;
    let output = SolveOutput {
        algorithm: args.algorithm.name().to_string(),
        profit_ns: profit,
        solve_time_ns,
        placements: cache.tiles.iter().map(|s| s.iter().copied().collect()).collect(),
    };
    Ok((cfg, cache, output))
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(format!("json: {e}")))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenWorkload(args) => {
            let cfg = load_instance(&args)?;
            let agg = generate_workload(&cfg.workload, &cfg.domain)?;
            #[derive(Serialize)]
            struct Entry {
                mec: usize,
                tile: usize,
                sizes_bits: Vec<i64>,
            }
            #[derive(Serialize)]
            struct Out {
                tile_count: usize,
                request_count: u64,
                entries: Vec<Entry>,
            }
            let out = Out {
                tile_count: agg.tile_count,
                request_count: agg.request_count(),
                entries: agg
                    .entries
                    .iter()
                    .map(|(&(mec, tile), sizes)| Entry { mec, tile, sizes_bits: sizes.clone() })
                    .collect(),
            };
            write_output(&args.out, &to_pretty(&out)?)
        }
        Command::Solve(args) => {
            let (_, _, output) = solve_instance(&args)?;
            write_output(&args.instance.out, &to_pretty(&output)?)
        }
        Command::Evaluate(args) => {
            let cfg = load_instance(&args.instance)?;
            let agg = generate_workload(&cfg.workload, &cfg.domain)?;
            let profits = compute_profits(&agg, &cfg.domain)?;
            let policy = if args.fill_capacity {
                StopPolicy::FillCapacity
            } else {
                StopPolicy::SkipNonImproving
            };
            let (cache, solve_time_ns) =
                run_algorithm(args.algorithm, &agg, &profits, &cfg.domain, policy)?;
            #[derive(Serialize)]
            struct Out {
                algorithm: String,
                solve_time_ns: i64,
                arl: mec_cache::evaluation::ArlSummary,
            }
            let out = Out {
                algorithm: args.algorithm.name().to_string(),
                solve_time_ns,
                arl: arl_optimization(&agg, &cache, &cfg.domain)?,
            };
            write_output(&args.instance.out, &to_pretty(&out)?)
        }
        Command::Simulate(args) => {
            let (cfg, cache, solved) = solve_instance(&args)?;
            let sim = cfg.sim.clone().ok_or_else(|| {
                Error::InvalidConfig("simulate requires a `sim` section in the config".into())
            })?;
            let (report, _) = simulate_sessions(&cache, &cfg.workload, &sim, &cfg.domain)?;
            #[derive(Serialize)]
            struct Out {
                algorithm: String,
                solve_time_ns: i64,
                report: mec_cache::evaluation::SimReport,
            }
            let out =
                Out { algorithm: solved.algorithm, solve_time_ns: solved.solve_time_ns, report };
            write_output(&args.instance.out, &to_pretty(&out)?)
        }
        Command::Bench { tiles, mecs, capacity, seed, out } => {
            let result = bench_solver(tiles, mecs, capacity, seed)?;
            write_output(&out, &to_pretty(&result)?)
        }
        Command::Experiment { config, seed, out, threads } => {
            let mut cfg: ExperimentConfig = read_json(&config)?;
            if let Some(seed) = seed {
                cfg.workload.rng_seed = seed;
            }
            let (rows, warnings) = run_experiment(&cfg, threads)?;
            for warning in &warnings {
                eprintln!("warning: {warning}");
            }
            let mut csv = Vec::new();
            write_csv(&rows, &mut csv)
                .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
            let csv = String::from_utf8(csv).expect("csv is utf-8");
            match &out {
                Some(path) => fs::write(path, &csv)
                    .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display()))),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
