//! Experiment sweeps, algorithm dispatch, CSV emission, and the solver
//! micro-benchmark.
//!
//! A run is fully described by one JSON `ExperimentConfig`; given the same
//! config and seed the emitted CSV is byte-identical, regardless of how
//! many worker threads execute the sweep.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{distributed, mixco, self_top};
use crate::error::{Error, Result};
use crate::evaluation::{arl_optimization, SimConfig};
use crate::ksp::{brute_force_optimal, build_graph, ksp_solve, StopPolicy};
use crate::model::{compute_profits, CacheTable, DomainConfig, ProfitTable, RequestAggregate};
use crate::oksp::{oksp_solve_with_stats, SolverStats};
use crate::workload::{aggregate_to_counts, derive_seed, generate_workload, WorkloadSpec};

pub const CSV_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "csv_version,seed,sweep_axis,sweep_value,algorithm,repetition,\
request_count,local_hits,domain_hits,cloud_misses,arl_optimization_ns,total_saving_ns,\
solve_time_ns";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Oksp,
    Ksp,
    SelfTop,
    Distributed,
    Mixco,
    Brute,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Oksp,
        Algorithm::Ksp,
        Algorithm::SelfTop,
        Algorithm::Distributed,
        Algorithm::Mixco,
        Algorithm::Brute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Oksp => "oksp",
            Algorithm::Ksp => "ksp",
            Algorithm::SelfTop => "self-top",
            Algorithm::Distributed => "distributed",
            Algorithm::Mixco => "mixco",
            Algorithm::Brute => "brute",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

/// The single swept parameter; every other field of the config is held
/// fixed across sweep points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Per-MEC storage in GB (decimal; converted to whole tiles).
    CapacityGb(Vec<f64>),
    TileCount(Vec<usize>),
    Alpha(Vec<f64>),
    MecCount(Vec<usize>),
}

impl Sweep {
    pub fn axis_name(&self) -> &'static str {
        match self {
            Sweep::CapacityGb(_) => "capacity_gb",
            Sweep::TileCount(_) => "tile_count",
            Sweep::Alpha(_) => "alpha",
            Sweep::MecCount(_) => "mec_count",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::CapacityGb(v) => v.len(),
            Sweep::TileCount(v) => v.len(),
            Sweep::Alpha(v) => v.len(),
            Sweep::MecCount(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value_label(&self, idx: usize) -> String {
        match self {
            Sweep::CapacityGb(v) => format!("{}", v[idx]),
            Sweep::TileCount(v) => format!("{}", v[idx]),
            Sweep::Alpha(v) => format!("{}", v[idx]),
            Sweep::MecCount(v) => format!("{}", v[idx]),
        }
    }
}

fn default_repetitions() -> usize {
    3
}

fn default_mixco_max_tiles() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub workload: WorkloadSpec,
    pub sim: SimConfig,
    pub sweep: Sweep,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// MixCo is skipped (with a warning) above this tile count.
    #[serde(default = "default_mixco_max_tiles")]
    pub mixco_max_tiles: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.workload.validate()?;
        self.sim.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("algorithm list must not be empty".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::InvalidConfig("sweep must contain at least one point".into()));
        }
        if let Sweep::CapacityGb(points) = &self.sweep {
            if points.iter().any(|&gb| !(gb >= 0.0) || !gb.is_finite()) {
                return Err(Error::InvalidConfig("capacity_gb points must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Domain and workload with the sweep point applied.
    fn instantiate(&self, idx: usize) -> (DomainConfig, WorkloadSpec) {
        let mut domain = self.domain.clone();
        let mut workload = self.workload.clone();
        match &self.sweep {
            Sweep::CapacityGb(points) => {
                let tiles = tiles_per_gb(points[idx], domain.tile_size_bits);
                domain.capacities = vec![tiles; domain.mec_count];
            }
            Sweep::TileCount(points) => workload.tile_count = points[idx],
            Sweep::Alpha(points) => workload.zipf_alpha = points[idx],
            Sweep::MecCount(points) => {
                let m = points[idx];
                let per_mec = self.domain.capacities.first().copied().unwrap_or(0);
                domain.mec_count = m;
                domain.capacities = vec![per_mec; m];
                workload.mec_count = m;
            }
        }
        (domain, workload)
    }
}

/// A single (non-swept) instance description for the one-shot subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub domain: DomainConfig,
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub sim: Option<SimConfig>,
}

impl InstanceConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.workload.validate()?;
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        Ok(())
    }
}

/// GB are decimal (1e9 bytes); capacities count whole tiles.
pub fn tiles_per_gb(gb: f64, tile_size_bits: i64) -> usize {
    let tile_bytes = (tile_size_bits / 8) as f64;
    ((gb * 1e9) / tile_bytes).floor() as usize
}

/// Run one algorithm on a prepared instance. Returns the table and the
/// solve wall time; `brute` and the exact solvers may reject oversized or
/// malformed instances.
pub fn run_algorithm(
    algorithm: Algorithm,
    agg: &RequestAggregate,
    profits: &ProfitTable,
    domain: &DomainConfig,
    policy: StopPolicy,
) -> Result<(CacheTable, i64)> {
    let caps = &domain.capacities;
    let start = Instant::now();
    let cache = match algorithm {
        Algorithm::Oksp => oksp_solve_with_stats(profits, caps, policy)?.0,
        Algorithm::Ksp => {
            let mut graph = build_graph(profits, caps)?;
            let k = caps.iter().sum();
            ksp_solve(&mut graph, k, policy).0
        }
        Algorithm::Brute => brute_force_optimal(profits, caps)?.0,
        Algorithm::SelfTop => self_top(&aggregate_to_counts(agg, domain.mec_count), caps),
        Algorithm::Distributed => distributed(&aggregate_to_counts(agg, domain.mec_count), caps),
        Algorithm::Mixco => {
            mixco(&aggregate_to_counts(agg, domain.mec_count), profits, caps, domain)
        }
    };
    Ok((cache, start.elapsed().as_nanos() as i64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub seed: u64,
    pub sweep_axis: &'static str,
    pub sweep_value: String,
    pub algorithm: Algorithm,
    /// 0-based repetition index, or `None` for the per-point mean row.
    pub repetition: Option<usize>,
    pub request_count: u64,
    pub local_hits: u64,
    pub domain_hits: u64,
    pub cloud_misses: u64,
    pub arl_optimization_ns: i64,
    pub total_saving_ns: i64,
    pub solve_time_ns: i64,
}

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        let rep = match self.repetition {
            Some(r) => r.to_string(),
            None => "mean".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            CSV_VERSION,
            self.seed,
            self.sweep_axis,
            self.sweep_value,
            self.algorithm,
            rep,
            self.request_count,
            self.local_hits,
            self.domain_hits,
            self.cloud_misses,
            self.arl_optimization_ns,
            self.total_saving_ns,
            self.solve_time_ns,
        )
    }
}

/// Per-request hit classes of a placement over an aggregate.
fn hit_breakdown(agg: &RequestAggregate, cache: &CacheTable) -> (u64, u64, u64) {
    let (mut local, mut domain, mut cloud) = (0u64, 0u64, 0u64);
    for (&(mec, tile), sizes) in &agg.entries {
        let k = sizes.len() as u64;
        if cache.contains(mec, tile) {
            local += k;
        } else if cache.cached_anywhere(tile) {
            domain += k;
        } else {
            cloud += k;
        }
    }
    (local, domain, cloud)
}

/// Execute the whole sweep. Rows come back in canonical order
/// (sweep point, algorithm list order, repetition, then the mean row), no
/// matter how the worker pool scheduled them. Skipped MixCo points are
/// reported through `warnings`.
pub fn run_experiment(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<(Vec<ExperimentRow>, Vec<String>)> {
    config.validate()?;
    let mut tasks = Vec::new();
    let mut warnings = Vec::new();
    for point in 0..config.sweep.len() {
        let (domain, workload) = config.instantiate(point);
        domain.validate()?;
        workload.validate()?;
        for (alg_idx, &algorithm) in config.algorithms.iter().enumerate() {
            if algorithm == Algorithm::Mixco && workload.tile_count > config.mixco_max_tiles {
                warnings.push(format!(
                    "skipping mixco at {}={} ({} tiles exceeds mixco_max_tiles={})",
                    config.sweep.axis_name(),
                    config.sweep.value_label(point),
                    workload.tile_count,
                    config.mixco_max_tiles
                ));
                continue;
            }
            for rep in 0..config.repetitions {
                tasks.push((point, alg_idx, algorithm, rep, domain.clone(), workload.clone()));
            }
        }
    }

    let run_task = |(point, alg_idx, algorithm, rep, domain, mut workload): (
        usize,
        usize,
        Algorithm,
        usize,
        DomainConfig,
        WorkloadSpec,
    )|
     -> Result<((usize, usize, usize), ExperimentRow)> {
        let seed = derive_seed(derive_seed(config.workload.rng_seed, point as u64), rep as u64);
        workload.rng_seed = seed;
        let agg = generate_workload(&workload, &domain)?;
        let profits = compute_profits(&agg, &domain)?;
        let (cache, solve_time_ns) =
            run_algorithm(algorithm, &agg, &profits, &domain, StopPolicy::default())?;
        let summary = arl_optimization(&agg, &cache, &domain)?;
        let (local, domain_hits, cloud) = hit_breakdown(&agg, &cache);
        Ok((
            (point, alg_idx, rep),
            ExperimentRow {
                seed,
                sweep_axis: config.sweep.axis_name(),
                sweep_value: config.sweep.value_label(point),
                algorithm,
                repetition: Some(rep),
                request_count: summary.request_count,
                local_hits: local,
                domain_hits,
                cloud_misses: cloud,
                arl_optimization_ns: summary.mean_saving_ns,
                total_saving_ns: summary.total_saving_ns,
                solve_time_ns,
            },
        ))
    };

    let mut keyed: Vec<((usize, usize, usize), ExperimentRow)> = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| tasks.into_par_iter().map(run_task).collect::<Result<Vec<_>>>())?,
        None => tasks.into_par_iter().map(run_task).collect::<Result<Vec<_>>>()?,
    };
    keyed.sort_by(|a, b| a.0.cmp(&b.0));

    // Interleave mean rows after each (point, algorithm) group.
    let mut rows = Vec::new();
    let mut group: Vec<ExperimentRow> = Vec::new();
    let flush = |group: &mut Vec<ExperimentRow>, rows: &mut Vec<ExperimentRow>| {
        if group.is_empty() {
            return;
        }
        let k = group.len() as i64;
        let mean = ExperimentRow {
            seed: config.workload.rng_seed,
            sweep_axis: group[0].sweep_axis,
            sweep_value: group[0].sweep_value.clone(),
            algorithm: group[0].algorithm,
            repetition: None,
            request_count: group.iter().map(|r| r.request_count).sum::<u64>() / k as u64,
            local_hits: group.iter().map(|r| r.local_hits).sum::<u64>() / k as u64,
            domain_hits: group.iter().map(|r| r.domain_hits).sum::<u64>() / k as u64,
            cloud_misses: group.iter().map(|r| r.cloud_misses).sum::<u64>() / k as u64,
            arl_optimization_ns: group.iter().map(|r| r.arl_optimization_ns).sum::<i64>() / k,
            total_saving_ns: group.iter().map(|r| r.total_saving_ns).sum::<i64>() / k,
            solve_time_ns: group.iter().map(|r| r.solve_time_ns).sum::<i64>() / k,
        };
        rows.append(group);
        rows.push(mean);
    };
    for (_, row) in keyed {
        if let Some(last) = group.last() {
            if last.sweep_value != row.sweep_value || last.algorithm != row.algorithm {
                flush(&mut group, &mut rows);
            }
        }
        group.push(row);
    }
    flush(&mut group, &mut rows);
    Ok((rows, warnings))
}

pub fn write_csv<W: std::io::Write>(rows: &[ExperimentRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv())?;
    }
    out.flush()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BenchResult {
    pub tile_count: usize,
    pub mec_count: usize,
    pub capacity_per_mec: usize,
    pub seed: u64,
    pub wall_time_ns: i64,
    pub profit: i64,
    pub stats: SolverStats,
}

/// Time a single solve on a synthetic instance with positive profits, so
/// the run performs exactly `M * capacity` augmenting iterations.
pub fn bench_solver(n: usize, m: usize, capacity_per_mec: usize, seed: u64) -> Result<BenchResult> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("bench needs n >= 1 and m >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profits = ProfitTable {
        global: (0..n).map(|_| rng.gen_range(1..=1_000_000)).collect(),
        local: (0..n).map(|_| (0..m).map(|_| rng.gen_range(1..=1_000_000)).collect()).collect(),
    };
    let capacities = vec![capacity_per_mec; m];
    let start = Instant::now();
    let (_, profit, stats) = oksp_solve_with_stats(&profits, &capacities, StopPolicy::FillCapacity)?;
    Ok(BenchResult {
        tile_count: n,
        mec_count: m,
        capacity_per_mec,
        seed,
        wall_time_ns: start.elapsed().as_nanos() as i64,
        profit,
        stats,
    })
}
