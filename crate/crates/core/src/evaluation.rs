//! ARL-optimization metric and a session-level transmission simulator.
//!
//! The metric credits each request with the latency saved relative to
//! fetching from the cloud: a full cloud round trip for a local hit, the
//! round trip minus the inter-MEC hop for a domain hit, nothing for a miss.
//! The simulator drives per-session render ticks through the same routing
//! rules with sampled sizes and cloud delays, so its report can be checked
//! against the analytic metric on the realized request log.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cc, cc_with_delay, ch, cmm, CacheTable, DomainConfig, RequestAggregate};
use crate::workload::{derive_seed, zipf_pmf, PopularityMode, WorkloadSpec};

/// Mean latency saving of a placement over a request aggregate, with the
/// integer division remainder kept explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArlSummary {
    pub total_saving_ns: i64,
    pub request_count: u64,
    pub mean_saving_ns: i64,
    pub remainder_ns: i64,
}

/// Per-request saving versus all-cloud retrieval: a home hit saves the
/// whole cloud path, a domain hit still pays the MEC-to-MEC hop, a miss
/// saves nothing.
pub fn arl_optimization(
    agg: &RequestAggregate,
    cache: &CacheTable,
    cfg: &DomainConfig,
) -> Result<ArlSummary> {
    cfg.validate()?;
    let mut total = 0i64;
    let mut count = 0u64;
    for (&(mec, tile), sizes) in &agg.entries {
        if mec >= cfg.mec_count {
            return Err(Error::InvalidArgument(format!("request at unknown MEC {mec}")));
        }
        let local = cache.contains(mec, tile);
        let anywhere = local || cache.cached_anywhere(tile);
        for &sz in sizes {
            count += 1;
            if local {
                total += cc(sz, cfg)?;
            } else if anywhere {
                total += cc(sz, cfg)? - cmm(sz, cfg)?;
            }
        }
    }
    // Requests that touched no aggregated entry still count.
    let count = count.max(agg.request_count());
    let (mean, rem) = if count == 0 { (0, 0) } else { (total / count as i64, total % count as i64) };
    Ok(ArlSummary { total_saving_ns: total, request_count: count, mean_saving_ns: mean, remainder_ns: rem })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudDelaySampling {
    /// Every request sees the planning-time delay value (ns).
    Fixed(i64),
    /// Per-request uniform draw from [lo, hi] ns.
    Uniform(i64, i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub render_interval_ns: i64,
    pub prediction_window_ns: i64,
    /// Probability a tile needed at a render tick was prefetched in time.
    pub prediction_accuracy: f64,
    pub session_count: usize,
    pub requests_per_session: usize,
    pub rng_seed: u64,
    pub cloud_delay_sampling: CloudDelaySampling,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.render_interval_ns <= 0 || self.prediction_window_ns <= 0 {
            return Err(Error::InvalidConfig("simulator intervals must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.prediction_accuracy) {
            return Err(Error::InvalidConfig("prediction_accuracy must be in [0,1]".into()));
        }
        match self.cloud_delay_sampling {
            CloudDelaySampling::Fixed(v) if v < 0 => {
                Err(Error::InvalidConfig("fixed cloud delay must be >= 0".into()))
            }
            CloudDelaySampling::Uniform(lo, hi) if lo < 0 || lo > hi => {
                Err(Error::InvalidConfig("uniform cloud delay range must be ordered".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub total_requests: u64,
    pub local_hits: u64,
    pub domain_hits: u64,
    pub cloud_misses: u64,
    pub prefetch_requests: u64,
    pub remediation_requests: u64,
    /// Total latency actually paid (ns).
    pub total_latency_ns: i64,
    /// Total saving versus all-cloud retrieval (ns).
    pub total_saving_ns: i64,
    pub mean_saving_ns: i64,
    pub remainder_ns: i64,
}

/// Drive synthetic sessions against a placement.
///
/// Each session is homed on MEC `session % M` and runs one request per
/// render tick: a prefetch (issued a prediction window ahead) when the
/// predictor was right, a remediation fetch otherwise. Sizes and tile
/// popularity come from the workload spec; the realized log is returned so
/// the analytic metric can replay it.
pub fn simulate_sessions(
    cache: &CacheTable,
    wl: &WorkloadSpec,
    sim: &SimConfig,
    cfg: &DomainConfig,
) -> Result<(SimReport, RequestAggregate)> {
    wl.validate()?;
    sim.validate()?;
    cfg.validate()?;
    if wl.mec_count != cfg.mec_count {
        return Err(Error::InvalidConfig("workload and domain mec_count differ".into()));
    }
    let n = wl.tile_count;
    let pmf = zipf_pmf(wl.zipf_alpha, n)?;
    let cdf: Vec<f64> = pmf
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    // Per-MEC rank-to-tile mapping, fixed across sessions of the same home.
    let rank_to_tile: Vec<Vec<usize>> = (0..cfg.mec_count)
        .map(|mec| {
            let mut perm: Vec<usize> = (0..n).collect();
            if wl.popularity_mode == PopularityMode::Random {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sim.rng_seed, 1_000 + mec as u64));
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    perm.swap(i, j);
                }
            }
            perm
        })
        .collect();

    let mut report = SimReport::default();
    let mut log = RequestAggregate::new(n);
    for session in 0..sim.session_count {
        let home = session % cfg.mec_count;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sim.rng_seed, session as u64));
        for _ in 0..sim.requests_per_session {
            let u: f64 = rng.gen();
            let rank = cdf.partition_point(|&c| c < u).min(n - 1);
            let tile = rank_to_tile[home][rank];
            let predicted = rng.gen::<f64>() < sim.prediction_accuracy;
            let range = if predicted {
                wl.prefetch_size_fraction_range
            } else {
                wl.remediation_size_fraction_range
            };
            let frac = rng.gen_range(range.0..=range.1);
            let sz = ((frac * cfg.tile_size_bits as f64).floor() as i64).clamp(1, cfg.tile_size_bits);
            let bu = rng.gen_range(cfg.user_bandwidth_range_bps.0..=cfg.user_bandwidth_range_bps.1);
            let cloud_delay = match sim.cloud_delay_sampling {
                CloudDelaySampling::Fixed(v) => v,
                CloudDelaySampling::Uniform(lo, hi) => rng.gen_range(lo..=hi),
            };

            let last_hop = ch(sz, bu, cfg)?;
            let cloud_cost = cc_with_delay(sz, cfg, cloud_delay)?;
            let (latency, saving) = if cache.contains(home, tile) {
                report.local_hits += 1;
                (last_hop, cloud_cost)
            } else if cache.cached_anywhere(tile) {
                report.domain_hits += 1;
                let hop = cmm(sz, cfg)?;
                (last_hop + hop, cloud_cost - hop)
            } else {
                report.cloud_misses += 1;
                (last_hop + cloud_cost, 0)
            };
            if predicted {
                report.prefetch_requests += 1;
            } else {
                report.remediation_requests += 1;
            }
            report.total_requests += 1;
            report.total_latency_ns += latency;
            report.total_saving_ns += saving;
            log.push(home, tile, sz);
        }
    }
    if report.total_requests > 0 {
        report.mean_saving_ns = report.total_saving_ns / report.total_requests as i64;
        report.remainder_ns = report.total_saving_ns % report.total_requests as i64;
    }
    debug_assert_eq!(
        report.local_hits + report.domain_hits + report.cloud_misses,
        report.total_requests
    );
    Ok((report, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_TILE_SIZE_BITS;

    fn domain(m: usize, caps: Vec<usize>) -> DomainConfig {
        DomainConfig::with_defaults(m, caps)
    }

    fn wl(n: usize, m: usize, alpha: f64) -> WorkloadSpec {
        WorkloadSpec {
            tile_count: n,
            mec_count: m,
            zipf_alpha: alpha,
            popularity_mode: PopularityMode::Similar,
            requests_per_mec: 0,
            prefetch_fraction: 0.85,
            prefetch_size_fraction_range: (0.5, 1.0),
            remediation_size_fraction_range: (0.1, 0.2),
            rng_seed: 3,
        }
    }

    fn sim(sessions: usize, reqs: usize, accuracy: f64) -> SimConfig {
        SimConfig {
            render_interval_ns: 11_111_111, // ~90 fps
            prediction_window_ns: 1_000_000_000,
            prediction_accuracy: accuracy,
            session_count: sessions,
            requests_per_session: reqs,
            rng_seed: 99,
            cloud_delay_sampling: CloudDelaySampling::Fixed(75 * crate::model::MS),
        }
    }

    #[test]
    fn empty_cache_gives_zero() {
        let cfg = domain(2, vec![1, 1]);
        let mut agg = RequestAggregate::new(4);
        agg.push(0, 1, 40_000_000);
        let s = arl_optimization(&agg, &CacheTable::empty(2), &cfg).unwrap();
        assert_eq!(s.total_saving_ns, 0);
        assert_eq!(s.request_count, 1);
    }

    #[test]
    fn mixed_hit_example() {
        // Two local hits and one domain hit of 40e6 bits each:
        // (190 + 190 + 107) Mns over 3 requests.
        let cfg = domain(2, vec![1, 1]);
        let mut agg = RequestAggregate::new(2);
        agg.push(0, 0, 40_000_000);
        agg.push(0, 0, 40_000_000);
        agg.push(1, 0, 40_000_000);
        let mut cache = CacheTable::empty(2);
        cache.insert(0, 0);
        let s = arl_optimization(&agg, &cache, &cfg).unwrap();
        assert_eq!(s.total_saving_ns, 487_000_000);
        assert_eq!(s.mean_saving_ns, 162_333_333);
        assert_eq!(s.remainder_ns, 1);
    }

    #[test]
    fn full_replication_is_the_upper_bound() {
        let cfg = domain(2, vec![8, 8]);
        let mut agg = RequestAggregate::new(3);
        agg.push(0, 0, 10_000_000);
        agg.push(1, 2, 25_000_000);
        agg.push(0, 1, 40_000_000);
        let mut cache = CacheTable::empty(2);
        for m in 0..2 {
            for t in 0..3 {
                cache.insert(m, t);
            }
        }
        let s = arl_optimization(&agg, &cache, &cfg).unwrap();
        let expected: i64 =
            [10_000_000, 25_000_000, 40_000_000].iter().map(|&sz| cc(sz, &cfg).unwrap()).sum();
        assert_eq!(s.total_saving_ns, expected);
    }

    #[test]
    fn metric_equals_placement_profit() {
        use crate::model::{compute_profits, placement_profit};
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = domain(3, vec![2, 2, 2]);
        let mut agg = RequestAggregate::new(8);
        for _ in 0..300 {
            agg.push(rng.gen_range(0..3), rng.gen_range(0..8), rng.gen_range(1..=DEFAULT_TILE_SIZE_BITS));
        }
        let mut cache = CacheTable::empty(3);
        for m in 0..3 {
            while cache.used(m) < 2 {
                cache.insert(m, rng.gen_range(0..8));
            }
        }
        let profits = compute_profits(&agg, &cfg).unwrap();
        let s = arl_optimization(&agg, &cache, &cfg).unwrap();
        let caps = [2usize, 2, 2];
        assert_eq!(s.total_saving_ns, placement_profit(&profits, &cache, &caps).unwrap());
    }

    #[test]
    fn perfect_prediction_all_local() {
        let n = 5;
        let cfg = domain(1, vec![n]);
        let mut cache = CacheTable::empty(1);
        for t in 0..n {
            cache.insert(0, t);
        }
        let (report, _) = simulate_sessions(&cache, &wl(n, 1, 1.2), &sim(4, 50, 1.0), &cfg).unwrap();
        assert_eq!(report.remediation_requests, 0);
        assert_eq!(report.local_hits, report.total_requests);
        assert_eq!(report.cloud_misses, 0);
    }

    #[test]
    fn empty_simulation() {
        let cfg = domain(2, vec![1, 1]);
        let (report, log) =
            simulate_sessions(&CacheTable::empty(2), &wl(4, 2, 1.0), &sim(0, 10, 0.5), &cfg).unwrap();
        assert_eq!(report, SimReport::default());
        assert_eq!(log.request_count(), 0);
    }

    #[test]
    fn fixed_delay_replay_matches_analytic_metric() {
        let cfg = domain(3, vec![2, 2, 2]);
        let mut cache = CacheTable::empty(3);
        cache.insert(0, 0);
        cache.insert(0, 3);
        cache.insert(1, 1);
        cache.insert(2, 7);
        let s = sim(9, 200, 0.8422);
        let (report, log) = simulate_sessions(&cache, &wl(12, 3, 1.3), &s, &cfg).unwrap();
        let analytic = arl_optimization(&log, &cache, &cfg).unwrap();
        assert_eq!(report.total_saving_ns, analytic.total_saving_ns);
        assert_eq!(report.mean_saving_ns, analytic.mean_saving_ns);
        assert_eq!(report.total_requests, analytic.request_count);
    }

    #[test]
    fn uniform_delay_agrees_within_tolerance() {
        let cfg = domain(2, vec![2, 2]);
        let mut cache = CacheTable::empty(2);
        cache.insert(0, 0);
        cache.insert(1, 1);
        let mut s = sim(20, 6_000, 0.8);
        s.cloud_delay_sampling =
            CloudDelaySampling::Uniform(cfg.t_cloud_range_ns.0, cfg.t_cloud_range_ns.1);
        let (report, log) = simulate_sessions(&cache, &wl(6, 2, 1.0), &s, &cfg).unwrap();
        let analytic = arl_optimization(&log, &cache, &cfg).unwrap();
        // Cloud delay varies uniformly over a 50 ms window around the
        // planning value; savings on cached requests shift accordingly.
        let half_width = (cfg.t_cloud_range_ns.1 - cfg.t_cloud_range_ns.0) as f64 / 2.0;
        let sigma = 2.0 * half_width / (12f64).sqrt() * (report.total_requests as f64).sqrt();
        let diff = (report.total_saving_ns - analytic.total_saving_ns) as f64;
        assert!(diff.abs() < 3.0 * sigma, "diff {diff} vs 3 sigma {}", 3.0 * sigma);
    }

    #[test]
    fn larger_cache_never_hurts() {
        let cfg = domain(2, vec![3, 3]);
        let s = sim(8, 300, 0.7);
        let spec = wl(10, 2, 1.4);
        let mut small = CacheTable::empty(2);
        small.insert(0, 0);
        small.insert(1, 2);
        let mut big = small.clone();
        big.insert(0, 1);
        big.insert(1, 0);
        let (rs, _) = simulate_sessions(&small, &spec, &s, &cfg).unwrap();
        let (rb, _) = simulate_sessions(&big, &spec, &s, &cfg).unwrap();
        assert!(rb.total_saving_ns >= rs.total_saving_ns);
        assert!(rb.mean_saving_ns >= rs.mean_saving_ns);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut s = sim(1, 1, 0.5);
        s.prediction_accuracy = 1.5;
        assert!(s.validate().is_err());
        let mut s = sim(1, 1, 0.5);
        s.render_interval_ns = 0;
        assert!(s.validate().is_err());
        let mut s = sim(1, 1, 0.5);
        s.cloud_delay_sampling = CloudDelaySampling::Uniform(10, 5);
        assert!(s.validate().is_err());
    }
}
