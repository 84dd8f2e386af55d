//! Synthetic Zipf request workloads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DomainConfig, RequestAggregate};

/// Whether every MEC server sees the same popularity ranking or an
/// independently permuted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopularityMode {
    Similar,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub tile_count: usize,
    pub mec_count: usize,
    pub zipf_alpha: f64,
    pub popularity_mode: PopularityMode,
    pub requests_per_mec: usize,
    /// Probability that a request is a prefetch rather than a remediation.
    #[serde(default = "default_prefetch_fraction")]
    pub prefetch_fraction: f64,
    #[serde(default = "default_prefetch_range")]
    pub prefetch_size_fraction_range: (f64, f64),
    #[serde(default = "default_remediation_range")]
    pub remediation_size_fraction_range: (f64, f64),
    pub rng_seed: u64,
}

fn default_prefetch_fraction() -> f64 {
    0.85
}

fn default_prefetch_range() -> (f64, f64) {
    (0.5, 1.0)
}

fn default_remediation_range() -> (f64, f64) {
    (0.1, 0.2)
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tile_count == 0 {
            return Err(Error::InvalidConfig("tile_count must be >= 1".into()));
        }
        if self.mec_count == 0 {
            return Err(Error::InvalidConfig("mec_count must be >= 1".into()));
        }
        if self.zipf_alpha < 0.0 || !self.zipf_alpha.is_finite() {
            return Err(Error::InvalidConfig("zipf_alpha must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.prefetch_fraction) {
            return Err(Error::InvalidConfig("prefetch_fraction must be in [0,1]".into()));
        }
        for (name, (lo, hi)) in [
            ("prefetch_size_fraction_range", self.prefetch_size_fraction_range),
            ("remediation_size_fraction_range", self.remediation_size_fraction_range),
        ] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::InvalidConfig(format!("{name} must be ordered within [0,1]")));
            }
        }
        Ok(())
    }
}

/// Zipf probability mass over ranks 1..=n: p_k = k^-alpha / H_n(alpha).
pub fn zipf_pmf(alpha: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("zipf_pmf needs n >= 1".into()));
    }
    let mut pmf: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-alpha)).collect();
    let norm: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= norm;
    }
    Ok(pmf)
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    pmf.iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn sample_rank(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
}

/// splitmix64; used to derive independent per-MEC seeds.
pub(crate) fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base.wrapping_add(salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn draw_size(rng: &mut ChaCha8Rng, range: (f64, f64), tile_size_bits: i64) -> i64 {
    let frac = rng.gen_range(range.0..=range.1);
    ((frac * tile_size_bits as f64).floor() as i64).clamp(1, tile_size_bits)
}

/// Generate the request aggregate for one planning period.
///
/// The stream consumption order is fixed: each MEC uses its own derived rng;
/// Random mode first draws the rank-to-tile permutation (Fisher-Yates, high
/// index down), then each request draws tile, type, size in that order.
pub fn generate_workload(spec: &WorkloadSpec, cfg: &DomainConfig) -> Result<RequestAggregate> {
    spec.validate()?;
    cfg.validate()?;
    if spec.mec_count != cfg.mec_count {
        return Err(Error::InvalidConfig("workload and domain mec_count differ".into()));
    }
    let n = spec.tile_count;
    let pmf = zipf_pmf(spec.zipf_alpha, n)?;
    let cdf = cumulative(&pmf);
    let mut agg = RequestAggregate::new(n);
    for mec in 0..spec.mec_count {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.rng_seed, mec as u64));
        let rank_to_tile: Vec<usize> = match spec.popularity_mode {
            PopularityMode::Similar => (0..n).collect(),
            PopularityMode::Random => {
                let mut perm: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    perm.swap(i, j);
                }
                perm
            }
        };
        for _ in 0..spec.requests_per_mec {
            let rank = sample_rank(&cdf, rng.gen::<f64>());
            let tile = rank_to_tile[rank];
            let is_prefetch = rng.gen::<f64>() < spec.prefetch_fraction;
            let range = if is_prefetch {
                spec.prefetch_size_fraction_range
            } else {
                spec.remediation_size_fraction_range
            };
            let sz = draw_size(&mut rng, range, cfg.tile_size_bits);
            agg.push(mec, tile, sz);
        }
    }
    Ok(agg)
}

/// Collapse an aggregate into per-(MEC, tile) request counts.
pub fn aggregate_to_counts(agg: &RequestAggregate, mec_count: usize) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; agg.tile_count]; mec_count];
    for (&(mec, tile), sizes) in &agg.entries {
        counts[mec][tile] += sizes.len() as u64;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, m: usize, alpha: f64, reqs: usize, mode: PopularityMode) -> WorkloadSpec {
        WorkloadSpec {
            tile_count: n,
            mec_count: m,
            zipf_alpha: alpha,
            popularity_mode: mode,
            requests_per_mec: reqs,
            prefetch_fraction: default_prefetch_fraction(),
            prefetch_size_fraction_range: default_prefetch_range(),
            remediation_size_fraction_range: default_remediation_range(),
            rng_seed: 7,
        }
    }

    #[test]
    fn zipf_pmf_examples() {
        assert_eq!(zipf_pmf(1.5, 1).unwrap(), vec![1.0]);
        let uniform = zipf_pmf(0.0, 4).unwrap();
        for p in uniform {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let p = zipf_pmf(1.5, 3).unwrap();
        assert!((p[0] - 0.6468).abs() < 5e-4);
        assert!((p[1] - 0.2287).abs() < 5e-4);
        assert!((p[2] - 0.1245).abs() < 5e-4);
        let total: f64 = zipf_pmf(1.5, 1000).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zipf_pmf_rejects_empty() {
        assert!(zipf_pmf(1.5, 0).is_err());
    }

    #[test]
    fn empty_workload() {
        let cfg = DomainConfig::with_defaults(2, vec![1, 1]);
        let agg =
            generate_workload(&spec(10, 2, 1.5, 0, PopularityMode::Similar), &cfg).unwrap();
        assert_eq!(agg.request_count(), 0);
    }

    #[test]
    fn high_alpha_concentrates_on_rank_one() {
        // zipf_pmf(8, 100) puts ~0.996 of the mass on rank 1.
        let pmf = zipf_pmf(8.0, 100).unwrap();
        assert!(pmf[0] > 0.99);
        let cfg = DomainConfig::with_defaults(2, vec![1, 1]);
        let agg =
            generate_workload(&spec(100, 2, 8.0, 100_000, PopularityMode::Similar), &cfg).unwrap();
        let counts = aggregate_to_counts(&agg, 2);
        for mec in 0..2 {
            let top = counts[mec][0] as f64;
            let total: u64 = counts[mec].iter().sum();
            assert!(top / total as f64 > 0.99, "rank-1 share {} at MEC {mec}", top);
        }
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        let cfg = DomainConfig::with_defaults(3, vec![1, 1, 1]);
        let s = spec(50, 3, 1.5, 500, PopularityMode::Random);
        let a = generate_workload(&s, &cfg).unwrap();
        let b = generate_workload(&s, &cfg).unwrap();
        assert_eq!(a, b);
        let mut other = s.clone();
        other.rng_seed = 8;
        assert_ne!(generate_workload(&other, &cfg).unwrap(), a);
    }

    #[test]
    fn sizes_stay_in_bounds() {
        let cfg = DomainConfig::with_defaults(2, vec![1, 1]);
        let agg =
            generate_workload(&spec(20, 2, 1.0, 2_000, PopularityMode::Similar), &cfg).unwrap();
        for sizes in agg.entries.values() {
            for &sz in sizes {
                assert!(sz >= 1 && sz <= cfg.tile_size_bits);
            }
        }
    }

    #[test]
    fn counts_examples() {
        let mut agg = RequestAggregate::new(6);
        assert_eq!(aggregate_to_counts(&agg, 1), vec![vec![0; 6]]);
        agg.push(0, 5, 100);
        let counts = aggregate_to_counts(&agg, 1);
        assert_eq!(counts[0][5], 1);
        assert_eq!(counts[0].iter().sum::<u64>(), 1);

        let mut two = RequestAggregate::new(4);
        two.push(1, 3, 40_000_000);
        two.push(1, 3, 8_000_000);
        assert_eq!(aggregate_to_counts(&two, 2)[1][3], 2);
    }
}
