//! Latency equations and the caching profit model.
//!
//! All durations are 64-bit integer nanoseconds with ceiling division on
//! transmission terms, so every comparison downstream is exact.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one MEC collaboration domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainConfig {
    /// Number of MEC servers in the domain.
    pub mec_count: usize,
    /// Uniform tile file size, in bits.
    pub tile_size_bits: i64,
    /// Per-server capacity, in whole tiles.
    pub capacities: Vec<usize>,
    /// Inter-MEC link bandwidth, bits/second.
    pub mec_bandwidth_bps: i64,
    /// MEC-to-cloud bandwidth, bits/second.
    pub cloud_bandwidth_bps: i64,
    /// Closed sampling interval for device uplink bandwidth, bits/second.
    pub user_bandwidth_range_bps: (i64, i64),
    /// Queuing delay bound before a request is processed.
    pub t_q1_ns: i64,
    /// Queuing delay bound before a response is sent.
    pub t_q2_ns: i64,
    /// Fluctuation range of the MEC-to-cloud one-way delay.
    pub t_cloud_range_ns: (i64, i64),
    /// The single cloud delay used when computing profits.
    pub t_cloud_planning_ns: i64,
}

pub const MS: i64 = 1_000_000;
const NS_PER_SEC: i64 = 1_000_000_000;

/// 10 MB tile, in bits.
pub const DEFAULT_TILE_SIZE_BITS: i64 = 80_000_000;

impl DomainConfig {
    /// A domain with the reference bandwidth and queuing constants:
    /// 500 Mbps between MEC servers, 1 Gbps to the cloud, [50,100] Mbps
    /// uplinks, 1 ms / 2 ms queuing bounds, [50,100] ms cloud delay with a
    /// 75 ms midpoint for planning, 10 MB tiles.
    pub fn with_defaults(mec_count: usize, capacities: Vec<usize>) -> Self {
        DomainConfig {
            mec_count,
            tile_size_bits: DEFAULT_TILE_SIZE_BITS,
            capacities,
            mec_bandwidth_bps: 500_000_000,
            cloud_bandwidth_bps: 1_000_000_000,
            user_bandwidth_range_bps: (50_000_000, 100_000_000),
            t_q1_ns: MS,
            t_q2_ns: 2 * MS,
            t_cloud_range_ns: (50 * MS, 100 * MS),
            t_cloud_planning_ns: 75 * MS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mec_count == 0 {
            return Err(Error::InvalidConfig("mec_count must be >= 1".into()));
        }
        if self.capacities.len() != self.mec_count {
            return Err(Error::InvalidConfig(format!(
                "capacities has length {}, expected {}",
                self.capacities.len(),
                self.mec_count
            )));
        }
        if self.tile_size_bits <= 0 {
            return Err(Error::InvalidConfig("tile_size_bits must be > 0".into()));
        }
        if self.mec_bandwidth_bps <= 0 || self.cloud_bandwidth_bps <= 0 {
            return Err(Error::InvalidConfig("bandwidths must be > 0".into()));
        }
        let (ulo, uhi) = self.user_bandwidth_range_bps;
        if ulo <= 0 || ulo > uhi {
            return Err(Error::InvalidConfig(
                "user bandwidth range must be positive and ordered".into(),
            ));
        }
        if self.t_q1_ns < 0 || self.t_q2_ns < 0 {
            return Err(Error::InvalidConfig("queuing delays must be >= 0".into()));
        }
        let (clo, chi) = self.t_cloud_range_ns;
        if clo > chi {
            return Err(Error::InvalidConfig("cloud delay range must be ordered".into()));
        }
        if self.t_cloud_planning_ns < clo || self.t_cloud_planning_ns > chi {
            return Err(Error::InvalidConfig(
                "t_cloud_planning_ns must lie within t_cloud_range_ns".into(),
            ));
        }
        Ok(())
    }
}

fn transmission_ns(sz_bits: i64, bw_bps: i64) -> i64 {
    // Widen to i128: sz * 1e9 can exceed i64 for pathological sizes.
    let num = sz_bits as i128 * NS_PER_SEC as i128;
    let den = bw_bps as i128;
    ((num + den - 1) / den) as i64
}

/// One-hop delay between a device and its home MEC server.
pub fn ch(sz_bits: i64, bu_bps: i64, cfg: &DomainConfig) -> Result<i64> {
    if sz_bits <= 0 {
        return Err(Error::InvalidArgument("request size must be > 0".into()));
    }
    if bu_bps <= 0 {
        return Err(Error::InvalidConfig("user bandwidth must be > 0".into()));
    }
    Ok(transmission_ns(sz_bits, bu_bps) + cfg.t_q1_ns + cfg.t_q2_ns)
}

/// Delay over the one-hop inter-MEC link.
pub fn cmm(sz_bits: i64, cfg: &DomainConfig) -> Result<i64> {
    if sz_bits <= 0 {
        return Err(Error::InvalidArgument("request size must be > 0".into()));
    }
    Ok(transmission_ns(sz_bits, cfg.mec_bandwidth_bps) + cfg.t_q1_ns + cfg.t_q2_ns)
}

/// Delay over the multi-hop MEC-to-cloud path, using the planning value for
/// the round-trip fluctuation term.
pub fn cc(sz_bits: i64, cfg: &DomainConfig) -> Result<i64> {
    cc_with_delay(sz_bits, cfg, cfg.t_cloud_planning_ns)
}

/// Same as [`cc`] but with an explicit one-way cloud delay sample.
pub fn cc_with_delay(sz_bits: i64, cfg: &DomainConfig, t_cloud_ns: i64) -> Result<i64> {
    if sz_bits <= 0 {
        return Err(Error::InvalidArgument("request size must be > 0".into()));
    }
    Ok(transmission_ns(sz_bits, cfg.cloud_bandwidth_bps) + 2 * t_cloud_ns)
}

/// Per-(MEC, tile) request demand, as multisets of request sizes in bits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestAggregate {
    pub tile_count: usize,
    /// (mec_id, tile_id) -> sizes of every request for that tile at that MEC.
    pub entries: BTreeMap<(usize, usize), Vec<i64>>,
}

impl RequestAggregate {
    pub fn new(tile_count: usize) -> Self {
        RequestAggregate { tile_count, entries: BTreeMap::new() }
    }

    pub fn push(&mut self, mec: usize, tile: usize, sz_bits: i64) {
        self.entries.entry((mec, tile)).or_default().push(sz_bits);
    }

    pub fn request_count(&self) -> u64 {
        self.entries.values().map(|v| v.len() as u64).sum()
    }

    pub fn validate(&self, cfg: &DomainConfig) -> Result<()> {
        for (&(m, n), sizes) in &self.entries {
            if m >= cfg.mec_count {
                return Err(Error::InvalidConfig(format!("mec id {m} out of range")));
            }
            if n >= self.tile_count {
                return Err(Error::InvalidConfig(format!("tile id {n} out of range")));
            }
            for &sz in sizes {
                if sz <= 0 || sz > cfg.tile_size_bits {
                    return Err(Error::InvalidConfig(format!(
                        "request size {sz} outside (0, {}]",
                        cfg.tile_size_bits
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-tile global profit and per-(tile, MEC) local profit, in nanoseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfitTable {
    /// Saved on every request of the tile once any replica exists. Signed:
    /// configurations where the cloud beats the MEC link yield negatives.
    pub global: Vec<i64>,
    /// local[n][m]: extra saving when MEC m itself holds tile n.
    pub local: Vec<Vec<i64>>,
}

impl ProfitTable {
    pub fn tile_count(&self) -> usize {
        self.global.len()
    }

    pub fn mec_count(&self) -> usize {
        self.local.first().map_or(0, Vec::len)
    }
}

/// Evaluate the global/local profit sums for a demand aggregate.
pub fn compute_profits(agg: &RequestAggregate, cfg: &DomainConfig) -> Result<ProfitTable> {
    cfg.validate()?;
    agg.validate(cfg)?;
    let n = agg.tile_count;
    let m = cfg.mec_count;
    let mut global = vec![0i64; n];
    let mut local = vec![vec![0i64; m]; n];
    for (&(mec, tile), sizes) in &agg.entries {
        for &sz in sizes {
            let c_cloud = cc(sz, cfg)?;
            let c_mec = cmm(sz, cfg)?;
            global[tile] += c_cloud - c_mec;
            local[tile][mec] += c_mec;
        }
    }
    Ok(ProfitTable { global, local })
}

/// Which tiles each MEC server stores.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheTable {
    pub tiles: Vec<BTreeSet<usize>>,
}

impl CacheTable {
    pub fn empty(mec_count: usize) -> Self {
        CacheTable { tiles: vec![BTreeSet::new(); mec_count] }
    }

    pub fn insert(&mut self, mec: usize, tile: usize) -> bool {
        self.tiles[mec].insert(tile)
    }

    pub fn contains(&self, mec: usize, tile: usize) -> bool {
        self.tiles[mec].contains(&tile)
    }

    pub fn cached_anywhere(&self, tile: usize) -> bool {
        self.tiles.iter().any(|set| set.contains(&tile))
    }

    pub fn used(&self, mec: usize) -> usize {
        self.tiles[mec].len()
    }

    pub fn total_replicas(&self) -> usize {
        self.tiles.iter().map(BTreeSet::len).sum()
    }
}

/// The objective both solvers maximize: accrued globals plus all locals.
pub fn placement_profit(
    profits: &ProfitTable,
    cache: &CacheTable,
    capacities: &[usize],
) -> Result<i64> {
    if cache.tiles.len() != capacities.len() {
        return Err(Error::InvalidPlacement(format!(
            "cache covers {} MEC servers, capacities cover {}",
            cache.tiles.len(),
            capacities.len()
        )));
    }
    for (m, set) in cache.tiles.iter().enumerate() {
        if set.len() > capacities[m] {
            return Err(Error::InvalidPlacement(format!(
                "MEC {m} holds {} tiles, capacity {}",
                set.len(),
                capacities[m]
            )));
        }
    }
    let n = profits.tile_count();
    let mut total = 0i64;
    let mut accrued = vec![false; n];
    for (m, set) in cache.tiles.iter().enumerate() {
        for &tile in set {
            if tile >= n {
                return Err(Error::InvalidPlacement(format!("tile id {tile} out of range")));
            }
            total += profits.local[tile][m];
            accrued[tile] = true;
        }
    }
    for (tile, hit) in accrued.iter().enumerate() {
        if *hit {
            total += profits.global[tile];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg1() -> DomainConfig {
        DomainConfig::with_defaults(1, vec![1])
    }

    #[test]
    fn ch_reference_values() {
        let cfg = cfg1();
        assert_eq!(ch(40_000_000, 80_000_000, &cfg).unwrap(), 503_000_000);
        assert_eq!(ch(80_000_000, 50_000_000, &cfg).unwrap(), 1_603_000_000);
        let mut zero_q = cfg.clone();
        zero_q.t_q1_ns = 0;
        zero_q.t_q2_ns = 0;
        assert_eq!(ch(1, 1_000_000_000, &zero_q).unwrap(), 1);
    }

    #[test]
    fn ch_zero_bandwidth_rejected() {
        assert!(matches!(ch(1, 0, &cfg1()), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn cmm_reference_values() {
        let cfg = cfg1();
        assert_eq!(cmm(40_000_000, &cfg).unwrap(), 83_000_000);
        assert_eq!(cmm(80_000_000, &cfg).unwrap(), 163_000_000);
        assert_eq!(cmm(8_000_000, &cfg).unwrap(), 19_000_000);
    }

    #[test]
    fn cc_reference_values() {
        let cfg = cfg1();
        assert_eq!(cc(40_000_000, &cfg).unwrap(), 190_000_000);
        assert_eq!(cc(8_000_000, &cfg).unwrap(), 158_000_000);
        assert_eq!(cc_with_delay(80_000_000, &cfg, 50 * MS).unwrap(), 180_000_000);
    }

    #[test]
    fn profits_single_request() {
        let cfg = cfg1();
        let mut agg = RequestAggregate::new(1);
        agg.push(0, 0, 40_000_000);
        let table = compute_profits(&agg, &cfg).unwrap();
        assert_eq!(table.global, vec![107_000_000]);
        assert_eq!(table.local, vec![vec![83_000_000]]);
    }

    #[test]
    fn profits_empty_aggregate() {
        let cfg = DomainConfig::with_defaults(2, vec![1, 1]);
        let agg = RequestAggregate::new(4);
        let table = compute_profits(&agg, &cfg).unwrap();
        assert!(table.global.iter().all(|&v| v == 0));
        assert!(table.local.iter().flatten().all(|&v| v == 0));
    }

    #[test]
    fn profits_two_requests_same_pair() {
        // 40e6-bit and 8e6-bit requests for tile 3 at MEC 1.
        let cfg = DomainConfig::with_defaults(2, vec![2, 2]);
        let mut agg = RequestAggregate::new(4);
        agg.push(1, 3, 40_000_000);
        agg.push(1, 3, 8_000_000);
        let table = compute_profits(&agg, &cfg).unwrap();
        assert_eq!(table.local[3][1], 102_000_000);
        assert_eq!(table.global[3], 246_000_000);
        assert_eq!(table.local[3][0], 0);
        assert_eq!(table.global[0], 0);
    }

    fn instance_189() -> ProfitTable {
        ProfitTable { global: vec![60, 0], local: vec![vec![40, 30], vec![99, 0]] }
    }

    #[test]
    fn placement_profit_examples() {
        let profits = instance_189();
        let caps = [1usize, 1];
        let empty = CacheTable::empty(2);
        assert_eq!(placement_profit(&profits, &empty, &caps).unwrap(), 0);

        let mut best = CacheTable::empty(2);
        best.insert(0, 1);
        best.insert(1, 0);
        assert_eq!(placement_profit(&profits, &best, &caps).unwrap(), 189);

        let mut dup = CacheTable::empty(2);
        dup.insert(0, 0);
        dup.insert(1, 0);
        assert_eq!(placement_profit(&profits, &dup, &caps).unwrap(), 130);
    }

    #[test]
    fn placement_profit_capacity_violation() {
        let profits = instance_189();
        let mut cache = CacheTable::empty(2);
        cache.insert(0, 0);
        cache.insert(0, 1);
        assert!(matches!(
            placement_profit(&profits, &cache, &[1, 1]),
            Err(Error::InvalidPlacement(_))
        ));
    }

    #[test]
    fn profit_recompute_is_bit_identical() {
        let cfg = DomainConfig::with_defaults(3, vec![2, 2, 2]);
        let mut agg = RequestAggregate::new(5);
        agg.push(0, 0, 12_345_678);
        agg.push(1, 4, 9_999_999);
        agg.push(2, 2, 80_000_000);
        let a = compute_profits(&agg, &cfg).unwrap();
        let b = compute_profits(&agg, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
