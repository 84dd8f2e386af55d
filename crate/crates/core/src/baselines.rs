//! Heuristic comparison strategies: Self-Top, Distributed, and a MixCo
//! reconstruction.
//!
//! All three consume per-(MEC, tile) request counts and return a cache
//! table deterministically. MixCo's published description is only a sketch;
//! the greedy one-unit shared/dedicated conversion implemented here matches
//! its stated worst-case cost O(L*M^2*N), where L is the largest per-MEC
//! capacity.

use crate::model::{placement_profit, CacheTable, DomainConfig, ProfitTable};

/// Tile ids sorted by count descending, ties by lower id.
fn ranking(counts: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order
}

fn domain_totals(counts: &[Vec<u64>]) -> Vec<u64> {
    let n = counts.first().map_or(0, Vec::len);
    let mut totals = vec![0u64; n];
    for row in counts {
        for (t, &c) in row.iter().enumerate() {
            totals[t] += c;
        }
    }
    totals
}

/// Every MEC independently caches its locally most requested tiles.
pub fn self_top(counts: &[Vec<u64>], capacities: &[usize]) -> CacheTable {
    let mut cache = CacheTable::empty(capacities.len());
    for (m, row) in counts.iter().enumerate() {
        for &tile in ranking(row).iter().take(capacities[m]) {
            cache.insert(m, tile);
        }
    }
    cache
}

/// Maximize distinct tiles in the domain: walk the domain-wide popularity
/// ranking and give each tile to the free-capacity MEC that requests it
/// most (ties: lower MEC id). No tile is replicated.
pub fn distributed(counts: &[Vec<u64>], capacities: &[usize]) -> CacheTable {
    let m = capacities.len();
    let mut cache = CacheTable::empty(m);
    let mut free = capacities.to_vec();
    for tile in ranking(&domain_totals(counts)) {
        let target = (0..m)
            .filter(|&j| free[j] > 0)
            .max_by(|&a, &b| counts[a][tile].cmp(&counts[b][tile]).then(b.cmp(&a)));
        match target {
            Some(j) => {
                cache.insert(j, tile);
                free[j] -= 1;
            }
            None => break,
        }
    }
    cache
}

/// Materialize a MixCo split: `dedicated[m]` units hold MEC m's locally
/// hottest tiles, the rest of the space holds domain-popular tiles
/// deduplicated across MECs (each placed where its local count is highest
/// among MECs with free shared space, ties: lower MEC id).
fn mixco_table(
    local_rankings: &[Vec<usize>],
    global_ranking: &[usize],
    counts: &[Vec<u64>],
    capacities: &[usize],
    dedicated: &[usize],
) -> CacheTable {
    let m = capacities.len();
    let mut cache = CacheTable::empty(m);
    let mut shared_free: Vec<usize> = (0..m).map(|j| capacities[j] - dedicated[j]).collect();
    for &tile in global_ranking {
        if shared_free.iter().all(|&f| f == 0) {
            break;
        }
        let target = (0..m)
            .filter(|&j| shared_free[j] > 0)
            .max_by(|&a, &b| counts[a][tile].cmp(&counts[b][tile]).then(b.cmp(&a)))
            .unwrap();
        cache.insert(target, tile);
        shared_free[target] -= 1;
    }
    for j in 0..m {
        let mut left = dedicated[j];
        for &tile in &local_rankings[j] {
            if left == 0 {
                break;
            }
            if cache.insert(j, tile) {
                left -= 1;
            }
        }
    }
    cache
}

/// MixCo reconstruction: start fully shared, greedily convert one capacity
/// unit at a time to dedicated on whichever MEC improves the latency
/// objective most, re-evaluating the whole table each step, until no single
/// conversion helps. The objective is the placement profit, which differs
/// from the ARL optimization only by the fixed request-count divisor.
pub fn mixco(
    counts: &[Vec<u64>],
    profits: &ProfitTable,
    capacities: &[usize],
    _cfg: &DomainConfig,
) -> CacheTable {
    let local_rankings: Vec<Vec<usize>> = counts.iter().map(|row| ranking(row)).collect();
    let global_ranking = ranking(&domain_totals(counts));
    let score = |dedicated: &[usize]| -> (i64, CacheTable) {
        let table =
            mixco_table(&local_rankings, &global_ranking, counts, capacities, dedicated);
        let profit = placement_profit(profits, &table, capacities).expect("table within capacity");
        (profit, table)
    };

    let m = capacities.len();
    let mut dedicated = vec![0usize; m];
    let (mut best_profit, mut best_table) = score(&dedicated);
    loop {
        let mut improvement: Option<(i64, usize, CacheTable)> = None;
        for j in 0..m {
            if dedicated[j] == capacities[j] {
                continue;
            }
            dedicated[j] += 1;
            let (profit, table) = score(&dedicated);
            dedicated[j] -= 1;
            if profit > best_profit && improvement.as_ref().map_or(true, |&(p, _, _)| profit > p) {
                improvement = Some((profit, j, table));
            }
        }
        match improvement {
            Some((profit, j, table)) => {
                dedicated[j] += 1;
                best_profit = profit;
                best_table = table;
            }
            None => break,
        }
    }
    best_table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_profits, RequestAggregate};

    fn agg_from_counts(counts: &[Vec<u64>], size: i64) -> RequestAggregate {
        let n = counts.first().map_or(0, Vec::len);
        let mut agg = RequestAggregate::new(n);
        for (m, row) in counts.iter().enumerate() {
            for (tile, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    agg.push(m, tile, size);
                }
            }
        }
        agg
    }

    #[test]
    fn self_top_examples() {
        let cache = self_top(&[vec![5, 9, 1]], &[2]);
        assert_eq!(cache.tiles[0].iter().copied().collect::<Vec<_>>(), vec![0, 1]);

        // Identical counts give identical (replicated) selections.
        let counts = vec![vec![3, 7, 2], vec![3, 7, 2]];
        let cache = self_top(&counts, &[1, 1]);
        assert_eq!(cache.tiles[0], cache.tiles[1]);
        assert!(cache.contains(0, 1));

        // All-zero counts fall back to the lowest ids.
        let cache = self_top(&[vec![0, 0, 0, 0]], &[2]);
        assert_eq!(cache.tiles[0].iter().copied().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn distributed_examples() {
        // t0 hotter at M1, so t1 takes the remaining slot at M0.
        let counts = vec![vec![2, 3], vec![6, 1]];
        let cache = distributed(&counts, &[1, 1]);
        assert!(cache.contains(0, 1));
        assert!(cache.contains(1, 0));

        // Capacity beyond N: every tile cached exactly once.
        let counts = vec![vec![1, 2, 3], vec![3, 2, 1]];
        let cache = distributed(&counts, &[4, 4]);
        assert_eq!(cache.total_replicas(), 3);
        for tile in 0..3 {
            assert!(cache.cached_anywhere(tile));
        }

        // Single MEC degenerates to self_top.
        let counts = vec![vec![5, 9, 1, 7]];
        assert_eq!(distributed(&counts, &[2]), self_top(&counts, &[2]));
    }

    #[test]
    fn mixco_zero_capacity() {
        let counts = vec![vec![1, 2], vec![2, 1]];
        let agg = agg_from_counts(&counts, 40_000_000);
        let cfg = DomainConfig::with_defaults(2, vec![0, 0]);
        let profits = compute_profits(&agg, &cfg).unwrap();
        let cache = mixco(&counts, &profits, &[0, 0], &cfg);
        assert_eq!(cache.total_replicas(), 0);
    }

    #[test]
    fn mixco_identical_popularity_beats_self_top() {
        // Same ranking everywhere: deduplicated shared placement covers more
        // distinct tiles than Self-Top's mirrored caches.
        let row = vec![9u64, 7, 5, 3, 1, 1];
        let counts = vec![row.clone(), row.clone(), row];
        let caps = [2usize, 2, 2];
        let cfg = DomainConfig::with_defaults(3, caps.to_vec());
        let agg = agg_from_counts(&counts, 40_000_000);
        let profits = compute_profits(&agg, &cfg).unwrap();
        let mix = mixco(&counts, &profits, &caps, &cfg);
        let st = self_top(&counts, &caps);
        let mix_profit = placement_profit(&profits, &mix, &caps).unwrap();
        let st_profit = placement_profit(&profits, &st, &caps).unwrap();
        assert!(mix_profit >= st_profit, "mixco {mix_profit} < self_top {st_profit}");
        assert!(mix.used(0) <= 2 && mix.used(1) <= 2 && mix.used(2) <= 2);
    }

    #[test]
    fn mixco_disjoint_popularity_matches_self_top() {
        // Disjoint supports: dedicated and shared placements coincide, so
        // the converged table equals Self-Top's.
        let counts = vec![vec![9, 4, 0, 0], vec![0, 0, 8, 6]];
        let caps = [2usize, 2];
        let cfg = DomainConfig::with_defaults(2, caps.to_vec());
        let agg = agg_from_counts(&counts, 40_000_000);
        let profits = compute_profits(&agg, &cfg).unwrap();
        let mix = mixco(&counts, &profits, &caps, &cfg);
        assert_eq!(mix, self_top(&counts, &caps));
    }

    #[test]
    fn baselines_respect_capacity_and_determinism() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let n = rng.gen_range(1..=12);
            let m = rng.gen_range(1..=4);
            let counts: Vec<Vec<u64>> =
                (0..m).map(|_| (0..n).map(|_| rng.gen_range(0..20)).collect()).collect();
            let caps: Vec<usize> = (0..m).map(|_| rng.gen_range(0..=3)).collect();
            let cfg = DomainConfig::with_defaults(m, caps.clone());
            let agg = agg_from_counts(&counts, 40_000_000);
            let profits = compute_profits(&agg, &cfg).unwrap();
            for table in [
                self_top(&counts, &caps),
                distributed(&counts, &caps),
                mixco(&counts, &profits, &caps, &cfg),
            ] {
                for j in 0..m {
                    assert!(table.used(j) <= caps[j]);
                }
                // placement_profit validates ids and capacities again.
                placement_profit(&profits, &table, &caps).unwrap();
            }
            assert_eq!(self_top(&counts, &caps), self_top(&counts, &caps));
            assert_eq!(distributed(&counts, &caps), distributed(&counts, &caps));
        }
    }
}
