//! Reference solvers on the full layered graph: a successive-shortest-paths
//! implementation with explicit edge reversal, and an exhaustive oracle.
//!
//! Both exist to validate the compact solver in [`crate::oksp`]; neither is
//! built for large instances.

use crate::error::{Error, Result};
use crate::model::{placement_profit, CacheTable, ProfitTable};

/// When to stop accepting augmenting paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopPolicy {
    /// Stop at the first path whose true cost is >= 0. Zero-cost replicas
    /// are pure cache churn, so they are skipped too.
    #[default]
    SkipNonImproving,
    /// Keep zero-cost paths and run until capacity or connectivity runs out.
    FillCapacity,
}

impl StopPolicy {
    fn accepts(self, cost: i64) -> bool {
        match self {
            StopPolicy::SkipNonImproving => cost < 0,
            StopPolicy::FillCapacity => cost <= 0,
        }
    }
}

/// The four-layer placement graph in residual form.
///
/// Parallel edge groups are stored as counters rather than materialized
/// edges: the s->tile group exposes its weight-carrying unit (the negated
/// global profit) strictly before the zero-weight units, which keeps the
/// flow cost equal to the placement objective even when a global profit is
/// negative. tile->mec edges carry an orientation flag; mec->t groups are a
/// used-capacity counter.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    pub tile_count: usize,
    pub mec_count: usize,
    global: Vec<i64>,
    local: Vec<Vec<i64>>,
    capacities: Vec<usize>,
    s_used: Vec<usize>,
    reversed: Vec<Vec<bool>>,
    t_used: Vec<usize>,
}

impl FlowGraph {
    /// Total parallel-edge multiplicity, counting every unit edge.
    pub fn edge_count(&self) -> usize {
        self.tile_count * self.mec_count // s -> tile groups
            + self.tile_count * self.mec_count // tile -> mec
            + self.capacities.iter().sum::<usize>() // mec -> t groups
    }

    pub fn s_edge_count(&self) -> usize {
        self.tile_count * self.mec_count
    }

    pub fn sink_edge_count(&self, mec: usize) -> usize {
        self.capacities[mec]
    }

    fn node_count(&self) -> usize {
        self.tile_count + self.mec_count + 2
    }

    fn tile_node(&self, i: usize) -> usize {
        1 + i
    }

    fn mec_node(&self, j: usize) -> usize {
        1 + self.tile_count + j
    }

    fn sink(&self) -> usize {
        1 + self.tile_count + self.mec_count
    }

    pub fn decode_placement(&self) -> CacheTable {
        let mut cache = CacheTable::empty(self.mec_count);
        for i in 0..self.tile_count {
            for j in 0..self.mec_count {
                if self.reversed[i][j] {
                    cache.insert(j, i);
                }
            }
        }
        cache
    }
}

/// Build the residual placement graph from a profit table.
pub fn build_graph(profits: &ProfitTable, capacities: &[usize]) -> Result<FlowGraph> {
    let n = profits.tile_count();
    let m = capacities.len();
    if profits.local.len() != n || profits.local.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidConfig("profit table dimensions mismatch capacities".into()));
    }
    Ok(FlowGraph {
        tile_count: n,
        mec_count: m,
        global: profits.global.clone(),
        local: profits.local.clone(),
        capacities: capacities.to_vec(),
        s_used: vec![0; n],
        reversed: vec![vec![false; m]; n],
        t_used: vec![0; m],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    SForward(usize),        // s -> tile i, consume one s-group unit
    SBackward(usize),       // tile i -> s, refund one s-group unit
    TileMec(usize, usize),  // tile i -> mec j (forward)
    MecTile(usize, usize),  // mec j -> tile i (reversed local edge)
    MecSink(usize),         // mec j -> t, consume capacity
    SinkMec(usize),         // t -> mec j, refund capacity
}

struct ResidualEdge {
    from: usize,
    to: usize,
    weight: i64,
    step: Step,
}

fn residual_edges(g: &FlowGraph) -> Vec<ResidualEdge> {
    let mut edges = Vec::with_capacity(2 * g.tile_count * (g.mec_count + 1) + 2 * g.mec_count);
    for i in 0..g.tile_count {
        // Ordered group: the first unit carries the negated global profit.
        if g.s_used[i] < g.mec_count {
            let w = if g.s_used[i] == 0 { -g.global[i] } else { 0 };
            edges.push(ResidualEdge { from: 0, to: g.tile_node(i), weight: w, step: Step::SForward(i) });
        }
        if g.s_used[i] > 0 {
            let w = if g.s_used[i] == 1 { g.global[i] } else { 0 };
            edges.push(ResidualEdge { from: g.tile_node(i), to: 0, weight: w, step: Step::SBackward(i) });
        }
        for j in 0..g.mec_count {
            if g.reversed[i][j] {
                edges.push(ResidualEdge {
                    from: g.mec_node(j),
                    to: g.tile_node(i),
                    weight: g.local[i][j],
                    step: Step::MecTile(i, j),
                });
            } else {
                edges.push(ResidualEdge {
                    from: g.tile_node(i),
                    to: g.mec_node(j),
                    weight: -g.local[i][j],
                    step: Step::TileMec(i, j),
                });
            }
        }
    }
    for j in 0..g.mec_count {
        if g.t_used[j] < g.capacities[j] {
            edges.push(ResidualEdge { from: g.mec_node(j), to: g.sink(), weight: 0, step: Step::MecSink(j) });
        }
        if g.t_used[j] > 0 {
            edges.push(ResidualEdge { from: g.sink(), to: g.mec_node(j), weight: 0, step: Step::SinkMec(j) });
        }
    }
    edges
}

/// Label-correcting single-source shortest path tolerating negative edges.
/// Keys are (cost, hop count) so ties resolve toward shorter paths; edge
/// enumeration order fixes the remaining ties.
fn shortest_path(g: &FlowGraph) -> Option<(Vec<Step>, i64)> {
    let edges = residual_edges(g);
    let v = g.node_count();
    let mut dist = vec![i64::MAX; v];
    let mut hops = vec![usize::MAX; v];
    let mut parent: Vec<Option<(usize, Step)>> = vec![None; v];
    dist[0] = 0;
    hops[0] = 0;
    let mut passes = 0usize;
    loop {
        let mut changed = false;
        for e in &edges {
            if dist[e.from] == i64::MAX {
                continue;
            }
            let nd = dist[e.from] + e.weight;
            let nh = hops[e.from] + 1;
            if nd < dist[e.to] || (nd == dist[e.to] && nh < hops[e.to]) {
                dist[e.to] = nd;
                hops[e.to] = nh;
                parent[e.to] = Some((e.from, e.step));
                changed = true;
            }
        }
        if !changed {
            break;
        }
        passes += 1;
        assert!(passes <= v + 1, "negative cycle in residual graph");
    }
    let t = g.sink();
    if dist[t] == i64::MAX {
        return None;
    }
    let mut steps = Vec::new();
    let mut node = t;
    while node != 0 {
        let (prev, step) = parent[node].expect("broken shortest-path tree");
        steps.push(step);
        node = prev;
    }
    steps.reverse();
    Some((steps, dist[t]))
}

fn apply_path(g: &mut FlowGraph, steps: &[Step]) {
    for step in steps {
        match *step {
            Step::SForward(i) => g.s_used[i] += 1,
            Step::SBackward(i) => g.s_used[i] -= 1,
            Step::TileMec(i, j) => g.reversed[i][j] = true,
            Step::MecTile(i, j) => g.reversed[i][j] = false,
            Step::MecSink(j) => g.t_used[j] += 1,
            Step::SinkMec(j) => g.t_used[j] -= 1,
        }
    }
}

/// Run up to `k` augmenting iterations and decode the resulting placement.
/// Returns the table and the accumulated profit (negated path costs).
pub fn ksp_solve(graph: &mut FlowGraph, k: usize, policy: StopPolicy) -> (CacheTable, i64) {
    let mut total_cost = 0i64;
    for _ in 0..k {
        let Some((steps, cost)) = shortest_path(graph) else {
            break;
        };
        if !policy.accepts(cost) {
            break;
        }
        apply_path(graph, &steps);
        total_cost += cost;
    }
    (graph.decode_placement(), -total_cost)
}

const ORACLE_MAX_TILES: usize = 10;
const ORACLE_MAX_MECS: usize = 3;
const ORACLE_MAX_CAPACITY: usize = 3;

/// Exhaustive optimal placement. Enumerates every per-MEC subset of at most
/// `P_m` tiles; ties break toward the lexicographically smallest table.
pub fn brute_force_optimal(
    profits: &ProfitTable,
    capacities: &[usize],
) -> Result<(CacheTable, i64)> {
    let n = profits.tile_count();
    let m = capacities.len();
    if n > ORACLE_MAX_TILES || m > ORACLE_MAX_MECS || capacities.iter().any(|&p| p > ORACLE_MAX_CAPACITY)
    {
        return Err(Error::InstanceTooLarge(format!(
            "oracle bounds are N <= {ORACLE_MAX_TILES}, M <= {ORACLE_MAX_MECS}, P_m <= {ORACLE_MAX_CAPACITY}; got N={n}, M={m}"
        )));
    }
    let masks_per_mec: Vec<Vec<u32>> = capacities
        .iter()
        .map(|&p| (0u32..1 << n).filter(|mask| mask.count_ones() as usize <= p).collect())
        .collect();

    let mut best_profit = i64::MIN;
    let mut best: Option<Vec<u32>> = None;
    let mut chosen = vec![0u32; m];

    fn recurse(
        mec: usize,
        masks_per_mec: &[Vec<u32>],
        profits: &ProfitTable,
        chosen: &mut Vec<u32>,
        best_profit: &mut i64,
        best: &mut Option<Vec<u32>>,
    ) {
        if mec == masks_per_mec.len() {
            let n = profits.tile_count();
            let mut profit = 0i64;
            let mut union = 0u32;
            for (j, &mask) in chosen.iter().enumerate() {
                union |= mask;
                for i in 0..n {
                    if mask >> i & 1 == 1 {
                        profit += profits.local[i][j];
                    }
                }
            }
            for i in 0..n {
                if union >> i & 1 == 1 {
                    profit += profits.global[i];
                }
            }
            let better = profit > *best_profit
                || (profit == *best_profit
                    && best.as_ref().is_some_and(|b| mask_table_lt(chosen, b, n)));
            if better {
                *best_profit = profit;
                *best = Some(chosen.clone());
            }
            return;
        }
        for &mask in &masks_per_mec[mec] {
            chosen[mec] = mask;
            recurse(mec + 1, masks_per_mec, profits, chosen, best_profit, best);
        }
    }

    recurse(0, &masks_per_mec, profits, &mut chosen, &mut best_profit, &mut best);
    let winner = best.expect("oracle enumerated no placements");
    let mut cache = CacheTable::empty(m);
    for (j, &mask) in winner.iter().enumerate() {
        for i in 0..n {
            if mask >> i & 1 == 1 {
                cache.insert(j, i);
            }
        }
    }
    debug_assert_eq!(placement_profit(profits, &cache, capacities).unwrap(), best_profit);
    Ok((cache, best_profit))
}

/// Lexicographic comparison of bitmask tables viewed as per-MEC sorted tile
/// lists.
fn mask_table_lt(a: &[u32], b: &[u32], n: usize) -> bool {
    for (ma, mb) in a.iter().zip(b) {
        if ma == mb {
            continue;
        }
        let la: Vec<usize> = (0..n).filter(|i| ma >> i & 1 == 1).collect();
        let lb: Vec<usize> = (0..n).filter(|i| mb >> i & 1 == 1).collect();
        return la < lb;
    }
    false
}
