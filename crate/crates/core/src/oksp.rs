//! Placement solver on the collapsed (M+2)-node graph.
//!
//! Instead of materializing N tile nodes, each MEC node keeps a
//! descending-ordered array of candidate first edges (cache a tile here,
//! with or without the one-time global profit) and each ordered MEC pair
//! keeps a min-priority queue of transfer losses (move an already cached
//! tile from one server to the other). Every iteration rebuilds the tiny
//! compact graph from the structure heads, finds the cheapest augmenting
//! path with Dijkstra over Johnson-style reduced costs, and applies it.
//!
//! Entries are deleted lazily: a head is popped only once it is observed
//! infeasible. Feasibility of a non-global first edge can come back (the
//! tile may be transferred away again), so the relevant entry is re-inserted
//! on the event that re-enables it; stale duplicates are harmless because
//! every pop re-checks feasibility.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::ksp::StopPolicy;
use crate::model::{placement_profit, CacheTable, ProfitTable};

/// Candidate first edge: cache `tile` on the owning MEC for `profit`.
/// `uses_global` marks the variant that also accrues the one-time global
/// profit, legal only while the tile has no replica in the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathEntry {
    pub profit: i64,
    pub tile: u32,
    pub uses_global: bool,
}

impl Ord for PathEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap pops highest profit first; ties prefer the lower tile id,
        // then the non-global entry.
        self.profit
            .cmp(&other.profit)
            .then_with(|| other.tile.cmp(&self.tile))
            .then_with(|| other.uses_global.cmp(&self.uses_global))
    }
}

impl PartialOrd for PathEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Transfer candidate: move `tile` out of the queue's source MEC for `loss`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LossEntry {
    loss: i64,
    tile: u32,
}

impl Ord for LossEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap: smallest loss first, ties on the lower tile id.
        other.loss.cmp(&self.loss).then_with(|| other.tile.cmp(&self.tile))
    }
}

impl PartialOrd for LossEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Operation counters, exposed for benchmarking and invariant checks.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct SolverStats {
    pub iterations: u64,
    pub dijkstra_relaxations: u64,
    pub heap_pushes: u64,
    pub heap_pops: u64,
    /// Edges observed with negative reduced cost at setup. Should stay 0.
    pub reduced_cost_violations: u64,
    /// Accepted path costs that decreased between iterations. Should stay 0.
    pub cost_regressions: u64,
}

/// One decoded augmenting path in the compact graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentingPath {
    /// First edge: cache `entry.tile` on `first_mec`.
    pub first_mec: usize,
    pub entry: PathEntry,
    /// Transfers in path order: (from_mec, to_mec, tile).
    pub transfers: Vec<(usize, usize, u32)>,
    /// MEC whose capacity the path consumes (last node before the sink).
    pub terminal_mec: usize,
    /// True (un-reweighted) path cost.
    pub cost: i64,
}

pub struct SolverState<'a> {
    profits: &'a ProfitTable,
    mec_count: usize,
    pub cache: CacheTable,
    replica_count: Vec<u32>,
    remaining: Vec<usize>,
    path_arrays: Vec<BinaryHeap<PathEntry>>,
    loss_queues: Vec<BinaryHeap<LossEntry>>,
    /// Node potentials over s (index 0), the M MEC nodes, and t (index M+1).
    potentials: Vec<i64>,
    pub accumulated_profit: i64,
    pub stats: SolverStats,
    last_cost: Option<i64>,
    bootstrapped: bool,
}

/// Compact residual graph rebuilt from the structure heads each iteration.
#[derive(Debug, Clone)]
pub struct CompactGraph {
    /// Per MEC: weight of the s edge (negated head profit) plus the head.
    pub s_edges: Vec<Option<(i64, PathEntry)>>,
    /// [from][to]: weight of the transfer edge (head loss) plus its tile.
    pub transfers: Vec<Vec<Option<(i64, u32)>>>,
    /// Whether the MEC still has spare capacity (zero-weight sink edge).
    pub sink_edges: Vec<bool>,
}

impl<'a> SolverState<'a> {
    pub fn new(profits: &'a ProfitTable, capacities: &'a [usize]) -> Result<Self> {
        let n = profits.tile_count();
        let m = capacities.len();
        if profits.local.len() != n || profits.local.iter().any(|row| row.len() != m) {
            return Err(Error::InvalidConfig("profit table dimensions mismatch capacities".into()));
        }
        let mut state = SolverState {
            profits,
            mec_count: m,
            cache: CacheTable::empty(m),
            replica_count: vec![0; n],
            remaining: capacities.to_vec(),
            path_arrays: Vec::new(),
            loss_queues: (0..m * m).map(|_| BinaryHeap::new()).collect(),
            potentials: vec![0; m + 2],
            accumulated_profit: 0,
            stats: SolverStats::default(),
            last_cost: None,
            bootstrapped: false,
        };
        state.initialize_possible_paths();
        Ok(state)
    }

    /// Seed each MEC's ordered array with both profit variants of every tile.
    fn initialize_possible_paths(&mut self) {
        let n = self.profits.tile_count();
        self.path_arrays = (0..self.mec_count)
            .map(|j| {
                let mut entries = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let local = self.profits.local[i][j];
                    entries.push(PathEntry {
                        profit: local + self.profits.global[i],
                        tile: i as u32,
                        uses_global: true,
                    });
                    entries.push(PathEntry { profit: local, tile: i as u32, uses_global: false });
                }
                self.stats.heap_pushes += entries.len() as u64;
                BinaryHeap::from(entries)
            })
            .collect();
    }

    #[cfg(test)]
    fn path_array_sorted(&self, j: usize) -> Vec<PathEntry> {
        let mut v = self.path_arrays[j].clone().into_sorted_vec();
        v.reverse();
        v
    }

    fn queue_index(&self, from: usize, to: usize) -> usize {
        from * self.mec_count + to
    }

    /// Drop infeasible heads from `PathArray_j` until the head is usable.
    ///
    /// A global entry is dead once the tile has any replica (replica counts
    /// never decrease). A non-global entry is unusable while the tile has no
    /// replica or while it already sits on this MEC; both conditions are
    /// re-enabled by events that push a fresh copy, so popping is safe.
    pub fn maintain_path_array(&mut self, j: usize) {
        while let Some(&head) = self.path_arrays[j].peek() {
            let tile = head.tile as usize;
            let infeasible = if head.uses_global {
                self.replica_count[tile] > 0
            } else {
                self.replica_count[tile] == 0 || self.cache.contains(j, tile)
            };
            if infeasible {
                self.path_arrays[j].pop();
                self.stats.heap_pops += 1;
            } else {
                break;
            }
        }
    }

    /// Drop infeasible heads from `LossQueue_{j,k}`: the source must still
    /// cache the tile and the destination must not.
    fn maintain_loss_queue(&mut self, j: usize, k: usize) {
        let idx = self.queue_index(j, k);
        while let Some(&head) = self.loss_queues[idx].peek() {
            let tile = head.tile as usize;
            if !self.cache.contains(j, tile) || self.cache.contains(k, tile) {
                self.loss_queues[idx].pop();
                self.stats.heap_pops += 1;
            } else {
                break;
            }
        }
    }

    fn push_loss(&mut self, from: usize, to: usize, tile: usize) {
        let loss = self.profits.local[tile][from] - self.profits.local[tile][to];
        let idx = self.queue_index(from, to);
        self.loss_queues[idx].push(LossEntry { loss, tile: tile as u32 });
        self.stats.heap_pushes += 1;
    }

    /// Record that MEC `gainer` now caches `tile`: enable transfers out of
    /// it toward every MEC that lacks the tile.
    fn on_tile_gained(&mut self, gainer: usize, tile: usize) {
        for k in 0..self.mec_count {
            if k != gainer && !self.cache.contains(k, tile) {
                self.push_loss(gainer, k, tile);
            }
        }
    }

    /// Record that MEC `loser` no longer caches `tile`: every remaining
    /// holder can now transfer the tile toward it, and the loser may cache
    /// it again through a first edge.
    fn on_tile_lost(&mut self, loser: usize, tile: usize) {
        for j in 0..self.mec_count {
            if j != loser && self.cache.contains(j, tile) {
                self.push_loss(j, loser, tile);
            }
        }
        self.path_arrays[loser].push(PathEntry {
            profit: self.profits.local[tile][loser],
            tile: tile as u32,
            uses_global: false,
        });
        self.stats.heap_pushes += 1;
    }

    /// First replica of `tile` exists now: the non-global first edges become
    /// meaningful, so (re-)offer them on every MEC.
    fn on_tile_accrued(&mut self, tile: usize) {
        for j in 0..self.mec_count {
            self.path_arrays[j].push(PathEntry {
                profit: self.profits.local[tile][j],
                tile: tile as u32,
                uses_global: false,
            });
            self.stats.heap_pushes += 1;
        }
    }

    /// Apply an accepted augmenting path: cache the new tile, move the
    /// transferred tiles, consume capacity, and feed every newly enabled
    /// entry into the loss queues and path arrays.
    pub fn maintain_loss_queues(&mut self, path: &AugmentingPath) {
        let si = path.entry.tile as usize;
        let sj = path.first_mec;
        assert!(!self.cache.contains(sj, si), "first edge re-caches a held tile");
        if path.entry.uses_global {
            assert_eq!(self.replica_count[si], 0, "global profit accrued twice");
        } else {
            assert!(self.replica_count[si] > 0, "non-global first edge before accrual");
        }
        self.cache.insert(sj, si);
        self.replica_count[si] += 1;
        if self.replica_count[si] == 1 {
            self.on_tile_accrued(si);
        }
        self.on_tile_gained(sj, si);

        for &(from, to, tile) in &path.transfers {
            let tile = tile as usize;
            assert!(self.cache.contains(from, tile), "transfer source lost the tile");
            assert!(!self.cache.contains(to, tile), "transfer target already holds the tile");
            self.cache.tiles[from].remove(&tile);
            self.cache.insert(to, tile);
            self.on_tile_gained(to, tile);
            self.on_tile_lost(from, tile);
        }

        assert!(self.remaining[path.terminal_mec] > 0, "capacity underflow");
        self.remaining[path.terminal_mec] -= 1;
    }

    /// Rebuild the compact graph from the current structure heads.
    pub fn setup_graph(&mut self) -> CompactGraph {
        let m = self.mec_count;
        let mut s_edges = vec![None; m];
        let mut transfers = vec![vec![None; m]; m];
        let mut sink_edges = vec![false; m];
        for j in 0..m {
            self.maintain_path_array(j);
            if let Some(&head) = self.path_arrays[j].peek() {
                s_edges[j] = Some((-head.profit, head));
            }
            sink_edges[j] = self.remaining[j] > 0;
            for k in 0..m {
                if k == j {
                    continue;
                }
                self.maintain_loss_queue(j, k);
                if let Some(&head) = self.loss_queues[self.queue_index(j, k)].peek() {
                    transfers[j][k] = Some((head.loss, head.tile));
                }
            }
        }
        CompactGraph { s_edges, transfers, sink_edges }
    }

    fn edge_list(&self, graph: &CompactGraph) -> Vec<(usize, usize, i64)> {
        let m = self.mec_count;
        let mut edges = Vec::with_capacity(m * (m + 1));
        for j in 0..m {
            if let Some((w, _)) = graph.s_edges[j] {
                edges.push((0, 1 + j, w));
            }
            if graph.sink_edges[j] {
                edges.push((1 + j, m + 1, 0));
            }
            for k in 0..m {
                if let Some((w, _)) = graph.transfers[j][k] {
                    edges.push((1 + j, 1 + k, w));
                }
            }
        }
        edges
    }

    /// True whenever every edge satisfies the Johnson reduced-cost
    /// invariant under the current potentials.
    fn reduced_costs_valid(&mut self, edges: &[(usize, usize, i64)]) -> bool {
        let mut ok = true;
        for &(u, v, w) in edges {
            if w + self.potentials[u] - self.potentials[v] < 0 {
                self.stats.reduced_cost_violations += 1;
                ok = false;
            }
        }
        ok
    }

    /// Cheapest s->t path under true costs. Dijkstra on reduced costs when
    /// the invariant holds; otherwise one negative-tolerant label-correcting
    /// pass (also used to bootstrap the potentials before iteration one).
    pub fn shortest_augmenting_path(&mut self, graph: &CompactGraph) -> Option<AugmentingPath> {
        let m = self.mec_count;
        let nodes = m + 2;
        let sink = m + 1;
        let edges = self.edge_list(graph);

        let dijkstra_ok = self.bootstrapped && self.reduced_costs_valid(&edges);
        let prev;
        if dijkstra_ok {
            // Nonnegative reduced costs certified above: Dijkstra, then fold
            // h[v] += min(rd[v], rd[t]) (unreachable capped at rd[t]), which
            // keeps every surviving edge's reduced cost nonnegative.
            let (rdist, p) = self.dijkstra(&edges, nodes);
            prev = p;
            rdist[sink]?;
            let cap = rdist[sink].unwrap();
            for v in 0..nodes {
                self.potentials[v] += rdist[v].unwrap_or(cap).min(cap);
            }
        } else {
            // Bootstrap / fallback: exact distances despite negative edges.
            // The s-rooted pass yields the path; a Johnson-style all-sources
            // pass rebuilds feasible potentials from scratch.
            let (dist, p) = label_correcting(&edges, nodes, false);
            prev = p;
            dist[sink]?;
            let (johnson, _) = label_correcting(&edges, nodes, true);
            self.potentials = johnson.into_iter().map(|d| d.unwrap()).collect();
        }
        self.bootstrapped = true;

        // Reconstruct the node path s -> j1 -> ... -> jk -> t.
        let mut order = vec![sink];
        let mut node = sink;
        while node != 0 {
            node = prev[node].expect("broken shortest-path tree");
            order.push(node);
        }
        order.reverse();
        debug_assert!(order.len() >= 3, "augmenting path must cross a MEC node");

        let first_mec = order[1] - 1;
        let (first_weight, entry) = graph.s_edges[first_mec].expect("path uses a missing s edge");
        let mut cost = first_weight;
        let mut transfers = Vec::new();
        for pair in order[1..order.len() - 1].windows(2) {
            let (from, to) = (pair[0] - 1, pair[1] - 1);
            let (w, tile) = graph.transfers[from][to].expect("path uses a missing transfer edge");
            transfers.push((from, to, tile));
            cost += w;
        }
        let terminal_mec = order[order.len() - 2] - 1;
        debug_assert!(transfers.len() <= m.saturating_sub(1), "transfer chain exceeds M-1");
        Some(AugmentingPath { first_mec, entry, transfers, terminal_mec, cost })
    }

    fn dijkstra(
        &mut self,
        edges: &[(usize, usize, i64)],
        nodes: usize,
    ) -> (Vec<Option<i64>>, Vec<Option<usize>>) {
        // Reduced adjacency; node counts are tiny so O(V^2) selection is fine.
        let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); nodes];
        for &(u, v, w) in edges {
            let rw = w + self.potentials[u] - self.potentials[v];
            debug_assert!(rw >= 0);
            adj[u].push((v, rw.max(0)));
        }
        let mut dist: Vec<Option<i64>> = vec![None; nodes];
        let mut prev: Vec<Option<usize>> = vec![None; nodes];
        let mut done = vec![false; nodes];
        dist[0] = Some(0);
        loop {
            let mut current = None;
            for v in 0..nodes {
                if done[v] {
                    continue;
                }
                if let Some(d) = dist[v] {
                    if current.map_or(true, |(_, cd)| d < cd) {
                        current = Some((v, d));
                    }
                }
            }
            let Some((u, du)) = current else { break };
            done[u] = true;
            for &(v, w) in &adj[u] {
                self.stats.dijkstra_relaxations += 1;
                let nd = du + w;
                if dist[v].map_or(true, |d| nd < d) {
                    dist[v] = Some(nd);
                    prev[v] = Some(u);
                }
            }
        }
        (dist, prev)
    }

    /// One full iteration. Returns false when the solver should stop.
    pub fn step(&mut self, policy: StopPolicy) -> bool {
        if self.remaining.iter().all(|&r| r == 0) {
            return false;
        }
        let graph = self.setup_graph();
        let Some(path) = self.shortest_augmenting_path(&graph) else {
            return false;
        };
        let accept = match policy {
            StopPolicy::SkipNonImproving => path.cost < 0,
            StopPolicy::FillCapacity => path.cost <= 0,
        };
        if !accept {
            return false;
        }
        if let Some(prev_cost) = self.last_cost {
            if path.cost < prev_cost {
                self.stats.cost_regressions += 1;
            }
        }
        self.last_cost = Some(path.cost);
        self.accumulated_profit -= path.cost;
        self.maintain_loss_queues(&path);
        self.stats.iterations += 1;
        true
    }

    pub fn into_solution(self) -> (CacheTable, i64, SolverStats) {
        (self.cache, self.accumulated_profit, self.stats)
    }
}

/// Bellman-Ford-style relaxation to a fixpoint. `all_sources` starts every
/// node at 0 (Johnson potentials); otherwise only s (node 0) is seeded.
fn label_correcting(
    edges: &[(usize, usize, i64)],
    nodes: usize,
    all_sources: bool,
) -> (Vec<Option<i64>>, Vec<Option<usize>>) {
    let mut dist: Vec<Option<i64>> =
        if all_sources { vec![Some(0); nodes] } else { vec![None; nodes] };
    let mut prev: Vec<Option<usize>> = vec![None; nodes];
    dist[0] = Some(0);
    let mut passes = 0;
    loop {
        let mut changed = false;
        for &(u, v, w) in edges {
            if let Some(du) = dist[u] {
                let nd = du + w;
                if dist[v].map_or(true, |d| nd < d) {
                    dist[v] = Some(nd);
                    prev[v] = Some(u);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        passes += 1;
        assert!(passes <= nodes + 1, "negative cycle in compact graph");
    }
    (dist, prev)
}

/// Solve a placement instance to optimality; K defaults to total capacity.
pub fn oksp_solve(
    profits: &ProfitTable,
    capacities: &[usize],
    policy: StopPolicy,
) -> Result<(CacheTable, i64)> {
    let (cache, profit, _) = oksp_solve_with_stats(profits, capacities, policy)?;
    Ok((cache, profit))
}

pub fn oksp_solve_with_stats(
    profits: &ProfitTable,
    capacities: &[usize],
    policy: StopPolicy,
) -> Result<(CacheTable, i64, SolverStats)> {
    let mut state = SolverState::new(profits, capacities)?;
    let k: usize = capacities.iter().sum();
    for _ in 0..k {
        if !state.step(policy) {
            break;
        }
    }
    debug_assert_eq!(
        placement_profit(profits, &state.cache, capacities).unwrap(),
        state.accumulated_profit,
        "accumulated profit diverged from the placement objective"
    );
    Ok(state.into_solution())
}
