//! Greedy maximization of `beta * TUDiv + mu * TIDiv + rel` for arbitrary
//! (possibly overlapping) groupings.
//!
//! The objective is monotone submodular, so the greedy picks the edge of
//! largest marginal gain until every user is full or out of candidates. The
//! marginal gain of an unused edge only changes when one of its
//! (user, category) or (item, type) pairs reaches its threshold, at which
//! point every unused edge of that pair loses exactly `beta` (or `mu`).
//! Keeping gains in an indexed max-heap and applying those drops with
//! decrease-key gives `O((|E| + sum |R_a| + sum |L_b|) log |E|)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::heap::IndexedMaxHeap;
use crate::{DivParams, Error, Grouping, RecGraph, Result, Solution, ThresholdTable};

/// Counters collected during a greedy run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GreedyStats {
    pub pops: usize,
    /// Popped edges dropped because their user was already full.
    pub discarded: usize,
    pub decrease_keys: usize,
    /// Upper bound on decrease-keys: total incident edges over all pairs.
    pub decrease_key_bound: usize,
    pub key_checks: usize,
    pub key_mismatches: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GreedyOptions {
    /// Recompute every popped key from scratch with [`marginal_gain`] and
    /// count disagreements.
    pub check_keys: bool,
}

#[derive(Debug, Clone)]
pub struct GreedyRun<'a> {
    pub solution: Solution<'a>,
    /// Edges in the order they were added.
    pub order: Vec<usize>,
    pub stats: GreedyStats,
}

/// Compressed two-way incidence between edges and the group pairs they
/// touch on one side.
struct PairIndex {
    threshold: Vec<u32>,
    pair_offsets: Vec<usize>,
    pair_edges: Vec<u32>,
    edge_offsets: Vec<usize>,
    edge_pairs: Vec<u32>,
}

impl PairIndex {
    /// `entity_edges(x)` lists the edges at entity `x`; `groups(e)` the
    /// groups each edge contributes to.
    fn build<'g>(
        entities: usize,
        edge_count: usize,
        entity_edges: impl Fn(usize) -> &'g [usize],
        groups: impl Fn(usize) -> &'g [usize],
        threshold: impl Fn(usize, usize) -> u32,
    ) -> Self {
        let mut edge_offsets = vec![0usize; edge_count + 1];
        for e in 0..edge_count {
            edge_offsets[e + 1] = groups(e).len();
        }
        for e in 0..edge_count {
            edge_offsets[e + 1] += edge_offsets[e];
        }
        let mut fill = edge_offsets.clone();
        let mut edge_pairs = vec![0u32; edge_offsets[edge_count]];
        let mut thresholds = Vec::new();
        let mut pair_offsets = vec![0usize];
        let mut pair_edges = Vec::with_capacity(edge_pairs.len());
        let mut scratch: Vec<(usize, usize)> = Vec::new();
        for x in 0..entities {
            scratch.clear();
            for &e in entity_edges(x) {
                scratch.extend(groups(e).iter().map(|&g| (g, e)));
            }
            scratch.sort_unstable();
            let mut i = 0;
            while i < scratch.len() {
                let g = scratch[i].0;
                let pair = thresholds.len() as u32;
                thresholds.push(threshold(x, g));
                while i < scratch.len() && scratch[i].0 == g {
                    let e = scratch[i].1;
                    pair_edges.push(e as u32);
                    edge_pairs[fill[e]] = pair;
                    fill[e] += 1;
                    i += 1;
                }
                pair_offsets.push(pair_edges.len());
            }
        }
        Self { threshold: thresholds, pair_offsets, pair_edges, edge_offsets, edge_pairs }
    }

    fn pairs_of(&self, e: usize) -> &[u32] {
        &self.edge_pairs[self.edge_offsets[e]..self.edge_offsets[e + 1]]
    }

    fn edges_of(&self, p: usize) -> &[u32] {
        &self.pair_edges[self.pair_offsets[p]..self.pair_offsets[p + 1]]
    }

    /// Pairs of `e` that start with a positive threshold.
    fn initial_open(&self, e: usize) -> u32 {
        self.pairs_of(e).iter().filter(|&&p| self.threshold[p as usize] > 0).count() as u32
    }
}

#[inline]
fn gain(relevance: f64, open_user: u32, open_item: u32, params: DivParams) -> f64 {
    relevance + params.beta * f64::from(open_user) + params.mu * f64::from(open_item)
}

/// Exact marginal objective gain of adding the unused edge `e` to `sol`.
pub fn marginal_gain(sol: &Solution<'_>, e: usize, thresholds: &ThresholdTable, params: DivParams) -> Result<f64> {
    let graph = sol.graph();
    let edge = *graph.edges().get(e).ok_or(Error::UnknownEdge(e))?;
    if sol.contains(e) {
        return Err(Error::EdgeAlreadySelected(e));
    }
    let open_user = sol
        .item_cats()
        .groups_of(edge.item)
        .iter()
        .filter(|&&a| sol.user_group_degree(edge.user, a) < thresholds.user_category(edge.user, a))
        .count() as u32;
    let open_item = sol
        .user_types()
        .groups_of(edge.user)
        .iter()
        .filter(|&&b| sol.item_group_degree(edge.item, b) < thresholds.item_type(edge.item, b))
        .count() as u32;
    Ok(gain(edge.relevance, open_user, open_item, params))
}

/// Greedy solution; see [`greedy_run`].
pub fn greedy_solve<'a>(
    graph: &'a RecGraph,
    user_types: &'a Grouping,
    item_cats: &'a Grouping,
    thresholds: &ThresholdTable,
    params: DivParams,
) -> Result<Solution<'a>> {
    greedy_run(graph, user_types, item_cats, thresholds, params, GreedyOptions::default()).map(|r| r.solution)
}

/// Runs the heap-based greedy. Ties between equal gains go to the lowest
/// edge index; edges of users that are already full are dropped when they
/// surface.
pub fn greedy_run<'a>(
    graph: &'a RecGraph,
    user_types: &'a Grouping,
    item_cats: &'a Grouping,
    thresholds: &ThresholdTable,
    params: DivParams,
    options: GreedyOptions,
) -> Result<GreedyRun<'a>> {
    params.validate()?;
    let mut checked = Solution::new(graph, user_types, item_cats)?;
    thresholds.validate(graph, user_types, item_cats)?;

    let edges = graph.edges();
    let m = edges.len();
    let user_pairs = PairIndex::build(
        graph.user_count(),
        m,
        |u| graph.user_edges(u),
        |e| item_cats.groups_of(edges[e].item),
        |u, a| thresholds.user_category(u, a),
    );
    let item_pairs = PairIndex::build(
        graph.item_count(),
        m,
        |v| graph.item_edges(v),
        |e| user_types.groups_of(edges[e].user),
        |v, b| thresholds.item_type(v, b),
    );

    let mut open_user: Vec<u32> = (0..m).map(|e| user_pairs.initial_open(e)).collect();
    let mut open_item: Vec<u32> = (0..m).map(|e| item_pairs.initial_open(e)).collect();
    let keys = (0..m).map(|e| gain(edges[e].relevance, open_user[e], open_item[e], params)).collect();
    let mut heap = IndexedMaxHeap::from_keys(keys);
    let mut user_delta = vec![0u32; user_pairs.threshold.len()];
    let mut item_delta = vec![0u32; item_pairs.threshold.len()];
    let mut degree = vec![0u32; graph.user_count()];
    let mut open_users = (0..graph.user_count()).filter(|&u| !graph.user_edges(u).is_empty()).count();

    let mut stats = GreedyStats {
        decrease_key_bound: user_pairs.pair_edges.len() + item_pairs.pair_edges.len(),
        ..GreedyStats::default()
    };
    let mut order = Vec::new();

    while open_users > 0 {
        let Some((e, key)) = heap.pop() else { break };
        stats.pops += 1;
        let u = edges[e].user;
        if degree[u] >= graph.capacity(u) {
            stats.discarded += 1;
            continue;
        }
        if options.check_keys {
            stats.key_checks += 1;
            if marginal_gain(&checked, e, thresholds, params)? != key {
                stats.key_mismatches += 1;
            }
            checked.add_edge(e)?;
        }
        degree[u] += 1;
        if degree[u] == graph.capacity(u) {
            open_users -= 1;
        }
        order.push(e);

        for &p in user_pairs.pairs_of(e) {
            let p = p as usize;
            user_delta[p] += 1;
            if user_delta[p] == user_pairs.threshold[p] {
                for &f in user_pairs.edges_of(p) {
                    let f = f as usize;
                    if heap.contains(f) {
                        open_user[f] -= 1;
                        heap.decrease_key(f, gain(edges[f].relevance, open_user[f], open_item[f], params));
                        stats.decrease_keys += 1;
                    }
                }
            }
        }
        for &p in item_pairs.pairs_of(e) {
            let p = p as usize;
            item_delta[p] += 1;
            if item_delta[p] == item_pairs.threshold[p] {
                for &f in item_pairs.edges_of(p) {
                    let f = f as usize;
                    if heap.contains(f) {
                        open_item[f] -= 1;
                        heap.decrease_key(f, gain(edges[f].relevance, open_user[f], open_item[f], params));
                        stats.decrease_keys += 1;
                    }
                }
            }
        }
    }

    let solution = if options.check_keys {
        checked
    } else {
        Solution::from_edges(graph, user_types, item_cats, order.iter().copied())?
    };
    Ok(GreedyRun { solution, order, stats })
}
