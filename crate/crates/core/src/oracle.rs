//! Reference implementations for tests: exhaustive optimum, literal
//! quadratic greedy and a from-scratch objective. None of these share code
//! with the production solvers or with [`Solution`]'s degree bookkeeping.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::{DivParams, Error, Grouping, RecGraph, Result, Solution, ThresholdTable};

/// Largest cartesian product [`brute_force_optimum`] will enumerate.
pub const MAX_COMBINATIONS: u128 = 10_000_000;

/// `beta * TUDiv + mu * TIDiv + rel` of the edge set `edges`, counted
/// directly.
pub fn objective_from_scratch(
    graph: &RecGraph,
    user_types: &Grouping,
    item_cats: &Grouping,
    thresholds: &ThresholdTable,
    params: DivParams,
    edges: &[usize],
) -> f64 {
    let mut per_user: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut per_item: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut rel = 0.0;
    for &e in edges {
        let edge = graph.edge(e);
        rel += edge.relevance;
        for &a in item_cats.groups_of(edge.item) {
            *per_user.entry((edge.user, a)).or_default() += 1;
        }
        for &b in user_types.groups_of(edge.user) {
            *per_item.entry((edge.item, b)).or_default() += 1;
        }
    }
    let mut tudiv = 0u64;
    for (&(u, a), &d) in &per_user {
        tudiv += u64::from(d.min(thresholds.user_category(u, a)));
    }
    let mut tidiv = 0u64;
    for (&(v, b), &d) in &per_item {
        tidiv += u64::from(d.min(thresholds.item_type(v, b)));
    }
    params.beta * tudiv as f64 + params.mu * tidiv as f64 + rel
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of per-user subsets of size at most `c_u`, multiplied over users.
pub fn combination_count(graph: &RecGraph) -> u128 {
    let mut total: u128 = 1;
    for u in 0..graph.user_count() {
        let d = graph.user_edges(u).len();
        let c = (graph.capacity(u) as usize).min(d);
        let per: u128 = (0..=c).map(|s| binomial(d, s)).sum();
        total = total.saturating_mul(per);
    }
    total
}

fn subsets_up_to(edges: &[usize], max: usize) -> Vec<Vec<usize>> {
    let n = edges.len();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        if (mask.count_ones() as usize) <= max {
            out.push((0..n).filter(|&i| mask & (1 << i) != 0).map(|i| edges[i]).collect());
        }
    }
    out
}

/// Exhaustive maximum of the objective over every subgraph that respects
/// display constraints. Ties go to the lexicographically smallest sorted
/// edge set.
pub fn brute_force_optimum<'a>(
    graph: &'a RecGraph,
    user_types: &'a Grouping,
    item_cats: &'a Grouping,
    thresholds: &ThresholdTable,
    params: DivParams,
) -> Result<(Solution<'a>, f64)> {
    params.validate()?;
    let combinations = combination_count(graph);
    if combinations > MAX_COMBINATIONS || graph.user_edges_max() >= 32 {
        return Err(Error::InstanceTooLarge { combinations });
    }
    let choices: Vec<Vec<Vec<usize>>> = (0..graph.user_count())
        .map(|u| subsets_up_to(graph.user_edges(u), graph.capacity(u) as usize))
        .collect();
    let mut pick = vec![0usize; choices.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let mut set: Vec<usize> = pick.iter().zip(&choices).flat_map(|(&i, c)| c[i].iter().copied()).collect();
        set.sort_unstable();
        let value = objective_from_scratch(graph, user_types, item_cats, thresholds, params, &set);
        let better = match &best {
            None => true,
            Some((b, bs)) => value > b + 1e-12 || ((value - b).abs() <= 1e-12 && set < *bs),
        };
        if better {
            best = Some((value, set));
        }
        // Advance the odometer.
        let mut u = 0;
        loop {
            if u == pick.len() {
                let (value, set) = best.expect("at least the empty set was scored");
                let sol = Solution::from_edges(graph, user_types, item_cats, set)?;
                return Ok((sol, value));
            }
            pick[u] += 1;
            if pick[u] < choices[u].len() {
                break;
            }
            pick[u] = 0;
            u += 1;
        }
    }
}

/// The greedy exactly as written: every round scans all remaining edges,
/// recomputes each marginal gain from current counts and takes the argmax
/// (lowest edge index on ties); an edge whose user is already full is
/// dropped instead of added. Returns edges in insertion order.
pub fn naive_greedy(
    graph: &RecGraph,
    user_types: &Grouping,
    item_cats: &Grouping,
    thresholds: &ThresholdTable,
    params: DivParams,
) -> Vec<usize> {
    let m = graph.edge_count();
    let mut alive = vec![true; m];
    let mut degree = vec![0u32; graph.user_count()];
    let mut per_user: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut per_item: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut order = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for e in (0..m).filter(|&e| alive[e]) {
            let edge = graph.edge(e);
            let open_user = item_cats
                .groups_of(edge.item)
                .iter()
                .filter(|&&a| {
                    per_user.get(&(edge.user, a)).copied().unwrap_or(0) < thresholds.user_category(edge.user, a)
                })
                .count() as u32;
            let open_item = user_types
                .groups_of(edge.user)
                .iter()
                .filter(|&&b| per_item.get(&(edge.item, b)).copied().unwrap_or(0) < thresholds.item_type(edge.item, b))
                .count() as u32;
            let gain = edge.relevance + params.beta * f64::from(open_user) + params.mu * f64::from(open_item);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((e, gain));
            }
        }
        let Some((e, _)) = best else { return order };
        alive[e] = false;
        let edge = graph.edge(e);
        if degree[edge.user] >= graph.capacity(edge.user) {
            continue;
        }
        degree[edge.user] += 1;
        for &a in item_cats.groups_of(edge.item) {
            *per_user.entry((edge.user, a)).or_default() += 1;
        }
        for &b in user_types.groups_of(edge.user) {
            *per_item.entry((edge.item, b)).or_default() += 1;
        }
        order.push(e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{baselines, Edge, Item, Side, User};
    use alloc::format;
    use alloc::string::ToString;

    fn graph(caps: &[u32], n_items: usize, edges: &[(usize, usize, f64)]) -> RecGraph {
        RecGraph::new(
            caps.iter().enumerate().map(|(i, &c)| User { id: format!("u{i}"), capacity: c }).collect(),
            (0..n_items).map(|i| Item { id: format!("v{i}") }).collect(),
            edges.iter().map(|&(user, item, relevance)| Edge { user, item, relevance }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn three_item_optimum() {
        let g = graph(&[2], 3, &[(0, 0, 0.9), (0, 1, 0.8), (0, 2, 0.1)]);
        let ut = Grouping::single_group(Side::User, 1, "T");
        let ic = Grouping::from_membership(
            Side::Item,
            vec!["A".to_string(), "B".to_string()],
            vec![vec![0], vec![0], vec![1]],
        )
        .unwrap();
        assert_eq!(combination_count(&g), 7);
        let (sol, value) =
            brute_force_optimum(&g, &ut, &ic, &ThresholdTable::uniform(1, 1), DivParams::new(1.0, 0.0).unwrap())
                .unwrap();
        assert!((value - 3.0).abs() < 1e-12);
        assert_eq!(sol.edges().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn empty_graph_scores_zero() {
        let g = graph(&[1, 2], 2, &[]);
        let ut = Grouping::single_group(Side::User, 2, "T");
        let ic = Grouping::single_group(Side::Item, 2, "A");
        let (sol, value) = brute_force_optimum(&g, &ut, &ic, &ThresholdTable::new(), DivParams::new(1.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(value, 0.0);
        assert!(sol.is_empty());
    }

    #[test]
    fn zero_weights_match_top_k() {
        let g = graph(&[2, 1], 3, &[(0, 0, 0.2), (0, 1, 0.7), (0, 2, 0.5), (1, 1, 0.3), (1, 2, 0.4)]);
        let ut = Grouping::single_group(Side::User, 2, "T");
        let ic = Grouping::single_group(Side::Item, 3, "A");
        let p = DivParams::new(0.0, 0.0).unwrap();
        let (_, value) = brute_force_optimum(&g, &ut, &ic, &ThresholdTable::uniform(2, 2), p).unwrap();
        let top: f64 = baselines::top_k(&g).lists().iter().flatten().map(|r| g.edge(r.edge).relevance).sum();
        assert!((value - top).abs() < 1e-12);
    }

    #[test]
    fn guard_rejects_large_instances() {
        let edges: Vec<(usize, usize, f64)> = (0..4).flat_map(|u| (0..20).map(move |v| (u, v, 0.5))).collect();
        let g = graph(&[10, 10, 10, 10], 20, &edges);
        let ut = Grouping::single_group(Side::User, 4, "T");
        let ic = Grouping::single_group(Side::Item, 20, "A");
        assert!(matches!(
            brute_force_optimum(&g, &ut, &ic, &ThresholdTable::new(), DivParams::new(1.0, 1.0).unwrap()),
            Err(Error::InstanceTooLarge { .. })
        ));
    }
}
