//! Exact diversification for disjoint groupings by reduction to
//! minimum-cost flow.
//!
//! Every user `u` supplies `c_u` units that must reach the sink `t`. A unit
//! travelling through candidate edge `(u, v)` pays `-rel(u, v)`. On the user
//! side each (user, category) pair has a gadget `u -> n' -> n` whose first
//! `rho` units earn `-beta`, next to a free bypass `u -> n`; on the item side
//! each (item, type) pair has a gadget `m -> m' -> v` whose first `lambda`
//! units earn `-mu`, next to a free bypass `m -> v`. A zero-cost slack arc
//! `u -> t` lets users stay below their display constraint. Minimizing cost
//! therefore maximizes `beta * TUDiv + mu * TIDiv + rel`.
//!
//! Real-valued weights are scaled by `cost_scale` and rounded half-to-even.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::mcmf::{self, FlowNetwork, FlowResult, MAX_ABS_COST, UNBOUNDED};
use crate::{DivParams, Error, Grouping, RecGraph, Result, Side, Solution, ThresholdTable};

/// Default multiplier from real-valued weights to integer arc costs.
pub const DEFAULT_COST_SCALE: i64 = 1_000_000;

/// Arcs of one (user, category) or (item, type) gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GadgetArcs {
    pub entity: usize,
    pub group: usize,
    /// Rewarded arc: `u -> n'` on the user side, `m' -> v` on the item side.
    pub bonus_arc: usize,
    /// Capacity-matched zero-cost partner of the bonus arc.
    pub link_arc: usize,
    /// Unbounded zero-cost bypass.
    pub free_arc: usize,
    /// Node that candidate-edge arcs leave (user side) or enter (item side).
    pub port: usize,
}

/// Where each piece of the instance landed in the flow network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionMap {
    /// Arc carrying each candidate edge, by edge index.
    pub edge_arcs: Vec<Option<usize>>,
    pub user_gadgets: Vec<GadgetArcs>,
    pub item_gadgets: Vec<GadgetArcs>,
    pub sink: usize,
    /// Slack arc `u -> t` of each user.
    pub slack_arcs: Vec<usize>,
    pub cost_scale: i64,
}

impl ReductionMap {
    /// Candidate edges whose arc carries flow.
    pub fn decode(&self, result: &FlowResult) -> Vec<usize> {
        self.edge_arcs
            .iter()
            .enumerate()
            .filter_map(|(e, arc)| arc.filter(|&a| result.flow[a] > 0).map(|_| e))
            .collect()
    }
}

fn scaled(x: f64, scale: i64) -> Result<i64> {
    let v = libm::rint(x * scale as f64);
    if !v.is_finite() || v.abs() > MAX_ABS_COST as f64 {
        return Err(Error::ScaleOverflow { scale });
    }
    Ok(v as i64)
}

fn check_scale(scale: i64) -> Result<()> {
    if scale <= 0 {
        return Err(Error::InvalidArgument(format!("cost scale must be positive, got {scale}")));
    }
    Ok(())
}

fn check_partition(g: &Grouping, graph: &RecGraph) -> Result<()> {
    let side = g.side().name();
    if !g.is_disjoint() {
        return Err(Error::NonDisjointGrouping { side });
    }
    let count = match g.side() {
        Side::User => graph.user_count(),
        Side::Item => graph.item_count(),
    };
    if g.entity_count() != count {
        return Err(Error::GroupingMismatch(format!(
            "{side} grouping covers {} entities but the graph has {count}",
            g.entity_count()
        )));
    }
    for entity in 0..count {
        let incident = match g.side() {
            Side::User => !graph.user_edges(entity).is_empty(),
            Side::Item => !graph.item_edges(entity).is_empty(),
        };
        if incident && g.group_of(entity).is_none() {
            return Err(Error::UngroupedEntity { side, index: entity });
        }
    }
    Ok(())
}

/// Users, then items, then the sink; supplies `c_u` and `-sum c_u`; one
/// slack arc and one item-to-sink arc per entity.
fn skeleton(graph: &RecGraph) -> (FlowNetwork, usize, Vec<usize>) {
    let (nu, ni) = (graph.user_count(), graph.item_count());
    let sink = nu + ni;
    let mut net = FlowNetwork::new(sink + 1);
    let mut slack_arcs = Vec::with_capacity(nu);
    for u in 0..nu {
        let c = i64::from(graph.capacity(u));
        net.set_supply(u, c);
        net.add_supply(sink, -c);
        slack_arcs.push(net.add_arc(u, sink, c, 0));
    }
    for v in 0..ni {
        net.add_arc(nu + v, sink, UNBOUNDED, 0);
    }
    (net, sink, slack_arcs)
}

/// Reduction network for the full thresholded objective.
pub fn build_tdiv_network(
    graph: &RecGraph,
    user_types: &Grouping,
    item_cats: &Grouping,
    thresholds: &ThresholdTable,
    params: DivParams,
    cost_scale: i64,
) -> Result<(FlowNetwork, ReductionMap)> {
    check_scale(cost_scale)?;
    params.validate()?;
    check_partition(user_types, graph)?;
    check_partition(item_cats, graph)?;
    thresholds.validate(graph, user_types, item_cats)?;
    let beta_cost = -scaled(params.beta, cost_scale)?;
    let mu_cost = -scaled(params.mu, cost_scale)?;

    let nu = graph.user_count();
    let (mut net, sink, slack_arcs) = skeleton(graph);
    let mut user_gadgets: Vec<GadgetArcs> = Vec::new();
    let mut item_gadgets: Vec<GadgetArcs> = Vec::new();
    let mut user_lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut item_lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut edge_arcs = vec![None; graph.edge_count()];

    for (e, edge) in graph.edges().iter().enumerate() {
        let (u, v) = (edge.user, edge.item);
        let a = item_cats.group_of(v).ok_or(Error::UngroupedEntity { side: "item", index: v })?;
        let b = user_types.group_of(u).ok_or(Error::UngroupedEntity { side: "user", index: u })?;

        let ug = *user_lookup.entry((u, a)).or_insert_with(|| {
            let rho = i64::from(thresholds.user_category(u, a));
            let n_prime = net.add_node();
            let n = net.add_node();
            let bonus_arc = net.add_arc(u, n_prime, rho, beta_cost);
            let link_arc = net.add_arc(n_prime, n, rho, 0);
            let free_arc = net.add_arc(u, n, UNBOUNDED, 0);
            user_gadgets.push(GadgetArcs { entity: u, group: a, bonus_arc, link_arc, free_arc, port: n });
            user_gadgets.len() - 1
        });
        let ig = *item_lookup.entry((v, b)).or_insert_with(|| {
            let lambda = i64::from(thresholds.item_type(v, b));
            let m = net.add_node();
            let m_prime = net.add_node();
            let item_node = nu + v;
            let link_arc = net.add_arc(m, m_prime, lambda, 0);
            let bonus_arc = net.add_arc(m_prime, item_node, lambda, mu_cost);
            let free_arc = net.add_arc(m, item_node, UNBOUNDED, 0);
            item_gadgets.push(GadgetArcs { entity: v, group: b, bonus_arc, link_arc, free_arc, port: m });
            item_gadgets.len() - 1
        });
        let rel_cost = -scaled(edge.relevance, cost_scale)?;
        edge_arcs[e] = Some(net.add_arc(user_gadgets[ug].port, item_gadgets[ig].port, 1, rel_cost));
    }

    let map = ReductionMap { edge_arcs, user_gadgets, item_gadgets, sink, slack_arcs, cost_scale };
    Ok((net, map))
}

/// Reduction network rewarding each distinct category a user hits with
/// `-cost_scale`; relevance and user types play no part.
pub fn build_userdiv_network(
    graph: &RecGraph,
    item_cats: &Grouping,
    cost_scale: i64,
) -> Result<(FlowNetwork, ReductionMap)> {
    check_scale(cost_scale)?;
    check_partition(item_cats, graph)?;
    scaled(1.0, cost_scale)?;

    let nu = graph.user_count();
    let (mut net, sink, slack_arcs) = skeleton(graph);
    let mut user_gadgets: Vec<GadgetArcs> = Vec::new();
    let mut lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut edge_arcs = vec![None; graph.edge_count()];

    for (e, edge) in graph.edges().iter().enumerate() {
        let u = edge.user;
        let a = item_cats.group_of(edge.item).ok_or(Error::UngroupedEntity { side: "item", index: edge.item })?;
        let ug = *lookup.entry((u, a)).or_insert_with(|| {
            let n_prime = net.add_node();
            let n = net.add_node();
            let bonus_arc = net.add_arc(u, n_prime, 1, -cost_scale);
            let link_arc = net.add_arc(n_prime, n, 1, 0);
            let free_arc = net.add_arc(u, n, UNBOUNDED, 0);
            user_gadgets.push(GadgetArcs { entity: u, group: a, bonus_arc, link_arc, free_arc, port: n });
            user_gadgets.len() - 1
        });
        edge_arcs[e] = Some(net.add_arc(user_gadgets[ug].port, nu + edge.item, 1, 0));
    }

    let map = ReductionMap { edge_arcs, user_gadgets, item_gadgets: Vec::new(), sink, slack_arcs, cost_scale };
    Ok((net, map))
}

/// Optimal solution of the thresholded problem together with the minimum
/// flow cost (in units of `1 / cost_scale`).
pub fn solve_tdiv_with_cost<'a>(
    graph: &'a RecGraph,
    user_types: &'a Grouping,
    item_cats: &'a Grouping,
    thresholds: &ThresholdTable,
    params: DivParams,
    cost_scale: i64,
) -> Result<(Solution<'a>, i64)> {
    let (net, map) = build_tdiv_network(graph, user_types, item_cats, thresholds, params, cost_scale)?;
    let result = mcmf::solve_min_cost_flow(&net)?;
    if !result.feasible {
        return Err(Error::Infeasible);
    }
    let sol = Solution::from_edges(graph, user_types, item_cats, map.decode(&result))?;
    Ok((sol, result.total_cost))
}

/// Subgraph maximizing `beta * TUDiv + mu * TIDiv + rel` under display
/// constraints, exact up to the cost quantization.
pub fn solve_tdiv<'a>(
    graph: &'a RecGraph,
    user_types: &'a Grouping,
    item_cats: &'a Grouping,
    thresholds: &ThresholdTable,
    params: DivParams,
    cost_scale: i64,
) -> Result<Solution<'a>> {
    solve_tdiv_with_cost(graph, user_types, item_cats, thresholds, params, cost_scale).map(|(s, _)| s)
}

/// Subgraph maximizing the number of distinct categories hit per user.
pub fn solve_userdiv<'a>(
    graph: &'a RecGraph,
    user_types: &'a Grouping,
    item_cats: &'a Grouping,
    cost_scale: i64,
) -> Result<(Solution<'a>, i64)> {
    let (net, map) = build_userdiv_network(graph, item_cats, cost_scale)?;
    let result = mcmf::solve_min_cost_flow(&net)?;
    if !result.feasible {
        return Err(Error::Infeasible);
    }
    let sol = Solution::from_edges(graph, user_types, item_cats, map.decode(&result))?;
    Ok((sol, result.total_cost))
}
