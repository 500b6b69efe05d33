//! Selected recommendation subgraphs and the objective they score.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{DivParams, Error, Grouping, RecGraph, Result, Side, ThresholdTable};

/// Group-degree map keyed by (entity, group).
pub type DegreeMap = BTreeMap<(usize, usize), u32>;

/// A subgraph `H` of the candidate graph that respects display constraints,
/// with incrementally maintained group degrees.
///
/// `user_group_degree[(u, a)]` counts the selected items of user `u` in
/// category `a`; `item_group_degree[(v, b)]` counts the selected users of
/// item `v` of type `b`.
#[derive(Debug, Clone)]
pub struct Solution<'a> {
    graph: &'a RecGraph,
    user_types: &'a Grouping,
    item_cats: &'a Grouping,
    selected: Vec<Vec<usize>>,
    in_solution: Vec<bool>,
    len: usize,
    user_group_degree: DegreeMap,
    item_group_degree: DegreeMap,
}

impl<'a> Solution<'a> {
    /// Empty selection over `graph`.
    pub fn new(graph: &'a RecGraph, user_types: &'a Grouping, item_cats: &'a Grouping) -> Result<Self> {
        check_grouping(user_types, Side::User, graph.user_count())?;
        check_grouping(item_cats, Side::Item, graph.item_count())?;
        Ok(Self {
            graph,
            user_types,
            item_cats,
            selected: vec![Vec::new(); graph.user_count()],
            in_solution: vec![false; graph.edge_count()],
            len: 0,
            user_group_degree: DegreeMap::new(),
            item_group_degree: DegreeMap::new(),
        })
    }

    /// Builds a solution by adding `edges` in order.
    pub fn from_edges(
        graph: &'a RecGraph,
        user_types: &'a Grouping,
        item_cats: &'a Grouping,
        edges: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut sol = Self::new(graph, user_types, item_cats)?;
        for e in edges {
            sol.add_edge(e)?;
        }
        Ok(sol)
    }

    /// Adds edge `e` to `H` and bumps every affected group degree.
    pub fn add_edge(&mut self, e: usize) -> Result<()> {
        let edge = *self.graph.edges().get(e).ok_or(Error::UnknownEdge(e))?;
        if self.in_solution[e] {
            return Err(Error::EdgeAlreadySelected(e));
        }
        let capacity = self.graph.capacity(edge.user);
        let picked = &mut self.selected[edge.user];
        if picked.len() >= capacity as usize {
            return Err(Error::CapacityExceeded { user: edge.user, capacity });
        }
        let pos = picked.partition_point(|&x| x < e);
        picked.insert(pos, e);
        self.in_solution[e] = true;
        self.len += 1;
        for &a in self.item_cats.groups_of(edge.item) {
            *self.user_group_degree.entry((edge.user, a)).or_insert(0) += 1;
        }
        for &b in self.user_types.groups_of(edge.user) {
            *self.item_group_degree.entry((edge.item, b)).or_insert(0) += 1;
        }
        Ok(())
    }

    pub fn graph(&self) -> &'a RecGraph {
        self.graph
    }

    pub fn user_types(&self) -> &'a Grouping {
        self.user_types
    }

    pub fn item_cats(&self) -> &'a Grouping {
        self.item_cats
    }

    /// Sorted edge indices selected for `user`.
    pub fn selected(&self, user: usize) -> &[usize] {
        &self.selected[user]
    }

    /// All selected edge indices, grouped by user.
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.selected.iter().flatten().copied()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.in_solution.get(e).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.selected[user].len()
    }

    /// True when `user` holds `c_i` recommendations.
    pub fn is_full(&self, user: usize) -> bool {
        self.selected[user].len() >= self.graph.capacity(user) as usize
    }

    /// Selected item degrees over the whole catalog.
    pub fn item_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.graph.item_count()];
        for e in self.edges() {
            deg[self.graph.edge(e).item] += 1;
        }
        deg
    }

    /// `delta_i^H(R_a)`.
    pub fn user_group_degree(&self, user: usize, category: usize) -> u32 {
        self.user_group_degree.get(&(user, category)).copied().unwrap_or(0)
    }

    /// `delta_j^H(L_b)`.
    pub fn item_group_degree(&self, item: usize, user_type: usize) -> u32 {
        self.item_group_degree.get(&(item, user_type)).copied().unwrap_or(0)
    }

    pub fn user_group_degrees(&self) -> &DegreeMap {
        &self.user_group_degree
    }

    pub fn item_group_degrees(&self) -> &DegreeMap {
        &self.item_group_degree
    }

    /// Recomputes both degree maps from the selected edges alone.
    pub fn recount(&self) -> (DegreeMap, DegreeMap) {
        let mut user_side = DegreeMap::new();
        let mut item_side = DegreeMap::new();
        for e in self.edges() {
            let edge = self.graph.edge(e);
            for &a in self.item_cats.groups_of(edge.item) {
                *user_side.entry((edge.user, a)).or_insert(0) += 1;
            }
            for &b in self.user_types.groups_of(edge.user) {
                *item_side.entry((edge.item, b)).or_insert(0) += 1;
            }
        }
        (user_side, item_side)
    }

    /// `rel(H)`.
    pub fn relevance(&self) -> f64 {
        self.edges().map(|e| self.graph.edge(e).relevance).sum()
    }
}

fn check_grouping(g: &Grouping, side: Side, count: usize) -> Result<()> {
    if g.side() != side {
        return Err(Error::GroupingMismatch(format!(
            "expected a {} grouping, got a {} grouping",
            side.name(),
            g.side().name()
        )));
    }
    if g.entity_count() != count {
        return Err(Error::GroupingMismatch(format!(
            "{} grouping covers {} entities but the graph has {count}",
            side.name(),
            g.entity_count()
        )));
    }
    Ok(())
}

/// `beta * TUDiv(H) + mu * TIDiv(H) + rel(H)`.
pub fn eval_objective(sol: &Solution<'_>, thresholds: &ThresholdTable, params: DivParams) -> Result<f64> {
    params.validate()?;
    thresholds.validate(sol.graph, sol.user_types, sol.item_cats)?;
    let tudiv: u64 = sol
        .user_group_degree
        .iter()
        .map(|(&(u, a), &d)| u64::from(d.min(thresholds.user_category(u, a))))
        .sum();
    let tidiv: u64 = sol
        .item_group_degree
        .iter()
        .map(|(&(v, b), &d)| u64::from(d.min(thresholds.item_type(v, b))))
        .sum();
    Ok(params.beta * tudiv as f64 + params.mu * tidiv as f64 + sol.relevance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Edge, Item, User};
    use alloc::string::{String, ToString};

    fn graph(caps: &[u32], n_items: usize, edges: &[(usize, usize, f64)]) -> RecGraph {
        RecGraph::new(
            caps.iter().enumerate().map(|(i, &c)| User { id: alloc::format!("u{i}"), capacity: c }).collect(),
            (0..n_items).map(|i| Item { id: alloc::format!("v{i}") }).collect(),
            edges.iter().map(|&(user, item, relevance)| Edge { user, item, relevance }).collect(),
        )
        .unwrap()
    }

    fn grouping(side: Side, ids: &[&str], membership: &[&[usize]]) -> Grouping {
        Grouping::from_membership(
            side,
            ids.iter().map(|s| s.to_string()).collect::<Vec<String>>(),
            membership.iter().map(|m| m.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_solution_scores_zero() {
        let g = graph(&[2], 2, &[(0, 0, 0.5), (0, 1, 0.7)]);
        let ut = grouping(Side::User, &["T"], &[&[0]]);
        let ic = grouping(Side::Item, &["A"], &[&[0], &[0]]);
        let sol = Solution::new(&g, &ut, &ic).unwrap();
        assert!(sol.is_empty());
        assert_eq!(sol.relevance(), 0.0);
        let p = DivParams::new(3.0, 2.0).unwrap();
        assert_eq!(eval_objective(&sol, &ThresholdTable::uniform(5, 5), p).unwrap(), 0.0);
    }

    #[test]
    fn add_edge_updates_degrees() {
        let g = graph(&[3], 3, &[(0, 0, 0.5), (0, 1, 0.7), (0, 2, 0.1)]);
        let ut = grouping(Side::User, &["T"], &[&[0]]);
        let ic = grouping(Side::Item, &["A", "B"], &[&[0], &[0], &[0, 1]]);
        let mut sol = Solution::new(&g, &ut, &ic).unwrap();
        sol.add_edge(0).unwrap();
        assert_eq!(sol.user_group_degree(0, 0), 1);
        assert_eq!(sol.item_group_degree(0, 0), 1);
        sol.add_edge(1).unwrap();
        assert_eq!(sol.user_group_degree(0, 0), 2);
        sol.add_edge(2).unwrap();
        assert_eq!(sol.user_group_degree(0, 0), 3);
        assert_eq!(sol.user_group_degree(0, 1), 1);
        assert_eq!(sol.recount(), (sol.user_group_degrees().clone(), sol.item_group_degrees().clone()));
    }

    #[test]
    fn add_edge_errors() {
        let g = graph(&[1], 2, &[(0, 0, 0.5), (0, 1, 0.7)]);
        let ut = Grouping::single_group(Side::User, 1, "T");
        let ic = Grouping::single_group(Side::Item, 2, "A");
        let mut sol = Solution::new(&g, &ut, &ic).unwrap();
        sol.add_edge(0).unwrap();
        assert_eq!(sol.add_edge(0), Err(Error::EdgeAlreadySelected(0)));
        assert_eq!(sol.add_edge(1), Err(Error::CapacityExceeded { user: 0, capacity: 1 }));
        assert_eq!(sol.add_edge(7), Err(Error::UnknownEdge(7)));
    }

    #[test]
    fn grouping_mismatch_is_rejected() {
        let g = graph(&[1], 2, &[(0, 0, 0.5)]);
        let ut = Grouping::single_group(Side::User, 1, "T");
        let ic = Grouping::single_group(Side::Item, 3, "A");
        assert!(matches!(Solution::new(&g, &ut, &ic), Err(Error::GroupingMismatch(_))));
        assert!(matches!(Solution::new(&g, &ic, &ut), Err(Error::GroupingMismatch(_))));
    }

    #[test]
    fn objective_hand_case() {
        // H = {(u1,v1 .9), (u1,v3 .1)}, v1 in A, v3 in B, rho = 1, beta = 1, mu = 0.
        let g = graph(&[2], 3, &[(0, 0, 0.9), (0, 1, 0.8), (0, 2, 0.1)]);
        let ut = Grouping::single_group(Side::User, 1, "T");
        let ic = grouping(Side::Item, &["A", "B"], &[&[0], &[0], &[1]]);
        let sol = Solution::from_edges(&g, &ut, &ic, [0, 2]).unwrap();
        let obj = eval_objective(&sol, &ThresholdTable::uniform(1, 1), DivParams::new(1.0, 0.0).unwrap()).unwrap();
        assert!((obj - 3.0).abs() < 1e-12);
        let rel_only = eval_objective(&sol, &ThresholdTable::uniform(1, 1), DivParams::new(0.0, 0.0).unwrap()).unwrap();
        assert!((rel_only - 1.0).abs() < 1e-12);
    }
}
