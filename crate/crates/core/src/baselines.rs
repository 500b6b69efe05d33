//! Reference rerankers: TOP, MMR and xQuAD.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::metrics::{category_distance, IntentProfile};
use crate::{Error, Grouping, RecGraph, Result, Solution};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedItem {
    pub item: usize,
    pub edge: usize,
    /// Score the reranker assigned when the item was picked.
    pub score: f64,
}

/// Per-user ordered recommendation lists.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedLists {
    lists: Vec<Vec<RankedItem>>,
}

impl RankedLists {
    pub fn new(lists: Vec<Vec<RankedItem>>) -> Self {
        Self { lists }
    }

    /// Ranks each user's selected edges by relevance, highest first, ties
    /// by edge index.
    pub fn from_solution(sol: &Solution<'_>) -> Self {
        let graph = sol.graph();
        let lists = (0..graph.user_count())
            .map(|u| {
                let mut picked: Vec<usize> = sol.selected(u).to_vec();
                sort_by_relevance(graph, &mut picked);
                picked
                    .into_iter()
                    .map(|e| RankedItem { item: graph.edge(e).item, edge: e, score: graph.edge(e).relevance })
                    .collect()
            })
            .collect();
        Self { lists }
    }

    pub fn user_count(&self) -> usize {
        self.lists.len()
    }

    pub fn list(&self, user: usize) -> &[RankedItem] {
        &self.lists[user]
    }

    pub fn lists(&self) -> &[Vec<RankedItem>] {
        &self.lists
    }

    /// Each list cut to its first `k` entries.
    pub fn truncated(&self, k: usize) -> Self {
        Self { lists: self.lists.iter().map(|l| l[..l.len().min(k)].to_vec()).collect() }
    }

    /// The unranked subgraph behind the lists.
    pub fn to_solution<'a>(
        &self,
        graph: &'a RecGraph,
        user_types: &'a Grouping,
        item_cats: &'a Grouping,
    ) -> Result<Solution<'a>> {
        Solution::from_edges(graph, user_types, item_cats, self.lists.iter().flatten().map(|r| r.edge))
    }

    pub fn item_degrees(&self, catalog_size: usize) -> Vec<u32> {
        let mut deg = vec![0u32; catalog_size];
        for r in self.lists.iter().flatten() {
            deg[r.item] += 1;
        }
        deg
    }
}

fn sort_by_relevance(graph: &RecGraph, edges: &mut [usize]) {
    edges.sort_by(|&a, &b| {
        graph.edge(b).relevance.total_cmp(&graph.edge(a).relevance).then(a.cmp(&b))
    });
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

/// Undiversified lists: each user's `c_i` most relevant candidates.
pub fn top_k(graph: &RecGraph) -> RankedLists {
    let lists = (0..graph.user_count())
        .map(|u| {
            let mut edges = graph.user_edges(u).to_vec();
            sort_by_relevance(graph, &mut edges);
            edges.truncate(graph.capacity(u) as usize);
            edges
                .into_iter()
                .map(|e| RankedItem { item: graph.edge(e).item, edge: e, score: graph.edge(e).relevance })
                .collect()
        })
        .collect();
    RankedLists { lists }
}

/// Greedy per-user selection of the candidate maximizing `score(e)`; ties
/// go to the lower edge index. `pick` is told about every selection.
fn greedy_lists(
    graph: &RecGraph,
    mut per_user: impl FnMut(usize) -> (Vec<usize>, Vec<f64>),
    mut score: impl FnMut(usize, usize, &[f64], bool) -> f64,
    mut pick: impl FnMut(usize, usize, &[usize], &mut [f64]),
) -> RankedLists {
    let lists = (0..graph.user_count())
        .map(|u| {
            let (cands, mut state) = per_user(u);
            let mut taken = vec![false; cands.len()];
            let want = (graph.capacity(u) as usize).min(cands.len());
            let mut out = Vec::with_capacity(want);
            for round in 0..want {
                let mut best: Option<(usize, f64)> = None;
                for (i, &e) in cands.iter().enumerate() {
                    if taken[i] {
                        continue;
                    }
                    let s = score(e, i, &state, round == 0);
                    // Candidates are in increasing edge order, so strict `>`
                    // keeps the lowest index on ties.
                    if best.is_none_or(|(_, b)| s > b) {
                        best = Some((i, s));
                    }
                }
                let (i, s) = best.expect("a candidate remains");
                taken[i] = true;
                let e = cands[i];
                out.push(RankedItem { item: graph.edge(e).item, edge: e, score: s });
                pick(e, i, &cands, &mut state);
            }
            out
        })
        .collect();
    RankedLists { lists }
}

/// Maximal marginal relevance: after a pure-relevance first pick, each step
/// maximizes `lambda * rel + (1 - lambda) * min distance to the picks so
/// far`, with distance `1 - cosine` over category membership.
pub fn mmr(graph: &RecGraph, item_cats: &Grouping, lambda: f64) -> Result<RankedLists> {
    check_lambda(lambda)?;
    Ok(greedy_lists(
        graph,
        |u| {
            let cands = graph.user_edges(u).to_vec();
            let n = cands.len();
            (cands, vec![f64::INFINITY; n])
        },
        |e, i, min_dist, first| {
            let rel = graph.edge(e).relevance;
            if first {
                rel
            } else {
                lambda * rel + (1.0 - lambda) * min_dist[i]
            }
        },
        |e, _, cands, min_dist| {
            let picked = item_cats.groups_of(graph.edge(e).item);
            for (j, &f) in cands.iter().enumerate() {
                let d = category_distance(picked, item_cats.groups_of(graph.edge(f).item));
                if d < min_dist[j] {
                    min_dist[j] = d;
                }
            }
        },
    ))
}

/// xQuAD with categories as aspects: each step maximizes
/// `lambda * rel(v) + (1 - lambda) * sum_a p(a) rel_a(v) prod_{s picked} (1 - rel_a(s))`,
/// where `rel_a` is normalized relevance masked to members of `a`.
pub fn xquad(graph: &RecGraph, item_cats: &Grouping, intent: &IntentProfile, lambda: f64) -> Result<RankedLists> {
    check_lambda(lambda)?;
    Ok(greedy_lists(
        graph,
        |u| {
            // state[a] = prod over picks of (1 - rel_a(s)), indexed by category.
            (graph.user_edges(u).to_vec(), vec![1.0; item_cats.group_count()])
        },
        |e, _, uncovered, _| {
            let edge = graph.edge(e);
            let norm = intent.normalized(edge.relevance);
            let aspect: f64 = item_cats
                .groups_of(edge.item)
                .iter()
                .map(|&a| intent.probability(edge.user, a) * norm * uncovered[a])
                .sum();
            lambda * edge.relevance + (1.0 - lambda) * aspect
        },
        |e, _, _, uncovered| {
            let edge = graph.edge(e);
            let norm = intent.normalized(edge.relevance);
            for &a in item_cats.groups_of(edge.item) {
                uncovered[a] *= 1.0 - norm;
            }
        },
    ))
}
