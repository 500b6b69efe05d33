//! Evaluation metrics: thresholded and plain two-sided diversity, the
//! edge-weighted diversity form, intra-list distance, ERR-IA, aggregate
//! diversity, Gini and precision.
//!
//! Set metrics recount group degrees from the selected edges on every call
//! rather than trusting a solution's incremental maps.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::baselines::RankedLists;
use crate::solution::DegreeMap;
use crate::{DivParams, Error, Grouping, RecGraph, Result, Side, Solution, ThresholdTable};

fn user_side_degrees(sol: &Solution<'_>, item_cats: &Grouping) -> DegreeMap {
    let graph = sol.graph();
    let mut deg = DegreeMap::new();
    for e in sol.edges() {
        let edge = graph.edge(e);
        for &a in item_cats.groups_of(edge.item) {
            *deg.entry((edge.user, a)).or_insert(0) += 1;
        }
    }
    deg
}

fn item_side_degrees(sol: &Solution<'_>, user_types: &Grouping) -> DegreeMap {
    let graph = sol.graph();
    let mut deg = DegreeMap::new();
    for e in sol.edges() {
        let edge = graph.edge(e);
        for &b in user_types.groups_of(edge.user) {
            *deg.entry((edge.item, b)).or_insert(0) += 1;
        }
    }
    deg
}

/// `sum_{u, a} min(rho_u(a), delta_u(a))`.
pub fn tudiv(sol: &Solution<'_>, item_cats: &Grouping, thresholds: &ThresholdTable) -> f64 {
    user_side_degrees(sol, item_cats)
        .into_iter()
        .map(|((u, a), d)| f64::from(d.min(thresholds.user_category(u, a))))
        .sum()
}

/// `sum_{v, b} min(lambda_v(b), delta_v(b))`.
pub fn tidiv(sol: &Solution<'_>, user_types: &Grouping, thresholds: &ThresholdTable) -> f64 {
    item_side_degrees(sol, user_types)
        .into_iter()
        .map(|((v, b), d)| f64::from(d.min(thresholds.item_type(v, b))))
        .sum()
}

/// Distinct categories hit, summed over users.
pub fn userdiv(sol: &Solution<'_>, item_cats: &Grouping) -> f64 {
    user_side_degrees(sol, item_cats).len() as f64
}

/// Distinct user types hit, summed over items.
pub fn itemdiv(sol: &Solution<'_>, user_types: &Grouping) -> f64 {
    item_side_degrees(sol, user_types).len() as f64
}

/// Edge-weighted diversity `sum_{(u,v) in H} beta / delta_u(cat v) + mu / delta_v(type u)`.
///
/// Requires disjoint groupings. Edges with an ungrouped endpoint earn
/// nothing on that side.
pub fn div_edgewise(
    sol: &Solution<'_>,
    user_types: &Grouping,
    item_cats: &Grouping,
    params: DivParams,
) -> Result<f64> {
    params.validate()?;
    for g in [user_types, item_cats] {
        if !g.is_disjoint() {
            return Err(Error::NonDisjointGrouping { side: g.side().name() });
        }
    }
    let user_deg = user_side_degrees(sol, item_cats);
    let item_deg = item_side_degrees(sol, user_types);
    let graph = sol.graph();
    let mut total = 0.0;
    for e in sol.edges() {
        let edge = graph.edge(e);
        if let Some(a) = item_cats.group_of(edge.item) {
            total += params.beta / f64::from(user_deg[&(edge.user, a)]);
        }
        if let Some(b) = user_types.group_of(edge.user) {
            total += params.mu / f64::from(item_deg[&(edge.item, b)]);
        }
    }
    Ok(total)
}

/// `1 - cosine` between binary category-membership vectors given as sorted
/// group lists. An item without categories is at distance 1 from everything.
pub fn category_distance(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    1.0 - common as f64 / libm::sqrt((a.len() * b.len()) as f64)
}

/// Intra-list distance at cutoff `k`: for each user, the mean category
/// distance over ordered pairs of distinct list entries, averaged over all
/// users. Users with fewer than two items contribute 0.
pub fn ild(lists: &RankedLists, item_cats: &Grouping, k: usize) -> f64 {
    if lists.user_count() == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for list in lists.lists() {
        let list = &list[..list.len().min(k)];
        let c = list.len();
        if c < 2 {
            continue;
        }
        let mut sum = 0.0;
        for (i, x) in list.iter().enumerate() {
            for (j, y) in list.iter().enumerate() {
                if i != j {
                    sum += category_distance(item_cats.groups_of(x.item), item_cats.groups_of(y.item));
                }
            }
        }
        total += sum / (c * (c - 1)) as f64;
    }
    total / lists.user_count() as f64
}

/// Per-user category intent distribution plus the relevance range used to
/// map raw relevance into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntentProfile {
    probabilities: Vec<Vec<(usize, f64)>>,
    rel_min: f64,
    rel_max: f64,
}

impl IntentProfile {
    /// `probabilities[u]` lists `(category, p)`; each non-empty list must
    /// sum to 1 within 1e-9.
    pub fn new(mut probabilities: Vec<Vec<(usize, f64)>>, rel_min: f64, rel_max: f64) -> Result<Self> {
        if !(rel_min.is_finite() && rel_max.is_finite() && rel_min <= rel_max) {
            return Err(Error::InvalidArgument(format!("bad relevance range [{rel_min}, {rel_max}]")));
        }
        for (u, p) in probabilities.iter_mut().enumerate() {
            p.sort_by_key(|&(a, _)| a);
            if p.windows(2).any(|w| w[0].0 == w[1].0) || p.iter().any(|&(_, x)| !(0.0..=1.0).contains(&x)) {
                return Err(Error::InvalidArgument(format!("user {u} has a malformed intent distribution")));
            }
            let sum: f64 = p.iter().map(|&(_, x)| x).sum();
            if !p.is_empty() && (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("user {u} intent sums to {sum}")));
            }
        }
        Ok(Self { probabilities, rel_min, rel_max })
    }

    /// Normalizes per-user category counts into distributions; users with
    /// no counts get an empty distribution.
    pub fn from_counts(counts: Vec<BTreeMap<usize, u64>>, rel_min: f64, rel_max: f64) -> Result<Self> {
        let probabilities = counts
            .into_iter()
            .map(|c| {
                let total: u64 = c.values().sum();
                if total == 0 {
                    Vec::new()
                } else {
                    c.into_iter().filter(|&(_, n)| n > 0).map(|(a, n)| (a, n as f64 / total as f64)).collect()
                }
            })
            .collect();
        Self::new(probabilities, rel_min, rel_max)
    }

    /// Relevance range spanned by every candidate edge of `graph`.
    pub fn relevance_range(graph: &RecGraph) -> (f64, f64) {
        let mut it = graph.edges().iter().map(|e| e.relevance);
        let Some(first) = it.next() else { return (0.0, 0.0) };
        it.fold((first, first), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    /// `p_u(a)`; 0 for unknown users or categories.
    pub fn probability(&self, user: usize, category: usize) -> f64 {
        self.probabilities
            .get(user)
            .and_then(|p| p.binary_search_by_key(&category, |&(a, _)| a).ok().map(|i| p[i].1))
            .unwrap_or(0.0)
    }

    pub fn distribution(&self, user: usize) -> &[(usize, f64)] {
        self.probabilities.get(user).map_or(&[], Vec::as_slice)
    }

    /// `(r - min) / (max - min)` clamped to `[0, 1]`. A degenerate range maps
    /// positive relevance to 1 and zero to 0.
    pub fn normalized(&self, relevance: f64) -> f64 {
        let span = self.rel_max - self.rel_min;
        if span <= 0.0 {
            return if relevance > 0.0 { 1.0 } else { 0.0 };
        }
        ((relevance - self.rel_min) / span).clamp(0.0, 1.0)
    }
}

/// Intent-aware expected reciprocal rank at cutoff `k`, averaged over the
/// users of `lists`:
/// `sum_a p(a) sum_{r <= k} (1/r) rel_a(v_r) prod_{l < r} (1 - rel_a(v_l))`
/// with `rel_a` the normalized relevance masked to members of `a`.
pub fn err_ia(graph: &RecGraph, lists: &RankedLists, intent: &IntentProfile, item_cats: &Grouping, k: usize) -> f64 {
    let users: Vec<usize> = (0..lists.user_count()).collect();
    err_ia_over(graph, lists, intent, item_cats, k, &users)
}

/// [`err_ia`] averaged over the given users only.
pub fn err_ia_over(
    graph: &RecGraph,
    lists: &RankedLists,
    intent: &IntentProfile,
    item_cats: &Grouping,
    k: usize,
    users: &[usize],
) -> f64 {
    if users.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &u in users {
        let list = lists.list(u);
        let list = &list[..list.len().min(k)];
        for &(a, p) in intent.distribution(u) {
            let mut not_yet = 1.0;
            let mut score = 0.0;
            for (rank, r) in list.iter().enumerate() {
                let rel_a = if item_cats.groups_of(r.item).binary_search(&a).is_ok() {
                    intent.normalized(graph.edge(r.edge).relevance)
                } else {
                    0.0
                };
                score += rel_a * not_yet / (rank + 1) as f64;
                not_yet *= 1.0 - rel_a;
            }
            total += p * score;
        }
    }
    total / users.len() as f64
}

/// `1 - (1/r)(r + 1 - 2 sum_i (r + 1 - i) d_i / sum_i d_i)` over the item
/// degrees sorted ascending. This is one minus the classical Gini
/// coefficient: 1 means perfectly even exposure. All-zero degrees give 0.
pub fn gini_from_degrees(degrees: &[u32]) -> f64 {
    let r = degrees.len();
    let total: u64 = degrees.iter().map(|&d| u64::from(d)).sum();
    if r == 0 || total == 0 {
        return 0.0;
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let weighted: f64 = sorted.iter().enumerate().map(|(i, &d)| (r - i) as f64 * f64::from(d)).sum();
    let rf = r as f64;
    1.0 - (rf + 1.0 - 2.0 * weighted / total as f64) / rf
}

/// Gini over the whole catalog of the lists cut at `k`.
pub fn gini(lists: &RankedLists, catalog_size: usize, k: usize) -> f64 {
    gini_from_degrees(&lists.truncated(k).item_degrees(catalog_size))
}

/// Fraction of the catalog recommended to at least one user.
pub fn aggregate_diversity(lists: &RankedLists, catalog_size: usize, k: usize) -> f64 {
    if catalog_size == 0 {
        return 0.0;
    }
    let hit = lists.truncated(k).item_degrees(catalog_size).iter().filter(|&&d| d > 0).count();
    hit as f64 / catalog_size as f64
}

/// Held-out relevant items per test user.
pub type TestSets = BTreeMap<usize, BTreeSet<usize>>;

/// `(1/|L_T|) sum_{u in L_T} |N(u) cap T(u)| / c_u`, with `N(u)` cut at `k`
/// and `c_u` capped by `k`.
pub fn precision(graph: &RecGraph, lists: &RankedLists, test: &TestSets, k: usize) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidArgument(String::from("precision needs at least one test user")));
    }
    let mut total = 0.0;
    for (&u, relevant) in test {
        if u >= graph.user_count() {
            return Err(Error::InvalidArgument(format!("test user {u} is not in the graph")));
        }
        let list = lists.list(u);
        let hits = list[..list.len().min(k)].iter().filter(|r| relevant.contains(&r.item)).count();
        let denom = (graph.capacity(u) as usize).min(k).max(1);
        total += hits as f64 / denom as f64;
    }
    Ok(total / test.len() as f64)
}

/// Flat metric record at one cutoff. Metrics whose inputs were unavailable
/// are `None`.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub precision: Option<f64>,
    pub err_ia: Option<f64>,
    pub ild: Option<f64>,
    pub tudiv: Option<f64>,
    pub tidiv: Option<f64>,
    pub userdiv: Option<f64>,
    pub itemdiv: Option<f64>,
    pub div: Option<f64>,
    pub aggregate_diversity: Option<f64>,
    pub gini: Option<f64>,
    pub relevance_sum: Option<f64>,
    pub k: usize,
}

impl MetricsReport {
    pub const FIELDS: [&'static str; 12] = [
        "precision",
        "err_ia",
        "ild",
        "tudiv",
        "tidiv",
        "userdiv",
        "itemdiv",
        "div",
        "aggregate_diversity",
        "gini",
        "relevance_sum",
        "k",
    ];

    /// Values in [`MetricsReport::FIELDS`] order, `k` last.
    pub fn values(&self) -> [Option<f64>; 12] {
        [
            self.precision,
            self.err_ia,
            self.ild,
            self.tudiv,
            self.tidiv,
            self.userdiv,
            self.itemdiv,
            self.div,
            self.aggregate_diversity,
            self.gini,
            self.relevance_sum,
            Some(self.k as f64),
        ]
    }
}

/// Everything [`evaluate`] may use. Optional inputs switch off the metrics
/// that need them.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub graph: &'a RecGraph,
    pub user_types: Option<&'a Grouping>,
    pub item_cats: Option<&'a Grouping>,
    pub thresholds: Option<&'a ThresholdTable>,
    pub intent: Option<&'a IntentProfile>,
    pub test: Option<&'a TestSets>,
    pub params: DivParams,
    pub k: usize,
}

/// Computes every available metric for `lists` cut at `ctx.k`.
///
/// ERR-IA is measured among test-relevant items only when test sets are
/// given: each test user's list is filtered to its held-out relevant items
/// (keeping order) and the mean runs over test users.
pub fn evaluate(ctx: &EvalContext<'_>, lists: &RankedLists) -> Result<MetricsReport> {
    let graph = ctx.graph;
    let cut = lists.truncated(ctx.k);
    let no_users = Grouping::new(Side::User, graph.user_count(), Vec::new())?;
    let no_items = Grouping::new(Side::Item, graph.item_count(), Vec::new())?;
    let ut = ctx.user_types.unwrap_or(&no_users);
    let ic = ctx.item_cats.unwrap_or(&no_items);
    let sol = cut.to_solution(graph, ut, ic)?;

    let mut report = MetricsReport {
        k: ctx.k,
        aggregate_diversity: Some(aggregate_diversity(&cut, graph.item_count(), ctx.k)),
        gini: Some(gini(&cut, graph.item_count(), ctx.k)),
        relevance_sum: Some(sol.relevance()),
        ..MetricsReport::default()
    };
    if let Some(test) = ctx.test {
        report.precision = Some(precision(graph, &cut, test, ctx.k)?);
    }
    if let Some(ic) = ctx.item_cats {
        report.userdiv = Some(userdiv(&sol, ic));
        report.ild = Some(ild(&cut, ic, ctx.k));
        if let Some(t) = ctx.thresholds {
            report.tudiv = Some(tudiv(&sol, ic, t));
        }
        if let Some(intent) = ctx.intent {
            report.err_ia = Some(match ctx.test {
                Some(test) => {
                    let filtered = RankedLists::new(
                        cut.lists()
                            .iter()
                            .enumerate()
                            .map(|(u, l)| match test.get(&u) {
                                Some(rel) => l.iter().filter(|r| rel.contains(&r.item)).copied().collect(),
                                None => Vec::new(),
                            })
                            .collect(),
                    );
                    let users: Vec<usize> = test.keys().copied().collect();
                    err_ia_over(graph, &filtered, intent, ic, ctx.k, &users)
                }
                None => err_ia(graph, &cut, intent, ic, ctx.k),
            });
        }
    }
    if let Some(ut) = ctx.user_types {
        report.itemdiv = Some(itemdiv(&sol, ut));
        if let Some(t) = ctx.thresholds {
            report.tidiv = Some(tidiv(&sol, ut, t));
        }
    }
    if let (Some(ut), Some(ic)) = (ctx.user_types, ctx.item_cats) {
        if ut.is_disjoint() && ic.is_disjoint() {
            report.div = Some(div_edgewise(&sol, ut, ic, ctx.params)?);
        }
    }
    Ok(report)
}

/// Item degrees for each user-side list, convenient for callers that only
/// hold a solution.
pub fn solution_item_degrees(sol: &Solution<'_>) -> Vec<u32> {
    let mut deg = vec![0u32; sol.graph().item_count()];
    for e in sol.edges() {
        deg[sol.graph().edge(e).item] += 1;
    }
    deg
}
