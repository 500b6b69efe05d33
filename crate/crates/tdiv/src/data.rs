//! Ratings, groupings and candidate files; fold splitting; threshold
//! derivation from training data.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tdiv_core::{Edge, Grouping, Item, RecGraph, Side, ThresholdTable, User};

use crate::error::{DataError, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DataError::io(path, e))
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

/// Non-empty, non-comment lines with 1-based line numbers.
pub(crate) fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains("::") {
        line.split("::").collect()
    } else if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split(',').collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user: String,
    pub item: String,
    pub rating: f64,
}

/// `(user, item, rating)` triples with unique pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingsDataset {
    ratings: Vec<Rating>,
}

impl RatingsDataset {
    pub fn new(ratings: Vec<Rating>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(ratings.len());
        for (i, r) in ratings.iter().enumerate() {
            if !r.rating.is_finite() {
                return Err(DataError::parse("<memory>", i + 1, format!("non-finite rating {}", r.rating)));
            }
            if !seen.insert((r.user.as_str(), r.item.as_str())) {
                return Err(DataError::DuplicatePair {
                    origin: "<memory>".into(),
                    line: i + 1,
                    user: r.user.clone(),
                    item: r.item.clone(),
                });
            }
        }
        Ok(Self { ratings })
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Item ids rated by each user.
    pub fn items_by_user(&self) -> HashMap<&str, Vec<&str>> {
        let mut out: HashMap<&str, Vec<&str>> = HashMap::new();
        for r in &self.ratings {
            out.entry(&r.user).or_default().push(&r.item);
        }
        out
    }

    /// Distinct item ids in first-appearance order.
    pub fn item_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.ratings.iter().filter(|r| seen.insert(r.item.as_str())).map(|r| r.item.clone()).collect()
    }
}

/// Parses MovieLens `::` lines or CSV/TSV with an optional header row.
/// Columns past the third are ignored.
pub fn parse_ratings(text: &str, origin: &str) -> Result<RatingsDataset> {
    let mut ratings = Vec::new();
    let mut seen = HashSet::new();
    for (n, (line_no, line)) in lines(text).enumerate() {
        let fields = split_fields(line);
        if fields.len() < 3 {
            return Err(DataError::parse(origin, line_no, format!("expected user, item, rating; got {line:?}")));
        }
        let (user, item) = (fields[0].trim(), fields[1].trim());
        let rating = match fields[2].trim().parse::<f64>() {
            Ok(r) if r.is_finite() => r,
            Ok(r) => return Err(DataError::parse(origin, line_no, format!("non-finite rating {r}"))),
            Err(_) if n == 0 => continue,
            Err(_) => return Err(DataError::parse(origin, line_no, format!("bad rating {:?}", fields[2]))),
        };
        if user.is_empty() || item.is_empty() {
            return Err(DataError::parse(origin, line_no, "empty user or item id"));
        }
        if !seen.insert((user.to_string(), item.to_string())) {
            return Err(DataError::DuplicatePair {
                origin: origin.into(),
                line: line_no,
                user: user.into(),
                item: item.into(),
            });
        }
        ratings.push(Rating { user: user.into(), item: item.into(), rating });
    }
    Ok(RatingsDataset { ratings })
}

pub fn load_ratings(path: &Path) -> Result<RatingsDataset> {
    parse_ratings(&read_text(path)?, &origin(path))
}

/// Tab-separated with a `user\titem\trating` header.
pub fn format_ratings(data: &RatingsDataset) -> String {
    let mut out = String::from("user\titem\trating\n");
    for r in &data.ratings {
        out.push_str(&format!("{}\t{}\t{}\n", r.user, r.item, r.rating));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub folds: usize,
    /// Users need strictly more ratings than this to appear in a test set.
    pub min_ratings: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { folds: 5, min_ratings: 50, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(DataError::InvalidSplit(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.min_ratings < 1 {
            return Err(DataError::InvalidSplit("minimum ratings must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: RatingsDataset,
    pub test: RatingsDataset,
}

/// Per-user seeded partition into `folds` buckets. Users are visited in
/// sorted id order so the result depends only on the data and the seed.
pub fn split_folds(data: &RatingsDataset, spec: &SplitSpec) -> Result<Vec<Fold>> {
    spec.validate()?;
    let mut by_user: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in data.ratings.iter().enumerate() {
        by_user.entry(&r.user).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut bucket = vec![0usize; data.len()];
    let mut eligible = vec![false; data.len()];
    for rows in by_user.values_mut() {
        rows.shuffle(&mut rng);
        let ok = rows.len() > spec.min_ratings;
        for (k, &i) in rows.iter().enumerate() {
            bucket[i] = k % spec.folds;
            eligible[i] = ok;
        }
    }
    Ok((0..spec.folds)
        .map(|f| {
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (i, r) in data.ratings.iter().enumerate() {
                if bucket[i] == f && eligible[i] {
                    test.push(r.clone());
                } else {
                    train.push(r.clone());
                }
            }
            Fold { train: RatingsDataset { ratings: train }, test: RatingsDataset { ratings: test } }
        })
        .collect())
}

/// Lookup from string id to dense index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdIndex {
    map: HashMap<String, usize>,
}

impl IdIndex {
    pub fn new<'a>(ids: impl IntoIterator<Item = &'a str>) -> Self {
        let mut map = HashMap::new();
        for id in ids {
            let next = map.len();
            map.entry(id.to_string()).or_insert(next);
        }
        Self { map }
    }

    pub fn users(graph: &RecGraph) -> Self {
        Self::new(graph.users().iter().map(|u| u.id.as_str()))
    }

    pub fn items(graph: &RecGraph) -> Self {
        Self::new(graph.items().iter().map(|v| v.id.as_str()))
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.map.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// A grouping file keyed by string ids, before it is bound to a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupingTable {
    pub side: Side,
    pub group_ids: Vec<String>,
    entries: Vec<(String, Vec<usize>)>,
    lookup: HashMap<String, usize>,
}

impl GroupingTable {
    pub fn new(side: Side) -> Self {
        Self { side, group_ids: Vec::new(), entries: Vec::new(), lookup: HashMap::new() }
    }

    /// Entity ids with their group indices, in file order.
    pub fn entries(&self) -> &[(String, Vec<usize>)] {
        &self.entries
    }

    pub fn groups_of(&self, id: &str) -> Option<&[usize]> {
        self.lookup.get(id).map(|&i| self.entries[i].1.as_slice())
    }

    pub fn is_disjoint(&self) -> bool {
        self.entries.iter().all(|(_, g)| g.len() <= 1)
    }

    /// Restricts to the entities of `index`. Returns the grouping and the
    /// number of file entries naming entities outside it.
    pub fn bind(&self, index: &IdIndex) -> Result<(Grouping, usize)> {
        let mut membership = vec![Vec::new(); index.len()];
        let mut skipped = 0;
        for (id, groups) in &self.entries {
            match index.get(id) {
                Some(e) => membership[e] = groups.clone(),
                None => skipped += 1,
            }
        }
        Ok((Grouping::from_membership(self.side, self.group_ids.clone(), membership)?, skipped))
    }
}

/// Parses `entity_id<TAB>G1|G2|...` lines. Group indices follow first
/// appearance; an empty group list is allowed.
pub fn parse_grouping(text: &str, origin: &str, side: Side) -> Result<GroupingTable> {
    let mut table = GroupingTable::new(side);
    let mut group_index: HashMap<String, usize> = HashMap::new();
    for (line_no, line) in lines(text) {
        let (id, rest) = match line.split_once('\t') {
            Some((id, rest)) => (id.trim(), rest.trim()),
            None => (line.trim(), ""),
        };
        if table.lookup.contains_key(id) {
            return Err(DataError::parse(origin, line_no, format!("{} {id:?} listed twice", side.name())));
        }
        let mut groups = Vec::new();
        for g in rest.split('|').map(str::trim).filter(|g| !g.is_empty()) {
            let next = group_index.len();
            let gi = *group_index.entry(g.to_string()).or_insert_with(|| {
                table.group_ids.push(g.to_string());
                next
            });
            if !groups.contains(&gi) {
                groups.push(gi);
            }
        }
        groups.sort_unstable();
        table.lookup.insert(id.to_string(), table.entries.len());
        table.entries.push((id.to_string(), groups));
    }
    Ok(table)
}

pub fn load_grouping(path: &Path, side: Side) -> Result<GroupingTable> {
    parse_grouping(&read_text(path)?, &origin(path), side)
}

/// Writes one line per entity of `grouping`, named by `ids`.
pub fn format_grouping(grouping: &Grouping, ids: &[String]) -> String {
    let mut out = String::new();
    for (e, id) in ids.iter().enumerate() {
        let names: Vec<&str> = grouping.groups_of(e).iter().map(|&g| grouping.group_id(g)).collect();
        out.push_str(&format!("{id}\t{}\n", names.join("|")));
    }
    out
}

/// Display constraints `c_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DisplayPolicy {
    Uniform(u32),
    /// Users missing from the map are skipped.
    PerUser(HashMap<String, u32>),
}

impl DisplayPolicy {
    pub fn capacity(&self, user: &str) -> Option<u32> {
        match self {
            DisplayPolicy::Uniform(c) => Some(*c),
            DisplayPolicy::PerUser(map) => map.get(user).copied(),
        }
    }
}

/// Parses `user_id<TAB>capacity` lines.
pub fn parse_display(text: &str, origin: &str) -> Result<DisplayPolicy> {
    let mut map = HashMap::new();
    for (line_no, line) in lines(text) {
        let fields = split_fields(line);
        if fields.len() < 2 {
            return Err(DataError::parse(origin, line_no, "expected user and capacity"));
        }
        let c: u32 = fields[1]
            .trim()
            .parse()
            .map_err(|_| DataError::parse(origin, line_no, format!("bad capacity {:?}", fields[1])))?;
        if c == 0 {
            return Err(DataError::parse(origin, line_no, "capacity must be at least 1"));
        }
        if map.insert(fields[0].trim().to_string(), c).is_some() {
            return Err(DataError::parse(origin, line_no, format!("user {:?} listed twice", fields[0])));
        }
    }
    Ok(DisplayPolicy::PerUser(map))
}

pub fn load_display(path: &Path) -> Result<DisplayPolicy> {
    parse_display(&read_text(path)?, &origin(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateOptions {
    pub top_n: usize,
    pub display: DisplayPolicy,
    /// Full item catalog. Items listed here come first in the graph and
    /// candidate rows naming other items are skipped.
    pub catalog: Option<Vec<String>>,
}

impl Default for CandidateOptions {
    fn default() -> Self {
        Self { top_n: 250, display: DisplayPolicy::Uniform(10), catalog: None }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CandidateStats {
    pub rows: usize,
    pub skipped_users: usize,
    pub skipped_items: usize,
    pub truncated: usize,
}

/// Parses `user_id, item_id, relevance` rows into a graph. Users and
/// extra items appear in first-appearance order; each user's edges are
/// ranked by relevance (file order on ties) and cut to `top_n`.
pub fn parse_candidates(text: &str, origin: &str, opts: &CandidateOptions) -> Result<(RecGraph, CandidateStats)> {
    let mut stats = CandidateStats::default();
    let mut items: Vec<Item> = Vec::new();
    let mut item_index: HashMap<String, usize> = HashMap::new();
    if let Some(catalog) = &opts.catalog {
        for id in catalog {
            if !item_index.contains_key(id) {
                item_index.insert(id.clone(), items.len());
                items.push(Item { id: id.clone() });
            }
        }
    }
    let mut users: Vec<User> = Vec::new();
    let mut user_index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut seen = HashSet::new();
    for (n, (line_no, line)) in lines(text).enumerate() {
        let fields = split_fields(line);
        if fields.len() < 3 {
            return Err(DataError::parse(origin, line_no, format!("expected user, item, relevance; got {line:?}")));
        }
        let (user, item) = (fields[0].trim(), fields[1].trim());
        let relevance = match fields[2].trim().parse::<f64>() {
            Ok(r) if r.is_finite() => r,
            Ok(r) => return Err(DataError::parse(origin, line_no, format!("non-finite relevance {r}"))),
            Err(_) if n == 0 => continue,
            Err(_) => return Err(DataError::parse(origin, line_no, format!("bad relevance {:?}", fields[2]))),
        };
        if relevance < 0.0 {
            return Err(DataError::NegativeRelevance { origin: origin.into(), line: line_no, relevance });
        }
        if !seen.insert((user.to_string(), item.to_string())) {
            return Err(DataError::DuplicatePair {
                origin: origin.into(),
                line: line_no,
                user: user.into(),
                item: item.into(),
            });
        }
        stats.rows += 1;
        let u = match user_index.get(user) {
            Some(&u) => u,
            None => match opts.display.capacity(user) {
                Some(capacity) => {
                    user_index.insert(user.to_string(), users.len());
                    users.push(User { id: user.to_string(), capacity });
                    rows.push(Vec::new());
                    users.len() - 1
                }
                None => {
                    stats.skipped_users += 1;
                    continue;
                }
            },
        };
        let v = match item_index.get(item) {
            Some(&v) => v,
            None if opts.catalog.is_some() => {
                stats.skipped_items += 1;
                continue;
            }
            None => {
                item_index.insert(item.to_string(), items.len());
                items.push(Item { id: item.to_string() });
                items.len() - 1
            }
        };
        rows[u].push((v, relevance));
    }
    let mut edges = Vec::new();
    for (u, mut list) in rows.into_iter().enumerate() {
        list.sort_by(|a, b| b.1.total_cmp(&a.1));
        stats.truncated += list.len().saturating_sub(opts.top_n);
        list.truncate(opts.top_n);
        edges.extend(list.into_iter().map(|(item, relevance)| Edge { user: u, item, relevance }));
    }
    Ok((RecGraph::new(users, items, edges)?, stats))
}

pub fn load_candidates(path: &Path, opts: &CandidateOptions) -> Result<(RecGraph, CandidateStats)> {
    parse_candidates(&read_text(path)?, &origin(path), opts)
}

pub fn format_candidates(graph: &RecGraph) -> String {
    let mut out = String::from("user\titem\trelevance\n");
    for e in graph.edges() {
        out.push_str(&format!("{}\t{}\t{}\n", graph.users()[e.user].id, graph.items()[e.item].id, e.relevance));
    }
    out
}

pub fn format_display(graph: &RecGraph) -> String {
    graph.users().iter().map(|u| format!("{}\t{}\n", u.id, u.capacity)).collect()
}

/// Largest-remainder apportionment of `target` units in proportion to
/// `counts`. Ties on the remainder go to the larger count, then the lower
/// index. All-zero counts give all-zero shares.
pub fn apportion(counts: &[u64], target: u64) -> Vec<u32> {
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let t = target as u128;
    let mut shares: Vec<u32> = counts.iter().map(|&c| (c as u128 * t / total) as u32).collect();
    let assigned: u128 = shares.iter().map(|&s| s as u128).sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = counts[a] as u128 * t % total;
        let rb = counts[b] as u128 * t % total;
        rb.cmp(&ra).then(counts[b].cmp(&counts[a])).then(a.cmp(&b))
    });
    for &g in order.iter().take((t - assigned) as usize) {
        shares[g] += 1;
    }
    shares
}

/// Mean number of categories over the distinct training items that the
/// category table knows.
pub fn mean_categories_per_item(train: &RatingsDataset, item_cats: &GroupingTable) -> f64 {
    let (mut items, mut total) = (0usize, 0usize);
    for id in train.item_ids() {
        if let Some(g) = item_cats.groups_of(&id) {
            items += 1;
            total += g.len();
        }
    }
    if items == 0 {
        0.0
    } else {
        total as f64 / items as f64
    }
}

/// Sets `rho_i(R_a)` for every graph user from the category mix of their
/// training items. The target is `c_i`, or `c_i` times the mean category
/// count per item when `overlapping`.
pub fn derive_user_thresholds(
    train: &RatingsDataset,
    graph: &RecGraph,
    item_cats: &GroupingTable,
    overlapping: bool,
    table: &mut ThresholdTable,
) -> Result<()> {
    let factor = if overlapping { mean_categories_per_item(train, item_cats) } else { 1.0 };
    let by_user = train.items_by_user();
    let mut counts = vec![0u64; item_cats.group_ids.len()];
    for (u, user) in graph.users().iter().enumerate() {
        counts.iter_mut().for_each(|c| *c = 0);
        for item in by_user.get(user.id.as_str()).into_iter().flatten() {
            for &a in item_cats.groups_of(item).unwrap_or(&[]) {
                counts[a] += 1;
            }
        }
        let target = (user.capacity as f64 * factor).round() as u64;
        for (a, rho) in apportion(&counts, target).into_iter().enumerate() {
            if rho > 0 {
                table.set_user_category(u, a, rho);
            }
        }
    }
    Ok(())
}

/// Item budget `round(0.2 * sum(c_i) / catalog size)`.
pub fn item_budget(graph: &RecGraph) -> u64 {
    if graph.item_count() == 0 {
        return 0;
    }
    (0.2 * graph.total_capacity() as f64 / graph.item_count() as f64).round() as u64
}

/// Sets `lambda_j(L_b)` for every graph item by spreading the item budget
/// over the types of the training users who rated it.
pub fn derive_item_thresholds(
    train: &RatingsDataset,
    graph: &RecGraph,
    user_types: &GroupingTable,
    table: &mut ThresholdTable,
) -> Result<()> {
    let budget = item_budget(graph);
    let items = IdIndex::items(graph);
    let nb = user_types.group_ids.len();
    let mut counts: HashMap<usize, Vec<u64>> = HashMap::new();
    for r in &train.ratings {
        let (Some(v), Some(types)) = (items.get(&r.item), user_types.groups_of(&r.user)) else {
            continue;
        };
        let row = counts.entry(v).or_insert_with(|| vec![0; nb]);
        for &b in types {
            row[b] += 1;
        }
    }
    for (v, row) in counts {
        for (b, lambda) in apportion(&row, budget).into_iter().enumerate() {
            if lambda > 0 {
                table.set_item_type(v, b, lambda);
            }
        }
    }
    Ok(())
}

/// Both sides; user overlap is decided by the category table.
pub fn derive_thresholds(
    train: &RatingsDataset,
    graph: &RecGraph,
    item_cats: &GroupingTable,
    user_types: &GroupingTable,
) -> Result<ThresholdTable> {
    let mut table = ThresholdTable::new();
    derive_user_thresholds(train, graph, item_cats, !item_cats.is_disjoint(), &mut table)?;
    derive_item_thresholds(train, graph, user_types, &mut table)?;
    Ok(table)
}

/// Writes `side<TAB>entity<TAB>group<TAB>value` rows for every explicit
/// entry.
pub fn format_thresholds(table: &ThresholdTable, graph: &RecGraph, user_types: &Grouping, item_cats: &Grouping) -> String {
    let mut out = String::from("side\tentity\tgroup\tvalue\n");
    for ((u, a), rho) in table.user_entries() {
        out.push_str(&format!("user\t{}\t{}\t{rho}\n", graph.users()[u].id, item_cats.group_id(a)));
    }
    for ((v, b), lambda) in table.item_entries() {
        out.push_str(&format!("item\t{}\t{}\t{lambda}\n", graph.items()[v].id, user_types.group_id(b)));
    }
    out
}

/// Inverse of [`format_thresholds`]; rows naming entities or groups that
/// are not in the graph are skipped and counted.
pub fn parse_thresholds(
    text: &str,
    origin: &str,
    graph: &RecGraph,
    user_types: &Grouping,
    item_cats: &Grouping,
) -> Result<(ThresholdTable, usize)> {
    let users = IdIndex::users(graph);
    let items = IdIndex::items(graph);
    let cats = IdIndex::new(item_cats.group_ids().iter().map(String::as_str));
    let types = IdIndex::new(user_types.group_ids().iter().map(String::as_str));
    let mut table = ThresholdTable::new();
    let mut skipped = 0;
    for (n, (line_no, line)) in lines(text).enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(DataError::parse(origin, line_no, "expected side, entity, group, value"));
        }
        let value: u32 = match f[3].trim().parse() {
            Ok(v) => v,
            Err(_) if n == 0 => continue,
            Err(_) => return Err(DataError::parse(origin, line_no, format!("bad threshold {:?}", f[3]))),
        };
        match f[0] {
            "user" => match (users.get(f[1]), cats.get(f[2])) {
                (Some(u), Some(a)) => table.set_user_category(u, a, value),
                _ => skipped += 1,
            },
            "item" => match (items.get(f[1]), types.get(f[2])) {
                (Some(v), Some(b)) => table.set_item_type(v, b, value),
                _ => skipped += 1,
            },
            other => return Err(DataError::parse(origin, line_no, format!("unknown side {other:?}"))),
        }
    }
    Ok((table, skipped))
}
