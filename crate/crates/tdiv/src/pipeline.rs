//! Loading a full problem from files, running a method and evaluating it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tdiv_core::baselines::{mmr, top_k, xquad, RankedLists};
use tdiv_core::flow::{solve_tdiv, DEFAULT_COST_SCALE};
use tdiv_core::greedy::greedy_solve;
use tdiv_core::metrics::{evaluate, tidiv, tudiv, EvalContext, IntentProfile, MetricsReport, TestSets};
use tdiv_core::{DivParams, Grouping, RecGraph, Side, ThresholdTable};

use crate::data::{
    derive_thresholds, load_candidates, load_grouping, load_ratings, parse_thresholds, read_text, CandidateOptions,
    DisplayPolicy, GroupingTable, IdIndex, RatingsDataset,
};
use crate::error::{DataError, Result};

/// Held-out ratings at or above this count as relevant.
pub const RELEVANT_RATING: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Top,
    Mmr,
    Xquad,
    Greedy,
    Flow,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Top, Method::Mmr, Method::Xquad, Method::Greedy, Method::Flow];

    pub fn name(self) -> &'static str {
        match self {
            Method::Top => "top",
            Method::Mmr => "mmr",
            Method::Xquad => "xquad",
            Method::Greedy => "greedy",
            Method::Flow => "flow",
        }
    }

    /// Reranking baselines take a single trade-off `lambda`.
    pub fn uses_lambda(self) -> bool {
        matches!(self, Method::Mmr | Method::Xquad)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method {s:?}"))
    }
}

/// A method with its trade-off parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub method: Method,
    pub beta: f64,
    pub mu: f64,
    pub lambda: Option<f64>,
}

/// Missing pieces that make a setting unusable before any work is done.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SettingError {
    #[error("method {0} requires --lambda")]
    MissingLambda(Method),
    #[error("method {0} requires {1}")]
    MissingInput(Method, &'static str),
    #[error("method flow needs disjoint categories and types; use greedy for overlapping groupings")]
    Overlapping,
}

#[derive(Debug, Clone, Default)]
pub struct InputPaths {
    pub candidates: PathBuf,
    pub categories: Option<PathBuf>,
    pub types: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub thresholds: Option<PathBuf>,
}

/// Every input of one experiment, bound to the candidate graph.
#[derive(Debug, Clone)]
pub struct Problem {
    pub graph: RecGraph,
    pub category_table: Option<GroupingTable>,
    pub type_table: Option<GroupingTable>,
    pub item_cats: Grouping,
    pub user_types: Grouping,
    pub train: Option<RatingsDataset>,
    pub test: Option<RatingsDataset>,
    /// Explicit or derived thresholds; `None` without either source.
    pub thresholds: Option<ThresholdTable>,
    pub intent: Option<IntentProfile>,
    pub test_sets: Option<TestSets>,
    pub skipped: usize,
}

impl Problem {
    /// Loads candidates over the catalog formed by the category file and
    /// the training items, binds groupings and derives thresholds from
    /// training data unless a threshold file is given.
    pub fn load(paths: &InputPaths, display: DisplayPolicy, top_n: usize) -> Result<Self> {
        let category_table = paths.categories.as_deref().map(|p| load_grouping(p, Side::Item)).transpose()?;
        let type_table = paths.types.as_deref().map(|p| load_grouping(p, Side::User)).transpose()?;
        let train = paths.train.as_deref().map(load_ratings).transpose()?;
        let test = paths.test.as_deref().map(load_ratings).transpose()?;

        let mut catalog: Vec<String> = Vec::new();
        if let Some(t) = &category_table {
            catalog.extend(t.entries().iter().map(|(id, _)| id.clone()));
        }
        if let Some(train) = &train {
            catalog.extend(train.item_ids());
        }
        let has_catalog = category_table.is_some() || train.is_some();
        let opts = CandidateOptions { top_n, display, catalog: has_catalog.then_some(catalog) };
        let (graph, stats) = load_candidates(&paths.candidates, &opts)?;
        let skipped = stats.skipped_users + stats.skipped_items;
        if skipped > 0 {
            log::warn!("skipped {} candidate rows naming unknown users or items", skipped);
        }
        Self::assemble(graph, category_table, type_table, train, test, paths.thresholds.as_deref(), skipped)
    }

    /// Builds a problem from in-memory parts.
    pub fn assemble(
        graph: RecGraph,
        category_table: Option<GroupingTable>,
        type_table: Option<GroupingTable>,
        train: Option<RatingsDataset>,
        test: Option<RatingsDataset>,
        thresholds_path: Option<&Path>,
        mut skipped: usize,
    ) -> Result<Self> {
        let bind = |table: &Option<GroupingTable>, side: Side, index: IdIndex, n: usize| -> Result<(Grouping, usize)> {
            match table {
                Some(t) => t.bind(&index),
                None => Ok((Grouping::new(side, n, Vec::new())?, 0)),
            }
        };
        let (item_cats, s1) = bind(&category_table, Side::Item, IdIndex::items(&graph), graph.item_count())?;
        let (user_types, s2) = bind(&type_table, Side::User, IdIndex::users(&graph), graph.user_count())?;
        if s1 + s2 > 0 {
            log::info!("{} grouping entries name entities outside the candidate graph", s1 + s2);
        }
        let thresholds = match (thresholds_path, &train, &category_table, &type_table) {
            (Some(p), ..) => {
                let (t, s) = parse_thresholds(&read_text(p)?, &p.display().to_string(), &graph, &user_types, &item_cats)?;
                skipped += s;
                Some(t)
            }
            (None, Some(train), Some(ct), Some(tt)) => Some(derive_thresholds(train, &graph, ct, tt)?),
            _ => None,
        };
        let intent = match (&train, &category_table) {
            (Some(train), Some(ct)) => Some(intent_profile(train, &graph, ct)?),
            _ => None,
        };
        let test_sets = test.as_ref().map(|t| test_sets(t, &graph));
        Ok(Self {
            graph,
            category_table,
            type_table,
            item_cats,
            user_types,
            train,
            test,
            thresholds,
            intent,
            test_sets,
            skipped,
        })
    }

    pub fn check(&self, setting: &Setting) -> std::result::Result<(), SettingError> {
        let m = setting.method;
        if m.uses_lambda() && setting.lambda.is_none() {
            return Err(SettingError::MissingLambda(m));
        }
        if matches!(m, Method::Mmr | Method::Xquad | Method::Greedy | Method::Flow) && self.category_table.is_none() {
            return Err(SettingError::MissingInput(m, "--categories"));
        }
        if m == Method::Xquad && self.intent.is_none() {
            return Err(SettingError::MissingInput(m, "--train for the intent profile"));
        }
        if matches!(m, Method::Greedy | Method::Flow) {
            if self.type_table.is_none() {
                return Err(SettingError::MissingInput(m, "--types"));
            }
            if self.thresholds.is_none() {
                return Err(SettingError::MissingInput(m, "--thresholds or --train"));
            }
        }
        if m == Method::Flow && !(self.item_cats.is_disjoint() && self.user_types.is_disjoint()) {
            return Err(SettingError::Overlapping);
        }
        Ok(())
    }

    /// Runs `setting`; see [`Problem::check`] for the inputs each method needs.
    pub fn run(&self, setting: &Setting) -> Result<RankedLists> {
        let g = &self.graph;
        let params = DivParams::new(setting.beta, setting.mu)?;
        let lambda = setting.lambda.unwrap_or(1.0);
        Ok(match setting.method {
            Method::Top => top_k(g),
            Method::Mmr => mmr(g, &self.item_cats, lambda)?,
            Method::Xquad => {
                let intent = self.intent.as_ref().ok_or(tdiv_core::Error::InvalidArgument("no intent profile".into()))?;
                xquad(g, &self.item_cats, intent, lambda)?
            }
            Method::Greedy | Method::Flow => {
                let t = self.thresholds.as_ref().ok_or(tdiv_core::Error::InvalidArgument("no thresholds".into()))?;
                let sol = if setting.method == Method::Greedy {
                    greedy_solve(g, &self.user_types, &self.item_cats, t, params)?
                } else {
                    solve_tdiv(g, &self.user_types, &self.item_cats, t, params, DEFAULT_COST_SCALE)?
                };
                RankedLists::from_solution(&sol)
            }
        })
    }

    /// Objective parts of `lists` under this problem's thresholds.
    pub fn decompose(&self, lists: &RankedLists, beta: f64, mu: f64) -> Result<Decomposition> {
        let sol = lists.to_solution(&self.graph, &self.user_types, &self.item_cats)?;
        let (tu, ti) = match &self.thresholds {
            Some(t) => (tudiv(&sol, &self.item_cats, t), tidiv(&sol, &self.user_types, t)),
            None => (0.0, 0.0),
        };
        let relevance = sol.relevance();
        Ok(Decomposition { relevance, tudiv: tu, tidiv: ti, beta, mu, objective: relevance + beta * tu + mu * ti })
    }

    /// All metrics at cutoff `k`; metrics whose inputs are missing are absent.
    pub fn evaluate(&self, lists: &RankedLists, beta: f64, mu: f64, k: usize) -> Result<MetricsReport> {
        let ctx = EvalContext {
            graph: &self.graph,
            user_types: self.type_table.as_ref().map(|_| &self.user_types),
            item_cats: self.category_table.as_ref().map(|_| &self.item_cats),
            thresholds: self.thresholds.as_ref(),
            intent: self.intent.as_ref(),
            test: self.test_sets.as_ref().filter(|t| !t.is_empty()),
            params: DivParams::new(beta, mu)?,
            k,
        };
        Ok(evaluate(&ctx, lists)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub relevance: f64,
    pub tudiv: f64,
    pub tidiv: f64,
    pub beta: f64,
    pub mu: f64,
    pub objective: f64,
}

/// Category frequency of each graph user's training items, with the
/// candidate relevance range for normalization.
pub fn intent_profile(train: &RatingsDataset, graph: &RecGraph, item_cats: &GroupingTable) -> Result<IntentProfile> {
    let by_user = train.items_by_user();
    let counts = graph
        .users()
        .iter()
        .map(|u| {
            let mut c = BTreeMap::new();
            for item in by_user.get(u.id.as_str()).into_iter().flatten() {
                for &a in item_cats.groups_of(item).unwrap_or(&[]) {
                    *c.entry(a).or_insert(0u64) += 1;
                }
            }
            c
        })
        .collect();
    let (lo, hi) = IntentProfile::relevance_range(graph);
    Ok(IntentProfile::from_counts(counts, lo, hi)?)
}

/// Relevant held-out items (rating ≥ [`RELEVANT_RATING`]) of every test
/// user present in the graph. Test users without relevant items keep an
/// empty set.
pub fn test_sets(test: &RatingsDataset, graph: &RecGraph) -> TestSets {
    let users = IdIndex::users(graph);
    let items = IdIndex::items(graph);
    let mut sets: TestSets = BTreeMap::new();
    for r in test.ratings() {
        let Some(u) = users.get(&r.user) else { continue };
        let set: &mut BTreeSet<usize> = sets.entry(u).or_default();
        if r.rating >= RELEVANT_RATING {
            if let Some(v) = items.get(&r.item) {
                set.insert(v);
            }
        }
    }
    sets
}

/// Solver limits rather than bad input.
pub fn is_limit_error(err: &DataError) -> bool {
    matches!(
        err,
        DataError::Core(
            tdiv_core::Error::Infeasible
                | tdiv_core::Error::InstanceTooLarge { .. }
                | tdiv_core::Error::ScaleOverflow { .. }
        )
    )
}

/// One evaluated grid setting.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub setting: Setting,
    pub decomposition: Decomposition,
    pub report: MetricsReport,
    pub max_tudiv: bool,
    pub max_tidiv: bool,
}

/// Cartesian grid for the given method: `betas x mus` for greedy and
/// flow, `lambdas` for the rerankers, a single row for top.
pub fn grid(method: Method, betas: &[f64], mus: &[f64], lambdas: &[f64]) -> Vec<Setting> {
    match method {
        Method::Top => vec![Setting { method, beta: 0.0, mu: 0.0, lambda: None }],
        Method::Mmr | Method::Xquad => {
            lambdas.iter().map(|&l| Setting { method, beta: 0.0, mu: 0.0, lambda: Some(l) }).collect()
        }
        Method::Greedy | Method::Flow => betas
            .iter()
            .flat_map(|&beta| mus.iter().map(move |&mu| Setting { method, beta, mu, lambda: None }))
            .collect(),
    }
}

/// Evaluates every setting with at most `jobs` worker threads. Settings
/// share only the read-only problem; rows come back in grid order with the
/// first argmax of TUDiv and of TIDiv flagged.
pub fn grid_search(problem: &Problem, settings: &[Setting], k: usize, jobs: usize) -> Result<Vec<GridRow>> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<GridRow>>>> = Mutex::new((0..settings.len()).map(|_| None).collect());
    let eval = |s: &Setting| -> Result<GridRow> {
        let lists = problem.run(s)?;
        let report = problem.evaluate(&lists, s.beta, s.mu, k)?;
        let decomposition = problem.decompose(&lists, s.beta, s.mu)?;
        Ok(GridRow { setting: *s, decomposition, report, max_tudiv: false, max_tidiv: false })
    };
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, settings.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(s) = settings.get(i) else { break };
                let row = eval(s);
                slots.lock().expect("no panics while holding the lock")[i] = Some(row);
            });
        }
    });
    let mut rows = slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every setting evaluated"))
        .collect::<Result<Vec<_>>>()?;
    let argmax = |f: fn(&GridRow) -> f64, rows: &[GridRow]| {
        (0..rows.len()).fold(None, |best: Option<usize>, i| match best {
            Some(b) if f(&rows[b]) >= f(&rows[i]) => Some(b),
            _ => Some(i),
        })
    };
    if let Some(i) = argmax(|r| r.decomposition.tudiv, &rows) {
        rows[i].max_tudiv = true;
    }
    if let Some(i) = argmax(|r| r.decomposition.tidiv, &rows) {
        rows[i].max_tidiv = true;
    }
    Ok(rows)
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut out = format!("method,beta,mu,lambda,flag,{}\n", crate::io::report_csv_header());
    for r in rows {
        let flag = match (r.max_tudiv, r.max_tidiv) {
            (true, true) => "max_tudiv|max_tidiv",
            (true, false) => "max_tudiv",
            (false, true) => "max_tidiv",
            (false, false) => "",
        };
        let s = &r.setting;
        let lambda = s.lambda.map(|l| l.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{lambda},{flag},{}\n",
            s.method,
            s.beta,
            s.mu,
            crate::io::report_csv_row(&r.report)
        ));
    }
    out
}
