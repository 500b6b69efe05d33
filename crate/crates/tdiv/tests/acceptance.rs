//! Acceptance suite. Runs every criterion in order and prints one
//! `[PASS]`/`[FAIL]` line each; exits non-zero if any criterion fails.
//!
//! Built without the libtest harness so criteria run sequentially (the
//! scaling check must not share the machine with other checks) and so the
//! summary lines are always shown.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use common::{random_instance, Instance, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdiv::data::{derive_thresholds, split_folds, SplitSpec};
use tdiv::synth::{generate, SynthConfig};
use tdiv_core::baselines::{mmr, top_k, xquad, RankedItem, RankedLists};
use tdiv_core::flow::{solve_tdiv_with_cost, DEFAULT_COST_SCALE};
use tdiv_core::greedy::{greedy_run, greedy_solve, GreedyOptions};
use tdiv_core::metrics::{self, IntentProfile};
use tdiv_core::oracle::{brute_force_optimum, naive_greedy};
use tdiv_core::{
    eval_objective, DivParams, Edge, Error, Grouping, Item, RecGraph, Side, Solution, ThresholdTable, User,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Brute-force optimum, or `None` when the instance exceeds the oracle's
/// enumeration guard.
fn optimum(inst: &Instance) -> Option<f64> {
    match brute_force_optimum(&inst.graph, &inst.user_types, &inst.item_cats, &inst.thresholds, inst.params) {
        Ok((_, best)) => Some(best),
        Err(Error::InstanceTooLarge { .. }) => None,
        Err(e) => panic!("oracle failed: {e}"),
    }
}

/// Disjoint instances from criterion 1, reused by 2 and 3.
struct Solved {
    inst: Instance,
    optimum: f64,
}

fn disjoint_instances(n: usize, seed: u64) -> (Vec<Solved>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut out, mut resampled) = (Vec::with_capacity(n), 0);
    while out.len() < n {
        let inst = random_instance(&mut rng, &Shape::default());
        match optimum(&inst) {
            Some(optimum) => out.push(Solved { inst, optimum }),
            None => resampled += 1,
        }
    }
    (out, resampled)
}

fn c1_flow_exactness(set: &[Solved], resampled: usize, elapsed: Duration) -> Outcome {
    let start = Instant::now();
    let (mut worst, mut bad) = (0.0f64, 0);
    for s in set {
        let i = &s.inst;
        let (sol, _) =
            solve_tdiv_with_cost(&i.graph, &i.user_types, &i.item_cats, &i.thresholds, i.params, DEFAULT_COST_SCALE)
                .unwrap();
        let obj = eval_objective(&sol, &i.thresholds, i.params).unwrap();
        let tol = 2.0 * i.graph.edge_count() as f64 / 1e6;
        let gap = (obj - s.optimum).abs();
        worst = worst.max(gap);
        if gap > tol {
            bad += 1;
        }
    }
    let total = elapsed + start.elapsed();
    outcome(
        set.len() >= 500 && bad == 0 && total <= Duration::from_secs(60),
        format!(
            "{} instances ({resampled} oversized resampled), {bad} outside 2|E|/1e6, max gap {worst:.3e}, {:.2}s",
            set.len(),
            total.as_secs_f64()
        ),
    )
}

fn c2_proof_identity(set: &[Solved]) -> Outcome {
    let (mut worst, mut bad) = (0.0f64, 0);
    for s in set {
        let i = &s.inst;
        let (sol, cost) =
            solve_tdiv_with_cost(&i.graph, &i.user_types, &i.item_cats, &i.thresholds, i.params, DEFAULT_COST_SCALE)
                .unwrap();
        let obj = eval_objective(&sol, &i.thresholds, i.params).unwrap();
        let gap = (-(cost as f64) / DEFAULT_COST_SCALE as f64 - obj).abs();
        worst = worst.max(gap);
        if gap > i.graph.edge_count() as f64 / 1e6 {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{} instances, {bad} outside |E|/1e6, max gap {worst:.3e}", set.len()))
}

fn c3_greedy_bound(disjoint: &[Solved]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let shape = Shape { overlapping: true, ..Shape::default() };
    let mut overlapping = Vec::new();
    while overlapping.len() < 500 {
        let inst = random_instance(&mut rng, &shape);
        if let Some(optimum) = optimum(&inst) {
            overlapping.push(Solved { inst, optimum });
        }
    }
    let (mut min_ratio, mut sum, mut counted, mut bad) = (f64::INFINITY, 0.0, 0usize, 0);
    for s in disjoint.iter().chain(&overlapping) {
        let i = &s.inst;
        let sol = greedy_solve(&i.graph, &i.user_types, &i.item_cats, &i.thresholds, i.params).unwrap();
        let obj = eval_objective(&sol, &i.thresholds, i.params).unwrap();
        if obj < 0.5 * s.optimum - 1e-9 {
            bad += 1;
        }
        if s.optimum > 0.0 {
            let r = obj / s.optimum;
            min_ratio = min_ratio.min(r);
            sum += r;
            counted += 1;
        }
    }
    outcome(
        bad == 0,
        format!(
            "{} disjoint + {} overlapping, {bad} below 1/2; min ratio {min_ratio:.4}, mean {:.4} (1-1/e = 0.6321, not asserted)",
            disjoint.len(),
            overlapping.len(),
            sum / counted.max(1) as f64
        ),
    )
}

fn c4_heap_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (mut bad, n) = (0, 600);
    for t in 0..n {
        let shape = Shape { overlapping: t % 2 == 1, max_users: 8, max_items: 10, ..Shape::default() };
        let i = random_instance(&mut rng, &shape);
        let run =
            greedy_run(&i.graph, &i.user_types, &i.item_cats, &i.thresholds, i.params, GreedyOptions::default())
                .unwrap();
        if run.order != naive_greedy(&i.graph, &i.user_types, &i.item_cats, &i.thresholds, i.params) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{n} instances (half overlapping), {bad} list mismatches"))
}

fn roomy(graph: &RecGraph) -> RecGraph {
    let users = graph.users().iter().map(|u| User { id: u.id.clone(), capacity: 1 << 10 }).collect();
    RecGraph::new(users, graph.items().to_vec(), graph.edges().to_vec()).unwrap()
}

fn c5_submodularity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let (mut checks, mut violations) = (0, 0);
    while checks < 10_000 {
        let shape = Shape { overlapping: rng.gen_bool(0.5), max_capacity: 7, ..Shape::default() };
        let i = random_instance(&mut rng, &shape);
        let m = i.graph.edge_count();
        if m == 0 {
            continue;
        }
        let g = roomy(&i.graph);
        let y: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
        let x: Vec<usize> = y.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let outside: Vec<usize> = (0..m).filter(|e| !y.contains(e)).collect();
        if outside.is_empty() {
            continue;
        }
        let e = outside[rng.gen_range(0..outside.len())];
        let f = |set: &[usize], extra: Option<usize>| {
            let sol = Solution::from_edges(&g, &i.user_types, &i.item_cats, set.iter().copied().chain(extra)).unwrap();
            i.params.beta * metrics::tudiv(&sol, &i.item_cats, &i.thresholds)
                + i.params.mu * metrics::tidiv(&sol, &i.user_types, &i.thresholds)
        };
        let (fx, fxe, fy, fye) = (f(&x, None), f(&x, Some(e)), f(&y, None), f(&y, Some(e)));
        checks += 1;
        if fxe < fx - 1e-12 || fye < fy - 1e-12 || fy < fx - 1e-12 || (fxe - fx) < (fye - fy) - 1e-12 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{checks} nested X ⊆ Y checks, {violations} violations"))
}

fn c6_proposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let (mut worst, mut bad, mut recover_bad) = (0.0f64, 0, 0);
    for _ in 0..1000 {
        let i = random_instance(&mut rng, &Shape { max_users: 8, max_items: 10, ..Shape::default() });
        let m = i.graph.edge_count();
        let mut chosen = Vec::new();
        let mut degree = vec![0u32; i.graph.user_count()];
        for e in 0..m {
            let u = i.graph.edge(e).user;
            if degree[u] < i.graph.capacity(u) && rng.gen_bool(0.6) {
                degree[u] += 1;
                chosen.push(e);
            }
        }
        let sol = Solution::from_edges(&i.graph, &i.user_types, &i.item_cats, chosen).unwrap();
        let lhs = metrics::div_edgewise(&sol, &i.user_types, &i.item_cats, i.params).unwrap();
        let rhs = i.params.beta * metrics::userdiv(&sol, &i.item_cats) + i.params.mu * metrics::itemdiv(&sol, &i.user_types);
        worst = worst.max((lhs - rhs).abs());
        if (lhs - rhs).abs() > 1e-9 {
            bad += 1;
        }
        let ones = ThresholdTable::uniform(1, 1);
        if metrics::tudiv(&sol, &i.item_cats, &ones) != metrics::userdiv(&sol, &i.item_cats)
            || metrics::tidiv(&sol, &i.user_types, &ones) != metrics::itemdiv(&sol, &i.user_types)
        {
            recover_bad += 1;
        }
    }
    outcome(
        bad == 0 && recover_bad == 0,
        format!("1000 instances, {bad} identity violations (max {worst:.2e}), {recover_bad} all-ones recovery mismatches"),
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn c7_metric_fixtures() -> Outcome {
    let mut failed: Vec<&str> = Vec::new();
    let mut count = 0;
    let mut check = |name, ok: bool| {
        count += 1;
        if !ok {
            failed.push(name);
        }
    };
    check("gini [1,1,1]", close(metrics::gini_from_degrees(&[1, 1, 1]), 1.0));
    check("gini [1,1,2]", close(metrics::gini_from_degrees(&[1, 1, 2]), 5.0 / 6.0));
    check("gini [0,0,3]", close(metrics::gini_from_degrees(&[0, 0, 3]), 1.0 / 3.0));

    // One user with c = 2 over items v1, v2, v3.
    let graph = RecGraph::new(
        vec![User { id: "u1".into(), capacity: 2 }],
        (1..=3).map(|v| Item { id: format!("v{v}") }).collect(),
        vec![
            Edge { user: 0, item: 0, relevance: 1.0 },
            Edge { user: 0, item: 1, relevance: 0.5 },
            Edge { user: 0, item: 2, relevance: 0.0 },
        ],
    )
    .unwrap();
    let list = |edges: &[usize]| {
        RankedLists::new(vec![edges
            .iter()
            .map(|&e| RankedItem { item: graph.edge(e).item, edge: e, score: graph.edge(e).relevance })
            .collect()])
    };
    let test = |items: &[usize]| BTreeMap::from([(0usize, items.iter().copied().collect::<BTreeSet<_>>())]);
    let p = |edges: &[usize], items: &[usize]| metrics::precision(&graph, &list(edges), &test(items), 10).unwrap();
    check("precision N={v1,v2} T={v1}", close(p(&[0, 1], &[0]), 0.5));
    check("precision T ⊇ N", close(p(&[0, 1], &[0, 1, 2]), 1.0));
    check("precision disjoint", close(p(&[0, 1], &[2]), 0.0));

    // ERR-IA: relevances normalized over [0, 1] are the raw values.
    let one_cat = Grouping::single_group(Side::Item, 3, "A");
    let intent = IntentProfile::new(vec![vec![(0, 1.0)]], 0.0, 1.0).unwrap();
    check("err-ia (1.0, 0.5)", close(metrics::err_ia(&graph, &list(&[0, 1]), &intent, &one_cat, 10), 1.0));
    check("err-ia all zero", close(metrics::err_ia(&graph, &list(&[2]), &intent, &one_cat, 10), 0.0));
    let only_v3 = Grouping::new(Side::Item, 3, vec![("A".into(), vec![2])]).unwrap();
    check("err-ia outside category", close(metrics::err_ia(&graph, &list(&[0, 1]), &intent, &only_v3, 10), 0.0));

    let detail = if failed.is_empty() { format!("{count} fixtures within 1e-9") } else { format!("failed: {failed:?}") };
    outcome(failed.is_empty(), detail)
}

/// Random graph with `edges` edges: 100 candidates per user over a catalog
/// twice the user count, 18 overlapping categories and 7 user types.
fn scaling_instance(edges: usize, seed: u64) -> (RecGraph, Grouping, Grouping, ThresholdTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_user = 100;
    let nu = edges / per_user;
    let ni = 2 * nu;
    let users = (0..nu).map(|u| User { id: format!("u{u}"), capacity: 10 }).collect();
    let items = (0..ni).map(|v| Item { id: format!("v{v}") }).collect();
    let mut list = Vec::with_capacity(edges);
    for u in 0..nu {
        for v in rand::seq::index::sample(&mut rng, ni, per_user) {
            list.push(Edge { user: u, item: v, relevance: rng.gen_range(0.0..5.0) });
        }
    }
    let graph = RecGraph::new(users, items, list).unwrap();
    let cats: Vec<Vec<usize>> = (0..ni)
        .map(|_| {
            let mut c: Vec<usize> = (0..18).filter(|_| rng.gen_bool(0.08)).collect();
            if c.is_empty() {
                c.push(rng.gen_range(0..18));
            }
            c
        })
        .collect();
    let types: Vec<Vec<usize>> = (0..nu).map(|_| vec![rng.gen_range(0..7)]).collect();
    let ic = Grouping::from_membership(Side::Item, (0..18).map(|a| format!("c{a}")).collect(), cats).unwrap();
    let ut = Grouping::from_membership(Side::User, (0..7).map(|b| format!("t{b}")).collect(), types).unwrap();
    let mut t = ThresholdTable::new();
    for u in 0..nu {
        for a in 0..18 {
            t.set_user_category(u, a, rng.gen_range(0..3));
        }
    }
    for v in 0..ni {
        for b in 0..7 {
            t.set_item_type(v, b, rng.gen_range(0..3));
        }
    }
    (graph, ut, ic, t)
}

fn c8_scaling() -> Outcome {
    let params = DivParams::new(4.0, 0.2).unwrap();
    let mut points = Vec::new();
    for (edges, reps) in [(10_000usize, 15), (100_000, 5), (1_000_000, 3)] {
        let (g, ut, ic, t) = scaling_instance(edges, edges as u64);
        let mut best = Duration::MAX;
        for _ in 0..reps {
            let start = Instant::now();
            let sol = greedy_solve(&g, &ut, &ic, &t, params).unwrap();
            best = best.min(start.elapsed());
            assert!(!sol.is_empty());
        }
        points.push((edges as f64, best.as_secs_f64()));
    }
    // Least-squares slope of log(time) against log(edges).
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(e, s)| (e.ln(), s.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let largest = points[2].1;
    let times: Vec<String> = points.iter().map(|(e, s)| format!("{e:.0e}: {s:.4}s")).collect();
    outcome(
        slope <= 1.25 && largest <= 60.0,
        format!("best-of-N times {}; log-log slope {slope:.3} (limit 1.25)", times.join(", ")),
    )
}

struct SideStats {
    tudiv: f64,
    tidiv: f64,
    aggregate: f64,
    gini: f64,
    mean_relevance: f64,
}

fn side_stats(sol: &Solution<'_>, ut: &Grouping, ic: &Grouping, t: &ThresholdTable) -> SideStats {
    let lists = RankedLists::from_solution(sol);
    let n = sol.graph().item_count();
    SideStats {
        tudiv: metrics::tudiv(sol, ic, t),
        tidiv: metrics::tidiv(sol, ut, t),
        aggregate: metrics::aggregate_diversity(&lists, n, 10),
        gini: metrics::gini(&lists, n, 10),
        mean_relevance: sol.relevance() / sol.len().max(1) as f64,
    }
}

fn fmt_stats(s: &SideStats) -> String {
    format!(
        "TUDiv {:.0} TIDiv {:.0} A {:.4} G {:.4} mean rel {:.5}",
        s.tudiv, s.tidiv, s.aggregate, s.gini, s.mean_relevance
    )
}

fn c9_directional() -> Outcome {
    let params = DivParams::new(4.0, 0.2).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for overlapping in [true, false] {
        let data = generate(&SynthConfig { overlapping, ..SynthConfig::default() });
        let graph = data.graph(10);
        let (ut, ic) = (data.user_grouping(), data.item_grouping());
        let folds = split_folds(&data.ratings, &SplitSpec::default()).unwrap();
        let t = derive_thresholds(&folds[0].train, &graph, &data.category_table(), &data.type_table()).unwrap();
        let top = top_k(&graph).to_solution(&graph, &ut, &ic).unwrap();
        let greedy = greedy_solve(&graph, &ut, &ic, &t, params).unwrap();
        let (top, greedy) = (side_stats(&top, &ut, &ic, &t), side_stats(&greedy, &ut, &ic, &t));
        let label = if overlapping { "overlapping genres" } else { "single genre" };
        let ups = [
            ("TUDiv", greedy.tudiv > top.tudiv),
            ("TIDiv", greedy.tidiv > top.tidiv),
            ("A", greedy.aggregate > top.aggregate),
            ("G", greedy.gini > top.gini),
        ];
        let down: Vec<&str> = ups.iter().filter(|(_, up)| !up).map(|(n, _)| *n).collect();
        lines.push(format!("      {label}: TOP {}", fmt_stats(&top)));
        lines.push(format!("      {label}: greedy {}", fmt_stats(&greedy)));
        if overlapping {
            // Greedy is the method for overlapping groupings; its directions
            // are asserted here.
            pass &= down.is_empty();
            lines.push(format!("      greedy vs TOP, not increasing: {down:?} (asserted)"));
        } else {
            lines.push(format!("      greedy vs TOP, not increasing: {down:?} (reported only)"));
            let flow = tdiv_core::flow::solve_tdiv(&graph, &ut, &ic, &t, params, DEFAULT_COST_SCALE).unwrap();
            let flow = side_stats(&flow, &ut, &ic, &t);
            lines.push(format!("      {label}: flow {}", fmt_stats(&flow)));
            let ok = flow.mean_relevance >= greedy.mean_relevance;
            pass &= ok;
            lines.push(format!(
                "      flow mean rel {:.5} >= greedy {:.5}: {ok} (asserted)",
                flow.mean_relevance, greedy.mean_relevance
            ));
        }
    }
    outcome(pass, format!("2000 users x 1500 items x 250 candidates, beta 4, mu 0.2\n{}", lines.join("\n")))
}

fn c10_lambda_one() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut bad, n) = (0, 200);
    let key = |l: &RankedLists| -> Vec<Vec<usize>> { l.lists().iter().map(|x| x.iter().map(|r| r.edge).collect()).collect() };
    for t in 0..n {
        let i = random_instance(&mut rng, &Shape { overlapping: t % 2 == 0, ..Shape::default() });
        let probabilities = (0..i.graph.user_count())
            .map(|_| {
                let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
                let s: f64 = w.iter().sum();
                let mut p: Vec<(usize, f64)> = w.iter().enumerate().map(|(a, x)| (a, x / s)).collect();
                let head: f64 = p[..2].iter().map(|x| x.1).sum();
                p[2].1 = 1.0 - head;
                p
            })
            .collect();
        let (lo, hi) = IntentProfile::relevance_range(&i.graph);
        let intent = IntentProfile::new(probabilities, lo, hi).unwrap();
        let top = key(&top_k(&i.graph));
        if key(&mmr(&i.graph, &i.item_cats, 1.0).unwrap()) != top
            || key(&xquad(&i.graph, &i.item_cats, &intent, 1.0).unwrap()) != top
        {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{n} instances, {bad} mmr/xquad lists differing from top_k"))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: &str, name: &str, o: Outcome| {
        println!("[{}] {id} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failures += 1;
        }
    };

    let start = Instant::now();
    let (disjoint, resampled) = disjoint_instances(500, 11);
    let oracle_time = start.elapsed();
    report("C1", "flow exactness vs brute force", c1_flow_exactness(&disjoint, resampled, oracle_time));
    report("C2", "flow cost decodes to objective", c2_proof_identity(&disjoint));
    report("C3", "greedy half-approximation", c3_greedy_bound(&disjoint));
    report("C4", "heap greedy equals naive greedy", c4_heap_equivalence());
    report("C5", "monotone submodular TDiv", c5_submodularity());
    report("C6", "edgewise div identity", c6_proposition());
    report("C7", "metric fixtures", c7_metric_fixtures());
    report("C8", "greedy scaling", c8_scaling());
    report("C9", "directional replication", c9_directional());
    report("C10", "lambda = 1 collapse", c10_lambda_one());

    println!("{} of 10 criteria failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
