mod common;

use common::{random_instance, Instance, Shape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdiv_core::flow::{solve_tdiv, solve_tdiv_with_cost, DEFAULT_COST_SCALE};
use tdiv_core::greedy::{greedy_run, GreedyOptions};
use tdiv_core::{eval_objective, metrics, oracle, DivParams, Solution, ThresholdTable};

fn random_solution<'a>(rng: &mut impl Rng, inst: &'a Instance) -> Solution<'a> {
    let mut sol = Solution::new(&inst.graph, &inst.user_types, &inst.item_cats).unwrap();
    for e in 0..inst.graph.edge_count() {
        if rng.gen_bool(0.5) && !sol.is_full(inst.graph.edge(e).user) {
            sol.add_edge(e).unwrap();
        }
    }
    sol
}

#[test]
fn degree_maps_match_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for overlapping in [false, true] {
        let shape = Shape { overlapping, max_capacity: 4, ..Shape::default() };
        for _ in 0..300 {
            let inst = random_instance(&mut rng, &shape);
            let sol = random_solution(&mut rng, &inst);
            let (users, items) = sol.recount();
            assert_eq!(&users, sol.user_group_degrees());
            assert_eq!(&items, sol.item_group_degrees());
            for u in 0..inst.graph.user_count() {
                assert!(sol.selected(u).len() <= inst.graph.capacity(u) as usize);
            }
        }
    }
}

#[test]
fn objective_agrees_with_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..1000 {
        let shape = Shape { overlapping: i % 2 == 1, ..Shape::default() };
        let inst = random_instance(&mut rng, &shape);
        let sol = random_solution(&mut rng, &inst);
        let p = inst.params;
        let via_metrics = p.beta * metrics::tudiv(&sol, &inst.item_cats, &inst.thresholds)
            + p.mu * metrics::tidiv(&sol, &inst.user_types, &inst.thresholds)
            + sol.relevance();
        let direct = eval_objective(&sol, &inst.thresholds, p).unwrap();
        assert!((direct - via_metrics).abs() <= 1e-12, "{direct} vs {via_metrics}");
        let edges: Vec<usize> = sol.edges().collect();
        let scratch =
            oracle::objective_from_scratch(&inst.graph, &inst.user_types, &inst.item_cats, &inst.thresholds, p, &edges);
        assert!((direct - scratch).abs() <= 1e-12);
    }
}

#[test]
fn flow_cost_decodes_to_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let inst = random_instance(&mut rng, &Shape::default());
        let (sol, cost) = solve_tdiv_with_cost(
            &inst.graph,
            &inst.user_types,
            &inst.item_cats,
            &inst.thresholds,
            inst.params,
            DEFAULT_COST_SCALE,
        )
        .unwrap();
        let obj = eval_objective(&sol, &inst.thresholds, inst.params).unwrap();
        let tol = inst.graph.edge_count().max(1) as f64 / DEFAULT_COST_SCALE as f64;
        assert!((obj + cost as f64 / DEFAULT_COST_SCALE as f64).abs() <= tol);
        for u in 0..inst.graph.user_count() {
            assert!(sol.user_degree(u) <= inst.graph.capacity(u) as usize);
        }
    }
}

#[test]
fn unit_thresholds_recover_plain_diversity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let inst = random_instance(&mut rng, &Shape::default());
        let ones = ThresholdTable::uniform(1, 1);
        let p = inst.params;
        let sol = solve_tdiv(&inst.graph, &inst.user_types, &inst.item_cats, &ones, p, DEFAULT_COST_SCALE).unwrap();
        let plain = p.beta * metrics::userdiv(&sol, &inst.item_cats)
            + p.mu * metrics::itemdiv(&sol, &inst.user_types)
            + sol.relevance();
        let (_, best) = oracle::brute_force_optimum(&inst.graph, &inst.user_types, &inst.item_cats, &ones, p).unwrap();
        let tol = 2.0 * inst.graph.edge_count().max(1) as f64 / DEFAULT_COST_SCALE as f64;
        assert!((plain - best).abs() <= tol, "{plain} vs {best}");
    }
}

#[test]
fn greedy_keys_and_work_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..400 {
        let shape = Shape { overlapping: i % 2 == 0, max_users: 8, max_items: 10, ..Shape::default() };
        let inst = random_instance(&mut rng, &shape);
        let run = greedy_run(
            &inst.graph,
            &inst.user_types,
            &inst.item_cats,
            &inst.thresholds,
            inst.params,
            GreedyOptions { check_keys: true },
        )
        .unwrap();
        assert_eq!(run.stats.key_mismatches, 0);
        assert_eq!(run.stats.key_checks, run.order.len());
        assert!(run.stats.decrease_keys <= run.stats.decrease_key_bound);
        let naive =
            oracle::naive_greedy(&inst.graph, &inst.user_types, &inst.item_cats, &inst.thresholds, inst.params);
        assert_eq!(run.order, naive);
        // Greedy stops only when every user is full or out of candidates.
        for u in 0..inst.graph.user_count() {
            let d = run.solution.user_degree(u);
            assert!(d == inst.graph.capacity(u) as usize || d == inst.graph.user_edges(u).len());
        }
    }
}

#[test]
fn thresholded_metrics_are_monotone_submodular() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let shape = Shape { overlapping: true, max_capacity: 7, ..Shape::default() };
    for _ in 0..500 {
        let inst = random_instance(&mut rng, &shape);
        let m = inst.graph.edge_count();
        if m == 0 {
            continue;
        }
        // Capacity is irrelevant for set-function checks; use roomy solutions.
        let y: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
        let x: Vec<usize> = y.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        let Some(e) = (0..m).find(|e| !y.contains(e)) else { continue };
        let val = |set: &[usize], extra: Option<usize>| {
            let all: Vec<usize> = set.iter().copied().chain(extra).collect();
            let roomy = roomy_graph(&inst);
            let sol = Solution::from_edges(&roomy, &inst.user_types, &inst.item_cats, all).unwrap();
            (
                metrics::tudiv(&sol, &inst.item_cats, &inst.thresholds),
                metrics::tidiv(&sol, &inst.user_types, &inst.thresholds),
            )
        };
        let (fx, fxe, fy, fye) = (val(&x, None), val(&x, Some(e)), val(&y, None), val(&y, Some(e)));
        assert!(fxe.0 >= fx.0 && fxe.1 >= fx.1);
        assert!(fxe.0 - fx.0 >= fye.0 - fy.0);
        assert!(fxe.1 - fx.1 >= fye.1 - fy.1);
    }
}

fn roomy_graph(inst: &Instance) -> tdiv_core::RecGraph {
    let users = inst
        .graph
        .users()
        .iter()
        .map(|u| tdiv_core::User { id: u.id.clone(), capacity: 64 })
        .collect();
    tdiv_core::RecGraph::new(users, inst.graph.items().to_vec(), inst.graph.edges().to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_weights_flow_matches_greedy_relevance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, &Shape::default());
        let p = DivParams::new(0.0, 0.0).unwrap();
        let flow = solve_tdiv(&inst.graph, &inst.user_types, &inst.item_cats, &inst.thresholds, p, DEFAULT_COST_SCALE).unwrap();
        let greedy = tdiv_core::greedy::greedy_solve(&inst.graph, &inst.user_types, &inst.item_cats, &inst.thresholds, p).unwrap();
        let tol = 2.0 * inst.graph.edge_count().max(1) as f64 / DEFAULT_COST_SCALE as f64;
        prop_assert!((flow.relevance() - greedy.relevance()).abs() <= tol);
    }
}
