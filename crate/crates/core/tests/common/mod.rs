#![allow(dead_code)]

use rand::Rng;
use tdiv_core::{DivParams, Edge, Grouping, Item, RecGraph, Side, ThresholdTable, User};

pub struct Instance {
    pub graph: RecGraph,
    pub user_types: Grouping,
    pub item_cats: Grouping,
    pub thresholds: ThresholdTable,
    pub params: DivParams,
}

pub struct Shape {
    pub max_users: usize,
    pub max_items: usize,
    pub max_capacity: u32,
    pub max_threshold: u32,
    pub n_types: usize,
    pub n_cats: usize,
    pub overlapping: bool,
    pub edge_prob: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            max_users: 5,
            max_items: 7,
            max_capacity: 3,
            max_threshold: 2,
            n_types: 2,
            n_cats: 3,
            overlapping: false,
            edge_prob: 0.45,
        }
    }
}

pub const WEIGHTS: [f64; 4] = [0.0, 0.5, 1.0, 4.0];

fn grouping(rng: &mut impl Rng, side: Side, entities: usize, groups: usize, overlapping: bool) -> Grouping {
    let membership = (0..entities)
        .map(|_| {
            if overlapping {
                let mut m: Vec<usize> = (0..groups).filter(|_| rng.gen_bool(0.4)).collect();
                if m.is_empty() {
                    m.push(rng.gen_range(0..groups));
                }
                m
            } else {
                vec![rng.gen_range(0..groups)]
            }
        })
        .collect();
    Grouping::from_membership(side, (0..groups).map(|g| format!("g{g}")).collect(), membership).unwrap()
}

pub fn random_instance(rng: &mut impl Rng, shape: &Shape) -> Instance {
    let nu = rng.gen_range(1..=shape.max_users);
    let ni = rng.gen_range(1..=shape.max_items);
    let users = (0..nu)
        .map(|u| User { id: format!("u{u}"), capacity: rng.gen_range(1..=shape.max_capacity) })
        .collect();
    let items = (0..ni).map(|v| Item { id: format!("v{v}") }).collect();
    let mut edges = Vec::new();
    for u in 0..nu {
        for v in 0..ni {
            if rng.gen_bool(shape.edge_prob) {
                // Coarse relevance grid produces ties on purpose.
                let relevance = if rng.gen_bool(0.3) { f64::from(rng.gen_range(0..4u8)) / 4.0 } else { rng.gen::<f64>() };
                edges.push(Edge { user: u, item: v, relevance });
            }
        }
    }
    // Shuffle edge order so edge indices are not sorted by user.
    for i in (1..edges.len()).rev() {
        let j = rng.gen_range(0..=i);
        edges.swap(i, j);
    }
    let graph = RecGraph::new(users, items, edges).unwrap();
    let user_types = grouping(rng, Side::User, nu, shape.n_types, shape.overlapping);
    let item_cats = grouping(rng, Side::Item, ni, shape.n_cats, shape.overlapping);
    let mut thresholds = ThresholdTable::new();
    for u in 0..nu {
        for a in 0..shape.n_cats {
            thresholds.set_user_category(u, a, rng.gen_range(0..=shape.max_threshold));
        }
    }
    for v in 0..ni {
        for b in 0..shape.n_types {
            thresholds.set_item_type(v, b, rng.gen_range(0..=shape.max_threshold));
        }
    }
    let params = DivParams::new(WEIGHTS[rng.gen_range(0..4)], WEIGHTS[rng.gen_range(0..4)]).unwrap();
    Instance { graph, user_types, item_cats, thresholds, params }
}
