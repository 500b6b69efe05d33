//! Selection of degree-constrained recommendation subgraphs that trade off
//! relevance against two-sided diversity.
//!
//! A [`RecGraph`] holds the bipartite user/item candidate edges. Users are
//! grouped into *types* and items into *categories* by a pair of
//! [`Grouping`]s; a [`ThresholdTable`] caps how much diversity reward each
//! (user, category) and (item, type) pair can earn. Two solvers maximize
//! `beta * TUDiv(H) + mu * TIDiv(H) + rel(H)` subject to per-user display
//! constraints:
//!
//! * [`flow::solve_tdiv`] is exact for disjoint groupings and works by
//!   reduction to minimum-cost flow ([`mcmf`]).
//! * [`greedy::greedy_solve`] handles overlapping groupings with a
//!   heap-backed greedy over the submodular objective.
//!
//! [`metrics`] and [`baselines`] provide the evaluation suite and the
//! reference rerankers (TOP, MMR, xQuAD). [`oracle`] is an exhaustive
//! reference solver for tests.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod graph;
pub mod grouping;
pub mod heap;
pub mod thresholds;
pub mod solution;

pub mod baselines;
pub mod flow;
pub mod greedy;
pub mod mcmf;
pub mod metrics;
pub mod oracle;

pub use error::{Error, Result};
pub use graph::{Edge, Item, RecGraph, User};
pub use grouping::{Grouping, Side};
pub use solution::{eval_objective, Solution};
pub use thresholds::{DivParams, ThresholdTable};
