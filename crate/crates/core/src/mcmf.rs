//! Exact minimum-cost flow over integer capacities and costs.
//!
//! Successive shortest augmenting paths with node potentials. Initial
//! potentials come from one label-correcting pass, which also rejects
//! negative-cost cycles; every later path search runs Dijkstra on reduced
//! costs and stops as soon as it settles a node with unmet demand. Each
//! augmentation pushes the full bottleneck of its path.

use alloc::collections::BinaryHeap;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::{Error, Result};

/// Capacity used for arcs that should never bind.
pub const UNBOUNDED: i64 = i64::MAX >> 3;

/// Largest absolute arc cost accepted; keeps path sums far from overflow.
pub const MAX_ABS_COST: i64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub capacity: i64,
    pub cost: i64,
}

/// Directed network with node supplies (positive) and demands (negative).
/// Parallel arcs are kept distinct.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    supply: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(node_count: usize) -> Self {
        Self { arcs: Vec::new(), supply: vec![0; node_count] }
    }

    pub fn add_node(&mut self) -> usize {
        self.supply.push(0);
        self.supply.len() - 1
    }

    /// Appends an arc and returns its index.
    pub fn add_arc(&mut self, tail: usize, head: usize, capacity: i64, cost: i64) -> usize {
        self.arcs.push(Arc { tail, head, capacity, cost });
        self.arcs.len() - 1
    }

    pub fn set_supply(&mut self, node: usize, supply: i64) {
        self.supply[node] = supply;
    }

    pub fn add_supply(&mut self, node: usize, delta: i64) {
        self.supply[node] += delta;
    }

    pub fn node_count(&self) -> usize {
        self.supply.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, a: usize) -> &Arc {
        &self.arcs[a]
    }

    pub fn supply(&self) -> &[i64] {
        &self.supply
    }

    /// Structural checks: endpoints in range, capacities non-negative,
    /// costs bounded, supplies balanced.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        for (i, a) in self.arcs.iter().enumerate() {
            if a.tail >= n || a.head >= n {
                return Err(Error::MalformedNetwork(format!("arc {i} has an endpoint outside 0..{n}")));
            }
            if a.capacity < 0 || a.capacity > UNBOUNDED {
                return Err(Error::MalformedNetwork(format!("arc {i} has capacity {}", a.capacity)));
            }
            if a.cost.unsigned_abs() > MAX_ABS_COST as u64 {
                return Err(Error::MalformedNetwork(format!("arc {i} has cost {} beyond the supported range", a.cost)));
            }
        }
        let mut total: i128 = 0;
        for &s in &self.supply {
            if s.unsigned_abs() > UNBOUNDED as u64 {
                return Err(Error::MalformedNetwork(format!("supply {s} is out of range")));
            }
            total += i128::from(s);
        }
        if total != 0 {
            return Err(Error::MalformedNetwork(format!("supplies sum to {total}, not 0")));
        }
        Ok(())
    }
}

/// Output of [`solve_min_cost_flow`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowResult {
    /// Flow on each arc, indexed like [`FlowNetwork::arcs`].
    pub flow: Vec<i64>,
    pub total_cost: i64,
    /// False when the supplies cannot all be routed; `flow` then holds the
    /// partial routing reached before the search got stuck.
    pub feasible: bool,
    /// Final node potentials `pi`. Every residual arc has reduced cost
    /// `cost + pi[tail] - pi[head] >= 0`.
    pub potentials: Vec<i64>,
}

/// Residual graph in compressed adjacency form. Residual edge `2a` is arc
/// `a` forward, `2a + 1` its reverse.
struct Residual {
    head: Vec<u32>,
    cost: Vec<i64>,
    cap: Vec<i64>,
    offsets: Vec<usize>,
    adj: Vec<u32>,
}

impl Residual {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.node_count();
        let m = net.arcs.len();
        let mut head = Vec::with_capacity(2 * m);
        let mut cost = Vec::with_capacity(2 * m);
        let mut cap = Vec::with_capacity(2 * m);
        let mut degree = vec![0usize; n + 1];
        for a in &net.arcs {
            head.push(a.head as u32);
            cost.push(a.cost);
            cap.push(a.capacity);
            head.push(a.tail as u32);
            cost.push(-a.cost);
            cap.push(0);
            degree[a.tail] += 1;
            degree[a.head] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![0u32; 2 * m];
        for (i, a) in net.arcs.iter().enumerate() {
            adj[fill[a.tail]] = (2 * i) as u32;
            fill[a.tail] += 1;
            adj[fill[a.head]] = (2 * i + 1) as u32;
            fill[a.head] += 1;
        }
        Self { head, cost, cap, offsets, adj }
    }

    fn out(&self, v: usize) -> &[u32] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    fn push(&mut self, r: usize, amount: i64) {
        self.cap[r] -= amount;
        self.cap[r ^ 1] += amount;
    }
}

/// Label-correcting shortest paths from a virtual root joined to every node
/// at cost 0. Fails on any reachable negative cycle.
fn initial_potentials(res: &Residual, n: usize) -> Result<Vec<i64>> {
    let mut dist = vec![0i64; n];
    let mut hops = vec![0usize; n];
    let mut queued = vec![true; n];
    let mut queue: VecDeque<usize> = (0..n).collect();
    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        for &r in res.out(v) {
            let r = r as usize;
            if res.cap[r] <= 0 {
                continue;
            }
            let w = res.head[r] as usize;
            let nd = dist[v] + res.cost[r];
            if nd < dist[w] {
                dist[w] = nd;
                hops[w] = hops[v] + 1;
                if hops[w] >= n {
                    return Err(Error::NegativeCycle);
                }
                if !queued[w] {
                    queued[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    Ok(dist)
}

struct Search {
    dist: Vec<i64>,
    parent: Vec<u32>,
    done: Vec<bool>,
    touched: Vec<usize>,
    heap: BinaryHeap<Reverse<(i64, u32)>>,
}

const NO_PARENT: u32 = u32::MAX;

impl Search {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![i64::MAX; n],
            parent: vec![NO_PARENT; n],
            done: vec![false; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.dist[v] = i64::MAX;
            self.parent[v] = NO_PARENT;
            self.done[v] = false;
        }
        self.touched.clear();
        self.heap.clear();
    }

    /// Dijkstra on reduced costs from `source` until a node with negative
    /// excess is settled. Updates potentials of settled nodes and returns the
    /// target.
    fn run(&mut self, res: &Residual, pi: &mut [i64], excess: &[i64], source: usize) -> Option<usize> {
        self.reset();
        self.dist[source] = 0;
        self.touched.push(source);
        self.heap.push(Reverse((0, source as u32)));
        let mut target = None;
        while let Some(Reverse((d, v))) = self.heap.pop() {
            let v = v as usize;
            if self.done[v] || d > self.dist[v] {
                continue;
            }
            self.done[v] = true;
            if excess[v] < 0 {
                target = Some(v);
                break;
            }
            for &r in res.out(v) {
                let r = r as usize;
                if res.cap[r] <= 0 {
                    continue;
                }
                let w = res.head[r] as usize;
                if self.done[w] {
                    continue;
                }
                let reduced = res.cost[r] + pi[v] - pi[w];
                debug_assert!(reduced >= 0, "negative reduced cost {reduced}");
                let nd = d + reduced;
                if nd < self.dist[w] {
                    if self.dist[w] == i64::MAX {
                        self.touched.push(w);
                    }
                    self.dist[w] = nd;
                    self.parent[w] = r as u32;
                    self.heap.push(Reverse((nd, w as u32)));
                }
            }
        }
        let t = target?;
        let dt = self.dist[t];
        // Settled nodes move by d - d(t); everyone else keeps its potential.
        // This is the usual pi + min(d, d(t)) update shifted by a constant.
        for &v in &self.touched {
            if self.done[v] {
                pi[v] += self.dist[v] - dt;
            }
        }
        Some(t)
    }
}

/// Minimum-cost flow satisfying every supply and demand.
///
/// Returns `feasible = false` when no flow routes all supply. Errors on
/// malformed networks and on negative-cost cycles with residual capacity.
pub fn solve_min_cost_flow(net: &FlowNetwork) -> Result<FlowResult> {
    net.validate()?;
    let n = net.node_count();
    let mut res = Residual::new(net);
    let mut pi = initial_potentials(&res, n)?;
    let mut excess = net.supply.clone();
    let mut search = Search::new(n);
    let mut feasible = true;

    'sources: for s in 0..n {
        while excess[s] > 0 {
            let Some(t) = search.run(&res, &mut pi, &excess, s) else {
                feasible = false;
                break 'sources;
            };
            let mut amount = excess[s].min(-excess[t]);
            let mut v = t;
            while v != s {
                let r = search.parent[v] as usize;
                amount = amount.min(res.cap[r]);
                v = res.head[r ^ 1] as usize;
            }
            let mut v = t;
            while v != s {
                let r = search.parent[v] as usize;
                res.push(r, amount);
                v = res.head[r ^ 1] as usize;
            }
            excess[s] -= amount;
            excess[t] += amount;
        }
    }

    let flow: Vec<i64> = (0..net.arcs.len()).map(|a| res.cap[2 * a + 1]).collect();
    let total_cost = net.arcs.iter().zip(&flow).map(|(a, &f)| a.cost * f).sum();
    Ok(FlowResult { flow, total_cost, feasible, potentials: pi })
}

/// True iff `result` respects every capacity and conserves flow at every
/// node given the network's supplies.
pub fn validate_flow(net: &FlowNetwork, result: &FlowResult) -> bool {
    if result.flow.len() != net.arcs.len() {
        return false;
    }
    let mut balance: Vec<i128> = net.supply.iter().map(|&s| i128::from(s)).collect();
    for (a, &f) in net.arcs.iter().zip(&result.flow) {
        if f < 0 || f > a.capacity {
            return false;
        }
        balance[a.head] += i128::from(f);
        balance[a.tail] -= i128::from(f);
    }
    balance.iter().all(|&b| b == 0)
}
