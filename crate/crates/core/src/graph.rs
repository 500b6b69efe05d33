//! The weighted bipartite candidate graph.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct User {
    pub id: String,
    /// Display constraint: the most recommendations this user may receive.
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Item {
    pub id: String,
}

/// A permissible recommendation. Its edge index is its position in
/// [`RecGraph::edges`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Edge {
    pub user: usize,
    pub item: usize,
    pub relevance: f64,
}

/// Bipartite candidate graph with per-user display constraints.
///
/// Immutable once built. Users, items and edges are addressed by dense
/// ordinals; string ids only matter for IO.
#[derive(Debug, Clone, PartialEq)]
pub struct RecGraph {
    users: Vec<User>,
    items: Vec<Item>,
    edges: Vec<Edge>,
    user_adj: Vec<Vec<usize>>,
    item_adj: Vec<Vec<usize>>,
}

impl RecGraph {
    /// Validates and indexes a candidate graph.
    ///
    /// Rejects zero display constraints, out-of-range endpoints, negative or
    /// non-finite relevance and repeated (user, item) pairs.
    pub fn new(users: Vec<User>, items: Vec<Item>, edges: Vec<Edge>) -> Result<Self> {
        for (u, user) in users.iter().enumerate() {
            if user.capacity == 0 {
                return Err(Error::ZeroCapacity { user: u });
            }
        }
        let mut user_adj = vec![Vec::new(); users.len()];
        let mut item_adj = vec![Vec::new(); items.len()];
        for (e, edge) in edges.iter().enumerate() {
            if edge.user >= users.len() {
                return Err(Error::IndexOutOfRange { edge: e, what: "user", index: edge.user });
            }
            if edge.item >= items.len() {
                return Err(Error::IndexOutOfRange { edge: e, what: "item", index: edge.item });
            }
            if !edge.relevance.is_finite() || edge.relevance < 0.0 {
                return Err(Error::InvalidRelevance { edge: e, relevance: edge.relevance });
            }
            user_adj[edge.user].push(e);
            item_adj[edge.item].push(e);
        }
        for adj in &user_adj {
            let mut seen: Vec<usize> = adj.iter().map(|&e| edges[e].item).collect();
            seen.sort_unstable();
            if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge { user: edges[adj[0]].user, item: w[0] });
            }
        }
        Ok(Self { users, items, edges, user_adj, item_adj })
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn capacity(&self, user: usize) -> u32 {
        self.users[user].capacity
    }

    /// Edge indices incident to `user`, in increasing order.
    pub fn user_edges(&self, user: usize) -> &[usize] {
        &self.user_adj[user]
    }

    /// Edge indices incident to `item`, in increasing order.
    pub fn item_edges(&self, item: usize) -> &[usize] {
        &self.item_adj[item]
    }

    /// Largest number of candidates of any single user.
    pub fn user_edges_max(&self) -> usize {
        self.user_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Sum of all display constraints.
    pub fn total_capacity(&self) -> u64 {
        self.users.iter().map(|u| u64::from(u.capacity)).sum()
    }
}
