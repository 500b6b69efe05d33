//! User types and item categories.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Which side of the bipartite graph a grouping partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Side {
    /// User types.
    User,
    /// Item categories.
    Item,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::User => "user",
            Side::Item => "item",
        }
    }
}

/// Membership of users in types, or of items in categories.
///
/// Groups may overlap. Entities without any group are allowed and simply
/// never earn diversity reward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    side: Side,
    group_ids: Vec<String>,
    members: Vec<Vec<usize>>,
    membership: Vec<Vec<usize>>,
    disjoint: bool,
}

impl Grouping {
    /// Builds a grouping over `entity_count` entities from per-group member
    /// lists.
    pub fn new(side: Side, entity_count: usize, groups: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let mut membership = vec![Vec::new(); entity_count];
        let mut group_ids = Vec::with_capacity(groups.len());
        let mut members = Vec::with_capacity(groups.len());
        for (g, (id, mut list)) in groups.into_iter().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidGrouping(format!(
                    "group {id:?} lists {} {} twice",
                    side.name(),
                    w[0]
                )));
            }
            for &m in &list {
                if m >= entity_count {
                    return Err(Error::InvalidGrouping(format!(
                        "group {id:?} references {} {m} but only {entity_count} exist",
                        side.name()
                    )));
                }
                membership[m].push(g);
            }
            group_ids.push(id);
            members.push(list);
        }
        let disjoint = membership.iter().all(|m| m.len() <= 1);
        Ok(Self { side, group_ids, members, membership, disjoint })
    }

    /// Builds a grouping from per-entity group lists.
    pub fn from_membership(side: Side, group_ids: Vec<String>, membership: Vec<Vec<usize>>) -> Result<Self> {
        let mut groups: Vec<(String, Vec<usize>)> = group_ids.into_iter().map(|id| (id, Vec::new())).collect();
        for (entity, gs) in membership.iter().enumerate() {
            for &g in gs {
                let slot = groups.get_mut(g).ok_or_else(|| {
                    Error::InvalidGrouping(format!("{} {entity} references unknown group {g}", side.name()))
                })?;
                slot.1.push(entity);
            }
        }
        Self::new(side, membership.len(), groups)
    }

    /// Every entity in its own group (`"0"`, `"1"`, ...).
    pub fn singletons(side: Side, entity_count: usize) -> Self {
        let groups = (0..entity_count).map(|i| (format!("{i}"), vec![i])).collect();
        Self::new(side, entity_count, groups).expect("singleton grouping is valid")
    }

    /// All entities in one group.
    pub fn single_group(side: Side, entity_count: usize, id: &str) -> Self {
        let groups = vec![(String::from(id), (0..entity_count).collect())];
        Self::new(side, entity_count, groups).expect("single grouping is valid")
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn entity_count(&self) -> usize {
        self.membership.len()
    }

    pub fn group_count(&self) -> usize {
        self.group_ids.len()
    }

    pub fn group_id(&self, group: usize) -> &str {
        &self.group_ids[group]
    }

    pub fn group_ids(&self) -> &[String] {
        &self.group_ids
    }

    /// Sorted member list of `group`.
    pub fn members(&self, group: usize) -> &[usize] {
        &self.members[group]
    }

    /// Groups of `entity`, in increasing group order.
    pub fn groups_of(&self, entity: usize) -> &[usize] {
        &self.membership[entity]
    }

    /// True iff no entity belongs to more than one group.
    pub fn is_disjoint(&self) -> bool {
        self.disjoint
    }

    /// The unique group of `entity` in a disjoint grouping.
    pub fn group_of(&self, entity: usize) -> Option<usize> {
        match self.membership[entity].as_slice() {
            [g] => Some(*g),
            _ => None,
        }
    }

    /// Mean number of groups per entity over `entities`; 0 when empty.
    pub fn mean_groups_per_entity(&self, entities: impl IntoIterator<Item = usize>) -> f64 {
        let (mut total, mut n) = (0usize, 0usize);
        for e in entities {
            total += self.membership[e].len();
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            total as f64 / n as f64
        }
    }
}
