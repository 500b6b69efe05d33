//! Diversity thresholds and trade-off parameters.

use alloc::collections::BTreeMap;
use alloc::format;

use crate::{Error, Grouping, RecGraph, Result};

/// Sparse per-pair thresholds: `rho[(user, category)]` and
/// `lambda[(item, type)]`.
///
/// Pairs without an entry fall back to the side's default, which is 0
/// unless built with [`ThresholdTable::uniform`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdTable {
    user_category: BTreeMap<(usize, usize), u32>,
    item_type: BTreeMap<(usize, usize), u32>,
    user_default: u32,
    item_default: u32,
}

impl ThresholdTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every (user, category) pair gets `rho`, every (item, type) pair gets
    /// `lambda`.
    pub fn uniform(rho: u32, lambda: u32) -> Self {
        Self { user_default: rho, item_default: lambda, ..Self::default() }
    }

    pub fn set_user_category(&mut self, user: usize, category: usize, rho: u32) {
        self.user_category.insert((user, category), rho);
    }

    pub fn set_item_type(&mut self, item: usize, user_type: usize, lambda: u32) {
        self.item_type.insert((item, user_type), lambda);
    }

    /// `rho_i(R_a)`.
    pub fn user_category(&self, user: usize, category: usize) -> u32 {
        self.user_category.get(&(user, category)).copied().unwrap_or(self.user_default)
    }

    /// `lambda_j(L_b)`.
    pub fn item_type(&self, item: usize, user_type: usize) -> u32 {
        self.item_type.get(&(item, user_type)).copied().unwrap_or(self.item_default)
    }

    pub fn user_default(&self) -> u32 {
        self.user_default
    }

    pub fn item_default(&self) -> u32 {
        self.item_default
    }

    /// Explicit (user, category) entries in key order.
    pub fn user_entries(&self) -> impl Iterator<Item = ((usize, usize), u32)> + '_ {
        self.user_category.iter().map(|(k, v)| (*k, *v))
    }

    /// Explicit (item, type) entries in key order.
    pub fn item_entries(&self) -> impl Iterator<Item = ((usize, usize), u32)> + '_ {
        self.item_type.iter().map(|(k, v)| (*k, *v))
    }

    /// Checks that every explicit key names an existing entity and group.
    pub fn validate(&self, graph: &RecGraph, user_types: &Grouping, item_cats: &Grouping) -> Result<()> {
        for &(u, a) in self.user_category.keys() {
            if u >= graph.user_count() || a >= item_cats.group_count() {
                return Err(Error::InvalidThreshold(format!("(user {u}, category {a}) is out of range")));
            }
        }
        for &(v, b) in self.item_type.keys() {
            if v >= graph.item_count() || b >= user_types.group_count() {
                return Err(Error::InvalidThreshold(format!("(item {v}, type {b}) is out of range")));
            }
        }
        Ok(())
    }
}

/// Weights of the user-side (`beta`) and item-side (`mu`) diversity terms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DivParams {
    pub beta: f64,
    pub mu: f64,
}

impl DivParams {
    pub fn new(beta: f64, mu: f64) -> Result<Self> {
        let p = Self { beta, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if ok(self.beta) && ok(self.mu) {
            Ok(())
        } else {
            Err(Error::InvalidParams { beta: self.beta, mu: self.mu })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut t = ThresholdTable::uniform(1, 2);
        t.set_user_category(0, 3, 0);
        assert_eq!(t.user_category(0, 3), 0);
        assert_eq!(t.user_category(5, 3), 1);
        assert_eq!(t.item_type(9, 9), 2);
        assert_eq!(ThresholdTable::new().item_type(0, 0), 0);
    }

    #[test]
    fn params_reject_negative_and_nan() {
        assert!(DivParams::new(1.0, 0.0).is_ok());
        assert!(DivParams::new(-1.0, 0.0).is_err());
        assert!(DivParams::new(0.0, f64::NAN).is_err());
        assert!(DivParams::new(f64::INFINITY, 0.0).is_err());
    }
}
