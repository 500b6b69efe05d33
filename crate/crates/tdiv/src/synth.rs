//! Synthetic MovieLens-shaped data: ratings, user types, item categories
//! and relevance-scored candidates from a small latent preference model.
//!
//! Genres and age groups follow MovieLens-1m frequencies. Scores mix a
//! long-tailed popularity term, per-user genre taste and a few latent
//! factors, so pure-relevance lists lean toward popular items.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tdiv_core::{Edge, Grouping, Item, RecGraph, Side, User};

use crate::data::{parse_grouping, GroupingTable, Rating, RatingsDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    /// Number of genres used, at most 18.
    pub categories: usize,
    /// Number of age groups used, at most 7.
    pub types: usize,
    /// Items may carry several categories (genre-like) instead of exactly one.
    pub overlapping: bool,
    pub candidates_per_user: usize,
    /// Weight of the shared popularity term in predicted scores; larger
    /// values make pure-relevance lists more alike across users.
    pub popularity_weight: f64,
    pub min_ratings: usize,
    pub max_ratings: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            users: 2000,
            items: 1500,
            categories: 18,
            types: 7,
            overlapping: false,
            candidates_per_user: 250,
            popularity_weight: 1.35,
            min_ratings: 20,
            max_ratings: 200,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub category_ids: Vec<String>,
    pub type_ids: Vec<String>,
    /// Category indices per item.
    pub item_categories: Vec<Vec<usize>>,
    /// Type indices per user.
    pub user_types: Vec<Vec<usize>>,
    pub ratings: RatingsDataset,
    /// `(user, item, predicted relevance)` by index, the
    /// `candidates_per_user` best-scored items of each user. Rated items are
    /// kept because the train/test split happens downstream.
    pub candidates: Vec<(usize, usize, f64)>,
}

impl SynthData {
    /// Candidate graph over the full catalog with uniform capacity.
    pub fn graph(&self, capacity: u32) -> RecGraph {
        let users = self.user_ids.iter().map(|id| User { id: id.clone(), capacity }).collect();
        let items = self.item_ids.iter().map(|id| Item { id: id.clone() }).collect();
        let edges = self.candidates.iter().map(|&(user, item, relevance)| Edge { user, item, relevance }).collect();
        RecGraph::new(users, items, edges).expect("synthetic candidates are valid")
    }

    pub fn user_grouping(&self) -> Grouping {
        Grouping::from_membership(Side::User, self.type_ids.clone(), self.user_types.clone()).expect("valid types")
    }

    pub fn item_grouping(&self) -> Grouping {
        Grouping::from_membership(Side::Item, self.category_ids.clone(), self.item_categories.clone())
            .expect("valid categories")
    }

    pub fn types_text(&self) -> String {
        membership_text(&self.user_ids, &self.type_ids, &self.user_types)
    }

    pub fn categories_text(&self) -> String {
        membership_text(&self.item_ids, &self.category_ids, &self.item_categories)
    }

    pub fn candidates_text(&self) -> String {
        let mut out = String::from("user\titem\trelevance\n");
        for &(u, j, r) in &self.candidates {
            out.push_str(&format!("{}\t{}\t{r}\n", self.user_ids[u], self.item_ids[j]));
        }
        out
    }

    pub fn type_table(&self) -> GroupingTable {
        parse_grouping(&self.types_text(), "synthetic", Side::User).expect("valid types")
    }

    pub fn category_table(&self) -> GroupingTable {
        parse_grouping(&self.categories_text(), "synthetic", Side::Item).expect("valid categories")
    }
}

fn membership_text(ids: &[String], groups: &[String], membership: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for (id, gs) in ids.iter().zip(membership) {
        let names: Vec<&str> = gs.iter().map(|&g| groups[g].as_str()).collect();
        out.push_str(&format!("{id}\t{}\n", names.join("|")));
    }
    out
}

/// MovieLens-1m genres with their movie counts.
const GENRES: [(&str, u32); 18] = [
    ("Drama", 1603),
    ("Comedy", 1200),
    ("Action", 503),
    ("Thriller", 492),
    ("Romance", 471),
    ("Horror", 343),
    ("Adventure", 283),
    ("Sci-Fi", 276),
    ("Children's", 251),
    ("Crime", 211),
    ("War", 143),
    ("Documentary", 127),
    ("Musical", 114),
    ("Mystery", 106),
    ("Animation", 105),
    ("Fantasy", 68),
    ("Western", 68),
    ("Film-Noir", 44),
];

/// MovieLens-1m age groups with their user counts.
const AGES: [(&str, u32); 7] = [("1", 222), ("18", 1103), ("25", 2096), ("35", 1193), ("45", 550), ("50", 496), ("56", 380)];

const FACTORS: usize = 8;

fn weighted(rng: &mut impl Rng, weights: &[u32]) -> usize {
    let total: u32 = weights.iter().sum();
    let mut x = rng.gen_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

pub fn generate(cfg: &SynthConfig) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let na = cfg.categories.clamp(1, GENRES.len());
    let nb = cfg.types.clamp(1, AGES.len());
    let genre_w: Vec<u32> = GENRES[..na].iter().map(|g| g.1).collect();
    let age_w: Vec<u32> = AGES[..nb].iter().map(|g| g.1).collect();
    let (nu, ni) = (cfg.users, cfg.items);

    let item_categories: Vec<Vec<usize>> = (0..ni)
        .map(|_| {
            let mut cats = vec![weighted(&mut rng, &genre_w)];
            // About 1.65 genres per movie, as in MovieLens-1m.
            while cfg.overlapping && cats.len() < 4 && rng.gen_bool(0.4) {
                let extra = weighted(&mut rng, &genre_w);
                if !cats.contains(&extra) {
                    cats.push(extra);
                }
            }
            cats.sort_unstable();
            cats
        })
        .collect();
    let user_types: Vec<Vec<usize>> = (0..nu).map(|_| vec![weighted(&mut rng, &age_w)]).collect();

    // Long-tailed popularity in [0, 1]; ids carry no signal.
    let mut popularity: Vec<f64> = (0..ni).map(|j| 1.0 / (j as f64 / 50.0 + 1.0)).collect();
    popularity.shuffle(&mut rng);
    let quality: Vec<f64> = (0..ni).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let item_factors: Vec<[f64; FACTORS]> =
        (0..ni).map(|_| core::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    let age_bias: Vec<Vec<f64>> = (0..nb).map(|_| (0..na).map(|_| rng.gen_range(-0.2..0.2)).collect()).collect();

    let mut ratings = Vec::new();
    let mut candidates = Vec::new();
    let mut scores: Vec<f64> = vec![0.0; ni];
    for (u, types) in user_types.iter().enumerate() {
        let age = types[0];
        let taste: Vec<f64> = (0..na).map(|a| 1.2 * rng.gen::<f64>().powi(4) + age_bias[age][a]).collect();
        let factors: [f64; FACTORS] = core::array::from_fn(|_| rng.gen_range(-0.25..0.25));
        for j in 0..ni {
            let cats = &item_categories[j];
            let genre: f64 = cats.iter().map(|&a| taste[a]).sum::<f64>() / cats.len() as f64;
            let latent: f64 = factors.iter().zip(&item_factors[j]).map(|(p, q)| p * q).sum();
            scores[j] = 2.6 + cfg.popularity_weight * popularity[j] + genre + latent + quality[j] + rng.gen_range(-0.2..0.2);
        }
        // Rated items: sampled by popularity and taste.
        let n_rated = rng.gen_range(cfg.min_ratings..=cfg.max_ratings.max(cfg.min_ratings)).min(ni);
        let mut rated = vec![false; ni];
        let mut count = 0;
        let mut guard = 0;
        while count < n_rated && guard < 100 * ni {
            guard += 1;
            let j = rng.gen_range(0..ni);
            let w = 0.05 + 0.5 * popularity[j] + 0.3 * (scores[j] - 3.0).max(0.0);
            if !rated[j] && rng.gen_bool(w.clamp(0.01, 1.0)) {
                rated[j] = true;
                count += 1;
                let r = (scores[j] + rng.gen_range(-0.8..0.8)).round().clamp(1.0, 5.0);
                ratings.push(Rating { user: format!("u{u}"), item: format!("m{j}"), rating: r });
            }
        }
        let mut pool: Vec<(f64, usize)> = (0..ni).map(|j| (scores[j], j)).collect();
        pool.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        pool.truncate(cfg.candidates_per_user);
        for (s, j) in pool {
            candidates.push((u, j, s.clamp(0.0, 5.0)));
        }
    }

    SynthData {
        user_ids: (0..nu).map(|u| format!("u{u}")).collect(),
        item_ids: (0..ni).map(|j| format!("m{j}")).collect(),
        category_ids: GENRES[..na].iter().map(|g| g.0.to_string()).collect(),
        type_ids: AGES[..nb].iter().map(|g| g.0.to_string()).collect(),
        item_categories,
        user_types,
        ratings: RatingsDataset::new(ratings).expect("synthetic ratings are unique"),
        candidates,
    }
}
