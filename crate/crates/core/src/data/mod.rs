//! Ratings ingestion, binarization, activity filtering, random splits and
//! popularity statistics.

mod ingest;
mod interactions;
mod popularity;
mod store;
pub mod synthetic;

pub use ingest::{ingest_ratings, ingest_ratings_with, parse_ratings, IngestOptions, RatingRecord, RatingsFormat, RawRatings};
pub use interactions::{Interactions, SparseVector, Vocabulary};
pub use popularity::{popularity, tail_intervals, PopularityStats, TailIntervals, TailSegment};
pub use store::{read_data_dir, read_manifest, write_data_dir, write_manifest, DatasetStats, MANIFEST_FILE, ITEMS_FILE, USERS_FILE, STATS_FILE};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numeric::RngState;

/// Interactions together with the id vocabularies that index them.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub interactions: Interactions,
    pub users: Vocabulary,
    pub items: Vocabulary,
}

/// Train/validation/test parts over shared vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Interactions,
    pub valid: Interactions,
    pub test: Interactions,
    pub users: Vocabulary,
    pub items: Vocabulary,
}

impl SplitDataset {
    pub fn n_users(&self) -> usize {
        self.train.n_users()
    }

    pub fn n_items(&self) -> usize {
        self.train.n_items()
    }

    /// Assembles a split from prebuilt parts, checking shapes and disjointness.
    pub fn new(
        train: Interactions,
        valid: Interactions,
        test: Interactions,
        users: Vocabulary,
        items: Vocabulary,
    ) -> Result<Self> {
        for part in [&valid, &test] {
            if part.n_users() != train.n_users() || part.n_items() != train.n_items() {
                return Err(Error::invalid("split parts disagree on catalogue size"));
            }
        }
        if users.len() != train.n_users() || items.len() != train.n_items() {
            return Err(Error::invalid("vocabulary sizes disagree with interactions"));
        }
        for u in 0..train.n_users() {
            let (a, b, c) = (train.items_of(u), valid.items_of(u), test.items_of(u));
            if sorted_overlap(a, b) || sorted_overlap(a, c) || sorted_overlap(b, c) {
                return Err(Error::invalid(format!("split parts overlap for user {u}")));
            }
        }
        Ok(SplitDataset { train, valid, test, users, items })
    }

    /// Train and validation items of `u`, merged and sorted.
    pub fn seen_items(&self, u: usize) -> Vec<u32> {
        merge_sorted(self.train.items_of(u), self.valid.items_of(u))
    }
}

pub(crate) fn sorted_overlap(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

pub(crate) fn merge_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort_unstable();
    out.dedup();
    out
}

/// Keeps pairs whose rating is `>= threshold`. Ids get dense indices in the
/// order they first appear among the kept records. Duplicate pairs keep the
/// first rating seen.
pub fn binarize(raw: &RawRatings, threshold: f64) -> Corpus {
    let mut users = Vocabulary::default();
    let mut items = Vocabulary::default();
    let mut lists: Vec<Vec<(u32, f64)>> = Vec::new();
    for rec in raw.records.iter().filter(|r| r.rating >= threshold) {
        let u = users.intern(&rec.user) as usize;
        let i = items.intern(&rec.item);
        if u == lists.len() {
            lists.push(Vec::new());
        }
        lists[u].push((i, rec.rating));
    }
    let interactions = Interactions::from_weighted_lists(items.len(), lists);
    Corpus { interactions, users, items }
}

/// One pass of item filtering (fewer than `min_users_per_item` adopters) followed
/// by one pass of user filtering (fewer than `min_items_per_user` items), both
/// counted on the state at the start of the respective pass. Indices and
/// vocabularies are re-densified, preserving relative order.
pub fn filter_activity(corpus: &Corpus, min_items_per_user: usize, min_users_per_item: usize) -> Result<Corpus> {
    let inter = &corpus.interactions;
    let counts = inter.item_counts();
    let mut item_map: Vec<Option<u32>> = vec![None; inter.n_items()];
    let mut items = Vocabulary::default();
    for (i, &c) in counts.iter().enumerate() {
        if c as usize >= min_users_per_item {
            item_map[i] = Some(items.intern(corpus.items.id(i as u32)));
        }
    }

    let mut users = Vocabulary::default();
    let mut lists = Vec::new();
    for u in 0..inter.n_users() {
        let weights = inter.weights_of(u);
        let kept: Vec<(u32, f64)> = inter
            .items_of(u)
            .iter()
            .enumerate()
            .filter_map(|(k, &i)| item_map[i as usize].map(|ni| (ni, weights.map_or(1.0, |w| w[k]))))
            .collect();
        if kept.len() >= min_items_per_user && !kept.is_empty() {
            users.intern(corpus.users.id(u as u32));
            lists.push(kept);
        }
    }
    if lists.is_empty() || items.is_empty() {
        return Err(Error::input("activity filtering removed every interaction"));
    }
    let mut interactions = Interactions::from_weighted_lists(items.len(), lists);
    if inter.weights().is_none() {
        interactions = interactions.without_weights();
    }
    Ok(Corpus { interactions, users, items })
}

/// Assigns each `(u, i)` pair independently: one uniform draw per pair in
/// user-major, item-ascending order; `< valid_frac` goes to validation,
/// `< valid_frac + test_frac` to test, everything else to train.
pub fn split(corpus: &Corpus, valid_frac: f64, test_frac: f64, rng: &mut RngState) -> Result<SplitDataset> {
    let ok = |f: f64| f.is_finite() && f >= 0.0;
    if !ok(valid_frac) || !ok(test_frac) || valid_frac + test_frac >= 1.0 {
        return Err(Error::invalid(format!(
            "split fractions must be non-negative with sum < 1, got {valid_frac} and {test_frac}"
        )));
    }
    let inter = &corpus.interactions;
    let n = inter.n_users();
    let mut parts: [Vec<Vec<(u32, f64)>>; 3] = [vec![Vec::new(); n], vec![Vec::new(); n], vec![Vec::new(); n]];
    for u in 0..n {
        let weights = inter.weights_of(u);
        for (k, &i) in inter.items_of(u).iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[k]);
            let x = rng.next_f64();
            let part = if x < valid_frac {
                1
            } else if x < valid_frac + test_frac {
                2
            } else {
                0
            };
            parts[part][u].push((i, w));
        }
    }
    let weighted = inter.weights().is_some();
    let [train, valid, test] = parts.map(|lists| {
        let m = Interactions::from_weighted_lists(inter.n_items(), lists);
        if weighted {
            m
        } else {
            m.without_weights()
        }
    });
    Ok(SplitDataset {
        train,
        valid,
        test,
        users: corpus.users.clone(),
        items: corpus.items.clone(),
    })
}

/// Indicator vector of the user's items, or their `r_ui` weights when `weighted`.
pub fn user_vector(inter: &Interactions, u: usize, weighted: bool) -> Result<SparseVector> {
    if u >= inter.n_users() {
        return Err(Error::invalid(format!("user {u} out of range ({} users)", inter.n_users())));
    }
    let indices = inter.items_of(u).to_vec();
    let values = match (weighted, inter.weights_of(u)) {
        (true, Some(w)) => w.to_vec(),
        _ => vec![1.0; indices.len()],
    };
    Ok(SparseVector { indices, values })
}

/// Median of `|I_u|` over users with at least one item (lower median for even counts).
pub fn median_items_per_user(inter: &Interactions) -> usize {
    let mut sizes: Vec<usize> = (0..inter.n_users()).map(|u| inter.items_of(u).len()).filter(|&s| s > 0).collect();
    if sizes.is_empty() {
        return 0;
    }
    sizes.sort_unstable();
    sizes[(sizes.len() - 1) / 2]
}

pub(crate) fn vocab_from_ids(ids: Vec<String>) -> Result<Vocabulary> {
    let mut index = HashMap::with_capacity(ids.len());
    for (k, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), k as u32).is_some() {
            return Err(Error::format(format!("duplicate id `{id}` in vocabulary")));
        }
    }
    Ok(Vocabulary::from_parts(ids, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(rows: &[(&str, &str, f64)]) -> RawRatings {
        RawRatings {
            records: rows
                .iter()
                .map(|(u, i, r)| RatingRecord { user: u.to_string(), item: i.to_string(), rating: *r, timestamp: None })
                .collect(),
            malformed: 0,
        }
    }

    #[test]
    fn binarize_threshold_is_inclusive() {
        let c = binarize(&raw(&[("u1", "a", 4.0), ("u1", "b", 3.0), ("u2", "b", 5.0)]), 4.0);
        assert_eq!(c.users.len(), 2);
        assert_eq!(c.items.len(), 2);
        assert_eq!(c.interactions.items_of(0), &[0]);
        assert_eq!(c.items.id(1), "b");
        assert_eq!(c.interactions.n_pairs(), 2);
    }

    #[test]
    fn binarize_threshold_zero_keeps_everything() {
        let c = binarize(&raw(&[("u", "a", 1.0), ("u", "b", 0.0), ("v", "a", 12.0)]), 0.0);
        assert_eq!(c.interactions.n_pairs(), 3);
        assert_eq!(c.interactions.weights_of(1), Some(&[12.0][..]));
    }

    #[test]
    fn binarize_first_appearance_order_and_dedup() {
        let c = binarize(&raw(&[("z", "q", 5.0), ("a", "p", 5.0), ("z", "q", 4.0)]), 4.0);
        assert_eq!(c.users.id(0), "z");
        assert_eq!(c.items.id(1), "p");
        assert_eq!(c.interactions.n_pairs(), 2);
    }

    #[test]
    fn filter_removes_light_users() {
        let mut rows = vec![];
        for i in 0..4 {
            rows.push(("light", format!("i{i}"), 5.0));
        }
        for i in 0..5 {
            rows.push(("heavy", format!("i{i}"), 5.0));
        }
        let rows: Vec<(&str, &str, f64)> = rows.iter().map(|(u, i, r)| (*u, i.as_str(), *r)).collect();
        let c = binarize(&raw(&rows), 4.0);
        let f = filter_activity(&c, 5, 0).unwrap();
        assert_eq!(f.users.len(), 1);
        assert_eq!(f.users.id(0), "heavy");
        assert_eq!(f.items.len(), 5);
    }

    #[test]
    fn filter_zero_is_identity() {
        let c = binarize(&raw(&[("u", "a", 5.0), ("v", "b", 5.0)]), 4.0);
        assert_eq!(filter_activity(&c, 0, 0).unwrap(), c);
    }

    #[test]
    fn filter_drops_unpopular_items_before_users() {
        // item "rare" has 49 adopters, "hit" has 50
        let mut rows = vec![];
        for u in 0..50 {
            rows.push((format!("u{u}"), "hit".to_string()));
            if u < 49 {
                rows.push((format!("u{u}"), "rare".to_string()));
            }
        }
        let rows: Vec<(&str, &str, f64)> = rows.iter().map(|(u, i)| (u.as_str(), i.as_str(), 1.0)).collect();
        let c = binarize(&raw(&rows), 0.0);
        let f = filter_activity(&c, 0, 50).unwrap();
        assert_eq!(f.items.len(), 1);
        assert_eq!(f.items.id(0), "hit");
        assert_eq!(f.interactions.n_pairs(), 50);
        // users that only had the removed item get dropped once min_items >= 1
        let g = filter_activity(&c, 2, 50);
        assert!(g.is_err());
    }

    #[test]
    fn split_validates_fractions() {
        let c = binarize(&raw(&[("u", "a", 5.0)]), 4.0);
        let mut rng = RngState::new(1);
        assert!(split(&c, 0.5, 0.5, &mut rng).is_err());
        assert!(split(&c, -0.1, 0.1, &mut rng).is_err());
        assert!(split(&c, f64::NAN, 0.1, &mut rng).is_err());
    }

    #[test]
    fn split_zero_fractions_everything_trains() {
        let c = binarize(&raw(&[("u", "a", 5.0), ("u", "b", 5.0), ("v", "a", 5.0)]), 4.0);
        let s = split(&c, 0.0, 0.0, &mut RngState::new(3)).unwrap();
        assert_eq!(s.train.n_pairs(), 3);
        assert_eq!(s.valid.n_pairs() + s.test.n_pairs(), 0);
    }

    #[test]
    fn split_thousand_pairs_near_eighty_percent() {
        let mut rows = vec![];
        for u in 0..50 {
            for i in 0..20 {
                rows.push((format!("u{u}"), format!("i{i}")));
            }
        }
        let rows: Vec<(&str, &str, f64)> = rows.iter().map(|(u, i)| (u.as_str(), i.as_str(), 5.0)).collect();
        let c = binarize(&raw(&rows), 4.0);
        let a = split(&c, 0.1, 0.1, &mut RngState::new(8)).unwrap();
        let b = split(&c, 0.1, 0.1, &mut RngState::new(8)).unwrap();
        assert_eq!(a, b);
        let n = a.train.n_pairs() as f64;
        // binomial(1000, 0.8): sd ~ 12.6
        assert!((n - 800.0).abs() < 50.0, "{n}");
        assert_eq!(a.train.n_pairs() + a.valid.n_pairs() + a.test.n_pairs(), 1000);
    }

    #[test]
    fn user_vector_variants() {
        let inter = Interactions::from_weighted_lists(6, vec![vec![(2, 3.0), (5, 1.0)], vec![]]);
        let v = user_vector(&inter, 0, false).unwrap();
        assert_eq!(v.indices, vec![2, 5]);
        assert_eq!(v.values, vec![1.0, 1.0]);
        let w = user_vector(&inter, 0, true).unwrap();
        assert_eq!(w.values, vec![3.0, 1.0]);
        assert!(user_vector(&inter, 1, false).unwrap().indices.is_empty());
        assert!(matches!(user_vector(&inter, 2, false), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn median_counts_only_active_users() {
        let inter = Interactions::from_lists(10, vec![vec![1], vec![1, 2, 3], vec![], vec![4, 5]]);
        assert_eq!(median_items_per_user(&inter), 2);
    }
}
