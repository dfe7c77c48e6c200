use std::collections::HashMap;

use sha2::{Digest, Sha256};

/// Sparse binary user-item matrix in CSR layout, with optional per-pair weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Interactions {
    n_items: usize,
    indptr: Vec<usize>,
    items: Vec<u32>,
    weights: Option<Vec<f64>>,
}

impl Interactions {
    /// Builds from unsorted per-user item lists; duplicates are dropped.
    pub fn from_lists(n_items: usize, lists: Vec<Vec<u32>>) -> Self {
        let weighted = lists.into_iter().map(|l| l.into_iter().map(|i| (i, 1.0)).collect()).collect();
        Interactions::from_weighted_lists(n_items, weighted).without_weights()
    }

    /// Builds from per-user `(item, weight)` lists. Items are sorted and
    /// duplicates keep their first weight.
    ///
    /// Panics if an item index is `>= n_items`.
    pub fn from_weighted_lists(n_items: usize, lists: Vec<Vec<(u32, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(lists.len() + 1);
        indptr.push(0);
        let total: usize = lists.iter().map(Vec::len).sum();
        let mut items = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for mut list in lists {
            list.sort_by_key(|&(i, _)| i);
            list.dedup_by_key(|&mut (i, _)| i);
            for (i, w) in list {
                assert!((i as usize) < n_items, "item {i} out of range ({n_items} items)");
                items.push(i);
                weights.push(w);
            }
            indptr.push(items.len());
        }
        Interactions { n_items, indptr, items, weights: Some(weights) }
    }

    /// Empty interactions with `n_users` users.
    pub fn empty(n_users: usize, n_items: usize) -> Self {
        Interactions { n_items, indptr: vec![0; n_users + 1], items: Vec::new(), weights: None }
    }

    pub fn without_weights(mut self) -> Self {
        self.weights = None;
        self
    }

    pub fn n_users(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_pairs(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Sorted items adopted by `u`.
    #[inline]
    pub fn items_of(&self, u: usize) -> &[u32] {
        &self.items[self.indptr[u]..self.indptr[u + 1]]
    }

    pub fn weights_of(&self, u: usize) -> Option<&[f64]> {
        self.weights.as_ref().map(|w| &w[self.indptr[u]..self.indptr[u + 1]])
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn contains(&self, u: usize, i: u32) -> bool {
        self.items_of(u).binary_search(&i).is_ok()
    }

    /// Number of users adopting each item.
    pub fn item_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_items];
        for &i in &self.items {
            counts[i as usize] += 1;
        }
        counts
    }

    /// `(user, item)` pairs in user-major, item-ascending order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        (0..self.n_users()).flat_map(move |u| self.items_of(u).iter().map(move |&i| (u, i)))
    }

    /// Users with at least one item.
    pub fn active_users(&self) -> Vec<usize> {
        (0..self.n_users()).filter(|&u| self.indptr[u + 1] > self.indptr[u]).collect()
    }
}

/// Sparse vector over the item catalogue, indices strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }
}

/// Bidirectional mapping between opaque string ids and dense indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub(crate) fn from_parts(ids: Vec<String>, index: HashMap<String, u32>) -> Self {
        Vocabulary { ids, index }
    }

    /// Index of `id`, assigning the next free one on first sight.
    pub fn intern(&mut self, id: &str) -> u32 {
        if let Some(&k) = self.index.get(id) {
            return k;
        }
        let k = self.ids.len() as u32;
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), k);
        k
    }

    pub fn get(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: u32) -> &str {
        &self.ids[index as usize]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// SHA-256 over the ids in index order, each terminated by `\n`; lowercase hex.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for id in &self.ids {
            h.update(id.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}
