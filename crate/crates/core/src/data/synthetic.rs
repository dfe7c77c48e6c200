//! Low-rank implicit-feedback data with known structure.

use super::{Corpus, Interactions};
use crate::error::{Error, Result};
use crate::numeric::RngState;

/// `n_users × n_items` adoptions from nonnegative rank-`rank` factors: each
/// user adopts the `top_frac` share of items (at least one) with the highest
/// score `⟨x_u, y_i⟩` (ties by ascending item). Factor entries are zero with
/// probability 1/2 and Exp(1) otherwise; all-zero factor vectors are redrawn.
pub fn low_rank_corpus(n_users: usize, n_items: usize, rank: usize, top_frac: f64, rng: &mut RngState) -> Result<Corpus> {
    if n_users == 0 || n_items == 0 || rank == 0 {
        return Err(Error::invalid("synthetic data needs positive sizes"));
    }
    if !(top_frac > 0.0 && top_frac < 1.0) {
        return Err(Error::invalid(format!("top_frac must lie in (0, 1), got {top_frac}")));
    }
    let mut factor = || loop {
        let v: Vec<f64> = (0..rank).map(|_| if rng.chance(0.5) { -(1.0 - rng.next_f64()).ln() } else { 0.0 }).collect();
        if v.iter().any(|&x| x > 0.0) {
            break v;
        }
    };
    let users: Vec<Vec<f64>> = (0..n_users).map(|_| factor()).collect();
    let items: Vec<Vec<f64>> = (0..n_items).map(|_| factor()).collect();
    let per_user = ((top_frac * n_items as f64).round() as usize).clamp(1, n_items - 1);
    let lists = users
        .iter()
        .map(|x| {
            let mut scored: Vec<(f64, u32)> =
                items.iter().enumerate().map(|(i, y)| (x.iter().zip(y).map(|(a, b)| a * b).sum(), i as u32)).collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut l: Vec<u32> = scored[..per_user].iter().map(|s| s.1).collect();
            l.sort_unstable();
            l
        })
        .collect();
    let vocab = |n: usize, prefix: &str| {
        let mut v = super::Vocabulary::default();
        (0..n).for_each(|k| {
            v.intern(&format!("{prefix}{k}"));
        });
        v
    };
    Ok(Corpus { interactions: Interactions::from_lists(n_items, lists), users: vocab(n_users, "u"), items: vocab(n_items, "i") })
}
