//! Ranking metrics and distributional analyses of trained recommenders.
//!
//! Rankings exclude every item the user has in train or validation. Averages
//! run over users with a non-empty held-out set; others are skipped.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::data::{popularity, user_vector, Interactions, PopularityStats, SplitDataset, TailIntervals, TailSegment};
use crate::error::{Error, Result};
use crate::model::{top_k, Corruption, ModelInput, ModelKind, ModelParams};
use crate::numeric::{ActivationKind, RngState};

pub const DEFAULT_KS: [usize; 4] = [1, 20, 50, 100];

/// Descending bucket edges of the averaged preference distribution.
pub const PREF_EDGES: [f64; 7] = [1.0, 0.9, 0.7, 0.5, 0.25, 0.01, 0.0];

pub const DEFAULT_TAIL_K: usize = 200;

/// Ideal ordering used to normalize Nov-DCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NovIdeal {
    /// The user's single largest `−ln ν` at every ideal position.
    #[default]
    MaxNovelty,
    /// The user's held-out items sorted by descending `−ln ν`.
    Sorted,
}

#[inline]
fn discount(pos: usize) -> f64 {
    // pos is 1-based
    1.0 / ((pos + 1) as f64).log2()
}

fn relevant(test: &[u32], item: u32) -> bool {
    test.binary_search(&item).is_ok()
}

/// Hits in the first `k` of `ranked` over `min(k, |test|)`; `None` for an empty `test` (sorted).
pub fn recall_at_k(ranked: &[u32], test: &[u32], k: usize) -> Option<f64> {
    if test.is_empty() || k == 0 {
        return None;
    }
    let hits = ranked.iter().take(k).filter(|&&i| relevant(test, i)).count();
    Some(hits as f64 / k.min(test.len()) as f64)
}

pub fn ndcg_at_k(ranked: &[u32], test: &[u32], k: usize) -> Option<f64> {
    if test.is_empty() || k == 0 {
        return None;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, &i)| relevant(test, i))
        .map(|(s, _)| discount(s + 1))
        .sum();
    let idcg: f64 = (1..=k.min(test.len())).map(discount).sum();
    Some(dcg / idcg)
}

fn novelty(nu: &[f64], item: u32) -> Result<f64> {
    let v = *nu
        .get(item as usize)
        .ok_or_else(|| Error::Evaluation(format!("item {item} has no popularity entry")))?;
    if v <= 0.0 {
        return Err(Error::Evaluation(format!("item {item} has zero training frequency, its novelty is undefined")));
    }
    Ok(-v.ln())
}

/// Novelty-weighted NDCG with `ν` the normalized training frequency of each item.
pub fn nov_ndcg_at_k(ranked: &[u32], test: &[u32], nu: &[f64], k: usize, ideal: NovIdeal) -> Result<Option<f64>> {
    if test.is_empty() || k == 0 {
        return Ok(None);
    }
    let mut dcg = 0.0;
    for (s, &i) in ranked.iter().take(k).enumerate() {
        if relevant(test, i) {
            dcg += novelty(nu, i)? * discount(s + 1);
        }
    }
    let mut nov: Vec<f64> = test.iter().map(|&i| novelty(nu, i)).collect::<Result<_>>()?;
    let n = k.min(test.len());
    let idcg: f64 = match ideal {
        NovIdeal::MaxNovelty => {
            let best = nov.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (1..=n).map(|s| best * discount(s)).sum()
        }
        NovIdeal::Sorted => {
            nov.sort_by(|a, b| b.total_cmp(a));
            nov.iter().take(n).enumerate().map(|(s, v)| v * discount(s + 1)).sum()
        }
    };
    if idcg <= 0.0 {
        // every held-out item has ν = 1: no novelty to gain
        return Ok(Some(0.0));
    }
    Ok(Some(dcg / idcg))
}

/// Per-user score vectors over the whole catalogue.
pub trait ScoreSource: Sync {
    fn scores(&self, user: usize) -> Result<Vec<f64>>;

    /// Whether scores are probabilities in `[0, 1]`.
    fn outputs_probabilities(&self) -> bool {
        true
    }
}

impl<F> ScoreSource for F
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    fn scores(&self, user: usize) -> Result<Vec<f64>> {
        self(user)
    }
}

/// Scores a trained model on users' training items.
#[derive(Debug, Clone, Copy)]
pub struct ModelScorer<'a> {
    pub params: &'a ModelParams,
    pub train: &'a Interactions,
    /// Unit-L2 normalization of the DAE input, matching training.
    pub normalize: bool,
}

impl<'a> ModelScorer<'a> {
    pub fn new(params: &'a ModelParams, train: &'a Interactions, normalize: bool) -> Self {
        ModelScorer { params, train, normalize }
    }

    pub fn input(&self, user: usize) -> Result<ModelInput> {
        match self.params.kind {
            ModelKind::Mf => Ok(ModelInput::User(user)),
            ModelKind::Dae => {
                let v = user_vector(self.train, user, false)?;
                let prep = Corruption { normalize: self.normalize, ..Corruption::NONE };
                // no noise: the rng is never drawn from
                Ok(ModelInput::Items(prep.apply(&v, &mut RngState::new(0))))
            }
        }
    }
}

impl ScoreSource for ModelScorer<'_> {
    fn scores(&self, user: usize) -> Result<Vec<f64>> {
        self.params.predict_scores(self.input(user)?)
    }

    fn outputs_probabilities(&self) -> bool {
        self.params.decoder == ActivationKind::Sigmoid
    }
}

/// Handling of held-out items that never occur in training (`ν = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UndefinedNovelty {
    /// Leave them out of the novelty terms; counted in [`MetricsReport::nov_excluded`].
    #[default]
    Exclude,
    /// Fail with an evaluation error naming the item.
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    pub nov_ideal: NovIdeal,
    pub undefined_novelty: UndefinedNovelty,
    /// Worker threads over users; results do not depend on it.
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { ks: DEFAULT_KS.to_vec(), nov_ideal: NovIdeal::default(), undefined_novelty: UndefinedNovelty::default(), threads: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub recall: BTreeMap<usize, f64>,
    pub ndcg: BTreeMap<usize, f64>,
    pub nov_ndcg: BTreeMap<usize, f64>,
    pub users: usize,
    /// Held-out pairs left out of the novelty terms because their item has `ν = 0`.
    pub nov_excluded: usize,
}

impl MetricsReport {
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (name, map) in [("recall", &self.recall), ("ndcg", &self.ndcg), ("nov_ndcg", &self.nov_ndcg)] {
            for (k, v) in map {
                m.insert(format!("{name}@{k}"), json!(v));
            }
        }
        m.insert("users".into(), json!(self.users));
        m.insert("nov_excluded_pairs".into(), json!(self.nov_excluded));
        Value::Object(m)
    }
}

/// Runs `f` on every user in `users`, in parallel chunks, returning results in user order.
fn map_users<T: Send>(users: &[usize], threads: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let threads = threads.max(1).min(users.len().max(1));
    if threads == 1 {
        return users.iter().map(|&u| f(u)).collect();
    }
    let chunk = users.len().div_ceil(threads);
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|s| {
        let handles: Vec<_> = users
            .chunks(chunk)
            .map(|c| {
                let f = &f;
                s.spawn(move || c.iter().map(|&u| f(u)).collect::<Result<Vec<T>>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(users.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn users_with_items(inter: &Interactions) -> Vec<usize> {
    (0..inter.n_users()).filter(|&u| !inter.items_of(u).is_empty()).collect()
}

fn validate_ks(ks: &[usize]) -> Result<usize> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("cut-offs must be a non-empty list of positive integers"));
    }
    Ok(*ks.iter().max().expect("non-empty"))
}

fn check_shape(scores: &[f64], n_items: usize, user: usize) -> Result<()> {
    if scores.len() != n_items {
        return Err(Error::Evaluation(format!("scorer returned {} scores for user {user}, expected {n_items}", scores.len())));
    }
    Ok(())
}

/// Test-set metrics. Rankings exclude train ∪ valid; `ν` comes from `pop`.
pub fn evaluate(scorer: &impl ScoreSource, split: &SplitDataset, pop: &PopularityStats, opts: &EvalOptions) -> Result<MetricsReport> {
    let kmax = validate_ks(&opts.ks)?;
    let users = users_with_items(&split.test);
    let n_items = split.n_items();
    let per_user = map_users(&users, opts.threads, |u| {
        let scores = scorer.scores(u)?;
        check_shape(&scores, n_items, u)?;
        let ranked: Vec<u32> = top_k(&scores, &split.seen_items(u), kmax).into_iter().map(|(i, _)| i).collect();
        let test = split.test.items_of(u);
        let nov_test: Vec<u32> = match opts.undefined_novelty {
            UndefinedNovelty::Error => test.to_vec(),
            UndefinedNovelty::Exclude => test.iter().copied().filter(|&i| pop.nu.get(i as usize).is_some_and(|&v| v > 0.0)).collect(),
        };
        let excluded = test.len() - nov_test.len();
        let rows = opts
            .ks
            .iter()
            .map(|&k| {
                let nov = nov_ndcg_at_k(&ranked, &nov_test, &pop.nu, k, opts.nov_ideal)?.unwrap_or(0.0);
                Ok((recall_at_k(&ranked, test, k).expect("non-empty"), ndcg_at_k(&ranked, test, k).expect("non-empty"), nov))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((rows, excluded))
    })?;
    let mut report = MetricsReport {
        recall: BTreeMap::new(),
        ndcg: BTreeMap::new(),
        nov_ndcg: BTreeMap::new(),
        users: users.len(),
        nov_excluded: per_user.iter().map(|(_, e)| e).sum(),
    };
    for (j, &k) in opts.ks.iter().enumerate() {
        let (mut r, mut n, mut v) = (0.0, 0.0, 0.0);
        for (row, _) in &per_user {
            r += row[j].0;
            n += row[j].1;
            v += row[j].2;
        }
        let denom = users.len().max(1) as f64;
        report.recall.insert(k, r / denom);
        report.ndcg.insert(k, n / denom);
        report.nov_ndcg.insert(k, v / denom);
    }
    Ok(report)
}

/// Mean NDCG@k on the validation part, excluding training items. Zero when no user has validation items.
pub fn validation_ndcg(scorer: &impl ScoreSource, split: &SplitDataset, k: usize, threads: usize) -> Result<f64> {
    let users = users_with_items(&split.valid);
    if users.is_empty() {
        return Ok(0.0);
    }
    let vals = map_users(&users, threads, |u| {
        let scores = scorer.scores(u)?;
        check_shape(&scores, split.n_items(), u)?;
        let ranked: Vec<u32> = top_k(&scores, split.train.items_of(u), k).into_iter().map(|(i, _)| i).collect();
        Ok(ndcg_at_k(&ranked, split.valid.items_of(u), k).expect("non-empty"))
    })?;
    Ok(vals.iter().sum::<f64>() / users.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceHistogram {
    pub edges: Vec<f64>,
    /// Percentage of the catalogue per bucket, averaged over users; bucket `b`
    /// spans `edges[b+1] ≤ p̂ < edges[b]` and the first bucket includes its top edge.
    pub percent: Vec<f64>,
    pub users: usize,
}

impl PreferenceHistogram {
    pub fn labels(&self) -> Vec<String> {
        (0..self.percent.len())
            .map(|b| {
                let op = if b == 0 { "≥" } else { ">" };
                format!("{} {op} p ≥ {}", self.edges[b], self.edges[b + 1])
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({ "edges": self.edges, "labels": self.labels(), "percent": self.percent, "users": self.users })
    }
}

/// Bucket index of `x` under descending `edges`; on-edge values go to the higher bucket.
fn bucket_of(x: f64, edges: &[f64]) -> Option<usize> {
    if !(x <= edges[0] && x >= edges[edges.len() - 1]) {
        return None;
    }
    (0..edges.len() - 1).find(|&b| x >= edges[b + 1])
}

/// Averaged distribution of predicted preferences over the whole catalogue,
/// for the users counted by [`evaluate`].
pub fn preference_histogram(scorer: &impl ScoreSource, split: &SplitDataset, edges: &[f64], threads: usize) -> Result<PreferenceHistogram> {
    if !scorer.outputs_probabilities() {
        return Err(Error::Evaluation(
            "the preference histogram applies to sigmoid decoders; this model's outputs are not probabilities".into(),
        ));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::invalid("histogram edges must be strictly descending and at least two"));
    }
    let n_buckets = edges.len() - 1;
    let users = users_with_items(&split.test);
    let rows = map_users(&users, threads, |u| {
        let scores = scorer.scores(u)?;
        check_shape(&scores, split.n_items(), u)?;
        let mut counts = vec![0usize; n_buckets];
        for (i, &x) in scores.iter().enumerate() {
            let b = bucket_of(x, edges)
                .ok_or_else(|| Error::Evaluation(format!("prediction {x} for user {u}, item {i} lies outside the histogram range")))?;
            counts[b] += 1;
        }
        Ok(counts)
    })?;
    let mut percent = vec![0.0; n_buckets];
    for counts in &rows {
        for (p, &c) in percent.iter_mut().zip(counts) {
            *p += 100.0 * c as f64 / split.n_items() as f64;
        }
    }
    let denom = rows.len().max(1) as f64;
    percent.iter_mut().for_each(|p| *p /= denom);
    Ok(PreferenceHistogram { edges: edges.to_vec(), percent, users: rows.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub k: usize,
    /// Percent of pooled top-k recommendations in the short, medium and long tail.
    pub shares: [f64; 3],
    /// Row `r` counts pooled recommendations at positions `1..=r+1` per interval.
    pub rank_profile: Vec<[u64; 3]>,
    pub users: usize,
}

impl TailReport {
    pub fn shares_json(&self) -> Value {
        let mut m = Map::new();
        for seg in TailSegment::ALL {
            m.insert(seg.name().into(), json!(self.shares[seg.index()]));
        }
        Value::Object(m)
    }

    pub fn profile_tsv(&self) -> String {
        let mut out = String::from("rank\tshort\tmedium\tlong\n");
        for (r, c) in self.rank_profile.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", r + 1, c[0], c[1], c[2]);
        }
        out
    }
}

/// Popularity-interval breakdown of every evaluated user's top-k list.
pub fn tail_distribution(scorer: &impl ScoreSource, split: &SplitDataset, intervals: &TailIntervals, k: usize, threads: usize) -> Result<TailReport> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let users = users_with_items(&split.test);
    let lists = map_users(&users, threads, |u| {
        let scores = scorer.scores(u)?;
        check_shape(&scores, split.n_items(), u)?;
        Ok(top_k(&scores, &split.seen_items(u), k).into_iter().map(|(i, _)| intervals.segment(i).index()).collect::<Vec<_>>())
    })?;
    let mut per_pos = vec![[0u64; 3]; k];
    for list in &lists {
        for (r, &seg) in list.iter().enumerate() {
            per_pos[r][seg] += 1;
        }
    }
    let mut rank_profile = Vec::with_capacity(k);
    let mut acc = [0u64; 3];
    for row in per_pos {
        for s in 0..3 {
            acc[s] += row[s];
        }
        rank_profile.push(acc);
    }
    let total: u64 = acc.iter().sum();
    let shares = if total == 0 { [0.0; 3] } else { acc.map(|c| 100.0 * c as f64 / total as f64) };
    Ok(TailReport { k, shares, rank_profile, users: users.len() })
}

/// Recall@k of ranking by training popularity, for the same users and exclusions as [`evaluate`].
pub fn popularity_baseline(split: &SplitDataset, ks: &[usize]) -> Result<MetricsReport> {
    let pop = popularity(&split.train)?;
    let scores: Vec<f64> = pop.counts.iter().map(|&c| c as f64).collect();
    let scorer = |_u: usize| -> Result<Vec<f64>> { Ok(scores.clone()) };
    evaluate(&scorer, split, &pop, &EvalOptions { ks: ks.to_vec(), ..EvalOptions::default() })
}

/// The combined analysis document; the histogram is omitted (with a notice) for non-probability decoders.
pub fn analysis_json(hist: Option<&PreferenceHistogram>, tail: &TailReport) -> Value {
    let mut m = Map::new();
    match hist {
        Some(h) => {
            m.insert("pref_hist".into(), h.to_json());
        }
        None => {
            m.insert("pref_hist".into(), Value::Null);
            m.insert("notice".into(), json!("preference histogram omitted: decoder is not sigmoid"));
        }
    }
    m.insert("k".into(), json!(tail.k));
    m.insert("tail_shares".into(), tail.shares_json());
    m.insert("tail_rank_profile".into(), json!(tail.rank_profile));
    m.insert("users".into(), json!(tail.users));
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{tail_intervals, Vocabulary};

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&[0], &[0], 1), Some(1.0));
        assert_eq!(recall_at_k(&[0], &[0, 1], 1), Some(1.0));
        assert_eq!(recall_at_k(&[2, 3], &[0, 1], 2), Some(0.0));
        assert_eq!(recall_at_k(&[2, 3], &[], 2), None);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&[5, 1, 2], &[5], 3), Some(1.0));
        let v = ndcg_at_k(&[0, 9, 1], &[0, 1], 3).unwrap();
        let idcg = 1.0 + 1.0 / 3f64.log2();
        assert!((v - 1.5 / idcg).abs() < 1e-12);
        assert!((v - 0.9197).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&[3], &[0], 1), Some(0.0));
    }

    #[test]
    fn nov_ndcg_examples() {
        let nu = [0.01, 0.5, 0.49];
        // single hit at rank 1 on the most novel relevant item
        assert_eq!(nov_ndcg_at_k(&[0, 1], &[0], &nu, 2, NovIdeal::MaxNovelty).unwrap(), Some(1.0));
        let dcg = -(0.01f64).ln();
        assert!((dcg - 4.6052).abs() < 1e-4);
        assert_eq!(nov_ndcg_at_k(&[1], &[0], &nu, 1, NovIdeal::MaxNovelty).unwrap(), Some(0.0));
        let zero = [0.0, 1.0];
        assert!(matches!(nov_ndcg_at_k(&[0], &[0], &zero, 1, NovIdeal::MaxNovelty), Err(Error::Evaluation(_))));
    }

    #[test]
    fn sorted_ideal_never_below_max_variant() {
        let nu = [0.1, 0.2, 0.3, 0.4];
        let ranked = [1, 0, 2];
        let a = nov_ndcg_at_k(&ranked, &[0, 1, 2], &nu, 3, NovIdeal::MaxNovelty).unwrap().unwrap();
        let b = nov_ndcg_at_k(&ranked, &[0, 1, 2], &nu, 3, NovIdeal::Sorted).unwrap().unwrap();
        assert!(b >= a);
        assert!(b <= 1.0 + 1e-12);
    }

    fn toy_split() -> SplitDataset {
        let train = Interactions::from_lists(4, vec![vec![0, 1], vec![0], vec![0, 2]]);
        let valid = Interactions::from_lists(4, vec![vec![], vec![1], vec![]]);
        let test = Interactions::from_lists(4, vec![vec![2], vec![3], vec![]]);
        let vocab = |n: usize, p: &str| {
            let mut v = Vocabulary::default();
            (0..n).for_each(|i| {
                v.intern(&format!("{p}{i}"));
            });
            v
        };
        SplitDataset::new(train, valid, test, vocab(3, "u"), vocab(4, "i")).unwrap()
    }

    #[test]
    fn evaluate_skips_users_without_test_and_excludes_seen() {
        let split = toy_split();
        let pop = popularity(&split.train).unwrap();
        // oracle: held-out membership
        let oracle = |u: usize| -> Result<Vec<f64>> { Ok((0..4u32).map(|i| f64::from(split.test.contains(u, i))).collect()) };
        // item 3 has zero training count
        let strict = EvalOptions { ks: vec![1, 2], undefined_novelty: UndefinedNovelty::Error, ..Default::default() };
        assert!(matches!(evaluate(&oracle, &split, &pop, &strict), Err(Error::Evaluation(_))));
        let lenient = evaluate(&oracle, &split, &pop, &EvalOptions { ks: vec![1, 2], ..Default::default() }).unwrap();
        assert_eq!(lenient.nov_excluded, 1);
        assert_eq!(lenient.recall[&1], 1.0);
        let smoothed = PopularityStats::from_counts(vec![3, 1, 1, 1]).unwrap();
        let r = evaluate(&oracle, &split, &smoothed, &EvalOptions { ks: vec![1, 2], ..Default::default() }).unwrap();
        assert_eq!(r.users, 2);
        assert_eq!(r.recall[&1], 1.0);
        assert_eq!(r.ndcg[&2], 1.0);
        let j = r.to_json();
        assert!(j.get("recall@1").is_some() && j.get("nov_ndcg@2").is_some() && j.get("recall@20").is_none());
    }

    #[test]
    fn threads_do_not_change_results() {
        let split = toy_split();
        let pop = PopularityStats::from_counts(vec![3, 1, 1, 1]).unwrap();
        let scorer = |u: usize| -> Result<Vec<f64>> { Ok((0..4).map(|i| ((u * 7 + i * 3) % 5) as f64).collect()) };
        let a = evaluate(&scorer, &split, &pop, &EvalOptions::default()).unwrap();
        let b = evaluate(&scorer, &split, &pop, &EvalOptions { threads: 4, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_examples() {
        let split = toy_split();
        let half = |_u: usize| -> Result<Vec<f64>> { Ok(vec![0.5; 4]) };
        let h = preference_histogram(&half, &split, &PREF_EDGES, 1).unwrap();
        assert_eq!(h.percent, vec![0.0, 0.0, 100.0, 0.0, 0.0, 0.0]);
        let spread = |_u: usize| -> Result<Vec<f64>> { Ok(vec![0.95, 0.8, 0.3, 0.001]) };
        let h = preference_histogram(&spread, &split, &PREF_EDGES, 1).unwrap();
        assert_eq!(h.percent, vec![25.0, 25.0, 0.0, 25.0, 0.0, 25.0]);
        assert!((h.percent.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        let edges = |_u: usize| -> Result<Vec<f64>> { Ok(vec![1.0, 0.9, 0.01, 0.0]) };
        let h = preference_histogram(&edges, &split, &PREF_EDGES, 1).unwrap();
        assert_eq!(h.percent, vec![50.0, 0.0, 0.0, 0.0, 25.0, 25.0]);
        let bad = |_u: usize| -> Result<Vec<f64>> { Ok(vec![1.5; 4]) };
        assert!(preference_histogram(&bad, &split, &PREF_EDGES, 1).is_err());
    }

    #[test]
    fn linear_decoder_histogram_is_an_error() {
        let split = toy_split();
        let p = ModelParams::zeros(ModelKind::Mf, ActivationKind::Linear, ActivationKind::Linear, 2, 3, 4);
        let s = ModelScorer::new(&p, &split.train, false);
        assert!(matches!(preference_histogram(&s, &split, &PREF_EDGES, 1), Err(Error::Evaluation(_))));
    }

    #[test]
    fn tail_four_item_example() {
        // counts a=6, b=3, c=2, d=1 give N33 = 1, N66 = 2
        let intervals = tail_intervals(&PopularityStats::from_counts(vec![6, 3, 2, 1]).unwrap()).unwrap();
        let train = Interactions::from_lists(4, vec![vec![]]);
        let test = Interactions::from_lists(4, vec![vec![0]]);
        let mut users = Vocabulary::default();
        users.intern("u");
        let mut items = Vocabulary::default();
        for id in ["a", "b", "c", "d"] {
            items.intern(id);
        }
        let split = SplitDataset::new(train, Interactions::from_lists(4, vec![vec![]]), test, users, items).unwrap();
        let scorer = |_u: usize| -> Result<Vec<f64>> { Ok(vec![1.0, 0.0, 0.9, 0.0]) };
        let t = tail_distribution(&scorer, &split, &intervals, 2, 1).unwrap();
        assert_eq!(t.shares, [50.0, 0.0, 50.0]);
        assert_eq!(t.rank_profile, vec![[1, 0, 0], [1, 0, 1]]);
        assert_eq!(t.profile_tsv().lines().count(), 3);
    }
}
