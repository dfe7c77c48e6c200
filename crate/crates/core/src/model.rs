//! Single-hidden-layer denoising autoencoder and bilinear matrix factorization.
//!
//! Both share one parameter layout: an encoder `W` (`D × n_inputs`) with bias
//! `b`, and a decoder `W'` (`n_items × D`) with bias `b'`. A DAE reads a sparse
//! item vector; MF reads the user id, which selects one column of `W`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::data::SparseVector;
use crate::error::{Error, Result};
use crate::numeric::{ActivationKind, Matrix, RngState};
use crate::regularization::dropout_corrupt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Dae,
    Mf,
}

impl ModelKind {
    pub fn code(self) -> u8 {
        match self {
            ModelKind::Dae => 0,
            ModelKind::Mf => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ModelKind::Dae),
            1 => Some(ModelKind::Mf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dae => "dae",
            ModelKind::Mf => "mf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dae" => Ok(ModelKind::Dae),
            "mf" => Ok(ModelKind::Mf),
            other => Err(Error::invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub encoder: ActivationKind,
    pub decoder: ActivationKind,
    /// `D × n_inputs`: items for a DAE, users for MF.
    pub w: Matrix,
    pub b: Vec<f64>,
    /// `n_items × D`.
    pub w_dec: Matrix,
    pub b_dec: Vec<f64>,
}

impl ModelParams {
    pub fn new(
        kind: ModelKind,
        encoder: ActivationKind,
        decoder: ActivationKind,
        w: Matrix,
        b: Vec<f64>,
        w_dec: Matrix,
        b_dec: Vec<f64>,
    ) -> Result<Self> {
        let d = w.rows();
        if d == 0 || w.cols() == 0 || w_dec.rows() == 0 {
            return Err(Error::invalid("model dimensions must be non-zero"));
        }
        if b.len() != d || w_dec.cols() != d || b_dec.len() != w_dec.rows() {
            return Err(Error::invalid(format!(
                "inconsistent shapes: W {:?}, b {}, W' {:?}, b' {}",
                w.shape(),
                b.len(),
                w_dec.shape(),
                b_dec.len()
            )));
        }
        Ok(ModelParams { kind, encoder, decoder, w, b, w_dec, b_dec })
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(kind: ModelKind, encoder: ActivationKind, decoder: ActivationKind, dim: usize, n_inputs: usize, n_items: usize) -> Self {
        ModelParams {
            kind,
            encoder,
            decoder,
            w: Matrix::zeros(dim, n_inputs),
            b: vec![0.0; dim],
            w_dec: Matrix::zeros(n_items, dim),
            b_dec: vec![0.0; n_items],
        }
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    pub fn n_inputs(&self) -> usize {
        self.w.cols()
    }

    pub fn n_items(&self) -> usize {
        self.w_dec.rows()
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len() + self.w_dec.len() + self.b_dec.len()
    }

    /// Flattened copy in `W, b, W', b'` order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend_from_slice(self.w.as_slice());
        out.extend_from_slice(&self.b);
        out.extend_from_slice(self.w_dec.as_slice());
        out.extend_from_slice(&self.b_dec);
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params());
        let (w, rest) = flat.split_at(self.w.len());
        let (b, rest) = rest.split_at(self.b.len());
        let (wd, bd) = rest.split_at(self.w_dec.len());
        self.w.as_mut_slice().copy_from_slice(w);
        self.b.copy_from_slice(b);
        self.w_dec.as_mut_slice().copy_from_slice(wd);
        self.b_dec.copy_from_slice(bd);
    }

    /// Hidden pre-activation and activation for an input.
    fn encode(&self, input: &ModelInput) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.dim();
        let mut pre = self.b.clone();
        match (self.kind, input) {
            (ModelKind::Dae, ModelInput::Items(v)) => {
                if let Some(&bad) = v.indices.iter().find(|&&i| i as usize >= self.n_inputs()) {
                    return Err(Error::invalid(format!("input index {bad} out of range")));
                }
                for (r, acc) in pre.iter_mut().enumerate() {
                    let row = self.w.row(r);
                    for (i, x) in v.iter() {
                        *acc += row[i as usize] * x;
                    }
                }
            }
            (ModelKind::Mf, &ModelInput::User(u)) => {
                if u >= self.n_inputs() {
                    return Err(Error::invalid(format!("user {u} out of range ({} users)", self.n_inputs())));
                }
                for (r, acc) in pre.iter_mut().enumerate() {
                    *acc += self.w.get(r, u);
                }
            }
            (kind, _) => return Err(Error::invalid(format!("input type does not match a {kind} model"))),
        }
        debug_assert_eq!(pre.len(), d);
        let hidden = pre.iter().map(|&z| self.encoder.apply(z)).collect();
        Ok((pre, hidden))
    }

    #[inline]
    fn decode_one(&self, item: usize, hidden: &[f64]) -> f64 {
        let row = self.w_dec.row(item);
        self.b_dec[item] + row.iter().zip(hidden).map(|(a, h)| a * h).sum::<f64>()
    }

    /// Forward pass on an already corrupted/normalized input. With `targets`
    /// the decoder is evaluated only on those items, in that order; otherwise on
    /// the whole catalogue.
    pub fn forward(&self, input: ModelInput, targets: Option<Vec<u32>>) -> Result<ForwardCache> {
        let (hidden_pre, hidden) = self.encode(&input)?;
        let n = self.n_items();
        let output_pre: Vec<f64> = match &targets {
            Some(t) => {
                if let Some(&bad) = t.iter().find(|&&i| i as usize >= n) {
                    return Err(Error::invalid(format!("target item {bad} out of range")));
                }
                t.iter().map(|&i| self.decode_one(i as usize, &hidden)).collect()
            }
            None => (0..n).map(|i| self.decode_one(i, &hidden)).collect(),
        };
        let output = output_pre.iter().map(|&z| self.decoder.apply(z)).collect();
        Ok(ForwardCache { input, hidden_pre, hidden, targets, output_pre, output })
    }

    /// DAE forward over the full catalogue: prepare (normalize, corrupt) then encode/decode.
    pub fn forward_dae(&self, v: &SparseVector, corruption: &Corruption, rng: &mut RngState) -> Result<ForwardCache> {
        if self.kind != ModelKind::Dae {
            return Err(Error::invalid("forward_dae on a non-DAE model"));
        }
        let input = corruption.apply(v, rng);
        self.forward(ModelInput::Items(input), None)
    }

    /// MF forward over the full catalogue for user `u`.
    pub fn forward_mf(&self, u: usize) -> Result<ForwardCache> {
        if self.kind != ModelKind::Mf {
            return Err(Error::invalid("forward_mf on a non-MF model"));
        }
        self.forward(ModelInput::User(u), None)
    }

    /// Gradients of a loss given `output_grad = dL/dp̂`, aligned with
    /// `cache.output`. Only decoder rows of the evaluated items and encoder
    /// columns of the active inputs are touched.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<Gradients> {
        if output_grad.len() != cache.output.len() {
            return Err(Error::invalid(format!(
                "output gradient has {} entries, forward produced {}",
                output_grad.len(),
                cache.output.len()
            )));
        }
        let d = self.dim();
        let n_out = cache.output.len();
        let item_at = |k: usize| -> u32 { cache.targets.as_ref().map_or(k as u32, |t| t[k]) };

        let mut dec_items = Vec::with_capacity(n_out);
        let mut dec_rows = vec![0.0; n_out * d];
        let mut dec_bias = Vec::with_capacity(n_out);
        let mut d_hidden = vec![0.0; d];
        for k in 0..n_out {
            let item = item_at(k);
            let delta = output_grad[k] * self.decoder.grad(cache.output_pre[k]);
            dec_items.push(item);
            dec_bias.push(delta);
            let row = self.w_dec.row(item as usize);
            let g = &mut dec_rows[k * d..(k + 1) * d];
            for r in 0..d {
                g[r] = delta * cache.hidden[r];
                d_hidden[r] += delta * row[r];
            }
        }
        let b_grad: Vec<f64> = d_hidden
            .iter()
            .zip(&cache.hidden_pre)
            .map(|(g, &z)| g * self.encoder.grad(z))
            .collect();

        let (enc_cols, enc_grads) = match &cache.input {
            ModelInput::Items(v) => {
                let mut grads = vec![0.0; v.len() * d];
                for (k, (_, x)) in v.iter().enumerate() {
                    for r in 0..d {
                        grads[k * d + r] = b_grad[r] * x;
                    }
                }
                (v.indices.iter().map(|&i| i as usize).collect(), grads)
            }
            &ModelInput::User(u) => (vec![u], b_grad.clone()),
        };
        Ok(Gradients { dim: d, enc_cols, enc_grads, b: b_grad, dec_items, dec_rows, dec_bias })
    }

    /// Scores for every item with no corruption.
    pub fn predict_scores(&self, input: ModelInput) -> Result<Vec<f64>> {
        Ok(self.forward(input, None)?.output)
    }
}

/// What the encoder reads.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelInput {
    Items(SparseVector),
    User(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub input: ModelInput,
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    /// Items whose outputs were computed, `None` for the whole catalogue.
    pub targets: Option<Vec<u32>>,
    pub output_pre: Vec<f64>,
    pub output: Vec<f64>,
}

/// Sparse gradient of one forward/backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    dim: usize,
    /// Encoder columns touched and their gradients, `dim` values each.
    pub enc_cols: Vec<usize>,
    pub enc_grads: Vec<f64>,
    pub b: Vec<f64>,
    /// Decoder rows touched and their gradients, `dim` values each.
    pub dec_items: Vec<u32>,
    pub dec_rows: Vec<f64>,
    pub dec_bias: Vec<f64>,
}

impl Gradients {
    /// `acc += scale * self`.
    pub fn accumulate_into(&self, acc: &mut ParamGrads, scale: f64) {
        let d = self.dim;
        for (k, &c) in self.enc_cols.iter().enumerate() {
            for r in 0..d {
                acc.w.add_at(r, c, scale * self.enc_grads[k * d + r]);
            }
        }
        for (a, g) in acc.b.iter_mut().zip(&self.b) {
            *a += scale * g;
        }
        for (k, &i) in self.dec_items.iter().enumerate() {
            let row = acc.w_dec.row_mut(i as usize);
            for r in 0..d {
                row[r] += scale * self.dec_rows[k * d + r];
            }
            acc.b_dec[i as usize] += scale * self.dec_bias[k];
        }
    }
}

/// Dense gradient buffers shaped like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub w_dec: Matrix,
    pub b_dec: Vec<f64>,
}

impl ParamGrads {
    pub fn zeros_like(p: &ModelParams) -> Self {
        ParamGrads {
            w: Matrix::zeros(p.w.rows(), p.w.cols()),
            b: vec![0.0; p.b.len()],
            w_dec: Matrix::zeros(p.w_dec.rows(), p.w_dec.cols()),
            b_dec: vec![0.0; p.b_dec.len()],
        }
    }

    pub fn clear(&mut self) {
        self.w.fill(0.0);
        self.b.iter_mut().for_each(|x| *x = 0.0);
        self.w_dec.fill(0.0);
        self.b_dec.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.w.as_slice());
        out.extend_from_slice(&self.b);
        out.extend_from_slice(self.w_dec.as_slice());
        out.extend_from_slice(&self.b_dec);
        out
    }
}

/// Input preparation for the DAE: optional unit-L2 normalization and dropout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corruption {
    pub dropout: f64,
    pub normalize: bool,
    /// Normalize before dropping (default) rather than after.
    pub normalize_first: bool,
    /// Scale survivors by `1/(1-q)`.
    pub inverted: bool,
}

impl Corruption {
    pub const NONE: Corruption = Corruption { dropout: 0.0, normalize: false, normalize_first: true, inverted: false };

    /// Same normalization, no noise. Used at prediction time.
    pub fn without_noise(&self) -> Corruption {
        Corruption { dropout: 0.0, ..*self }
    }

    pub fn apply(&self, v: &SparseVector, rng: &mut RngState) -> SparseVector {
        let normalize = |mut x: SparseVector| {
            if self.normalize {
                let n = x.norm();
                if n > 0.0 {
                    x.values.iter_mut().for_each(|v| *v /= n);
                }
            }
            x
        };
        let drop = |x: SparseVector, rng: &mut RngState| {
            if self.dropout <= 0.0 {
                return x;
            }
            let mut out = dropout_corrupt(&x, self.dropout, rng);
            if self.inverted {
                let s = 1.0 / (1.0 - self.dropout);
                out.values.iter_mut().for_each(|v| *v *= s);
            }
            out
        };
        if self.normalize_first {
            drop(normalize(v.clone()), rng)
        } else {
            normalize(drop(v.clone(), rng))
        }
    }
}

/// How many unobserved items join each user's target set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeSampling {
    /// Every item is a target (no sampling).
    FullCatalogue,
    /// `ratio × base` sampled unobserved items (or pairs).
    Ratio(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingSpec {
    pub negatives: NegativeSampling,
    /// Median number of training items per user.
    pub base: usize,
}

impl SamplingSpec {
    /// Requested number of sampled negatives (or pairs); `None` for the full catalogue.
    pub fn count(&self) -> Option<usize> {
        match self.negatives {
            NegativeSampling::FullCatalogue => None,
            NegativeSampling::Ratio(r) => Some(r as usize * self.base),
        }
    }
}

/// A user's training targets: observed items (label 1) then sampled ones (label 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSet {
    pub items: Vec<u32>,
    pub labels: Vec<i8>,
}

/// `T_u = I_u ∪ S`, with `S` drawn uniformly without replacement from the
/// unobserved items and `|S| = min(ratio·base, |I| − |I_u|)`. `observed` must be sorted.
pub fn sample_targets(observed: &[u32], n_items: usize, spec: &SamplingSpec, rng: &mut RngState) -> TargetSet {
    let complement = n_items - observed.len();
    let want = spec.count().map_or(complement, |c| c.min(complement));
    let mut items = observed.to_vec();
    let mut labels = vec![1i8; observed.len()];
    let negatives = sample_unobserved(observed, n_items, want, rng);
    labels.extend(std::iter::repeat(0).take(negatives.len()));
    items.extend(negatives);
    TargetSet { items, labels }
}

fn sample_unobserved(observed: &[u32], n_items: usize, want: usize, rng: &mut RngState) -> Vec<u32> {
    let complement = n_items - observed.len();
    if want == 0 {
        return Vec::new();
    }
    if want == complement {
        return complement_of(observed, n_items);
    }
    if 2 * want <= complement {
        let mut seen = HashSet::with_capacity(want);
        let mut out = Vec::with_capacity(want);
        while out.len() < want {
            let i = rng.below_usize(n_items) as u32;
            if observed.binary_search(&i).is_err() && seen.insert(i) {
                out.push(i);
            }
        }
        out
    } else {
        let mut pool = complement_of(observed, n_items);
        for k in 0..want {
            let j = k + rng.below_usize(pool.len() - k);
            pool.swap(k, j);
        }
        pool.truncate(want);
        pool
    }
}

fn complement_of(observed: &[u32], n_items: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(n_items - observed.len());
    let mut next = observed.iter().peekable();
    for i in 0..n_items as u32 {
        if next.peek() == Some(&&i) {
            next.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// `count` pairs of (uniform observed item, uniform unobserved item), drawn with replacement.
pub fn sample_pairs(observed: &[u32], n_items: usize, count: usize, rng: &mut RngState) -> Result<Vec<(u32, u32)>> {
    if observed.is_empty() {
        return Err(Error::invalid("pair sampling needs at least one observed item"));
    }
    let complement = n_items - observed.len();
    if complement == 0 {
        return Err(Error::invalid("pair sampling needs at least one unobserved item"));
    }
    // Rejection is cheap unless most of the catalogue is observed.
    let pool = if complement * 4 < n_items { Some(complement_of(observed, n_items)) } else { None };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let pos = observed[rng.below_usize(observed.len())];
        let neg = match &pool {
            Some(p) => p[rng.below_usize(p.len())],
            None => loop {
                let j = rng.below_usize(n_items) as u32;
                if observed.binary_search(&j).is_err() {
                    break j;
                }
            },
        };
        out.push((pos, neg));
    }
    Ok(out)
}

/// Highest `k` scores outside `exclude` (sorted), descending, ties by ascending item.
pub fn top_k(scores: &[f64], exclude: &[u32], k: usize) -> Vec<(u32, f64)> {
    let mut cand: Vec<(u32, f64)> = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| exclude.binary_search(&(*i as u32)).is_err())
        .map(|(i, &s)| (i as u32, s))
        .collect();
    let cmp = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    let k = k.min(cand.len());
    if k == 0 {
        return Vec::new();
    }
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand
}

/// Forward pass without noise, then [`top_k`] over the non-excluded items.
pub fn predict_topk(params: &ModelParams, input: ModelInput, exclude: &[u32], k: usize) -> Result<Vec<(u32, f64)>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let scores = params.predict_scores(input)?;
    Ok(top_k(&scores, exclude, k))
}
