//! Objective functions and their derivatives with respect to the model output.
//!
//! Point-wise losses take the prediction `p̂` (the decoder output) and return
//! `(loss, dloss/dp̂)`. Losses that need a probability clamp `p̂` into
//! `[ε, 1 − ε]` first; the clamp has derivative 1 inside and 0 where it clips.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numeric::sigmoid;

/// `(A_MI, γ_MI)` pairs whose missing-information exponents `2γ_MI` are 4, 8, 12, 20 and 30.
pub const MIL_BARRIER_GRID: [(f64, u32); 5] = [(5e1, 2), (1e3, 4), (2e4, 6), (1e6, 10), (5e9, 15)];

pub const DEFAULT_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilParams {
    pub a_mi: f64,
    pub gamma_mi: u32,
    pub gamma_pos: u32,
    /// Exponent of the negative-feedback term; `None` rejects `p = -1` labels.
    pub gamma_neg: Option<u32>,
    pub eps: f64,
    /// Use `-p̂^γ₋` for negative labels (the sign as originally printed) instead of `+p̂^γ₋`.
    pub printed_negative_sign: bool,
}

impl Default for MilParams {
    fn default() -> Self {
        MilParams { a_mi: 1e6, gamma_mi: 10, gamma_pos: 1, gamma_neg: None, eps: DEFAULT_EPS, printed_negative_sign: false }
    }
}

/// Selects one objective and its hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    /// Confidence-weighted square loss, `C(p) = a·p`.
    SquareConf { a: f64 },
    /// Point-wise cross-entropy with confidence `C(p) = a·p` on the positive term.
    CePoint { a: f64, eps: f64 },
    /// Pair-wise logistic loss on `p̂_i − p̂_j`.
    CePair { eps: f64 },
    /// Softmax log-likelihood over the decoder outputs (treated as logits).
    Multinomial,
    Mil(MilParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    SquareConf,
    CePoint,
    CePair,
    Multinomial,
    Mil,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [LossKind::SquareConf, LossKind::CePoint, LossKind::CePair, LossKind::Multinomial, LossKind::Mil];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::SquareConf => "square_conf",
            LossKind::CePoint => "ce_point",
            LossKind::CePair => "ce_pair",
            LossKind::Multinomial => "multinomial",
            LossKind::Mil => "mil",
        }
    }

    /// The spec with default hyper-parameters for this tag.
    pub fn default_spec(self) -> LossSpec {
        match self {
            LossKind::SquareConf => LossSpec::SquareConf { a: 1.0 },
            LossKind::CePoint => LossSpec::CePoint { a: 1.0, eps: DEFAULT_EPS },
            LossKind::CePair => LossSpec::CePair { eps: DEFAULT_EPS },
            LossKind::Multinomial => LossSpec::Multinomial,
            LossKind::Mil => LossSpec::Mil(MilParams::default()),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown loss `{s}`")))
    }
}

impl LossSpec {
    pub fn kind(&self) -> LossKind {
        match self {
            LossSpec::SquareConf { .. } => LossKind::SquareConf,
            LossSpec::CePoint { .. } => LossKind::CePoint,
            LossSpec::CePair { .. } => LossKind::CePair,
            LossSpec::Multinomial => LossKind::Multinomial,
            LossSpec::Mil(_) => LossKind::Mil,
        }
    }

    pub fn is_pairwise(&self) -> bool {
        matches!(self, LossSpec::CePair { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let eps_ok = |eps: f64| eps > 0.0 && eps < 0.5;
        let ok = match *self {
            LossSpec::SquareConf { a } => a >= 0.0 && a.is_finite(),
            LossSpec::CePoint { a, eps } => a >= 0.0 && a.is_finite() && eps_ok(eps),
            LossSpec::CePair { eps } => eps_ok(eps),
            LossSpec::Multinomial => true,
            LossSpec::Mil(m) => {
                m.a_mi > 0.0
                    && m.a_mi.is_finite()
                    && m.gamma_mi >= 1
                    && m.gamma_pos >= 1
                    && m.gamma_neg.map_or(true, |g| g >= 1)
                    && eps_ok(m.eps)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid loss hyper-parameters: {self:?}")))
        }
    }

    /// Loss of one `(label, prediction)` pair for point-wise objectives.
    pub fn point(&self, label: i8, pred: f64) -> Result<LossGrad> {
        match *self {
            LossSpec::SquareConf { a } => Ok(square_conf(binary_label(label)?, pred, a)),
            LossSpec::CePoint { a, eps } => Ok(ce_point(binary_label(label)?, pred, a, eps)),
            LossSpec::Mil(ref m) => mil(label, pred, m),
            LossSpec::CePair { .. } | LossSpec::Multinomial => Err(Error::invalid(format!(
                "{} is not an element-wise loss",
                self.kind()
            ))),
        }
    }
}

fn binary_label(label: i8) -> Result<f64> {
    match label {
        0 => Ok(0.0),
        1 => Ok(1.0),
        other => Err(Error::invalid(format!("label {other} is not binary"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairLossGrad {
    pub loss: f64,
    pub grad_pos: f64,
    pub grad_neg: f64,
}

/// Clips `pred` into `[eps, 1 - eps]`; returns the clipped value and its derivative.
#[inline]
pub fn clamp_pref(pred: f64, eps: f64) -> (f64, f64) {
    if pred < eps {
        (eps, 0.0)
    } else if pred > 1.0 - eps {
        (1.0 - eps, 0.0)
    } else {
        (pred, 1.0)
    }
}

/// `((a·p) + 1)/2 · (p − p̂)²`.
pub fn square_conf(p: f64, pred: f64, a: f64) -> LossGrad {
    let w = (a * p + 1.0) / 2.0;
    let d = p - pred;
    LossGrad { loss: w * d * d, grad: -2.0 * w * d }
}

/// `−(a·p)·ln p̂ − (1 − p)·ln(1 − p̂)` on the clamped prediction.
pub fn ce_point(p: f64, pred: f64, a: f64, eps: f64) -> LossGrad {
    let (q, dq) = clamp_pref(pred, eps);
    let c = a * p;
    let loss = -c * q.ln() - (1.0 - p) * (1.0 - q).ln();
    let grad = (-c / q + (1.0 - p) / (1.0 - q)) * dq;
    LossGrad { loss, grad }
}

/// `−ln σ(p̂_i − p̂_j)` on clamped predictions, `i` observed and `j` unobserved.
pub fn ce_pair(pred_pos: f64, pred_neg: f64, eps: f64) -> PairLossGrad {
    let (qi, di) = clamp_pref(pred_pos, eps);
    let (qj, dj) = clamp_pref(pred_neg, eps);
    let diff = qi - qj;
    // −ln σ(x) = ln(1 + e^{−x}), written to stay finite for large |x|.
    let loss = if diff >= 0.0 { (-diff).exp().ln_1p() } else { -diff + diff.exp().ln_1p() };
    let g = sigmoid(diff) - 1.0;
    PairLossGrad { loss, grad_pos: g * di, grad_neg: -g * dj }
}

/// `−Σ p_i ln softmax(logits)_i`, gradient `(Σ p)·π − p`.
pub fn multinomial_loss(p: &[f64], logits: &[f64]) -> Result<(f64, Vec<f64>)> {
    if p.len() != logits.len() {
        return Err(Error::invalid(format!("labels ({}) and logits ({}) differ in length", p.len(), logits.len())));
    }
    let mass: f64 = p.iter().sum();
    if mass == 0.0 {
        return Err(Error::invalid("multinomial loss needs at least one positive item"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(p.len());
    for (&pi, &z) in p.iter().zip(logits) {
        let log_pi = z - log_z;
        if pi != 0.0 {
            loss -= pi * log_pi;
        }
        grad.push(mass * log_pi.exp() - pi);
    }
    Ok((loss, grad))
}

/// Missing Information Loss for one entry, `p ∈ {−1, 0, 1}`:
///
/// * `p = 1`: `(1 − p̂)^γ₊`
/// * `p = 0`: `A_MI · (p̂ − 0.5)^{2γ_MI}`
/// * `p = −1`: `p̂^γ₋` (or `−p̂^γ₋` with `printed_negative_sign`)
pub fn mil(p: i8, pred: f64, params: &MilParams) -> Result<LossGrad> {
    let (q, dq) = clamp_pref(pred, params.eps);
    let (loss, grad) = match p {
        1 => {
            let g = params.gamma_pos as i32;
            ((1.0 - q).powi(g), -(g as f64) * (1.0 - q).powi(g - 1))
        }
        0 => {
            let g2 = 2 * params.gamma_mi as i32;
            let d = q - 0.5;
            (params.a_mi * d.powi(g2), params.a_mi * g2 as f64 * d.powi(g2 - 1))
        }
        -1 => {
            let g = params
                .gamma_neg
                .ok_or_else(|| Error::invalid("negative label given but no γ₋ configured"))? as i32;
            let sign = if params.printed_negative_sign { -1.0 } else { 1.0 };
            (sign * q.powi(g), sign * g as f64 * q.powi(g - 1))
        }
        other => return Err(Error::invalid(format!("MIL label must be -1, 0 or 1, got {other}"))),
    };
    Ok(LossGrad { loss, grad: grad * dq })
}

/// Sum of the per-item loss over a user's target set.
///
/// `preds[k]` is the output for the item labelled `labels[k]`. For the
/// multinomial objective `preds` are logits over the candidate set. Returns
/// the sum and the gradient aligned with `preds`.
pub fn batch_point_loss(spec: &LossSpec, preds: &[f64], labels: &[i8]) -> Result<(f64, Vec<f64>)> {
    if preds.is_empty() {
        return Err(Error::invalid("empty target set"));
    }
    if preds.len() != labels.len() {
        return Err(Error::invalid("predictions and labels differ in length"));
    }
    if let LossSpec::Multinomial = spec {
        let p: Vec<f64> = labels.iter().map(|&l| binary_label(l)).collect::<Result<_>>()?;
        return multinomial_loss(&p, preds);
    }
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(preds.len());
    for (&y, &x) in labels.iter().zip(preds) {
        let lg = spec.point(y, x)?;
        total += lg.loss;
        grad.push(lg.grad);
    }
    Ok((total, grad))
}

/// Sum of the pair-wise loss over `(positive, negative)` positions into `preds`.
/// An item in several pairs accumulates every contribution.
pub fn batch_pair_loss(eps: f64, pairs: &[(usize, usize)], preds: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::invalid("empty pair set"));
    }
    let mut total = 0.0;
    let mut grad = vec![0.0; preds.len()];
    for &(i, j) in pairs {
        if i >= preds.len() || j >= preds.len() {
            return Err(Error::invalid(format!("pair ({i}, {j}) outside {} predictions", preds.len())));
        }
        let lg = ce_pair(preds[i], preds[j], eps);
        total += lg.loss;
        grad[i] += lg.grad_pos;
        grad[j] += lg.grad_neg;
    }
    Ok((total, grad))
}
