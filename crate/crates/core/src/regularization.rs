//! Weight decay, max-norm clipping and dropout corruption.

use std::fmt;
use std::str::FromStr;

use crate::data::SparseVector;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ParamGrads};
use crate::numeric::{Matrix, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMode {
    /// `λ(‖W‖² + ‖W'‖²)`.
    Plain,
    /// `(λ/D)(‖W‖²/n_inputs + ‖W'‖²/n_items)`.
    Scaled,
}

impl fmt::Display for DecayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecayMode::Plain => "plain",
            DecayMode::Scaled => "scaled",
        })
    }
}

impl FromStr for DecayMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Ok(DecayMode::Plain),
            "scaled" => Ok(DecayMode::Scaled),
            other => Err(Error::invalid(format!("unknown decay mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegSpec {
    pub lambda: f64,
    pub decay_mode: DecayMode,
    pub alpha_enc: Option<f64>,
    pub alpha_dec: Option<f64>,
    pub dropout_q: f64,
}

impl Default for RegSpec {
    fn default() -> Self {
        RegSpec { lambda: 0.0, decay_mode: DecayMode::Plain, alpha_enc: None, alpha_dec: None, dropout_q: 0.0 }
    }
}

impl RegSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("weight decay must be finite and >= 0, got {}", self.lambda)));
        }
        for (name, a) in [("alpha_enc", self.alpha_enc), ("alpha_dec", self.alpha_dec)] {
            if let Some(a) = a {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::invalid(format!("{name} must be > 0, got {a}")));
                }
            }
        }
        if !(0.0..1.0).contains(&self.dropout_q) {
            return Err(Error::invalid(format!("dropout must lie in [0, 1), got {}", self.dropout_q)));
        }
        Ok(())
    }

    /// Decay penalty for `params`, adding its gradient into `grads` when given.
    pub fn decay(&self, params: &ModelParams, grads: Option<&mut ParamGrads>) -> Result<f64> {
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        let (penalty, cw, cd) = match self.decay_mode {
            DecayMode::Plain => {
                let p = weight_decay(&params.w, &params.w_dec, self.lambda)?;
                (p, self.lambda, self.lambda)
            }
            DecayMode::Scaled => {
                let (d, n_in, n_items) = (params.dim(), params.n_inputs(), params.n_items());
                let p = scaled_weight_decay(&params.w, &params.w_dec, self.lambda)?;
                (p, self.lambda / (d * n_in) as f64, self.lambda / (d * n_items) as f64)
            }
        };
        if let Some(g) = grads {
            g.w.axpy(2.0 * cw, &params.w)?;
            g.w_dec.axpy(2.0 * cd, &params.w_dec)?;
        }
        Ok(penalty)
    }

    pub fn has_max_norm(&self) -> bool {
        self.alpha_enc.is_some() || self.alpha_dec.is_some()
    }
}

/// `λ(‖W‖² + ‖W'‖²)`. The gradient is `2λW`, `2λW'`; biases are not decayed.
pub fn weight_decay(w: &Matrix, w_dec: &Matrix, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("weight decay must be >= 0, got {lambda}")));
    }
    Ok(lambda * (w.norm_sq() + w_dec.norm_sq()))
}

/// `(λ/D)(‖W‖²/n_inputs + ‖W'‖²/n_items)` with `W: D × n_inputs`, `W': n_items × D`.
pub fn scaled_weight_decay(w: &Matrix, w_dec: &Matrix, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("weight decay must be >= 0, got {lambda}")));
    }
    let (d, n_in) = w.shape();
    let n_items = w_dec.rows();
    if d == 0 || n_in == 0 || n_items == 0 {
        return Err(Error::invalid("scaled weight decay needs non-zero dimensions"));
    }
    if w_dec.cols() != d {
        return Err(Error::invalid(format!("decoder width {} does not match encoder depth {d}", w_dec.cols())));
    }
    Ok(lambda / d as f64 * (w.norm_sq() / n_in as f64 + w_dec.norm_sq() / n_items as f64))
}

/// Multiplier that brings `norm` within `α·sqrt(dim)`, or `None` when already inside.
fn clip_factor(norm_sq: f64, dim: usize, alpha: f64) -> Option<f64> {
    let bound = alpha * (dim as f64).sqrt();
    let norm = norm_sq.sqrt();
    // The slack absorbs rounding of an already clipped vector, keeping clipping idempotent.
    (norm > bound * (1.0 + 4.0 * f64::EPSILON)).then(|| bound / norm)
}

/// Rescale `x` onto the ball of radius `α·sqrt(dim x)` when it lies outside.
pub fn max_norm_clip(x: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    clip_in_place(&mut out, alpha);
    out
}

fn clip_in_place(x: &mut [f64], alpha: f64) {
    let nsq = x.iter().map(|v| v * v).sum();
    if let Some(c) = clip_factor(nsq, x.len(), alpha) {
        x.iter_mut().for_each(|v| *v *= c);
    }
}

/// Clip every encoder column against `α_enc` and every decoder row against `α_dec`.
pub fn apply_max_norm(params: &mut ModelParams, alpha_enc: Option<f64>, alpha_dec: Option<f64>) {
    if let Some(a) = alpha_enc {
        let (d, n) = params.w.shape();
        let mut col_sq = vec![0.0; n];
        for r in 0..d {
            for (acc, v) in col_sq.iter_mut().zip(params.w.row(r)) {
                *acc += v * v;
            }
        }
        let factors: Vec<Option<f64>> = col_sq.iter().map(|&s| clip_factor(s, d, a)).collect();
        if factors.iter().any(Option::is_some) {
            for r in 0..d {
                for (v, f) in params.w.row_mut(r).iter_mut().zip(&factors) {
                    if let Some(c) = f {
                        *v *= c;
                    }
                }
            }
        }
    }
    if let Some(a) = alpha_dec {
        for i in 0..params.w_dec.rows() {
            clip_in_place(params.w_dec.row_mut(i), a);
        }
    }
}

/// Zero each stored coordinate independently with probability `q`, without rescaling survivors.
/// Dropped coordinates leave the support.
pub fn dropout_corrupt(v: &SparseVector, q: f64, rng: &mut RngState) -> SparseVector {
    if q <= 0.0 {
        return v.clone();
    }
    let mut out = SparseVector::default();
    for (i, x) in v.iter() {
        if rng.next_f64() >= q {
            out.indices.push(i);
            out.values.push(x);
        }
    }
    out
}
