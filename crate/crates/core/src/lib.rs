//! Training and evaluation toolkit for implicit-feedback recommenders.
//!
//! Single-hidden-layer denoising autoencoders and matrix factorization are
//! trained with the Missing Information Loss (MIL), square, point/pair
//! cross-entropy or multinomial objectives, and evaluated with Recall@k,
//! NDCG@k, novelty-weighted NDCG@k plus preference-distribution and
//! long-tail analyses.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod losses;
pub mod model;
pub mod numeric;
pub mod regularization;
pub mod train;

pub use error::{Error, Result};
