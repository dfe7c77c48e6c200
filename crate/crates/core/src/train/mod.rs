//! Training loop, configuration, checkpoints and the gradient-check harness.

mod checkpoint;
mod config;
mod gradcheck;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

pub use checkpoint::{load_checkpoint, meta_path, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, MAGIC};
pub use config::{parse_kv, TrainConfig, PRESETS};
pub use gradcheck::{grad_check, GradCheckCase, GradCheckOptions, GradCheckReport, GRAD_CHECK_H};

use crate::data::{median_items_per_user, user_vector, SplitDataset};
use crate::error::{Error, Result};
use crate::eval::{validation_ndcg, ModelScorer};
use crate::losses::{batch_pair_loss, batch_point_loss, LossSpec};
use crate::model::{sample_pairs, sample_targets, ModelInput, ModelKind, ModelParams, NegativeSampling, ParamGrads, SamplingSpec};
use crate::numeric::{glorot_uniform, truncated_normal, AdamState, RngState};
use crate::regularization::{apply_max_norm, RegSpec};

pub const BIAS_INIT_STD: f64 = 1e-3;

const INIT_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;

/// Glorot-uniform weights and truncated-normal biases.
pub fn init_params(config: &TrainConfig, n_users: usize, n_items: usize, rng: &mut RngState) -> Result<ModelParams> {
    let n_inputs = match config.model {
        ModelKind::Dae => n_items,
        ModelKind::Mf => n_users,
    };
    let w = glorot_uniform(config.dim, n_inputs, rng)?;
    let w_dec = glorot_uniform(n_items, config.dim, rng)?;
    let b = truncated_normal(config.dim, BIAS_INIT_STD, rng)?;
    let b_dec = truncated_normal(n_items, BIAS_INIT_STD, rng)?;
    ModelParams::new(config.model, config.encoder, config.decoder, w, b, w_dec, b_dec)
}

/// What the loss compares the outputs against.
#[derive(Debug, Clone, PartialEq)]
pub enum Supervision {
    /// One label per output position.
    Labels(Vec<i8>),
    /// `(positive, negative)` positions into the outputs.
    Pairs(Vec<(usize, usize)>),
}

/// One user's contribution to a batch: a prepared input, the items to decode and their supervision.
#[derive(Debug, Clone, PartialEq)]
pub struct UserExample {
    pub user: usize,
    pub input: ModelInput,
    /// `None` decodes the full catalogue.
    pub targets: Option<Vec<u32>>,
    pub supervision: Supervision,
}

/// Samples the corrupted input and training targets of user `u`.
pub fn build_example(config: &TrainConfig, split: &SplitDataset, base: usize, u: usize, rng: &mut RngState) -> Result<UserExample> {
    let observed = split.train.items_of(u);
    let n_items = split.n_items();
    let input = match config.model {
        ModelKind::Dae => ModelInput::Items(config.corruption().apply(&user_vector(&split.train, u, false)?, rng)),
        ModelKind::Mf => ModelInput::User(u),
    };
    let spec = SamplingSpec { negatives: config.negatives, base };
    let loss = config.loss_spec();
    if loss.is_pairwise() {
        let count = spec.count().expect("pair-wise sampling has a finite ratio");
        let pairs = sample_pairs(observed, n_items, count, rng)?;
        let mut targets: Vec<u32> = observed.to_vec();
        let mut pos_of: HashMap<u32, usize> = observed.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut index = Vec::with_capacity(pairs.len());
        for (i, j) in pairs {
            let pj = *pos_of.entry(j).or_insert_with(|| {
                targets.push(j);
                targets.len() - 1
            });
            index.push((pos_of[&i], pj));
        }
        return Ok(UserExample { user: u, input, targets: Some(targets), supervision: Supervision::Pairs(index) });
    }
    if config.negatives == NegativeSampling::FullCatalogue {
        let mut labels = vec![0i8; n_items];
        for &i in observed {
            labels[i as usize] = 1;
        }
        return Ok(UserExample { user: u, input, targets: None, supervision: Supervision::Labels(labels) });
    }
    let t = sample_targets(observed, n_items, &spec, rng);
    Ok(UserExample { user: u, input, targets: Some(t.items), supervision: Supervision::Labels(t.labels) })
}

/// Mean per-user loss over `batch` plus the weight-decay penalty. With
/// `grads` the exact gradient of that objective is written into it.
pub fn batch_objective(
    params: &ModelParams,
    batch: &[UserExample],
    loss: &LossSpec,
    reg: &RegSpec,
    mut grads: Option<&mut ParamGrads>,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if let Some(g) = grads.as_deref_mut() {
        g.clear();
    }
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for ex in batch {
        let cache = params.forward(ex.input.clone(), ex.targets.clone())?;
        let (l, g) = match (&ex.supervision, loss) {
            (Supervision::Pairs(p), LossSpec::CePair { eps }) => batch_pair_loss(*eps, p, &cache.output)?,
            (Supervision::Labels(y), _) => batch_point_loss(loss, &cache.output, y)?,
            (Supervision::Pairs(_), _) => return Err(Error::invalid("pair supervision needs the pair-wise loss")),
        };
        if !l.is_finite() {
            return Err(Error::NumericFailure(format!("non-finite loss {l} for user {}", ex.user)));
        }
        total += l;
        if let Some(acc) = grads.as_deref_mut() {
            params.backward(&cache, &g)?.accumulate_into(acc, scale);
        }
    }
    let penalty = reg.decay(params, grads)?;
    Ok(total * scale + penalty)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub iteration: usize,
    /// Mean batch objective since the previous record.
    pub train_loss: f64,
    pub valid_ndcg: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub records: Vec<LogRecord>,
}

impl TrainLog {
    pub fn to_tsv(&self, valid_k: usize) -> String {
        let mut out = format!("iteration\ttrain_loss\tvalid_ndcg@{valid_k}\tseconds\n");
        for r in &self.records {
            let _ = writeln!(out, "{}\t{}\t{}\t{:.3}", r.iteration, r.train_loss, r.valid_ndcg, r.seconds);
        }
        out
    }
}

/// Users with at least one training item.
fn trainable_users(split: &SplitDataset) -> Vec<usize> {
    split.train.active_users()
}

/// Mean batch objective of `params` over `n_batches` batches drawn from `rng`, without updating.
pub fn mean_objective(params: &ModelParams, config: &TrainConfig, split: &SplitDataset, n_batches: usize, rng: &mut RngState) -> Result<f64> {
    let users = trainable_users(split);
    if users.is_empty() {
        return Err(Error::input("training split has no interactions"));
    }
    let base = median_items_per_user(&split.train);
    let (loss, reg) = (config.loss_spec(), config.reg);
    let mut sum = 0.0;
    for _ in 0..n_batches.max(1) {
        let batch = (0..config.batch_size)
            .map(|_| build_example(config, split, base, users[rng.below_usize(users.len())], rng))
            .collect::<Result<Vec<_>>>()?;
        sum += batch_objective(params, &batch, &loss, &reg, None)?;
    }
    Ok(sum / n_batches.max(1) as f64)
}

/// Trains from a fresh initialization. See [`train_with`].
pub fn train(config: &TrainConfig, split: &SplitDataset) -> Result<(Checkpoint, TrainLog)> {
    train_with(config, split, |_, _| {})
}

/// Trains from a fresh initialization, calling `observer` after each log record.
pub fn train_with(
    config: &TrainConfig,
    split: &SplitDataset,
    mut observer: impl FnMut(&LogRecord, &ModelParams),
) -> Result<(Checkpoint, TrainLog)> {
    config.validate()?;
    let users = trainable_users(split);
    if users.is_empty() {
        return Err(Error::input("training split has no interactions"));
    }
    let root = RngState::new(config.seed);
    let mut params = init_params(config, split.n_users(), split.n_items(), &mut root.fork(INIT_STREAM))?;
    let mut rng = root.fork(TRAIN_STREAM);
    let base = median_items_per_user(&split.train);
    let (loss, reg) = (config.loss_spec(), config.reg);

    let mut grads = ParamGrads::zeros_like(&params);
    let mut adam = [
        AdamState::new(params.w.len()),
        AdamState::new(params.b.len()),
        AdamState::new(params.w_dec.len()),
        AdamState::new(params.b_dec.len()),
    ];
    let interval = config.log_interval();
    let start = Instant::now();
    let mut log = TrainLog::default();
    let (mut running, mut seen) = (0.0, 0usize);

    for it in 1..=config.iterations {
        let batch = (0..config.batch_size)
            .map(|_| build_example(config, split, base, users[rng.below_usize(users.len())], &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let value = batch_objective(&params, &batch, &loss, &reg, Some(&mut grads))
            .map_err(|e| match e {
                Error::NumericFailure(m) => Error::NumericFailure(format!("iteration {it}: {m}")),
                other => other,
            })?;
        running += value;
        seen += 1;

        adam[0].step(params.w.as_mut_slice(), grads.w.as_slice(), config.lr, &config.adam)?;
        adam[1].step(&mut params.b, &grads.b, config.lr, &config.adam)?;
        adam[2].step(params.w_dec.as_mut_slice(), grads.w_dec.as_slice(), config.lr, &config.adam)?;
        adam[3].step(&mut params.b_dec, &grads.b_dec, config.lr, &config.adam)?;
        if reg.has_max_norm() {
            apply_max_norm(&mut params, reg.alpha_enc, reg.alpha_dec);
        }

        if interval > 0 && (it % interval == 0 || it == config.iterations) {
            let scorer = ModelScorer::new(&params, &split.train, config.normalize_input);
            let record = LogRecord {
                iteration: it,
                train_loss: running / seen as f64,
                valid_ndcg: validation_ndcg(&scorer, split, config.valid_k, config.threads)?,
                seconds: start.elapsed().as_secs_f64(),
            };
            observer(&record, &params);
            log.records.push(record);
            running = 0.0;
            seen = 0;
        }
    }
    let ckpt = Checkpoint {
        params,
        config: config.clone(),
        n_users: split.n_users(),
        users_fingerprint: split.users.fingerprint(),
        items_fingerprint: split.items.fingerprint(),
        iteration: config.iterations,
    };
    Ok((ckpt, log))
}
