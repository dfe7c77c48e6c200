use std::fmt::Write as _;

use super::{batch_objective, build_example, Supervision, TrainConfig, UserExample};
use crate::data::{median_items_per_user, Interactions, SplitDataset, Vocabulary};
use crate::error::{Error, Result};
use crate::losses::{LossKind, MilParams};
use crate::model::{ModelKind, ModelParams, NegativeSampling, ParamGrads};
use crate::numeric::{finite_diff_gradient, ActivationKind, RngState};
use crate::regularization::{DecayMode, RegSpec};

pub const GRAD_CHECK_H: f64 = 1e-6;
const USERS: usize = 6;
const ITEMS: usize = 12;
const DIM: usize = 3;
/// Denominator floor of the relative error; below it differences are judged absolutely.
const REL_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub tolerance: f64,
    /// Restrict to one loss tag (`mil` also selects the negative-feedback case).
    pub loss: Option<LossKind>,
    pub model: Option<ModelKind>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions { tolerance: 1e-5, loss: None, model: None, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckCase {
    pub name: String,
    pub model: ModelKind,
    pub loss: LossKind,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub cases: Vec<GradCheckCase>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&GradCheckCase> {
        self.cases.iter().filter(|c| !c.passed).collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.cases {
            let _ = writeln!(s, "{}\t{:<22}\tmax_rel_error={:.3e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.max_rel_error);
        }
        let _ = writeln!(s, "{} of {} configurations within tolerance {:e}", self.cases.len() - self.failures().len(), self.cases.len(), self.tolerance);
        s
    }
}

fn toy_split(rng: &mut RngState) -> SplitDataset {
    let lists = (0..USERS)
        .map(|u| {
            let mut l: Vec<u32> = (0..ITEMS as u32).filter(|_| rng.chance(0.3)).collect();
            if l.is_empty() {
                l.push(u as u32);
            }
            if l.len() == ITEMS {
                l.pop();
            }
            l
        })
        .collect();
    let vocab = |n: usize| {
        let mut v = Vocabulary::default();
        (0..n).for_each(|i| {
            v.intern(&i.to_string());
        });
        v
    };
    let empty = Interactions::empty(USERS, ITEMS);
    SplitDataset::new(Interactions::from_lists(ITEMS, lists), empty.clone(), empty, vocab(USERS), vocab(ITEMS))
        .expect("consistent toy split")
}

struct Case {
    name: String,
    config: TrainConfig,
    negative_labels: bool,
}

fn cases() -> Vec<Case> {
    let mut out = Vec::new();
    for model in [ModelKind::Dae, ModelKind::Mf] {
        for (tag, loss) in [
            ("square_conf", LossKind::SquareConf),
            ("ce_point", LossKind::CePoint),
            ("ce_pair", LossKind::CePair),
            ("multinomial", LossKind::Multinomial),
            ("mil", LossKind::Mil),
            ("mil_negative", LossKind::Mil),
        ] {
            let decoder = match loss {
                LossKind::SquareConf | LossKind::Multinomial => ActivationKind::Linear,
                _ => ActivationKind::Sigmoid,
            };
            let encoder = if model == ModelKind::Dae { ActivationKind::Tanh } else { ActivationKind::Linear };
            let negative_labels = tag == "mil_negative";
            let mil = if negative_labels {
                MilParams { a_mi: 50.0, gamma_mi: 2, gamma_pos: 2, gamma_neg: Some(2), ..MilParams::default() }
            } else {
                MilParams::default()
            };
            let config = TrainConfig {
                model,
                dim: DIM,
                encoder,
                decoder,
                loss,
                conf_a: 2.0,
                mil,
                reg: RegSpec {
                    lambda: 1e-2,
                    decay_mode: if model == ModelKind::Dae { DecayMode::Plain } else { DecayMode::Scaled },
                    alpha_enc: None,
                    alpha_dec: None,
                    dropout_q: if model == ModelKind::Dae { 0.3 } else { 0.0 },
                },
                normalize_input: model == ModelKind::Dae,
                negatives: if loss == LossKind::Multinomial { NegativeSampling::FullCatalogue } else { NegativeSampling::Ratio(2) },
                batch_size: USERS,
                ..TrainConfig::default()
            };
            out.push(Case { name: format!("{}/{tag}", model.name()), config, negative_labels });
        }
    }
    out
}

/// Compares analytic and central finite-difference gradients of the batch
/// objective on a tiny random model for every loss and model kind.
pub fn grad_check(opts: &GradCheckOptions) -> Result<GradCheckReport> {
    grad_check_with(opts, |_, _| {})
}

/// As [`grad_check`], with `tamper(case, analytic_gradient)` applied before comparison.
pub fn grad_check_with(opts: &GradCheckOptions, tamper: impl Fn(&str, &mut [f64])) -> Result<GradCheckReport> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid(format!("tolerance must be > 0, got {}", opts.tolerance)));
    }
    let mut report = GradCheckReport { tolerance: opts.tolerance, cases: Vec::new() };
    for case in cases() {
        let c = &case.config;
        if opts.model.is_some_and(|m| m != c.model) || opts.loss.is_some_and(|l| l != c.loss) {
            continue;
        }
        let mut rng = RngState::new(opts.seed);
        let split = toy_split(&mut rng);
        let n_inputs = if c.model == ModelKind::Dae { ITEMS } else { USERS };
        let mut params = ModelParams::zeros(c.model, c.encoder, c.decoder, DIM, n_inputs, ITEMS);
        let flat: Vec<f64> = (0..params.n_params()).map(|_| rng.next_f64() - 0.5).collect();
        params.set_flat(&flat);

        // Inputs, dropout masks and targets are drawn once and held fixed.
        let base = median_items_per_user(&split.train);
        let mut batch: Vec<UserExample> =
            (0..USERS).map(|u| build_example(c, &split, base, u, &mut rng)).collect::<Result<_>>()?;
        if case.negative_labels {
            for ex in &mut batch {
                if let Supervision::Labels(y) = &mut ex.supervision {
                    if let Some(l) = y.iter_mut().find(|l| **l == 0) {
                        *l = -1;
                    }
                }
            }
        }
        let (loss, reg) = (c.loss_spec(), c.reg);
        let mut grads = ParamGrads::zeros_like(&params);
        batch_objective(&params, &batch, &loss, &reg, Some(&mut grads))?;
        let mut analytic = grads.to_flat();
        tamper(&case.name, &mut analytic);
        let numeric = finite_diff_gradient(
            |x| {
                let mut q = params.clone();
                q.set_flat(x);
                batch_objective(&q, &batch, &loss, &reg, None).unwrap_or(f64::NAN)
            },
            &params.to_flat(),
            GRAD_CHECK_H,
        )?;
        let max_rel_error = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR))
            .fold(0.0, f64::max);
        report.cases.push(GradCheckCase {
            name: case.name,
            model: c.model,
            loss: c.loss,
            max_rel_error,
            passed: max_rel_error < opts.tolerance,
        });
    }
    Ok(report)
}
