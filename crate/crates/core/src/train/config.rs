use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec, MilParams, DEFAULT_EPS};
use crate::model::{Corruption, ModelKind, NegativeSampling};
use crate::numeric::{ActivationKind, AdamConfig};
use crate::regularization::{DecayMode, RegSpec};

/// Named baseline configurations.
pub const PRESETS: [&str; 10] = [
    "mf-square",
    "mf-ce",
    "mf-mil",
    "ce-point-lin-sig",
    "ce-point-sig-sig",
    "ce-pair-lin-sig",
    "ce-pair-sig-sig",
    "multi-tanh-lin",
    "mil-lin-sig",
    "mil-sig-sig",
];

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub preset: Option<String>,
    pub model: ModelKind,
    pub dim: usize,
    pub encoder: ActivationKind,
    pub decoder: ActivationKind,
    pub loss: LossKind,
    /// Confidence slope for the square and point cross-entropy losses.
    pub conf_a: f64,
    /// Clamp margin for probability-based losses.
    pub eps: f64,
    pub mil: MilParams,
    pub reg: RegSpec,
    pub normalize_input: bool,
    pub normalize_first: bool,
    pub inverted_dropout: bool,
    pub negatives: NegativeSampling,
    pub batch_size: usize,
    pub iterations: usize,
    pub lr: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Interval between log records; `None` means `iterations / 20`, `Some(0)` disables logging.
    pub eval_every: Option<usize>,
    /// Cut-off of the validation NDCG recorded in the log.
    pub valid_k: usize,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            preset: None,
            model: ModelKind::Dae,
            dim: 200,
            encoder: ActivationKind::Linear,
            decoder: ActivationKind::Sigmoid,
            loss: LossKind::Mil,
            conf_a: 1.0,
            eps: DEFAULT_EPS,
            mil: MilParams::default(),
            reg: RegSpec::default(),
            normalize_input: true,
            normalize_first: true,
            inverted_dropout: false,
            negatives: NegativeSampling::Ratio(50),
            batch_size: 100,
            iterations: 120_000,
            lr: 1e-3,
            adam: AdamConfig::default(),
            seed: 0,
            eval_every: None,
            valid_k: 100,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = TrainConfig::default();
        c.apply_preset(name)?;
        Ok(c)
    }

    /// Overwrites the model, loss and regularization fields with a named preset.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let name = name.trim();
        let dae = |c: &mut TrainConfig, enc: ActivationKind, dec: ActivationKind| {
            c.model = ModelKind::Dae;
            c.dim = 200;
            c.encoder = enc;
            c.decoder = dec;
            c.iterations = 120_000;
            c.normalize_input = true;
            c.reg = RegSpec { lambda: 2e-5, decay_mode: DecayMode::Plain, alpha_enc: None, alpha_dec: None, dropout_q: 0.5 };
        };
        let mf = |c: &mut TrainConfig, dec: ActivationKind, lambda: f64| {
            c.model = ModelKind::Mf;
            c.dim = 100;
            c.encoder = ActivationKind::Linear;
            c.decoder = dec;
            c.iterations = 180_000;
            c.normalize_input = false;
            c.negatives = NegativeSampling::Ratio(100);
            c.reg = RegSpec { lambda, decay_mode: DecayMode::Scaled, alpha_enc: None, alpha_dec: None, dropout_q: 0.0 };
        };
        use ActivationKind::{Linear, Sigmoid, Tanh};
        match name {
            "mf-square" => {
                mf(self, Linear, 5.0);
                self.loss = LossKind::SquareConf;
            }
            "mf-ce" => {
                mf(self, Sigmoid, 100.0);
                self.loss = LossKind::CePoint;
            }
            "mf-mil" => {
                mf(self, Sigmoid, 100.0);
                self.loss = LossKind::Mil;
            }
            "ce-point-lin-sig" | "ce-point-sig-sig" => {
                dae(self, if name.contains("lin-sig") { Linear } else { Sigmoid }, Sigmoid);
                self.loss = LossKind::CePoint;
                self.negatives = NegativeSampling::Ratio(50);
            }
            "ce-pair-lin-sig" | "ce-pair-sig-sig" => {
                dae(self, if name.contains("lin-sig") { Linear } else { Sigmoid }, Sigmoid);
                self.loss = LossKind::CePair;
                self.negatives = NegativeSampling::Ratio(100);
            }
            "multi-tanh-lin" => {
                dae(self, Tanh, Linear);
                self.loss = LossKind::Multinomial;
                self.negatives = NegativeSampling::FullCatalogue;
            }
            "mil-lin-sig" | "mil-sig-sig" => {
                dae(self, if name.contains("lin-sig") { Linear } else { Sigmoid }, Sigmoid);
                self.loss = LossKind::Mil;
                self.reg.lambda = 5e-6;
                self.negatives = NegativeSampling::Ratio(50);
            }
            other => {
                return Err(Error::invalid(format!("unknown preset `{other}` (known: {})", PRESETS.join(", "))));
            }
        }
        self.conf_a = 1.0;
        self.eps = DEFAULT_EPS;
        self.mil = MilParams::default();
        self.lr = 1e-3;
        self.batch_size = 100;
        self.preset = Some(name.to_string());
        Ok(())
    }

    pub fn loss_spec(&self) -> LossSpec {
        match self.loss {
            LossKind::SquareConf => LossSpec::SquareConf { a: self.conf_a },
            LossKind::CePoint => LossSpec::CePoint { a: self.conf_a, eps: self.eps },
            LossKind::CePair => LossSpec::CePair { eps: self.eps },
            LossKind::Multinomial => LossSpec::Multinomial,
            LossKind::Mil => LossSpec::Mil(MilParams { eps: self.eps, ..self.mil }),
        }
    }

    pub fn corruption(&self) -> Corruption {
        Corruption {
            dropout: self.reg.dropout_q,
            normalize: self.normalize_input,
            normalize_first: self.normalize_first,
            inverted: self.inverted_dropout,
        }
    }

    pub fn log_interval(&self) -> usize {
        self.eval_every.unwrap_or((self.iterations / 20).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.valid_k == 0 {
            return Err(Error::invalid("valid_k must be at least 1"));
        }
        if self.loss == LossKind::CePair && self.negatives == NegativeSampling::FullCatalogue {
            return Err(Error::invalid("pair-wise loss needs a finite sampling ratio"));
        }
        self.loss_spec().validate()?;
        self.reg.validate()
    }

    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| Error::invalid(format!("invalid value `{v}` for `{key}`: expected {what}"));
        let float = || v.parse::<f64>().map_err(|_| bad("a number"));
        let count = || v.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let small = || v.parse::<u32>().map_err(|_| bad("a non-negative integer"));
        let flag = || match v {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            _ => Err(bad("a boolean")),
        };
        let optional = |parse: &dyn Fn() -> Result<f64>| -> Result<Option<f64>> {
            if v == "none" || v.is_empty() {
                Ok(None)
            } else {
                parse().map(Some)
            }
        };
        match key.trim() {
            "preset" => self.apply_preset(v)?,
            "model" => self.model = v.parse()?,
            "dim" => self.dim = count()?,
            "encoder" => self.encoder = v.parse()?,
            "decoder" => self.decoder = v.parse()?,
            "loss" => self.loss = v.parse()?,
            "a" => self.conf_a = float()?,
            "eps" => self.eps = float()?,
            "mil_a" => self.mil.a_mi = float()?,
            "mil_gamma" => self.mil.gamma_mi = small()?,
            "mil_gamma_pos" => self.mil.gamma_pos = small()?,
            "mil_gamma_neg" => self.mil.gamma_neg = if v == "none" { None } else { Some(small()?) },
            "mil_printed_sign" => self.mil.printed_negative_sign = flag()?,
            "lambda" => self.reg.lambda = float()?,
            "decay_mode" => self.reg.decay_mode = v.parse()?,
            "alpha_enc" => self.reg.alpha_enc = optional(&float)?,
            "alpha_dec" => self.reg.alpha_dec = optional(&float)?,
            "dropout" => self.reg.dropout_q = float()?,
            "normalize_input" => self.normalize_input = flag()?,
            "normalize_first" => self.normalize_first = flag()?,
            "inverted_dropout" => self.inverted_dropout = flag()?,
            "ratio" => {
                self.negatives = if v == "full" { NegativeSampling::FullCatalogue } else { NegativeSampling::Ratio(small()?) }
            }
            "batch_size" => self.batch_size = count()?,
            "iterations" => self.iterations = count()?,
            "lr" => self.lr = float()?,
            "beta1" => self.adam.beta1 = float()?,
            "beta2" => self.adam.beta2 = float()?,
            "adam_eps" => self.adam.eps = float()?,
            "seed" => self.seed = v.parse().map_err(|_| bad("an unsigned integer"))?,
            "eval_every" => self.eval_every = if v == "auto" { None } else { Some(count()?) },
            "valid_k" => self.valid_k = count()?,
            "threads" => self.threads = count()?.max(1),
            other => return Err(Error::invalid(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` document. A `preset` entry is applied before the others.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let entries = parse_kv(text)?;
        if let Some((_, p)) = entries.iter().find(|(k, _)| k == "preset") {
            self.apply_preset(p)?;
        }
        for (k, v) in entries.iter().filter(|(k, _)| k != "preset") {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut c = TrainConfig::default();
        c.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(c)
    }

    /// Every field as `key = value` pairs; [`TrainConfig::apply_text`] on the result reproduces `self`.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |a| a.to_string());
        let mut out = Vec::new();
        if let Some(p) = &self.preset {
            out.push(("preset", p.clone()));
        }
        out.extend([
            ("model", self.model.to_string()),
            ("dim", self.dim.to_string()),
            ("encoder", self.encoder.to_string()),
            ("decoder", self.decoder.to_string()),
            ("loss", self.loss.to_string()),
            ("a", self.conf_a.to_string()),
            ("eps", self.eps.to_string()),
            ("mil_a", self.mil.a_mi.to_string()),
            ("mil_gamma", self.mil.gamma_mi.to_string()),
            ("mil_gamma_pos", self.mil.gamma_pos.to_string()),
            ("mil_gamma_neg", self.mil.gamma_neg.map_or("none".into(), |g| g.to_string())),
            ("mil_printed_sign", self.mil.printed_negative_sign.to_string()),
            ("lambda", self.reg.lambda.to_string()),
            ("decay_mode", self.reg.decay_mode.to_string()),
            ("alpha_enc", opt(self.reg.alpha_enc)),
            ("alpha_dec", opt(self.reg.alpha_dec)),
            ("dropout", self.reg.dropout_q.to_string()),
            ("normalize_input", self.normalize_input.to_string()),
            ("normalize_first", self.normalize_first.to_string()),
            ("inverted_dropout", self.inverted_dropout.to_string()),
            (
                "ratio",
                match self.negatives {
                    NegativeSampling::FullCatalogue => "full".into(),
                    NegativeSampling::Ratio(r) => r.to_string(),
                },
            ),
            ("batch_size", self.batch_size.to_string()),
            ("iterations", self.iterations.to_string()),
            ("lr", self.lr.to_string()),
            ("beta1", self.adam.beta1.to_string()),
            ("beta2", self.adam.beta2.to_string()),
            ("adam_eps", self.adam.eps.to_string()),
            ("seed", self.seed.to_string()),
            ("eval_every", self.eval_every.map_or("auto".into(), |e| e.to_string())),
            ("valid_k", self.valid_k.to_string()),
            ("threads", self.threads.to_string()),
        ]);
        out
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_kv() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::input_at(n + 1, format!("expected `key = value`, got `{line}`")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
