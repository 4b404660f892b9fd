//! Run configuration and its flat `key=value` text form.
//!
//! Config files are UTF-8, one `key=value` per line, `#` starts a comment.
//! The same keys are accepted by `--set key=value` on the command line.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::data::AugmentOptions;
use crate::error::{Error, Result};
use crate::graph::LambdaMax;

/// How per-frame LSTM responses are reduced to one feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalAgg {
    /// Mean of the output gates `o_t` over all frames.
    #[default]
    Mean,
    /// Output gate of the final frame only.
    Last,
}

impl FromStr for TemporalAgg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(TemporalAgg::Mean),
            "last" => Ok(TemporalAgg::Last),
            _ => Err(Error::Config(format!("temporal_agg must be mean|last, got `{s}`"))),
        }
    }
}

impl fmt::Display for TemporalAgg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemporalAgg::Mean => "mean",
            TemporalAgg::Last => "last",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F64,
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64" => Ok(Precision::F64),
            _ => Err(Error::Config(format!("precision must be f64, got `{s}`"))),
        }
    }
}

/// Default power-iteration settings when `power` is selected.
pub const POWER_TOL: f64 = 1e-6;
pub const POWER_MAX_ITERS: usize = 10_000;

fn parse_lambda(s: &str) -> Result<LambdaMax> {
    if s == "power" {
        return Ok(LambdaMax::PowerIteration {
            tol: POWER_TOL,
            max_iters: POWER_MAX_ITERS,
        });
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Config(format!("lambda_max must be a number or `power`, got `{s}`")))?;
    if !(v > 0.0) {
        return Err(Error::Config(format!("lambda_max must be positive, got {v}")));
    }
    Ok(LambdaMax::Fixed(v))
}

fn lambda_to_string(l: LambdaMax) -> String {
    match l {
        LambdaMax::Fixed(v) => format!("{v:?}"),
        LambdaMax::PowerIteration { .. } => "power".into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub channels: (usize, usize),
    pub hidden: usize,
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub temporal_agg: TemporalAgg,
    pub precision: Precision,
    /// Include the two attending layers; `false` is the ablated network.
    pub attend: bool,
    pub lambda_max: LambdaMax,
    pub pooled_lambda_max: LambdaMax,
    pub augment: bool,
    pub segments: usize,
    pub scale_lo: f64,
    pub scale_hi: f64,
    /// Rotate poses into the body frame when the manifest names the
    /// reference joints.
    pub rotate_align: bool,
    pub grad_clip: Option<f64>,
    /// Multiplicative learning-rate decay per epoch; 1 disables it.
    pub lr_decay: f64,
    /// Stop once test accuracy reaches this value.
    pub target_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 10,
            channels: (32, 64),
            hidden: 256,
            lr: 0.02,
            momentum: 0.9,
            epochs: 100,
            batch_size: 1,
            seed: 0,
            temporal_agg: TemporalAgg::Mean,
            precision: Precision::F64,
            attend: true,
            lambda_max: LambdaMax::Fixed(2.0),
            pooled_lambda_max: LambdaMax::Fixed(2.0),
            augment: true,
            segments: 12,
            scale_lo: 0.98,
            scale_hi: 1.02,
            rotate_align: true,
            grad_clip: None,
            lr_decay: 1.0,
            target_accuracy: None,
        }
    }
}

pub const CONFIG_KEYS: [&str; 21] = [
    "k",
    "channels",
    "hidden",
    "lr",
    "momentum",
    "epochs",
    "batch_size",
    "seed",
    "temporal_agg",
    "precision",
    "attend",
    "lambda_max",
    "pooled_lambda_max",
    "augment",
    "segments",
    "scale_lo",
    "scale_hi",
    "rotate_align",
    "grad_clip",
    "lr_decay",
    "target_accuracy",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn opt_num(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "none" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("K must be >= 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("lr must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must be in [0, 1)".into()));
        }
        if self.channels.0 == 0 || self.channels.1 == 0 || self.hidden == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.batch_size == 0 || self.segments == 0 {
            return Err(Error::Config("batch_size and segments must be positive".into()));
        }
        if self.scale_lo > self.scale_hi || !(self.scale_lo > 0.0) {
            return Err(Error::Config("need 0 < scale_lo <= scale_hi".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config("lr_decay must be in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn augment_options(&self) -> AugmentOptions {
        AugmentOptions {
            segments: self.segments,
            scale_lo: self.scale_lo,
            scale_hi: self.scale_hi,
        }
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "k" | "K" => self.k = num(key, value)?,
            "channels" => {
                let (a, b) = value
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("channels must be `a,b`, got `{value}`")))?;
                self.channels = (num(key, a.trim())?, num(key, b.trim())?);
            }
            "hidden" => self.hidden = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "momentum" => self.momentum = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "temporal_agg" => self.temporal_agg = value.parse()?,
            "precision" => self.precision = value.parse()?,
            "attend" => self.attend = num(key, value)?,
            "lambda_max" => self.lambda_max = parse_lambda(value)?,
            "pooled_lambda_max" => self.pooled_lambda_max = parse_lambda(value)?,
            "augment" => self.augment = num(key, value)?,
            "segments" => self.segments = num(key, value)?,
            "scale_lo" => self.scale_lo = num(key, value)?,
            "scale_hi" => self.scale_hi = num(key, value)?,
            "rotate_align" => self.rotate_align = num(key, value)?,
            "grad_clip" => self.grad_clip = opt_num(key, value)?,
            "lr_decay" => self.lr_decay = num(key, value)?,
            "target_accuracy" => self.target_accuracy = opt_num(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key `{other}`; valid keys: {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses config text; later lines override earlier ones.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            cfg.set(k, v).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }

    /// `(key, value)` pairs that [`TrainConfig::set`] parses back to `self`.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:?}"));
        vec![
            ("k", self.k.to_string()),
            ("channels", format!("{},{}", self.channels.0, self.channels.1)),
            ("hidden", self.hidden.to_string()),
            ("lr", format!("{:?}", self.lr)),
            ("momentum", format!("{:?}", self.momentum)),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("seed", self.seed.to_string()),
            ("temporal_agg", self.temporal_agg.to_string()),
            ("precision", "f64".into()),
            ("attend", self.attend.to_string()),
            ("lambda_max", lambda_to_string(self.lambda_max)),
            ("pooled_lambda_max", lambda_to_string(self.pooled_lambda_max)),
            ("augment", self.augment.to_string()),
            ("segments", self.segments.to_string()),
            ("scale_lo", format!("{:?}", self.scale_lo)),
            ("scale_hi", format!("{:?}", self.scale_hi)),
            ("rotate_align", self.rotate_align.to_string()),
            ("grad_clip", opt(self.grad_clip)),
            ("lr_decay", format!("{:?}", self.lr_decay)),
            ("target_accuracy", opt(self.target_accuracy)),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Single-line form used in checkpoint headers.
    pub fn to_inline(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_inline(s: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for pair in s.split_whitespace() {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad pair `{pair}`")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
