//! Model and training configuration, read from flat `key = value` files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attention::{Aggregator, Normalization};
use crate::error::{GnlError, Result};
use crate::gdu::GduDims;
use crate::optim::{OptimizerKind, Regularizer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_x: usize,
    pub d_h: usize,
    pub d_a: usize,
    /// number of past snapshots per window
    pub window: usize,
    pub horizon: usize,
    /// weight of the sparsity term
    pub beta: f64,
    pub negative_slope: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub aggregator: Aggregator,
    pub normalization: Normalization,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_x: 1,
            d_h: 32,
            d_a: 16,
            window: 5,
            horizon: 1,
            beta: 2e-5,
            negative_slope: 0.5,
            learning_rate: 1e-3,
            epochs: 50,
            optimizer: OptimizerKind::AdamPw,
            aggregator: Aggregator::Attention,
            normalization: Normalization::PerSourceOut,
            seed: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "d_x",
    "d_h",
    "d_a",
    "window",
    "horizon",
    "beta",
    "negative_slope",
    "learning_rate",
    "epochs",
    "optimizer",
    "aggregator",
    "normalization",
    "seed",
];

impl ModelConfig {
    /// Traffic-speed setting: hidden 32, aggregation 16, beta 2e-5.
    pub fn metr_la() -> Self {
        ModelConfig::default()
    }

    /// Stock-price setting: hidden 64, aggregation 32, beta 2e-3.
    pub fn nasdaq100() -> Self {
        ModelConfig {
            d_h: 64,
            d_a: 32,
            beta: 2e-3,
            ..ModelConfig::default()
        }
    }

    pub fn dims(&self) -> GduDims {
        GduDims {
            d_x: self.d_x,
            d_h: self.d_h,
            d_a: self.d_a,
        }
    }

    /// Regularizer implied by the optimizer; `None` when `beta == 0`.
    pub fn regularizer(&self) -> Regularizer {
        if self.beta == 0.0 {
            Regularizer::None
        } else {
            self.optimizer.regularizer()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims().validate()?;
        if self.window == 0 || self.horizon == 0 {
            return Err(GnlError::Config("window and horizon must be at least 1".into()));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(GnlError::Config(format!("beta must be non-negative, got {}", self.beta)));
        }
        if !(self.negative_slope > 0.0) {
            return Err(GnlError::Config(format!(
                "negative_slope must be positive, got {}",
                self.negative_slope
            )));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(GnlError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.aggregator == Aggregator::None && self.d_a != self.d_h {
            return Err(GnlError::Config(format!(
                "aggregator `none` needs d_a == d_h, got d_a={}, d_h={}",
                self.d_a, self.d_h
            )));
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| GnlError::Config(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "d_x" => self.d_x = num(key, value)?,
            "d_h" => self.d_h = num(key, value)?,
            "d_a" => self.d_a = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "negative_slope" => self.negative_slope = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "optimizer" => self.optimizer = value.parse()?,
            "aggregator" => self.aggregator = value.parse()?,
            "normalization" => self.normalization = value.parse()?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(GnlError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment; `preset = metr_la | nasdaq100` must come first if present.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ModelConfig::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| GnlError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(GnlError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            if key == "preset" {
                if !seen.is_empty() {
                    return Err(GnlError::Config("`preset` must be the first key".into()));
                }
                cfg = match value {
                    "metr_la" => ModelConfig::metr_la(),
                    "nasdaq100" => ModelConfig::nasdaq100(),
                    other => return Err(GnlError::Config(format!("unknown preset `{other}`"))),
                };
            } else {
                cfg.set(key, value)
                    .map_err(|e| GnlError::Config(format!("line {}: {e}", lineno + 1)))?;
            }
            seen.push(key);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GnlError::io(path, e))?;
        ModelConfig::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = match *key {
                "d_x" => self.d_x.to_string(),
                "d_h" => self.d_h.to_string(),
                "d_a" => self.d_a.to_string(),
                "window" => self.window.to_string(),
                "horizon" => self.horizon.to_string(),
                "beta" => self.beta.to_string(),
                "negative_slope" => self.negative_slope.to_string(),
                "learning_rate" => self.learning_rate.to_string(),
                "epochs" => self.epochs.to_string(),
                "optimizer" => self.optimizer.to_string(),
                "aggregator" => self.aggregator.to_string(),
                "normalization" => self.normalization.to_string(),
                "seed" => self.seed.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}
