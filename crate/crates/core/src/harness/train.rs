use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attention::{EdgeSet, InfluenceMatrix};
use crate::config::ModelConfig;
use crate::error::{GnlError, Result};
use crate::harness::data::{make_windows, zscore, Dataset, NormStats, Split, SplitWindows};
use crate::model::{mse, GnlModel, WindowSample};
use crate::optim::OptimizerState;

/// A dataset normalized on its training rows and cut into windows.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: Dataset,
    pub stats: NormStats,
    pub split: Split,
    pub windows: SplitWindows,
}

pub fn prepare(config: &ModelConfig, dataset: &Dataset) -> Result<Prepared> {
    prepare_with(config, dataset, Split::DEFAULT_FRACTIONS)
}

pub fn prepare_with(config: &ModelConfig, dataset: &Dataset, fractions: (f64, f64)) -> Result<Prepared> {
    if dataset.d_x != config.d_x {
        return Err(GnlError::Config(format!(
            "config d_x = {} but dataset has d_x = {}",
            config.d_x, dataset.d_x
        )));
    }
    let split = Split::chronological(dataset.len(), fractions.0, fractions.1)?;
    let (normalized, stats) = zscore(dataset, split.train.clone())?;
    let windows = make_windows(&normalized.rows, config.window, config.horizon, &split)?;
    if windows.train.is_empty() {
        return Err(GnlError::Argument(format!(
            "no training windows: {} training rows, window {} and horizon {}",
            split.train.len(),
            config.window,
            config.horizon
        )));
    }
    Ok(Prepared {
        dataset: normalized,
        stats,
        split,
        windows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// mean one-step MSE over the training windows, as seen during the pass
    pub train_loss: f64,
    pub train_objective: f64,
    /// mean one-step MSE over the validation windows after the pass
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// epoch whose parameters were kept; `None` means the initial model
    pub best_epoch: Option<usize>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_objective,val_loss\n");
        for e in &self.epochs {
            let val = e.val_loss.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.train_objective, val);
        }
        out
    }
}

pub struct Trained {
    pub model: GnlModel,
    pub history: History,
    pub prepared: Prepared,
}

/// Called with the influence matrices of every training forward pass.
pub type AttentionObserver<'a> = dyn FnMut(&[InfluenceMatrix]) + 'a;

/// Normalizes, splits and trains with the dataset's prior edges, if any.
pub fn train(config: &ModelConfig, dataset: &Dataset) -> Result<Trained> {
    let prepared = prepare(config, dataset)?;
    let (model, history) = train_prepared(config, &prepared, dataset.prior_edges.clone(), None)?;
    Ok(Trained {
        model,
        history,
        prepared,
    })
}

/// Mean one-step MSE of `model` over `samples`.
pub fn mean_loss(model: &GnlModel, samples: &[WindowSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(GnlError::Argument("no windows to score".into()));
    }
    let mut total = 0.0;
    for s in samples {
        let target = s
            .targets
            .first()
            .ok_or_else(|| GnlError::Argument("window has no target".into()))?;
        let pred = model.forward_window(&s.inputs)?.prediction;
        total += mse(&pred, target, model.node_count())?;
    }
    Ok(total / samples.len() as f64)
}

pub fn train_prepared(
    config: &ModelConfig,
    prepared: &Prepared,
    edges: Option<EdgeSet>,
    mut observer: Option<&mut AttentionObserver<'_>>,
) -> Result<(GnlModel, History)> {
    let n = prepared.dataset.node_count();
    let mut model = GnlModel::new(config.clone(), n, edges)?;
    let reg = config.regularizer();
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, config.beta)?;
    let mut params = model.params();
    let mut history = History::default();
    let mut best: Option<(f64, GnlModel)> = None;
    let val = &prepared.windows.val;

    for epoch in 1..=config.epochs {
        let (mut loss_sum, mut obj_sum) = (0.0, 0.0);
        for (w, sample) in prepared.windows.train.iter().enumerate() {
            let mut seen: Option<(f64, f64)> = None;
            opt.step(&mut params, |theta| {
                let mut probe = model.clone();
                probe.set_params(theta.to_vec())?;
                let eval = probe.evaluate_window(sample, reg)?;
                if !eval.loss.is_finite() || !eval.objective.is_finite() {
                    return Err(GnlError::Training {
                        epoch,
                        window: w,
                        message: format!("non-finite loss {}", eval.loss),
                    });
                }
                if let Some(obs) = observer.as_deref_mut() {
                    obs(&eval.attention);
                }
                seen.get_or_insert((eval.loss, eval.objective));
                Ok(eval.gradients)
            })?;
            if params.iter().any(|p| !p.is_finite()) {
                return Err(GnlError::Training {
                    epoch,
                    window: w,
                    message: "parameters became non-finite".into(),
                });
            }
            let (l, o) = seen.expect("optimizer evaluates the gradient");
            loss_sum += l;
            obj_sum += o;
        }
        model.set_params(params.clone())?;
        let count = prepared.windows.train.len() as f64;
        let val_loss = if val.is_empty() {
            None
        } else {
            Some(mean_loss(&model, val)?)
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / count,
            train_objective: obj_sum / count,
            val_loss,
        });
        // without validation windows the latest epoch wins
        let score = val_loss.unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(b, _)| score < *b || val_loss.is_none()) {
            best = Some((score, model.clone()));
            history.best_epoch = Some(epoch);
        }
    }
    let model = best.map(|(_, m)| m).unwrap_or(model);
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::{linear_diffusion, SyntheticSpec};
    use crate::optim::OptimizerKind;

    fn small_config(epochs: usize) -> ModelConfig {
        ModelConfig {
            d_h: 6,
            d_a: 4,
            epochs,
            learning_rate: 0.01,
            ..ModelConfig::default()
        }
    }

    fn small_data() -> Dataset {
        linear_diffusion(&SyntheticSpec {
            steps: 80,
            ..SyntheticSpec::default()
        })
        .unwrap()
        .dataset
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let cfg = small_config(0);
        let data = small_data();
        let trained = train(&cfg, &data).unwrap();
        assert_eq!(trained.model, GnlModel::new(cfg, data.node_count(), None).unwrap());
        assert!(trained.history.epochs.is_empty());
        assert_eq!(trained.history.best_epoch, None);
    }

    #[test]
    fn history_is_reproducible() {
        let cfg = small_config(2);
        let data = small_data();
        let a = train(&cfg, &data).unwrap();
        let b = train(&cfg, &data).unwrap();
        assert_eq!(a.history.to_csv(), b.history.to_csv());
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn diverging_run_reports_epoch_and_window() {
        let cfg = ModelConfig {
            optimizer: OptimizerKind::Pg,
            learning_rate: 1e200,
            ..small_config(3)
        };
        match train(&cfg, &small_data()) {
            Err(GnlError::Training { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected training error, got {:?}", other.map(|t| t.history)),
        }
    }

    #[test]
    fn mismatched_feature_width_is_a_config_error() {
        let cfg = ModelConfig { d_x: 2, ..small_config(1) };
        assert!(matches!(train(&cfg, &small_data()), Err(GnlError::Config(_))));
    }
}
