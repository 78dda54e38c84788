use std::fmt;

use crate::attention::{EdgeSet, InfluenceMatrix};
use crate::error::{GnlError, Result};
use crate::harness::data::NormStats;
use crate::model::{GnlModel, WindowSample};

/// Pooled regression metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    /// `None` when the truth has zero spread
    pub r2: Option<f64>,
    pub count: usize,
}

impl Metrics {
    pub fn compute(predictions: &[f64], truth: &[f64]) -> Result<Self> {
        if predictions.len() != truth.len() {
            return Err(GnlError::shape("metrics", &[predictions.len()], &[truth.len()]));
        }
        if truth.is_empty() {
            return Err(GnlError::Argument("metrics over zero values".into()));
        }
        let n = truth.len() as f64;
        let mean = truth.iter().sum::<f64>() / n;
        let (mut abs, mut ss_res, mut ss_tot) = (0.0, 0.0, 0.0);
        for (p, t) in predictions.iter().zip(truth) {
            abs += (p - t).abs();
            ss_res += (p - t).powi(2);
            ss_tot += (t - mean).powi(2);
        }
        Ok(Metrics {
            mae: abs / n,
            rmse: (ss_res / n).sqrt(),
            r2: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
            count: truth.len(),
        })
    }

    pub fn mse(&self) -> f64 {
        self.rmse * self.rmse
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MAE: {}", self.mae)?;
        writeln!(f, "RMSE: {}", self.rmse)?;
        match self.r2 {
            Some(r2) => writeln!(f, "R2: {r2}"),
            None => writeln!(f, "R2: undefined"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub pooled: Metrics,
    /// metrics of the k-th forecast step alone
    pub per_step: Vec<Metrics>,
}

impl EvalReport {
    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("windows: {}\n", self.pooled.count / self.per_step.len().max(1));
        out.push_str(&self.pooled.to_string());
        for (k, m) in self.per_step.iter().enumerate() {
            out.push_str(&format!("step{}_MAE: {}\n", k + 1, m.mae));
            out.push_str(&format!("step{}_RMSE: {}\n", k + 1, m.rmse));
            match m.r2 {
                Some(r2) => out.push_str(&format!("step{}_R2: {r2}\n", k + 1)),
                None => out.push_str(&format!("step{}_R2: undefined\n", k + 1)),
            }
        }
        out
    }
}

/// Recursive forecasts over every target step of every sample, scored in
/// original units when `stats` is given.
pub fn evaluate(model: &GnlModel, samples: &[WindowSample], stats: Option<&NormStats>) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(GnlError::Argument("evaluation needs at least one window".into()));
    }
    let horizon = samples[0].targets.len();
    let mut per_step_pred = vec![Vec::new(); horizon];
    let mut per_step_true = vec![Vec::new(); horizon];
    for s in samples {
        if s.targets.len() != horizon {
            return Err(GnlError::shape("evaluation horizon", &[s.targets.len()], &[horizon]));
        }
        let preds = model.predict_horizon(&s.inputs, horizon)?;
        for (k, (p, t)) in preds.iter().zip(&s.targets).enumerate() {
            let (p, t) = match stats {
                Some(st) => (st.denormalize(p), st.denormalize(t)),
                None => (p.clone(), t.clone()),
            };
            per_step_pred[k].extend(p);
            per_step_true[k].extend(t);
        }
    }
    let all_pred: Vec<f64> = per_step_pred.concat();
    let all_true: Vec<f64> = per_step_true.concat();
    let per_step = per_step_pred
        .iter()
        .zip(&per_step_true)
        .map(|(p, t)| Metrics::compute(p, t))
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        pooled: Metrics::compute(&all_pred, &all_true)?,
        per_step,
    })
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half.
pub fn ranking_auc(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(GnlError::Argument("AUC needs positives and negatives".into()));
    }
    let mut wins = 0.0;
    for p in positives {
        for n in negatives {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (positives.len() * negatives.len()) as f64)
}

/// Influence coefficients averaged over every step of every sample.
pub fn mean_influence(model: &GnlModel, samples: &[WindowSample]) -> Result<InfluenceMatrix> {
    let n = model.node_count();
    let mut sum = vec![0.0; n * n];
    let mut count = 0usize;
    for s in samples {
        for m in model.forward_window(&s.inputs)?.attention {
            for (j, acc) in sum.chunks_mut(n).enumerate() {
                acc.iter_mut().zip(m.row(j)).for_each(|(a, v)| *a += v);
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(GnlError::Argument("no windows to average".into()));
    }
    sum.iter_mut().for_each(|v| *v /= count as f64);
    InfluenceMatrix::from_dense(n, sum)
}

/// AUC of `influence` separating the links in `truth` from the other
/// candidate links.
pub fn edge_recovery_auc(influence: &InfluenceMatrix, candidates: &EdgeSet, truth: &EdgeSet) -> Result<f64> {
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for &(j, i) in candidates.edges() {
        let v = influence.get(j, i);
        if truth.contains(j, i) {
            pos.push(v);
        } else {
            neg.push(v);
        }
    }
    ranking_auc(&pos, &neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_predictions() {
        let m = Metrics::compute(&[1.0, 2.0, 5.0], &[1.0, 2.0, 5.0]).unwrap();
        assert_eq!((m.mae, m.rmse, m.r2), (0.0, 0.0, Some(1.0)));
    }

    #[test]
    fn hand_evaluated_metrics() {
        let m = Metrics::compute(&[1.0, 2.0], &[1.0, 3.0]).unwrap();
        assert_eq!(m.mae, 0.5);
        assert_abs_diff_eq!(m.rmse, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_eq!(m.r2, Some(0.5));
    }

    #[test]
    fn constant_truth_leaves_r2_undefined() {
        let m = Metrics::compute(&[1.0, 2.0], &[3.0, 3.0]).unwrap();
        assert_eq!(m.r2, None);
        assert!(m.to_string().contains("R2: undefined"));
        assert!(Metrics::compute(&[], &[]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(ranking_auc(&[3.0, 4.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(ranking_auc(&[1.0], &[1.0]).unwrap(), 0.5);
        assert_eq!(ranking_auc(&[0.0], &[1.0, -1.0]).unwrap(), 0.5);
        assert!(ranking_auc(&[], &[1.0]).is_err());
    }

    #[test]
    fn edge_auc_ranks_candidates() {
        let candidates = EdgeSet::fully_connected(3);
        let truth = EdgeSet::from_pairs(3, [(0, 1), (0, 2)], false).unwrap();
        let m = InfluenceMatrix::from_dense(3, vec![0.0, 0.9, 0.8, 0.1, 0.0, 0.2, 0.3, 0.1, 0.0]).unwrap();
        assert_eq!(edge_recovery_auc(&m, &candidates, &truth).unwrap(), 1.0);
    }
}
