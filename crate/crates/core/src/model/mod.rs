//! Sliding-window unrolled network: per-timestamp attention + GDU update
//! for all nodes, then a linear head on the final hidden states.

pub mod checkpoint;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

use crate::attention::{
    aggregate, influence_coefficients, influence_scores, AttentionParameters, AttentionVars, EdgeSet,
    InfluenceMatrix,
};
use crate::autodiff::{Gradients, Tape, Tensor, Var};
use crate::config::ModelConfig;
use crate::error::{GnlError, Result};
use crate::gdu::{gdu_step, glorot_uniform, GduDims, GduParameters, GduVars};
use crate::optim::{Regularizer, FNORM_GUARD};

/// Names of the trainable arrays, in canonical order.
pub const PARAM_NAMES: [&str; 9] = ["W_f", "W_e", "W_u", "W_g", "W_r", "W_a", "w_a", "fc_weight", "fc_bias"];

/// `tau` input snapshots followed by `horizon` target snapshots. Each
/// snapshot is a flat row of `N * d_x` values, node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    /// row index of the first input snapshot
    pub start: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnlModel {
    pub config: ModelConfig,
    pub gdu: GduParameters,
    pub att: AttentionParameters,
    /// d_x x d_h
    pub fc_weight: Tensor,
    pub fc_bias: Tensor,
    /// initial hidden state per node; never trained
    pub h0: Vec<Tensor>,
    edges: EdgeSet,
}

/// Tape handles for every trainable array.
#[derive(Clone, Copy, Debug)]
pub struct ModelVars {
    pub gdu: GduVars,
    pub att: AttentionVars,
    pub fc_weight: Var,
    pub fc_bias: Var,
}

impl ModelVars {
    pub fn all(&self) -> [Var; 9] {
        [
            self.gdu.forget,
            self.gdu.evolve,
            self.gdu.update,
            self.gdu.select_g,
            self.gdu.select_r,
            self.att.projection,
            self.att.score,
            self.fc_weight,
            self.fc_bias,
        ]
    }

    /// Inverse of [`ModelVars::all`].
    pub fn from_slice(v: &[Var]) -> Result<Self> {
        if v.len() != PARAM_NAMES.len() {
            return Err(GnlError::shape("parameter handles", &[v.len()], &[PARAM_NAMES.len()]));
        }
        Ok(ModelVars {
            gdu: GduVars {
                forget: v[0],
                evolve: v[1],
                update: v[2],
                select_g: v[3],
                select_r: v[4],
            },
            att: AttentionVars {
                projection: v[5],
                score: v[6],
            },
            fc_weight: v[7],
            fc_bias: v[8],
        })
    }
}

/// Handles produced by one unrolled window.
#[derive(Clone, Debug)]
pub struct WindowTrace {
    pub hidden: Vec<Var>,
    /// one `d_x` vector per node
    pub predictions: Vec<Var>,
    /// one coefficient per edge for each input step, plus one from the
    /// final hidden states
    pub alphas: Vec<Vec<Var>>,
}

/// Plain values of a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    pub hidden: Vec<Vec<f64>>,
    /// flat `N * d_x`
    pub prediction: Vec<f64>,
    pub attention: Vec<InfluenceMatrix>,
}

/// Loss, objective and gradients for one window.
#[derive(Clone, Debug)]
pub struct WindowEvaluation {
    pub loss: f64,
    pub objective: f64,
    /// smooth-loss gradients in canonical order
    pub gradients: Vec<Tensor>,
    pub attention: Vec<InfluenceMatrix>,
}

impl GnlModel {
    /// Random initialisation from `config.seed`: Glorot-uniform weights,
    /// zero head bias, standard-normal `h0`. Without `edges` every ordered
    /// pair of distinct nodes is a candidate link.
    pub fn new(config: ModelConfig, n_nodes: usize, edges: Option<EdgeSet>) -> Result<Self> {
        config.validate()?;
        if n_nodes == 0 {
            return Err(GnlError::Config("model needs at least one node".into()));
        }
        let edges = match edges {
            Some(e) if e.node_count() != n_nodes => {
                return Err(GnlError::Config(format!(
                    "edge set covers {} nodes, data has {n_nodes}",
                    e.node_count()
                )))
            }
            Some(e) => e,
            None => EdgeSet::fully_connected(n_nodes),
        };
        let dims = config.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let gdu = GduParameters::sample(dims, &mut rng);
        let att = AttentionParameters::sample(dims, &mut rng);
        let fc_weight = glorot_uniform(dims.d_x, dims.d_h, &mut rng);
        let fc_bias = Tensor::zeros(&[dims.d_x]);
        let h0 = (0..n_nodes)
            .map(|_| {
                let v: Vec<f64> = (0..dims.d_h).map(|_| StandardNormal.sample(&mut rng)).collect();
                Tensor::vector(v)
            })
            .collect();
        Ok(GnlModel {
            config,
            gdu,
            att,
            fc_weight,
            fc_bias,
            h0,
            edges,
        })
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        params: Vec<Tensor>,
        h0: Vec<Tensor>,
        edges: EdgeSet,
    ) -> Result<Self> {
        config.validate()?;
        let dims = config.dims();
        let mut model = GnlModel {
            gdu: GduParameters::zeros(dims),
            att: AttentionParameters::zeros(dims),
            fc_weight: Tensor::zeros(&[dims.d_x, dims.d_h]),
            fc_bias: Tensor::zeros(&[dims.d_x]),
            config,
            h0,
            edges,
        };
        model.set_params(params)?;
        for h in &model.h0 {
            if h.shape() != [dims.d_h] {
                return Err(GnlError::shape("h0", h.shape(), &[dims.d_h]));
            }
        }
        if model.h0.len() != model.edges.node_count() {
            return Err(GnlError::Config("h0 and edge set disagree on node count".into()));
        }
        Ok(model)
    }

    pub fn dims(&self) -> GduDims {
        self.config.dims()
    }

    pub fn node_count(&self) -> usize {
        self.h0.len()
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    /// Trainable arrays in [`PARAM_NAMES`] order.
    pub fn params(&self) -> Vec<Tensor> {
        vec![
            self.gdu.forget.clone(),
            self.gdu.evolve.clone(),
            self.gdu.update.clone(),
            self.gdu.select_g.clone(),
            self.gdu.select_r.clone(),
            self.att.projection.clone(),
            self.att.score.clone(),
            self.fc_weight.clone(),
            self.fc_bias.clone(),
        ]
    }

    pub fn set_params(&mut self, params: Vec<Tensor>) -> Result<()> {
        if params.len() != PARAM_NAMES.len() {
            return Err(GnlError::shape("parameter list", &[params.len()], &[PARAM_NAMES.len()]));
        }
        let mut it = params.into_iter();
        let mut next = || it.next().expect("length checked");
        let gdu = GduParameters {
            forget: next(),
            evolve: next(),
            update: next(),
            select_g: next(),
            select_r: next(),
        };
        let att = AttentionParameters {
            projection: next(),
            score: next(),
        };
        let (fc_weight, fc_bias) = (next(), next());
        let dims = self.dims();
        gdu.validate(dims)?;
        att.validate(dims)?;
        if fc_weight.shape() != [dims.d_x, dims.d_h] {
            return Err(GnlError::shape("fc_weight", fc_weight.shape(), &[dims.d_x, dims.d_h]));
        }
        if fc_bias.shape() != [dims.d_x] {
            return Err(GnlError::shape("fc_bias", fc_bias.shape(), &[dims.d_x]));
        }
        self.gdu = gdu;
        self.att = att;
        self.fc_weight = fc_weight;
        self.fc_bias = fc_bias;
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(Tensor::len).sum()
    }

    pub fn zero_parameter_count(&self) -> usize {
        self.params().iter().map(Tensor::zero_count).sum()
    }

    pub fn register(&self, tape: &mut Tape) -> ModelVars {
        let vars: Vec<Var> = self.params().into_iter().map(|p| tape.leaf(p)).collect();
        ModelVars::from_slice(&vars).expect("one handle per array")
    }

    /// Unrolls one window on `tape` using the given parameter handles.
    pub fn trace_window(&self, tape: &mut Tape, vars: &ModelVars, inputs: &[Vec<f64>]) -> Result<WindowTrace> {
        let dims = self.dims();
        let n = self.node_count();
        if inputs.len() != self.config.window {
            return Err(GnlError::shape("window length", &[inputs.len()], &[self.config.window]));
        }
        for row in inputs {
            if row.len() != n * dims.d_x {
                return Err(GnlError::shape("snapshot", &[row.len()], &[n * dims.d_x]));
            }
        }
        let (slope, norm, variant) = (self.config.negative_slope, self.config.normalization, self.config.aggregator);

        let mut hidden: Vec<Var> = self.h0.iter().map(|h| tape.leaf(h.clone())).collect();
        let mut alphas = Vec::with_capacity(inputs.len() + 1);
        for row in inputs {
            let scores = influence_scores(tape, &hidden, &self.edges, &vars.att, slope)?;
            let alpha = influence_coefficients(tape, &scores, &self.edges, norm)?;
            let z = aggregate(tape, &hidden, &scores, &alpha, &self.edges, variant)?;
            let mut next = Vec::with_capacity(n);
            for i in 0..n {
                let x = tape.leaf(Tensor::vector(row[i * dims.d_x..(i + 1) * dims.d_x].to_vec()));
                next.push(gdu_step(tape, x, hidden[i], z[i], &vars.gdu, dims)?);
            }
            hidden = next;
            alphas.push(alpha);
        }
        // links inferred for the predicted snapshot, from the final states
        let scores = influence_scores(tape, &hidden, &self.edges, &vars.att, slope)?;
        alphas.push(influence_coefficients(tape, &scores, &self.edges, norm)?);

        let predictions = hidden
            .iter()
            .map(|&h| {
                let lin = tape.matvec(vars.fc_weight, h)?;
                tape.add(lin, vars.fc_bias)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WindowTrace {
            hidden,
            predictions,
            alphas,
        })
    }

    fn influence_history(&self, tape: &Tape, trace: &WindowTrace) -> Vec<InfluenceMatrix> {
        trace
            .alphas
            .iter()
            .map(|a| InfluenceMatrix::from_edges(tape, a, &self.edges))
            .collect()
    }

    /// Forward pass over one window of `tau` snapshots.
    pub fn forward_window(&self, inputs: &[Vec<f64>]) -> Result<ForwardOutput> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let trace = self.trace_window(&mut tape, &vars, inputs)?;
        let prediction = trace
            .predictions
            .iter()
            .flat_map(|&p| tape.value(p).data().to_vec())
            .collect();
        Ok(ForwardOutput {
            hidden: trace.hidden.iter().map(|&h| tape.value(h).data().to_vec()).collect(),
            prediction,
            attention: self.influence_history(&tape, &trace),
        })
    }

    /// Recursive multi-step forecast: each prediction becomes the newest
    /// input and the oldest snapshot is dropped.
    pub fn predict_horizon(&self, inputs: &[Vec<f64>], horizon: usize) -> Result<Vec<Vec<f64>>> {
        if horizon < 1 {
            return Err(GnlError::Argument("horizon must be at least 1".into()));
        }
        let mut window = inputs.to_vec();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let pred = self.forward_window(&window)?.prediction;
            window.remove(0);
            window.push(pred.clone());
            out.push(pred);
        }
        Ok(out)
    }

    /// Full training objective of one window on `tape`, with the parameter
    /// handles in canonical order.
    pub fn window_objective(&self, tape: &mut Tape, params: &[Var], sample: &WindowSample, reg: Regularizer) -> Result<Var> {
        let vars = ModelVars::from_slice(params)?;
        let target = sample
            .targets
            .first()
            .ok_or_else(|| GnlError::Argument("window has no target".into()))?;
        let trace = self.trace_window(tape, &vars, &sample.inputs)?;
        let loss = mse_loss(tape, &trace.predictions, target)?;
        objective(tape, loss, params, self.config.beta, reg)
    }

    /// One-step loss, objective and smooth-loss gradients for `sample`.
    pub fn evaluate_window(&self, sample: &WindowSample, reg: Regularizer) -> Result<WindowEvaluation> {
        let target = sample
            .targets
            .first()
            .ok_or_else(|| GnlError::Argument("window has no target".into()))?;
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let trace = self.trace_window(&mut tape, &vars, &sample.inputs)?;
        let loss = mse_loss(&mut tape, &trace.predictions, target)?;
        let grads = tape.backward(loss)?;
        let loss_value = tape.scalar(loss);
        let params = self.params();
        let objective = loss_value + self.config.beta * reg.penalty(&params);
        Ok(WindowEvaluation {
            loss: loss_value,
            objective,
            gradients: gradient_list(&grads, &vars),
            attention: self.influence_history(&tape, &trace),
        })
    }
}

fn gradient_list(grads: &Gradients, vars: &ModelVars) -> Vec<Tensor> {
    vars.all().iter().map(|&v| grads.wrt(v)).collect()
}

/// `(1/N) sum_i ||pred_i - target_i||^2` with `target` a flat `N * d_x` row.
pub fn mse_loss(tape: &mut Tape, predictions: &[Var], target: &[f64]) -> Result<Var> {
    if predictions.is_empty() {
        return Err(GnlError::Argument("mse over zero nodes".into()));
    }
    let stacked = tape.concat(predictions)?;
    let len = tape.value(stacked).len();
    if len != target.len() {
        return Err(GnlError::shape("mse", &[len], &[target.len()]));
    }
    let t = tape.leaf(Tensor::vector(target.to_vec()));
    let diff = tape.sub(stacked, t)?;
    let sq = tape.sum_squares(diff);
    Ok(tape.scale(sq, 1.0 / predictions.len() as f64))
}

/// Plain-value counterpart of [`mse_loss`].
pub fn mse(prediction: &[f64], target: &[f64], n_nodes: usize) -> Result<f64> {
    if prediction.len() != target.len() {
        return Err(GnlError::shape("mse", &[prediction.len()], &[target.len()]));
    }
    if n_nodes == 0 {
        return Err(GnlError::Argument("mse over zero nodes".into()));
    }
    let sq: f64 = prediction.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sq / n_nodes as f64)
}

/// `loss + beta * penalty(params)` on the tape.
pub fn objective(tape: &mut Tape, loss: Var, params: &[Var], beta: f64, reg: Regularizer) -> Result<Var> {
    if !(beta >= 0.0) {
        return Err(GnlError::Argument(format!("beta must be non-negative, got {beta}")));
    }
    if reg == Regularizer::None || params.is_empty() {
        return Ok(loss);
    }
    let terms: Vec<Var> = params
        .iter()
        .map(|&p| match reg {
            Regularizer::L1 => tape.abs_sum(p),
            Regularizer::Fro => tape.fro_norm(p, FNORM_GUARD),
            Regularizer::None => unreachable!(),
        })
        .collect();
    let penalty = tape.add_all(&terms)?;
    let scaled = tape.scale(penalty, beta);
    tape.add(loss, scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::Aggregator;
    use approx::assert_abs_diff_eq;

    fn small_config() -> ModelConfig {
        ModelConfig {
            d_x: 1,
            d_h: 3,
            d_a: 2,
            window: 2,
            ..ModelConfig::default()
        }
    }

    fn zeroed(mut model: GnlModel) -> GnlModel {
        let zeros: Vec<Tensor> = model.params().iter().map(|p| Tensor::zeros(p.shape())).collect();
        model.set_params(zeros).unwrap();
        model
    }

    #[test]
    fn zero_parameters_predict_the_bias() {
        let cfg = ModelConfig { window: 1, ..small_config() };
        let mut model = zeroed(GnlModel::new(cfg, 3, None).unwrap());
        model.fc_bias = Tensor::vector(vec![0.25]);
        let out = model.forward_window(&[vec![1.0, -2.0, 0.5]]).unwrap();
        assert!(out.hidden.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(out.prediction, vec![0.25; 3]);
        let roll = model.predict_horizon(&[vec![1.0, -2.0, 0.5]], 4).unwrap();
        assert!(roll.iter().all(|p| p == &vec![0.25; 3]));
    }

    #[test]
    fn single_node_ignores_projection() {
        let cfg = small_config();
        let a = GnlModel::new(cfg.clone(), 1, None).unwrap();
        let mut b = a.clone();
        b.att.projection = Tensor::matrix(2, 3, vec![5.0, -3.0, 1.0, 0.2, 9.0, -7.0]).unwrap();
        let inputs = vec![vec![0.3], vec![-1.1]];
        let (oa, ob) = (a.forward_window(&inputs).unwrap(), b.forward_window(&inputs).unwrap());
        assert_eq!(oa.prediction, ob.prediction);
        assert_eq!(oa.attention.len(), 3);
        assert!(oa.attention.iter().all(|m| m.size() == 1 && m.get(0, 0) == 0.0));
    }

    #[test]
    fn forward_is_deterministic() {
        let model = GnlModel::new(small_config(), 4, None).unwrap();
        let inputs = vec![vec![0.1, 0.2, -0.3, 0.4], vec![1.0, -1.0, 0.5, 0.0]];
        assert_eq!(model.forward_window(&inputs).unwrap(), model.forward_window(&inputs).unwrap());
        assert_eq!(model, GnlModel::new(small_config(), 4, None).unwrap());
    }

    #[test]
    fn horizon_one_equals_forward_and_rollout_shifts() {
        let model = GnlModel::new(small_config(), 3, None).unwrap();
        let inputs = vec![vec![0.1, 0.2, -0.3], vec![1.0, -1.0, 0.5]];
        let one = model.predict_horizon(&inputs, 1).unwrap();
        assert_eq!(one[0], model.forward_window(&inputs).unwrap().prediction);

        let three = model.predict_horizon(&inputs, 3).unwrap();
        let mut w = inputs.clone();
        for step in &three {
            let p = model.forward_window(&w).unwrap().prediction;
            assert_eq!(&p, step);
            w = vec![w[1].clone(), p];
        }
        assert!(model.predict_horizon(&inputs, 0).is_err());
    }

    #[test]
    fn shape_errors() {
        let model = GnlModel::new(small_config(), 3, None).unwrap();
        assert!(model.forward_window(&[vec![0.0; 3]]).is_err());
        assert!(model.forward_window(&[vec![0.0; 2], vec![0.0; 2]]).is_err());
        assert!(GnlModel::new(small_config(), 3, Some(EdgeSet::fully_connected(4))).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0], 2).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, -1.0], &[0.0, 0.0], 2).unwrap(), 1.0);
        let base = mse(&[0.3, -0.7, 1.1], &[0.0; 3], 3).unwrap();
        let scaled = mse(&[0.9, -2.1, 3.3], &[0.0; 3], 3).unwrap();
        assert_abs_diff_eq!(scaled, 9.0 * base, epsilon = 1e-12);
        // node reordering
        let a = mse(&[0.1, 0.5, -0.2], &[0.3, 0.0, 1.0], 3).unwrap();
        let b = mse(&[-0.2, 0.1, 0.5], &[1.0, 0.3, 0.0], 3).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        assert!(mse(&[1.0], &[1.0, 2.0], 1).is_err());

        let mut tape = Tape::new();
        let p: Vec<Var> = [1.0, -1.0].iter().map(|&v| tape.leaf(Tensor::vector(vec![v]))).collect();
        let l = mse_loss(&mut tape, &p, &[0.0, 0.0]).unwrap();
        assert_eq!(tape.scalar(l), 1.0);
    }

    #[test]
    fn objective_examples() {
        let mut tape = Tape::new();
        let loss = tape.leaf(Tensor::scalar(0.0));
        let p = tape.leaf(Tensor::matrix(2, 1, vec![3.0, -4.0]).unwrap());
        let l1 = objective(&mut tape, loss, &[p], 1.0, Regularizer::L1).unwrap();
        assert_eq!(tape.scalar(l1), 7.0);
        let fro = objective(&mut tape, loss, &[p], 1.0, Regularizer::Fro).unwrap();
        assert_eq!(tape.scalar(fro), 5.0);
        let none = objective(&mut tape, loss, &[p], 1.0, Regularizer::None).unwrap();
        assert_eq!(none, loss);
        let zero_beta = objective(&mut tape, loss, &[p], 0.0, Regularizer::L1).unwrap();
        assert_eq!(tape.scalar(zero_beta), 0.0);
        assert!(objective(&mut tape, loss, &[p], -1.0, Regularizer::L1).is_err());

        let flipped = tape.leaf(Tensor::matrix(2, 1, vec![-3.0, -4.0]).unwrap());
        let l1f = objective(&mut tape, loss, &[flipped], 1.0, Regularizer::L1).unwrap();
        assert_eq!(tape.scalar(l1f), 7.0);
    }

    #[test]
    fn no_aggregation_leaves_attention_untouched() {
        let cfg = ModelConfig {
            d_h: 3,
            d_a: 3,
            aggregator: Aggregator::None,
            ..small_config()
        };
        let model = GnlModel::new(cfg, 3, None).unwrap();
        let sample = WindowSample {
            start: 0,
            inputs: vec![vec![0.1, 0.2, -0.3], vec![1.0, -1.0, 0.5]],
            targets: vec![vec![0.4, 0.0, -0.2]],
        };
        let eval = model.evaluate_window(&sample, Regularizer::None).unwrap();
        assert!(eval.gradients[5].data().iter().all(|g| *g == 0.0));
        assert!(eval.gradients[6].data().iter().all(|g| *g == 0.0));

        let mut other = model.clone();
        other.att.projection = Tensor::zeros(&[3, 3]);
        other.att.score = Tensor::vector(vec![1.0; 6]);
        assert_eq!(
            model.forward_window(&sample.inputs).unwrap().prediction,
            other.forward_window(&sample.inputs).unwrap().prediction
        );
    }
}
