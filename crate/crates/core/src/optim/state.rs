use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::prox::{fnorm_gradient, l1_subgradient, soft_threshold_in_place, FNORM_GUARD};
use crate::autodiff::Tensor;
use crate::error::{GnlError, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    AdamPw,
    AdamF,
    Pg,
    Apg,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [
        OptimizerKind::AdamF,
        OptimizerKind::AdamPw,
        OptimizerKind::Pg,
        OptimizerKind::Apg,
    ];

    pub fn regularizer(self) -> Regularizer {
        match self {
            OptimizerKind::AdamF => Regularizer::Fro,
            _ => Regularizer::L1,
        }
    }
}

impl FromStr for OptimizerKind {
    type Err = GnlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam_pw" => Ok(OptimizerKind::AdamPw),
            "adam_f" => Ok(OptimizerKind::AdamF),
            "pg" => Ok(OptimizerKind::Pg),
            "apg" => Ok(OptimizerKind::Apg),
            other => Err(GnlError::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::AdamPw => "adam_pw",
            OptimizerKind::AdamF => "adam_f",
            OptimizerKind::Pg => "pg",
            OptimizerKind::Apg => "apg",
        })
    }
}

/// Penalty added to the data loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularizer {
    /// sum of absolute values over all arrays
    L1,
    /// sum over arrays of each array's Frobenius norm
    Fro,
    None,
}

impl Regularizer {
    pub fn penalty(self, params: &[Tensor]) -> f64 {
        match self {
            Regularizer::L1 => params.iter().map(Tensor::l1_norm).sum(),
            Regularizer::Fro => params.iter().map(Tensor::fro_norm).sum(),
            Regularizer::None => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdamMoments {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// number of updates applied so far
    pub t: i32,
}

/// Mutable state of one learning scheme.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    /// step size `t`
    pub learning_rate: f64,
    pub beta: f64,
    pub adam: Option<AdamMoments>,
    /// iteration index of the next accelerated step, starting at 1
    pub k: usize,
    /// `Theta^(k-2)` for the accelerated scheme
    pub previous: Option<Vec<Tensor>>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, learning_rate: f64, beta: f64) -> Result<Self> {
        if !(learning_rate > 0.0) {
            return Err(GnlError::Argument(format!("step size must be positive, got {learning_rate}")));
        }
        if !(beta >= 0.0) {
            return Err(GnlError::Argument(format!("beta must be non-negative, got {beta}")));
        }
        Ok(OptimizerState {
            kind,
            learning_rate,
            beta,
            adam: None,
            k: 1,
            previous: None,
        })
    }

    /// One update of `params`. `grad_at` returns the smooth-loss gradient
    /// at the point it is given.
    pub fn step<F>(&mut self, params: &mut Vec<Tensor>, mut grad_at: F) -> Result<()>
    where
        F: FnMut(&[Tensor]) -> Result<Vec<Tensor>>,
    {
        match self.kind {
            OptimizerKind::AdamPw | OptimizerKind::AdamF => {
                let g = grad_at(params)?;
                let reg = if self.beta == 0.0 {
                    Regularizer::None
                } else {
                    self.kind.regularizer()
                };
                adam_reg_step(self, params, &g, reg)
            }
            OptimizerKind::Pg => {
                let g = grad_at(params)?;
                *params = pg_step(self, params, &g)?;
                Ok(())
            }
            OptimizerKind::Apg => {
                let prev2 = self.previous.take().unwrap_or_else(|| params.clone());
                let next = apg_step(self, params, &prev2, grad_at)?;
                self.previous = Some(std::mem::replace(params, next));
                Ok(())
            }
        }
    }
}

fn check_shapes(theta: &[Tensor], grads: &[Tensor]) -> Result<()> {
    if theta.len() != grads.len() {
        return Err(GnlError::shape("optimizer arrays", &[theta.len()], &[grads.len()]));
    }
    for (t, g) in theta.iter().zip(grads) {
        if t.shape() != g.shape() {
            return Err(GnlError::shape("optimizer gradient", t.shape(), g.shape()));
        }
    }
    Ok(())
}

/// Adam with bias correction on `smooth + beta * d(reg)`.
pub fn adam_reg_step(state: &mut OptimizerState, theta: &mut [Tensor], smooth: &[Tensor], reg: Regularizer) -> Result<()> {
    match (state.kind, reg) {
        (OptimizerKind::AdamPw, Regularizer::L1 | Regularizer::None)
        | (OptimizerKind::AdamF, Regularizer::Fro | Regularizer::None) => {}
        (kind, reg) => {
            return Err(GnlError::Config(format!("optimizer {kind} cannot apply regularizer {reg:?}")));
        }
    }
    check_shapes(theta, smooth)?;
    let moments = state.adam.get_or_insert_with(|| AdamMoments {
        m: theta.iter().map(|t| vec![0.0; t.len()]).collect(),
        v: theta.iter().map(|t| vec![0.0; t.len()]).collect(),
        t: 0,
    });
    moments.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(moments.t);
    let c2 = 1.0 - ADAM_BETA2.powi(moments.t);
    let lr = state.learning_rate;

    for (a, (p, g)) in theta.iter_mut().zip(smooth).enumerate() {
        let reg_grad = match reg {
            Regularizer::L1 => Some(l1_subgradient(p.data())),
            Regularizer::Fro => Some(fnorm_gradient(p.data(), FNORM_GUARD)),
            Regularizer::None => None,
        };
        let (m, v) = (&mut moments.m[a], &mut moments.v[a]);
        for (i, w) in p.data_mut().iter_mut().enumerate() {
            let mut gi = g.data()[i];
            if let Some(r) = &reg_grad {
                gi += state.beta * r[i];
            }
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gi;
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

fn prox_gradient(state: &OptimizerState, point: &[Tensor], grads: &[Tensor]) -> Result<Vec<Tensor>> {
    check_shapes(point, grads)?;
    let t = state.learning_rate;
    let kappa = state.beta * t;
    point
        .iter()
        .zip(grads)
        .map(|(p, g)| {
            let mut data: Vec<f64> = p.data().iter().zip(g.data()).map(|(w, d)| w - t * d).collect();
            soft_threshold_in_place(&mut data, kappa)?;
            Tensor::new(p.shape().to_vec(), data)
        })
        .collect()
}

/// `S_{beta t}(theta - t grad)`.
pub fn pg_step(state: &OptimizerState, theta: &[Tensor], smooth_grads: &[Tensor]) -> Result<Vec<Tensor>> {
    prox_gradient(state, theta, smooth_grads)
}

/// Accelerated step from `Theta^(k-1) = prev` and `Theta^(k-2) = prev2`:
/// extrapolate with `(k-2)/(k+1)`, take the gradient there, then threshold.
/// Advances `state.k`.
pub fn apg_step<F>(state: &mut OptimizerState, prev: &[Tensor], prev2: &[Tensor], mut grad_at: F) -> Result<Vec<Tensor>>
where
    F: FnMut(&[Tensor]) -> Result<Vec<Tensor>>,
{
    if state.k < 1 {
        return Err(GnlError::Argument("accelerated step index must start at 1".into()));
    }
    check_shapes(prev, prev2)?;
    let k = state.k as f64;
    let coef = (k - 2.0) / (k + 1.0);
    let v: Vec<Tensor> = prev
        .iter()
        .zip(prev2)
        .map(|(a, b)| {
            let data = a.data().iter().zip(b.data()).map(|(x, y)| x + coef * (x - y)).collect();
            Tensor::new(a.shape().to_vec(), data)
        })
        .collect::<Result<_>>()?;
    let g = grad_at(&v)?;
    let next = prox_gradient(state, &v, &g)?;
    state.k += 1;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(v: f64) -> Vec<Tensor> {
        vec![Tensor::vector(vec![v])]
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut st = OptimizerState::new(OptimizerKind::AdamPw, 0.1, 0.0).unwrap();
        let mut theta = vec![Tensor::vector(vec![1.0, -2.0])];
        let zero = vec![Tensor::zeros(&[2])];
        adam_reg_step(&mut st, &mut theta, &zero, Regularizer::L1).unwrap();
        assert_eq!(theta[0].data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_adam_step_has_magnitude_close_to_lr() {
        let mut st = OptimizerState::new(OptimizerKind::AdamF, 0.01, 0.0).unwrap();
        let mut theta = vec![Tensor::vector(vec![0.0, 0.0, 0.0])];
        let g = vec![Tensor::vector(vec![3.0, -1e-3, 0.0])];
        adam_reg_step(&mut st, &mut theta, &g, Regularizer::None).unwrap();
        let d = theta[0].data();
        assert_abs_diff_eq!(d[0], -0.01 * 3.0 / (3.0 + 1e-8), epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.01 * 1e-3 / (1e-3 + 1e-8), epsilon = 1e-15);
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn adam_trace_on_scalar_quadratic() {
        // f(w) = (w - 3)^2 / 2, gradient w - 3, from w = 0 with t = 0.1.
        let mut st = OptimizerState::new(OptimizerKind::AdamPw, 0.1, 0.0).unwrap();
        let mut theta = scalar(0.0);
        for _ in 0..2 {
            let g = scalar(theta[0].data()[0] - 3.0);
            adam_reg_step(&mut st, &mut theta, &g, Regularizer::L1).unwrap();
        }
        // hand iteration:
        // step 1: g=-3, m=-0.3, v=0.009, m^=-3, v^=9 -> w = 0.1/(1+1e-8*1/3)... = 0.1 / (3 + 1e-8) * 3
        let w1 = 0.1 * 3.0 / (3.0 + 1e-8);
        // step 2: g = w1 - 3
        let g2 = w1 - 3.0;
        let m = 0.9 * -0.3 + 0.1 * g2;
        let v = 0.999 * 0.009 + 0.001 * g2 * g2;
        let m_hat = m / (1.0 - 0.81);
        let v_hat = v / (1.0 - 0.999f64.powi(2));
        let w2 = w1 - 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
        assert_abs_diff_eq!(theta[0].data()[0], w2, epsilon = 1e-14);
    }

    #[test]
    fn zero_beta_piecewise_equals_plain_adam() {
        let grads = [vec![0.3, -1.2, 0.0], vec![-0.5, 0.8, 2.0], vec![0.01, 0.02, -0.03]];
        let start = vec![Tensor::vector(vec![0.5, 0.0, -1.0])];
        let mut a = start.clone();
        let mut b = start;
        let mut sa = OptimizerState::new(OptimizerKind::AdamPw, 0.05, 0.0).unwrap();
        let mut sb = OptimizerState::new(OptimizerKind::AdamPw, 0.05, 0.0).unwrap();
        for g in &grads {
            let g = vec![Tensor::vector(g.clone())];
            adam_reg_step(&mut sa, &mut a, &g, Regularizer::L1).unwrap();
            adam_reg_step(&mut sb, &mut b, &g, Regularizer::None).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_regularizer_is_rejected() {
        let mut st = OptimizerState::new(OptimizerKind::AdamPw, 0.1, 0.1).unwrap();
        let mut theta = scalar(1.0);
        assert!(adam_reg_step(&mut st, &mut theta, &scalar(0.0), Regularizer::Fro).is_err());
        let mut st = OptimizerState::new(OptimizerKind::Pg, 0.1, 0.1).unwrap();
        assert!(adam_reg_step(&mut st, &mut theta, &scalar(0.0), Regularizer::L1).is_err());
        assert!(adam_reg_step(&mut st, &mut theta, &[Tensor::zeros(&[2])], Regularizer::L1).is_err());
    }

    #[test]
    fn pg_without_penalty_is_gradient_descent() {
        let st = OptimizerState::new(OptimizerKind::Pg, 0.25, 0.0).unwrap();
        let theta = vec![Tensor::vector(vec![1.0, -2.0])];
        let g = vec![Tensor::vector(vec![4.0, -4.0])];
        assert_eq!(pg_step(&st, &theta, &g).unwrap()[0].data(), &[0.0, -1.0]);
    }

    #[test]
    fn pg_solves_identity_lasso_in_one_step() {
        // 1/2 ||theta - b||^2 + ||theta||_1 with b = (3, 0)
        let st = OptimizerState::new(OptimizerKind::Pg, 1.0, 1.0).unwrap();
        let theta = vec![Tensor::zeros(&[2])];
        let g = vec![Tensor::vector(vec![-3.0, 0.0])];
        assert_eq!(pg_step(&st, &theta, &g).unwrap()[0].data(), &[2.0, 0.0]);
    }

    #[test]
    fn first_apg_step_equals_pg_step() {
        let mut st = OptimizerState::new(OptimizerKind::Apg, 0.3, 0.2).unwrap();
        let theta = vec![Tensor::vector(vec![1.0, -0.5, 0.05])];
        let grad = |p: &[Tensor]| -> Result<Vec<Tensor>> {
            Ok(vec![Tensor::vector(p[0].data().iter().map(|x| 2.0 * x - 1.0).collect())])
        };
        let pg = pg_step(&st, &theta, &grad(&theta).unwrap()).unwrap();
        let apg = apg_step(&mut st, &theta, &theta, grad).unwrap();
        assert_eq!(pg, apg);
        assert_eq!(st.k, 2);
    }

    #[test]
    fn apg_trace_on_scalar_quadratic() {
        // f(w) = w^2, gradient 2w, t = 0.1, no penalty, w0 = 1
        // k=1: v = w0 = 1, w1 = 1 - 0.2 = 0.8
        // k=2: coef 0, v = 0.8, w2 = 0.64
        // k=3: coef 1/4, v = 0.64 + 0.25 (0.64 - 0.8) = 0.6, w3 = 0.48
        let mut st = OptimizerState::new(OptimizerKind::Apg, 0.1, 0.0).unwrap();
        let mut theta = scalar(1.0);
        let grad = |p: &[Tensor]| -> Result<Vec<Tensor>> { Ok(scalar(2.0 * p[0].data()[0])) };
        let mut trace = Vec::new();
        for _ in 0..3 {
            st.step(&mut theta, grad).unwrap();
            trace.push(theta[0].data()[0]);
        }
        for (a, b) in trace.iter().zip([0.8, 0.64, 0.48]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in OptimizerKind::ALL {
            assert_eq!(k.to_string().parse::<OptimizerKind>().unwrap(), k);
        }
        assert!("sgd".parse::<OptimizerKind>().is_err());
    }
}
