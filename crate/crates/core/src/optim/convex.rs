//! Small convex lasso problems `1/2 ||A x - b||^2 + beta ||x||_1` with a
//! coordinate-descent reference optimum, used to check the ISTA and FISTA
//! convergence bounds empirically.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::prox::soft_threshold;
use super::state::{apg_step, pg_step, OptimizerKind, OptimizerState};
use crate::autodiff::Tensor;
use crate::error::{GnlError, Result};

#[derive(Clone, Debug)]
pub struct ConvexLassoInstance {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub beta: f64,
    /// largest eigenvalue of `A^T A`
    pub lipschitz: f64,
    pub optimum: Vec<f64>,
    pub optimal_value: f64,
}

impl ConvexLassoInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, beta: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(GnlError::shape("lasso instance", &[a.nrows(), a.ncols()], &[b.len()]));
        }
        if !(beta >= 0.0) {
            return Err(GnlError::Argument(format!("beta must be non-negative, got {beta}")));
        }
        let gram = a.transpose() * &a;
        let lipschitz = SymmetricEigen::new(gram).eigenvalues.max();
        if !(lipschitz > 0.0) {
            return Err(GnlError::Argument("A^T A must have a positive top eigenvalue".into()));
        }
        let optimum = coordinate_descent(&a, &b, beta, 1e-15, 100_000);
        let mut inst = ConvexLassoInstance {
            a,
            b,
            beta,
            lipschitz,
            optimal_value: 0.0,
            optimum,
        };
        inst.optimal_value = inst.objective(&inst.optimum);
        Ok(inst)
    }

    /// [`ConvexLassoInstance::random_conditioned`] with condition number 10.
    pub fn random_well_conditioned(n: usize, seed: u64) -> Result<Self> {
        Self::random_conditioned(n, 10.0, seed)
    }

    /// `A = U diag(s) V^T` with random orthogonal `U`, `V` and singular
    /// values log-spaced from 1 to `cond`; `b` standard normal; `beta` a
    /// twentieth of `||A^T b||_inf` so the optimum is nonzero.
    pub fn random_conditioned(n: usize, cond: f64, seed: u64) -> Result<Self> {
        if n == 0 || !(cond >= 1.0) {
            return Err(GnlError::Argument(format!("need n > 0 and cond >= 1, got {n} and {cond}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gaussian = |r: usize, c: usize| DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
        let u = gaussian(n, n).qr().q();
        let v = gaussian(n, n).qr().q();
        let b = gaussian(n, 1).column(0).into_owned();
        let s = DVector::from_fn(n, |i, _| {
            let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
            cond.powf(frac)
        });
        let a = u * DMatrix::from_diagonal(&s) * v.transpose();
        let beta = 0.05 * (a.transpose() * &b).amax();
        ConvexLassoInstance::new(a, b, beta)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        let x = DVector::from_column_slice(theta);
        let r = &self.a * x - &self.b;
        0.5 * r.norm_squared() + self.beta * theta.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn smooth_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(theta);
        (self.a.transpose() * (&self.a * x - &self.b)).as_slice().to_vec()
    }

    /// Largest violation of the lasso optimality conditions at `theta`.
    pub fn stationarity(&self, theta: &[f64]) -> f64 {
        let g = self.smooth_gradient(theta);
        g.iter()
            .zip(theta)
            .map(|(&gi, &ti)| {
                if ti > 0.0 {
                    (gi + self.beta).abs()
                } else if ti < 0.0 {
                    (gi - self.beta).abs()
                } else {
                    (gi.abs() - self.beta).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Cyclic coordinate descent for the lasso, recomputing the residual each
/// sweep. Stops when no coordinate moves by more than `tol`.
pub fn coordinate_descent(a: &DMatrix<f64>, b: &DVector<f64>, beta: f64, tol: f64, max_sweeps: usize) -> Vec<f64> {
    let n = a.ncols();
    let col_sq: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    let mut x = DVector::<f64>::zeros(n);
    for _ in 0..max_sweeps {
        let mut residual = b - a * &x;
        let mut largest: f64 = 0.0;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let col = a.column(j);
            let rho = col.dot(&residual) + col_sq[j] * x[j];
            let updated = soft_threshold(&[rho], beta).expect("beta >= 0")[0] / col_sq[j];
            let delta = updated - x[j];
            if delta != 0.0 {
                residual -= col * delta;
                x[j] = updated;
            }
            largest = largest.max(delta.abs());
        }
        if largest <= tol {
            break;
        }
    }
    x.as_slice().to_vec()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProxMethod {
    Pg,
    Apg,
}

impl std::str::FromStr for ProxMethod {
    type Err = GnlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pg" | "ista" => Ok(ProxMethod::Pg),
            "apg" | "fista" => Ok(ProxMethod::Apg),
            other => Err(GnlError::Argument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundRow {
    pub k: usize,
    /// `L(theta_k) - L*`
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative means violated
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub method: ProxMethod,
    pub step: f64,
    pub rows: Vec<BoundRow>,
    /// objective value after each iteration
    pub objectives: Vec<f64>,
}

impl BoundReport {
    pub fn violations(&self) -> Vec<BoundRow> {
        self.rows.iter().copied().filter(|r| r.margin < 0.0).collect()
    }

    /// `k,lhs,rhs,margin` rows under a header.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("k,lhs,rhs,margin\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:e},{:e},{:e}", r.k, r.lhs, r.rhs, r.margin);
        }
        out
    }
}

/// Runs `method` from the origin for `k_max` iterations with step `t` and
/// checks the rate bound at every iterate.
pub fn verify_theorem_bounds(inst: &ConvexLassoInstance, method: ProxMethod, t: f64, k_max: usize) -> Result<BoundReport> {
    verify_theorem_bounds_from(inst, method, t, k_max, &vec![0.0; inst.dim()])
}

pub fn verify_theorem_bounds_from(
    inst: &ConvexLassoInstance,
    method: ProxMethod,
    t: f64,
    k_max: usize,
    start: &[f64],
) -> Result<BoundReport> {
    if !(t > 0.0 && t < 1.0 / inst.lipschitz) {
        return Err(GnlError::Precondition(format!(
            "step size {t} must lie in (0, 1/L) with 1/L = {}",
            1.0 / inst.lipschitz
        )));
    }
    if start.len() != inst.dim() {
        return Err(GnlError::shape("start point", &[start.len()], &[inst.dim()]));
    }
    let kind = match method {
        ProxMethod::Pg => OptimizerKind::Pg,
        ProxMethod::Apg => OptimizerKind::Apg,
    };
    let mut state = OptimizerState::new(kind, t, inst.beta)?;
    let dist0: f64 = start.iter().zip(&inst.optimum).map(|(a, b)| (a - b).powi(2)).sum();
    let grad_at = |p: &[Tensor]| -> Result<Vec<Tensor>> { Ok(vec![Tensor::vector(inst.smooth_gradient(p[0].data()))]) };

    let mut current = vec![Tensor::vector(start.to_vec())];
    let mut previous = current.clone();
    let mut rows = Vec::with_capacity(k_max);
    let mut objectives = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let next = match method {
            ProxMethod::Pg => pg_step(&state, &current, &grad_at(&current)?)?,
            ProxMethod::Apg => apg_step(&mut state, &current, &previous, grad_at)?,
        };
        previous = std::mem::replace(&mut current, next);

        let value = inst.objective(current[0].data());
        let lhs = value - inst.optimal_value;
        let kf = k as f64;
        let rhs = match method {
            ProxMethod::Pg => dist0 / (2.0 * t * kf),
            ProxMethod::Apg => 2.0 * dist0 / (t * (kf + 1.0).powi(2)),
        };
        rows.push(BoundRow {
            k,
            lhs,
            rhs,
            margin: rhs - lhs,
        });
        objectives.push(value);
    }
    Ok(BoundReport {
        method,
        step: t,
        rows,
        objectives,
    })
}
