//! Gated diffusive unit: one hidden-state update for one node.
//!
//! The cell reads the node input `x`, its previous state `h` and the
//! aggregated neighbourhood vector `z`. A forget gate masks `z`, an evolve
//! gate masks `h`, and two selection gates `g` and `r` blend four candidate
//! states built from the masked and unmasked inputs:
//!
//! ```text
//! h' = g r tanh(Wu[x, z~, h~]) + (1-g) r tanh(Wu[x, z, h~])
//!    + g (1-r) tanh(Wu[x, z~, h]) + (1-g)(1-r) tanh(Wu[x, z, h])
//! ```
//!
//! All gates read the unmasked concatenation `[x, z, h]` and carry no bias.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{GnlError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GduDims {
    /// node input features
    pub d_x: usize,
    /// hidden state
    pub d_h: usize,
    /// aggregated neighbourhood vector
    pub d_a: usize,
}

impl GduDims {
    pub fn new(d_x: usize, d_h: usize, d_a: usize) -> Result<Self> {
        let dims = GduDims { d_x, d_h, d_a };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_x == 0 || self.d_h == 0 || self.d_a == 0 {
            return Err(GnlError::Config(format!("dimensions must be positive, got {self:?}")));
        }
        Ok(())
    }

    /// Width of `[x, z, h]`.
    pub fn gate_input(&self) -> usize {
        self.d_x + self.d_a + self.d_h
    }
}

/// Weight matrices of the five gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GduParameters {
    /// `W_f`, d_a rows
    pub forget: Tensor,
    /// `W_e`, d_h rows
    pub evolve: Tensor,
    /// `W_u`, shared by all four candidate states
    pub update: Tensor,
    /// `W_g`
    pub select_g: Tensor,
    /// `W_r`
    pub select_r: Tensor,
}

/// Tape handles for [`GduParameters`].
#[derive(Clone, Copy, Debug)]
pub struct GduVars {
    pub forget: Var,
    pub evolve: Var,
    pub update: Var,
    pub select_g: Var,
    pub select_r: Var,
}

pub(crate) fn glorot_uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let s = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-s..=s)).collect();
    Tensor::matrix(rows, cols, data).expect("glorot shape")
}

/// Glorot-uniform initialisation, deterministic in `seed`.
pub fn init_gdu_params(dims: GduDims, seed: u64) -> GduParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GduParameters::sample(dims, &mut rng)
}

impl GduParameters {
    pub(crate) fn sample<R: Rng>(dims: GduDims, rng: &mut R) -> Self {
        let w = dims.gate_input();
        GduParameters {
            forget: glorot_uniform(dims.d_a, w, rng),
            evolve: glorot_uniform(dims.d_h, w, rng),
            update: glorot_uniform(dims.d_h, w, rng),
            select_g: glorot_uniform(dims.d_h, w, rng),
            select_r: glorot_uniform(dims.d_h, w, rng),
        }
    }

    pub fn zeros(dims: GduDims) -> Self {
        let w = dims.gate_input();
        GduParameters {
            forget: Tensor::zeros(&[dims.d_a, w]),
            evolve: Tensor::zeros(&[dims.d_h, w]),
            update: Tensor::zeros(&[dims.d_h, w]),
            select_g: Tensor::zeros(&[dims.d_h, w]),
            select_r: Tensor::zeros(&[dims.d_h, w]),
        }
    }

    pub fn named(&self) -> [(&'static str, &Tensor); 5] {
        [
            ("W_f", &self.forget),
            ("W_e", &self.evolve),
            ("W_u", &self.update),
            ("W_g", &self.select_g),
            ("W_r", &self.select_r),
        ]
    }

    pub fn arrays_mut(&mut self) -> [&mut Tensor; 5] {
        [
            &mut self.forget,
            &mut self.evolve,
            &mut self.update,
            &mut self.select_g,
            &mut self.select_r,
        ]
    }

    pub fn validate(&self, dims: GduDims) -> Result<()> {
        let w = dims.gate_input();
        for (name, t) in self.named() {
            let rows = if name == "W_f" { dims.d_a } else { dims.d_h };
            if t.shape() != [rows, w] {
                return Err(GnlError::shape(format!("gdu matrix {name}"), t.shape(), &[rows, w]));
            }
        }
        Ok(())
    }

    pub fn register(&self, tape: &mut Tape) -> GduVars {
        GduVars {
            forget: tape.leaf(self.forget.clone()),
            evolve: tape.leaf(self.evolve.clone()),
            update: tape.leaf(self.update.clone()),
            select_g: tape.leaf(self.select_g.clone()),
            select_r: tape.leaf(self.select_r.clone()),
        }
    }
}

fn check_vars(tape: &Tape, vars: &GduVars, dims: GduDims) -> Result<()> {
    let w = dims.gate_input();
    let checks = [
        ("W_f", vars.forget, dims.d_a),
        ("W_e", vars.evolve, dims.d_h),
        ("W_u", vars.update, dims.d_h),
        ("W_g", vars.select_g, dims.d_h),
        ("W_r", vars.select_r, dims.d_h),
    ];
    for (name, var, rows) in checks {
        let shape = tape.value(var).shape();
        if shape != [rows, w] {
            return Err(GnlError::shape(format!("gdu matrix {name}"), shape, &[rows, w]));
        }
    }
    Ok(())
}

/// One state update; returns the handle of the next hidden state.
pub fn gdu_step(tape: &mut Tape, x: Var, h: Var, z: Var, params: &GduVars, dims: GduDims) -> Result<Var> {
    check_vars(tape, params, dims)?;
    for (name, var, len) in [("x", x, dims.d_x), ("h", h, dims.d_h), ("z", z, dims.d_a)] {
        let shape = tape.value(var).shape();
        if shape != [len] {
            return Err(GnlError::shape(format!("gdu input {name}"), shape, &[len]));
        }
    }

    let xzh = tape.concat(&[x, z, h])?;
    let gate = |tape: &mut Tape, w: Var| -> Result<Var> {
        let pre = tape.matvec(w, xzh)?;
        Ok(tape.sigmoid(pre))
    };
    let f = gate(tape, params.forget)?;
    let e = gate(tape, params.evolve)?;
    let g = gate(tape, params.select_g)?;
    let r = gate(tape, params.select_r)?;
    let z_masked = tape.hadamard(f, z)?;
    let h_masked = tape.hadamard(e, h)?;

    let candidate = |tape: &mut Tape, zz: Var, hh: Var| -> Result<Var> {
        let input = tape.concat(&[x, zz, hh])?;
        let pre = tape.matvec(params.update, input)?;
        Ok(tape.tanh(pre))
    };
    let both = candidate(tape, z_masked, h_masked)?;
    let h_only = candidate(tape, z, h_masked)?;
    let z_only = candidate(tape, z_masked, h)?;
    let neither = candidate(tape, z, h)?;

    let not_g = tape.one_minus(g);
    let not_r = tape.one_minus(r);
    let branch = |tape: &mut Tape, a: Var, b: Var, c: Var| -> Result<Var> {
        let ab = tape.hadamard(a, b)?;
        tape.hadamard(ab, c)
    };
    let t1 = branch(tape, g, r, both)?;
    let t2 = branch(tape, not_g, r, h_only)?;
    let t3 = branch(tape, g, not_r, z_only)?;
    let t4 = branch(tape, not_g, not_r, neither)?;
    tape.add_all(&[t1, t2, t3, t4])
}
