//! Append-only Wengert tape for reverse-mode differentiation.
//!
//! Every primitive evaluates eagerly, stores its output on the tape and
//! returns a [`Var`] handle. [`Tape::backward`] walks the nodes in reverse
//! insertion order, which is a valid reverse topological order because a
//! node can only reference handles that already exist.

use std::fmt;
use std::str::FromStr;

use super::tensor::Tensor;
use crate::error::{GnlError, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Componentwise nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    LeakyRelu(f64),
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::LeakyRelu(slope) => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    /// Derivative expressed through the input `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::LeakyRelu(slope) => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Activation::LeakyRelu(slope) if !(slope > 0.0) => Err(GnlError::Argument(format!(
                "leaky_relu slope must be positive, got {slope}"
            ))),
            _ => Ok(()),
        }
    }
}

impl FromStr for Activation {
    type Err = GnlError;

    /// Accepts `sigmoid`, `tanh` and `leaky_relu:<slope>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => {
                if let Some(slope) = other.strip_prefix("leaky_relu:") {
                    let slope: f64 = slope.parse().map_err(|_| {
                        GnlError::Argument(format!("bad leaky_relu slope `{slope}`"))
                    })?;
                    let act = Activation::LeakyRelu(slope);
                    act.validate()?;
                    Ok(act)
                } else {
                    Err(GnlError::Argument(format!("unknown activation `{other}`")))
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Sigmoid => write!(f, "sigmoid"),
            Activation::Tanh => write!(f, "tanh"),
            Activation::LeakyRelu(slope) => write!(f, "leaky_relu:{slope}"),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax with max-subtraction. Errors on an empty score set.
pub fn masked_softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(GnlError::Argument("softmax over an empty set".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatVec(Var, Var),
    Hadamard(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    /// `scale * x + shift`, componentwise.
    Affine {
        x: Var,
        scale: f64,
    },
    Concat(Vec<Var>),
    Slice {
        x: Var,
        start: usize,
    },
    Dot(Var, Var),
    Activate(Activation, Var),
    Softmax(Var),
    /// `sum_k w_k * v_k` with scalar weights.
    WeightedSum(Vec<(Var, Var)>),
    Sum(Var),
    SumSquares(Var),
    AbsSum(Var),
    FroNorm {
        x: Var,
        guard: f64,
    },
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Recorded computation graph. Rebuilt for every forward pass.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node on the tape.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `var`; zeros when the loss does not depend on it.
    pub fn wrt(&self, var: Var) -> Tensor {
        let shape = self.shapes[var.0].clone();
        match &self.grads[var.0] {
            Some(g) => Tensor::new(shape, g.clone()).expect("gradient shape"),
            None => Tensor::zeros(&shape),
        }
    }

    /// True if any path from `var` reaches the loss.
    pub fn is_reached(&self, var: Var) -> bool {
        self.grads[var.0].is_some()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Registers an input tensor. Parameters and constants are both leaves;
    /// a constant simply has its gradient ignored.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn scalar(&self, var: Var) -> f64 {
        self.nodes[var.0].value.data()[0]
    }

    fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    fn expect_vector(&self, var: Var, context: &str) -> Result<usize> {
        let t = self.value(var);
        if !t.is_vector() {
            return Err(GnlError::shape(context, t.shape(), &[t.len()]));
        }
        Ok(t.len())
    }

    fn same_shape(&self, a: Var, b: Var, context: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(GnlError::shape(context, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let (ma, vx) = (self.value(a), self.value(x));
        if !ma.is_matrix() || !vx.is_vector() || ma.cols() != vx.len() {
            return Err(GnlError::shape("matvec", ma.shape(), vx.shape()));
        }
        let (m, n) = (ma.rows(), ma.cols());
        let (ad, xd) = (ma.data(), vx.data());
        let out: Vec<f64> = (0..m)
            .map(|r| {
                let row = &ad[r * n..(r + 1) * n];
                row.iter().zip(xd).fold(0.0, |acc, (w, v)| acc + w * v)
            })
            .collect();
        Ok(self.push(Tensor::vector(out), Op::MatVec(a, x)))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "hadamard")?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x * y);
        Ok(self.push(out, Op::Hadamard(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x + y);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let out = zip_map(self.value(a), self.value(b), |x, y| x - y);
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Componentwise `scale * x + shift`.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let t = self.value(x);
        let data = t.data().iter().map(|v| scale * v + shift).collect();
        let out = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        self.push(out, Op::Affine { x, scale })
    }

    /// `1 - x`.
    pub fn one_minus(&mut self, x: Var) -> Var {
        self.affine(x, -1.0, 1.0)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.affine(x, c, 0.0)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(GnlError::Argument("concat of an empty list".into()));
        }
        let mut out = Vec::new();
        for &p in parts {
            self.expect_vector(p, "concat")?;
            out.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(Tensor::vector(out), Op::Concat(parts.to_vec())))
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.expect_vector(x, "slice")?;
        if start + len > n || len == 0 {
            return Err(GnlError::shape("slice", &[n], &[start, len]));
        }
        let out = self.value(x).data()[start..start + len].to_vec();
        Ok(self.push(Tensor::vector(out), Op::Slice { x, start }))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.expect_vector(a, "dot")?;
        self.same_shape(a, b, "dot")?;
        let v = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .fold(0.0, |acc, (x, y)| acc + x * y);
        Ok(self.push(Tensor::scalar(v), Op::Dot(a, b)))
    }

    pub fn activation(&mut self, kind: Activation, x: Var) -> Result<Var> {
        kind.validate()?;
        let t = self.value(x);
        let data = t.data().iter().map(|&v| kind.apply(v)).collect();
        let out = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        Ok(self.push(out, Op::Activate(kind, x)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.activation(Activation::Sigmoid, x).expect("sigmoid is total")
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.activation(Activation::Tanh, x).expect("tanh is total")
    }

    /// Softmax over all entries of the vector `scores`.
    pub fn softmax(&mut self, scores: Var) -> Result<Var> {
        self.expect_vector(scores, "softmax")?;
        let out = masked_softmax(self.value(scores).data())?;
        Ok(self.push(Tensor::vector(out), Op::Softmax(scores)))
    }

    /// `sum_k weight_k * vector_k`; every weight is a length-1 node.
    pub fn weighted_sum(&mut self, terms: &[(Var, Var)]) -> Result<Var> {
        let Some(&(_, first)) = terms.first() else {
            return Err(GnlError::Argument("weighted sum of an empty list".into()));
        };
        let n = self.expect_vector(first, "weighted_sum")?;
        let mut out = vec![0.0; n];
        for &(w, v) in terms {
            if self.value(w).len() != 1 {
                return Err(GnlError::shape("weighted_sum weight", self.shape(w), &[1]));
            }
            self.same_shape(first, v, "weighted_sum")?;
            let wv = self.scalar(w);
            for (o, x) in out.iter_mut().zip(self.value(v).data()) {
                *o += wv * x;
            }
        }
        Ok(self.push(Tensor::vector(out), Op::WeightedSum(terms.to_vec())))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let v = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(v), Op::Sum(x))
    }

    pub fn sum_squares(&mut self, x: Var) -> Var {
        let v = self.value(x).data().iter().map(|a| a * a).sum();
        self.push(Tensor::scalar(v), Op::SumSquares(x))
    }

    /// L1 norm; the derivative at 0 is taken as 0.
    pub fn abs_sum(&mut self, x: Var) -> Var {
        let v = self.value(x).l1_norm();
        self.push(Tensor::scalar(v), Op::AbsSum(x))
    }

    /// Frobenius norm with gradient `x / max(||x||, guard)`.
    pub fn fro_norm(&mut self, x: Var, guard: f64) -> Var {
        let v = self.value(x).fro_norm();
        self.push(Tensor::scalar(v), Op::FroNorm { x, guard })
    }

    /// Sums a list of scalars in order.
    pub fn add_all(&mut self, terms: &[Var]) -> Result<Var> {
        let (&first, rest) = terms
            .split_first()
            .ok_or_else(|| GnlError::Argument("sum of an empty list".into()))?;
        let mut acc = first;
        for &t in rest {
            acc = self.add(acc, t)?;
        }
        Ok(acc)
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(GnlError::Argument(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatVec(a, x) => {
                    let (ma, vx) = (self.value(*a), self.value(*x));
                    let n = ma.cols();
                    let mut ga = vec![0.0; ma.len()];
                    let mut gx = vec![0.0; n];
                    for (r, gr) in g.iter().enumerate() {
                        let row = &ma.data()[r * n..(r + 1) * n];
                        for c in 0..n {
                            ga[r * n + c] = gr * vx.data()[c];
                            gx[c] += gr * row[c];
                        }
                    }
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Hadamard(a, b) => {
                    let ga: Vec<f64> = g.iter().zip(self.value(*b).data()).map(|(g, y)| g * y).collect();
                    let gb: Vec<f64> = g.iter().zip(self.value(*a).data()).map(|(g, x)| g * x).collect();
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    accumulate(&mut grads, *b, &neg);
                }
                Op::Affine { x, scale } => {
                    let gx: Vec<f64> = g.iter().map(|v| v * scale).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.value(*p).len();
                        accumulate(&mut grads, *p, &g[offset..offset + len]);
                        offset += len;
                    }
                }
                Op::Slice { x, start } => {
                    let mut gx = vec![0.0; self.value(*x).len()];
                    gx[*start..*start + g.len()].copy_from_slice(&g);
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Dot(a, b) => {
                    let ga: Vec<f64> = self.value(*b).data().iter().map(|y| g[0] * y).collect();
                    let gb: Vec<f64> = self.value(*a).data().iter().map(|x| g[0] * x).collect();
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::Activate(kind, x) => {
                    let xs = self.value(*x).data();
                    let ys = node.value.data();
                    let gx: Vec<f64> = g
                        .iter()
                        .zip(xs.iter().zip(ys))
                        .map(|(g, (&x, &y))| g * kind.derivative(x, y))
                        .collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Softmax(x) => {
                    let ys = node.value.data();
                    let inner = g.iter().zip(ys).fold(0.0, |acc, (g, y)| acc + g * y);
                    let gx: Vec<f64> = g.iter().zip(ys).map(|(g, y)| y * (g - inner)).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::WeightedSum(terms) => {
                    for &(w, v) in terms {
                        let vd = self.value(v).data();
                        let gw = g.iter().zip(vd).fold(0.0, |acc, (g, x)| acc + g * x);
                        let wv = self.scalar(w);
                        let gv: Vec<f64> = g.iter().map(|g| g * wv).collect();
                        accumulate(&mut grads, w, &[gw]);
                        accumulate(&mut grads, v, &gv);
                    }
                }
                Op::Sum(x) => {
                    let gx = vec![g[0]; self.value(*x).len()];
                    accumulate(&mut grads, *x, &gx);
                }
                Op::SumSquares(x) => {
                    let gx: Vec<f64> = self.value(*x).data().iter().map(|v| 2.0 * g[0] * v).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::AbsSum(x) => {
                    let gx: Vec<f64> = self.value(*x).data().iter().map(|v| g[0] * sign(*v)).collect();
                    accumulate(&mut grads, *x, &gx);
                }
                Op::FroNorm { x, guard } => {
                    let t = self.value(*x);
                    let denom = node.value.data()[0].max(*guard);
                    let gx: Vec<f64> = t.data().iter().map(|v| g[0] * v / denom).collect();
                    accumulate(&mut grads, *x, &gx);
                }
            }
            grads[idx] = Some(g);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }
}

pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("same shape")
}

fn accumulate(grads: &mut [Option<Vec<f64>>], var: Var, g: &[f64]) {
    match &mut grads[var.0] {
        Some(existing) => {
            for (e, v) in existing.iter_mut().zip(g) {
                *e += v;
            }
        }
        slot @ None => *slot = Some(g.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn vec_leaf(tape: &mut Tape, v: &[f64]) -> Var {
        tape.leaf(Tensor::vector(v.to_vec()))
    }

    #[test]
    fn matvec_examples() {
        let mut tape = Tape::new();
        let eye = tape.leaf(Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let x = vec_leaf(&mut tape, &[3.0, -1.0]);
        let y = tape.matvec(eye, x).unwrap();
        assert_eq!(tape.value(y).data(), &[3.0, -1.0]);

        let zero = tape.leaf(Tensor::zeros(&[2, 2]));
        let y = tape.matvec(zero, x).unwrap();
        assert_eq!(tape.value(y).data(), &[0.0, 0.0]);

        let a = tape.leaf(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let ones = vec_leaf(&mut tape, &[1.0, 1.0]);
        let y = tape.matvec(a, ones).unwrap();
        assert_eq!(tape.value(y).data(), &[3.0, 7.0]);
    }

    #[test]
    fn matvec_shape_error_names_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::zeros(&[2, 3]));
        let x = vec_leaf(&mut tape, &[1.0, 2.0]);
        let err = tape.matvec(a, x).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[2]"), "{msg}");
    }

    #[test]
    fn hadamard_examples() {
        let mut tape = Tape::new();
        let ones = vec_leaf(&mut tape, &[1.0, 1.0, 1.0]);
        let y = vec_leaf(&mut tape, &[4.0, -2.0, 0.5]);
        let out = tape.hadamard(ones, y).unwrap();
        assert_eq!(tape.value(out).data(), &[4.0, -2.0, 0.5]);

        let z = vec_leaf(&mut tape, &[0.0, 0.0]);
        let w = vec_leaf(&mut tape, &[5.0, -2.0]);
        let out = tape.hadamard(z, w).unwrap();
        assert_eq!(tape.value(out).data(), &[0.0, 0.0]);

        let a = vec_leaf(&mut tape, &[2.0, -1.0]);
        let b = vec_leaf(&mut tape, &[3.0, 4.0]);
        let out = tape.hadamard(a, b).unwrap();
        assert_eq!(tape.value(out).data(), &[6.0, -4.0]);

        assert!(tape.hadamard(a, ones).is_err());
    }

    #[test]
    fn concat_examples() {
        let mut tape = Tape::new();
        let a = vec_leaf(&mut tape, &[1.0, 2.0]);
        let c = tape.concat(&[a]).unwrap();
        assert_eq!(tape.value(c).data(), &[1.0, 2.0]);

        let parts: Vec<Var> = [1.0, 2.0, 3.0].iter().map(|&v| vec_leaf(&mut tape, &[v])).collect();
        let c = tape.concat(&parts).unwrap();
        assert_eq!(tape.value(c).data(), &[1.0, 2.0, 3.0]);

        let x = vec_leaf(&mut tape, &[0.0; 2]);
        let z = vec_leaf(&mut tape, &[0.0; 3]);
        let h = vec_leaf(&mut tape, &[0.0; 4]);
        let c = tape.concat(&[x, z, h]).unwrap();
        assert_eq!(tape.value(c).len(), 9);

        assert!(matches!(tape.concat(&[]), Err(GnlError::Argument(_))));
    }

    #[test]
    fn activation_examples() {
        let mut tape = Tape::new();
        let x = vec_leaf(&mut tape, &[0.0, 0.0]);
        let y = tape.sigmoid(x);
        assert_eq!(tape.value(y).data(), &[0.5, 0.5]);

        let x = vec_leaf(&mut tape, &[-2.0, 4.0]);
        let y = tape.activation(Activation::LeakyRelu(0.5), x).unwrap();
        assert_eq!(tape.value(y).data(), &[-1.0, 4.0]);

        let x = vec_leaf(&mut tape, &[1.0]);
        let y = tape.tanh(x);
        // tanh(1) = (e^2 - 1)/(e^2 + 1)
        let e2 = std::f64::consts::E.powi(2);
        assert_abs_diff_eq!(tape.value(y).data()[0], (e2 - 1.0) / (e2 + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(tape.value(y).data()[0], 0.76159, epsilon = 1e-5);

        assert!(tape.activation(Activation::LeakyRelu(0.0), x).is_err());
        assert!("relu".parse::<Activation>().is_err());
        assert_eq!("leaky_relu:0.5".parse::<Activation>().unwrap(), Activation::LeakyRelu(0.5));
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(masked_softmax(&[7.3]).unwrap(), vec![1.0]);
        assert_eq!(masked_softmax(&[2.0; 4]).unwrap(), vec![0.25; 4]);
        let w = masked_softmax(&[0.0, 3f64.ln()]).unwrap();
        assert_abs_diff_eq!(w[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.75, epsilon = 1e-15);
        assert!(masked_softmax(&[]).is_err());
        // Overflow safety.
        let w = masked_softmax(&[1000.0, 1000.0]).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn backward_examples() {
        let mut tape = Tape::new();
        let x = vec_leaf(&mut tape, &[1.0, -2.0, 5.0]);
        let s = tape.sum(x);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.wrt(x).data(), &[1.0, 1.0, 1.0]);

        let mut tape = Tape::new();
        let x = vec_leaf(&mut tape, &[1.0, 2.0]);
        let c = tape.leaf(Tensor::scalar(3.0));
        let g = tape.backward(c).unwrap();
        assert_eq!(g.wrt(x).data(), &[0.0, 0.0]);
        assert!(!g.is_reached(x));

        let mut tape = Tape::new();
        let x = vec_leaf(&mut tape, &[1.0, 2.0]);
        assert!(matches!(tape.backward(x), Err(GnlError::Argument(_))));
    }

    #[test]
    fn multi_use_nodes_accumulate() {
        let mut tape = Tape::new();
        let x = vec_leaf(&mut tape, &[3.0]);
        let y = tape.hadamard(x, x).unwrap();
        let s = tape.sum(y);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.wrt(x).data(), &[6.0]);
    }

    #[test]
    fn norm_gradients_at_origin() {
        let mut tape = Tape::new();
        let x = vec_leaf(&mut tape, &[0.0, 0.0]);
        let f = tape.fro_norm(x, 1e-12);
        let g = tape.backward(f).unwrap();
        assert_eq!(g.wrt(x).data(), &[0.0, 0.0]);

        let mut tape = Tape::new();
        let x = vec_leaf(&mut tape, &[3.0, 0.0, -4.0]);
        let f = tape.abs_sum(x);
        assert_eq!(tape.scalar(f), 7.0);
        let g = tape.backward(f).unwrap();
        assert_eq!(g.wrt(x).data(), &[1.0, 0.0, -1.0]);
    }
}
