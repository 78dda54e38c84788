//! Attentive neighbourhood aggregation.
//!
//! For an edge `(j, i)` meaning "node j influences node i" the raw score is
//! `LeakyReLU(w_a . [W_a h_j, W_a h_i])`. Scores are softmax-normalised
//! either over the source's out-neighbours (the default) or over the
//! target's in-neighbours, and the aggregated vector of node `i` is
//! `sigmoid(sum_j alpha[j][i] W_a h_j)` over its in-neighbours.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, Tape, Tensor, Var};
use crate::error::{GnlError, Result};
use crate::gdu::{glorot_uniform, GduDims};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionParameters {
    /// `W_a`, d_a x d_h
    pub projection: Tensor,
    /// `w_a`, length 2 d_a; the first half scores the source, the second the target
    pub score: Tensor,
}

#[derive(Clone, Copy, Debug)]
pub struct AttentionVars {
    pub projection: Var,
    pub score: Var,
}

impl AttentionParameters {
    pub(crate) fn sample<R: Rng>(dims: GduDims, rng: &mut R) -> Self {
        let projection = glorot_uniform(dims.d_a, dims.d_h, rng);
        let score = glorot_uniform(1, 2 * dims.d_a, rng);
        AttentionParameters {
            projection,
            score: Tensor::vector(score.into_data()),
        }
    }

    pub fn zeros(dims: GduDims) -> Self {
        AttentionParameters {
            projection: Tensor::zeros(&[dims.d_a, dims.d_h]),
            score: Tensor::zeros(&[2 * dims.d_a]),
        }
    }

    pub fn validate(&self, dims: GduDims) -> Result<()> {
        if self.projection.shape() != [dims.d_a, dims.d_h] {
            return Err(GnlError::shape("attention W_a", self.projection.shape(), &[dims.d_a, dims.d_h]));
        }
        if self.score.shape() != [2 * dims.d_a] {
            return Err(GnlError::shape("attention w_a", self.score.shape(), &[2 * dims.d_a]));
        }
        Ok(())
    }

    pub fn register(&self, tape: &mut Tape) -> AttentionVars {
        AttentionVars {
            projection: tape.leaf(self.projection.clone()),
            score: tape.leaf(self.score.clone()),
        }
    }
}

/// Which set of edges shares one softmax.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// over `k` in out(j) for each source `j`
    #[default]
    PerSourceOut,
    /// over `j` in in(i) for each target `i`
    PerTargetIn,
}

/// How a node's neighbourhood vector is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    #[default]
    Attention,
    /// `z_i = h_i`; needs `d_a == d_h`
    None,
    /// `z_i = sigmoid(mean_j W_a h_j)` over in-neighbours
    FixedMean,
}

macro_rules! snake_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = GnlError;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(GnlError::Config(format!(
                        "unknown {} `{}`", stringify!($ty), other
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = match self { $($variant => $name,)+ };
                f.write_str(s)
            }
        }
    };
}

snake_enum!(Normalization {
    Normalization::PerSourceOut => "per_source_out",
    Normalization::PerTargetIn => "per_target_in",
});

snake_enum!(Aggregator {
    Aggregator::Attention => "attention",
    Aggregator::None => "none",
    Aggregator::FixedMean => "fixed_mean",
});

/// Directed influence edges `(source, target)` over `n` nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    n: usize,
    edges: Vec<(usize, usize)>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
}

impl EdgeSet {
    /// Builds an edge set; duplicates are merged and edges are kept in
    /// lexicographic `(source, target)` order.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>, allow_self_loops: bool) -> Result<Self> {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (j, i) in pairs {
            for idx in [j, i] {
                if idx >= n {
                    return Err(GnlError::Index { index: idx, len: n });
                }
            }
            if j == i && !allow_self_loops {
                return Err(GnlError::Config(format!("self-loop on node {j} not allowed")));
            }
            edges.push((j, i));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        for (e, &(j, i)) in edges.iter().enumerate() {
            outgoing[j].push(e);
            incoming[i].push(e);
        }
        Ok(EdgeSet {
            n,
            edges,
            incoming,
            outgoing,
        })
    }

    /// Every ordered pair of distinct nodes.
    pub fn fully_connected(n: usize) -> Self {
        let pairs = (0..n).flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (j, i)));
        EdgeSet::from_pairs(n, pairs, false).expect("valid by construction")
    }

    /// Adds the reverse of every edge.
    pub fn bidirectional(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let rev: Vec<_> = pairs.iter().map(|&(j, i)| (i, j)).collect();
        EdgeSet::from_pairs(n, pairs.into_iter().chain(rev), false)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, source: usize, target: usize) -> bool {
        self.edges.binary_search(&(source, target)).is_ok()
    }

    /// Sources influencing `i`, ascending.
    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.incoming[i].iter().map(|&e| self.edges[e].0)
    }

    /// Targets influenced by `j`, ascending.
    pub fn out_neighbors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.outgoing[j].iter().map(|&e| self.edges[e].1)
    }

    pub fn is_bidirectional(&self) -> bool {
        self.edges.iter().all(|&(j, i)| self.contains(i, j))
    }

    /// Edge indices sharing one softmax, in node order, skipping empty groups.
    pub fn normalization_groups(&self, norm: Normalization) -> impl Iterator<Item = &[usize]> + '_ {
        let lists = match norm {
            Normalization::PerSourceOut => &self.outgoing,
            Normalization::PerTargetIn => &self.incoming,
        };
        lists.iter().filter(|l| !l.is_empty()).map(|l| l.as_slice())
    }
}

/// Projected states `W_a h_j` and per-edge raw scores, in edge order.
#[derive(Clone, Debug)]
pub struct InfluenceScores {
    pub projected: Vec<Var>,
    pub scores: Vec<Var>,
}

pub fn influence_scores(
    tape: &mut Tape,
    hidden: &[Var],
    edges: &EdgeSet,
    params: &AttentionVars,
    slope: f64,
) -> Result<InfluenceScores> {
    let leaky = Activation::LeakyRelu(slope);
    if !(slope > 0.0) {
        return Err(GnlError::Argument(format!("negative slope must be positive, got {slope}")));
    }
    if let Some(&(j, i)) = edges.edges().iter().find(|&&(j, i)| j.max(i) >= hidden.len()) {
        return Err(GnlError::Index {
            index: j.max(i),
            len: hidden.len(),
        });
    }
    let d_a = tape.value(params.projection).rows();
    if tape.value(params.score).shape() != [2 * d_a] {
        return Err(GnlError::shape("attention w_a", tape.value(params.score).shape(), &[2 * d_a]));
    }

    let projected = hidden
        .iter()
        .map(|&h| tape.matvec(params.projection, h))
        .collect::<Result<Vec<_>>>()?;
    let w_src = tape.slice(params.score, 0, d_a)?;
    let w_dst = tape.slice(params.score, d_a, d_a)?;
    let mut as_source = Vec::with_capacity(projected.len());
    let mut as_target = Vec::with_capacity(projected.len());
    for &p in &projected {
        as_source.push(tape.dot(w_src, p)?);
        as_target.push(tape.dot(w_dst, p)?);
    }

    let mut scores = Vec::with_capacity(edges.len());
    for &(j, i) in edges.edges() {
        let pre = tape.add(as_source[j], as_target[i])?;
        scores.push(tape.activation(leaky, pre)?);
    }
    Ok(InfluenceScores { projected, scores })
}

/// Softmax-normalised coefficient per edge, in edge order.
pub fn influence_coefficients(
    tape: &mut Tape,
    scores: &InfluenceScores,
    edges: &EdgeSet,
    norm: Normalization,
) -> Result<Vec<Var>> {
    if scores.scores.len() != edges.len() {
        return Err(GnlError::Config(format!(
            "{} scores for {} edges",
            scores.scores.len(),
            edges.len()
        )));
    }
    let mut alpha: Vec<Option<Var>> = vec![None; edges.len()];
    for group in edges.normalization_groups(norm) {
        let members: Vec<Var> = group.iter().map(|&e| scores.scores[e]).collect();
        let stacked = tape.concat(&members)?;
        let weights = tape.softmax(stacked)?;
        for (k, &e) in group.iter().enumerate() {
            alpha[e] = Some(tape.slice(weights, k, 1)?);
        }
    }
    alpha
        .into_iter()
        .enumerate()
        .map(|(e, a)| a.ok_or_else(|| GnlError::Config(format!("edge {:?} has an empty normalization set", edges.edges()[e]))))
        .collect()
}

/// Neighbourhood vector per node.
pub fn aggregate(
    tape: &mut Tape,
    hidden: &[Var],
    scores: &InfluenceScores,
    alpha: &[Var],
    edges: &EdgeSet,
    variant: Aggregator,
) -> Result<Vec<Var>> {
    let n = hidden.len();
    if variant == Aggregator::None {
        let d_h = hidden.first().map(|&h| tape.value(h).len()).unwrap_or(0);
        let d_a = scores.projected.first().map(|&p| tape.value(p).len()).unwrap_or(d_h);
        if d_a != d_h {
            return Err(GnlError::Config(format!(
                "aggregator `none` needs d_a == d_h, got d_a={d_a}, d_h={d_h}"
            )));
        }
        return Ok(hidden.to_vec());
    }

    let d_a = scores
        .projected
        .first()
        .map(|&p| tape.value(p).len())
        .ok_or_else(|| GnlError::Argument("aggregate over zero nodes".into()))?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let sources: Vec<(usize, usize)> = edges.incoming[i].iter().map(|&e| (e, edges.edges[e].0)).collect();
        let pre = if sources.is_empty() {
            tape.leaf(Tensor::zeros(&[d_a]))
        } else {
            let terms = match variant {
                Aggregator::Attention => sources
                    .iter()
                    .map(|&(e, j)| (alpha[e], scores.projected[j]))
                    .collect::<Vec<_>>(),
                Aggregator::FixedMean => {
                    let w = tape.leaf(Tensor::scalar(1.0 / sources.len() as f64));
                    sources.iter().map(|&(_, j)| (w, scores.projected[j])).collect()
                }
                Aggregator::None => unreachable!(),
            };
            tape.weighted_sum(&terms)?
        };
        out.push(tape.sigmoid(pre));
    }
    Ok(out)
}

/// Dense `alpha[source][target]`, zero off the edge set.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl InfluenceMatrix {
    pub fn from_edges(tape: &Tape, alpha: &[Var], edges: &EdgeSet) -> Self {
        let n = edges.node_count();
        let mut values = vec![0.0; n * n];
        for (&(j, i), &a) in edges.edges().iter().zip(alpha) {
            values[j * n + i] = tape.scalar(a);
        }
        InfluenceMatrix { n, values }
    }

    pub fn from_dense(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(GnlError::shape("influence matrix", &[n, n], &[values.len()]));
        }
        Ok(InfluenceMatrix { n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.values[source * self.n + target]
    }

    pub fn row(&self, source: usize) -> &[f64] {
        &self.values[source * self.n..(source + 1) * self.n]
    }

    /// Sum of the coefficients in each normalization group.
    pub fn group_sums(&self, edges: &EdgeSet, norm: Normalization) -> Vec<f64> {
        edges
            .normalization_groups(norm)
            .map(|group| {
                group
                    .iter()
                    .map(|&e| {
                        let (j, i) = edges.edges()[e];
                        self.get(j, i)
                    })
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn leaves(tape: &mut Tape, rows: &[&[f64]]) -> Vec<Var> {
        rows.iter().map(|r| tape.leaf(Tensor::vector(r.to_vec()))).collect()
    }

    fn params(tape: &mut Tape, w_a: Vec<f64>, d_a: usize, d_h: usize, score: Vec<f64>) -> AttentionVars {
        AttentionParameters {
            projection: Tensor::matrix(d_a, d_h, w_a).unwrap(),
            score: Tensor::vector(score),
        }
        .register(tape)
    }

    #[test]
    fn edge_set_views() {
        let full = EdgeSet::fully_connected(3);
        assert_eq!(full.len(), 6);
        assert!(!full.contains(1, 1));
        assert!(full.is_bidirectional());
        assert_eq!(full.in_neighbors(1).collect::<Vec<_>>(), vec![0, 2]);

        let e = EdgeSet::from_pairs(3, [(0, 1), (0, 2), (0, 1)], false).unwrap();
        assert_eq!(e.len(), 2);
        assert!(!e.is_bidirectional());
        assert_eq!(e.out_neighbors(0).collect::<Vec<_>>(), vec![1, 2]);
        assert!(EdgeSet::from_pairs(3, [(1, 1)], false).is_err());
        assert!(EdgeSet::from_pairs(3, [(1, 1)], true).is_ok());
        assert!(matches!(EdgeSet::from_pairs(3, [(0, 3)], false), Err(GnlError::Index { index: 3, .. })));
        assert!(EdgeSet::bidirectional(3, [(0, 1)]).unwrap().is_bidirectional());
    }

    #[test]
    fn zero_score_vector_gives_zero_scores() {
        let mut tape = Tape::new();
        let h = leaves(&mut tape, &[&[1.0, 2.0], &[-1.0, 0.5], &[0.0, 3.0]]);
        let p = params(&mut tape, vec![0.3, -0.2, 1.0, 0.7], 2, 2, vec![0.0; 4]);
        let edges = EdgeSet::fully_connected(3);
        let s = influence_scores(&mut tape, &h, &edges, &p, 0.5).unwrap();
        assert!(s.scores.iter().all(|&v| tape.scalar(v) == 0.0));
    }

    #[test]
    fn antisymmetric_scoring_cancels_on_equal_states() {
        let mut tape = Tape::new();
        let h = leaves(&mut tape, &[&[0.4, -1.1], &[0.4, -1.1]]);
        let p = params(&mut tape, vec![0.3, -0.2, 1.0, 0.7], 2, 2, vec![0.9, -0.4, -0.9, 0.4]);
        let edges = EdgeSet::fully_connected(2);
        let s = influence_scores(&mut tape, &h, &edges, &p, 0.5).unwrap();
        for &v in &s.scores {
            assert_abs_diff_eq!(tape.scalar(v), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn scalar_score_hand_evaluation() {
        let mut tape = Tape::new();
        let h = leaves(&mut tape, &[&[1.0], &[-1.0]]);
        let p = params(&mut tape, vec![2.0], 1, 1, vec![1.0, 1.0]);
        let edges = EdgeSet::from_pairs(2, [(0, 1)], false).unwrap();
        let s = influence_scores(&mut tape, &h, &edges, &p, 0.5).unwrap();
        assert_eq!(tape.scalar(s.scores[0]), 0.0);

        // Negative pre-activation picks up the slope: 2*(-1) + 2*(-1) = -4.
        let edges = EdgeSet::from_pairs(2, [(1, 1)], true).unwrap();
        let s = influence_scores(&mut tape, &h, &edges, &p, 0.5).unwrap();
        assert_eq!(tape.scalar(s.scores[0]), -2.0);
    }

    #[test]
    fn out_of_range_edge_is_an_index_error() {
        let mut tape = Tape::new();
        let h = leaves(&mut tape, &[&[1.0], &[-1.0]]);
        let p = params(&mut tape, vec![2.0], 1, 1, vec![1.0, 1.0]);
        let edges = EdgeSet::fully_connected(3);
        assert!(matches!(
            influence_scores(&mut tape, &h, &edges, &p, 0.5),
            Err(GnlError::Index { index: 2, len: 2 })
        ));
    }

    fn scores_from(tape: &mut Tape, values: &[f64]) -> InfluenceScores {
        InfluenceScores {
            projected: Vec::new(),
            scores: values.iter().map(|&v| tape.leaf(Tensor::scalar(v))).collect(),
        }
    }

    #[test]
    fn coefficient_examples() {
        let mut tape = Tape::new();
        let single = EdgeSet::from_pairs(2, [(0, 1)], false).unwrap();
        let s = scores_from(&mut tape, &[3.7]);
        let a = influence_coefficients(&mut tape, &s, &single, Normalization::PerSourceOut).unwrap();
        assert_eq!(tape.scalar(a[0]), 1.0);

        let star = EdgeSet::from_pairs(4, [(0, 1), (0, 2), (0, 3)], false).unwrap();
        let s = scores_from(&mut tape, &[0.2; 3]);
        let a = influence_coefficients(&mut tape, &s, &star, Normalization::PerSourceOut).unwrap();
        for v in a {
            assert_abs_diff_eq!(tape.scalar(v), 1.0 / 3.0, epsilon = 1e-15);
        }

        let pair = EdgeSet::from_pairs(3, [(0, 1), (0, 2)], false).unwrap();
        let s = scores_from(&mut tape, &[0.0, 2f64.ln()]);
        let a = influence_coefficients(&mut tape, &s, &pair, Normalization::PerSourceOut).unwrap();
        assert_abs_diff_eq!(tape.scalar(a[0]), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tape.scalar(a[1]), 2.0 / 3.0, epsilon = 1e-15);

        // Per-target normalization: each target has a single source here.
        let a = influence_coefficients(&mut tape, &s, &pair, Normalization::PerTargetIn).unwrap();
        assert_eq!(tape.scalar(a[0]), 1.0);
        assert_eq!(tape.scalar(a[1]), 1.0);
    }

    #[test]
    fn aggregate_examples() {
        let mut tape = Tape::new();
        let h = leaves(&mut tape, &[&[0.3, -0.8], &[1.2, 0.1]]);
        let p = params(&mut tape, vec![0.5, -1.0, 2.0, 0.25], 2, 2, vec![0.1, 0.2, 0.3, 0.4]);
        let edges = EdgeSet::from_pairs(2, [(0, 1)], false).unwrap();
        let s = influence_scores(&mut tape, &h, &edges, &p, 0.5).unwrap();
        let a = influence_coefficients(&mut tape, &s, &edges, Normalization::PerSourceOut).unwrap();
        let z = aggregate(&mut tape, &h, &s, &a, &edges, Aggregator::Attention).unwrap();
        // node 1: single in-neighbour 0 with alpha 1 -> sigmoid(W_a h_0)
        let wh0 = [0.5 * 0.3 + -1.0 * -0.8, 2.0 * 0.3 + 0.25 * -0.8];
        for (k, v) in tape.value(z[1]).data().iter().enumerate() {
            assert_abs_diff_eq!(*v, crate::autodiff::sigmoid(wh0[k]), epsilon = 1e-15);
        }
        // node 0 has no in-neighbours
        assert_eq!(tape.value(z[0]).data(), &[0.5, 0.5]);

        let z = aggregate(&mut tape, &h, &s, &a, &edges, Aggregator::None).unwrap();
        assert_eq!(z, h);
    }

    #[test]
    fn aggregate_of_zero_states_is_one_half() {
        let mut tape = Tape::new();
        let h = leaves(&mut tape, &[&[0.0], &[0.0], &[0.7]]);
        let p = params(&mut tape, vec![1.0], 1, 1, vec![0.6, -0.3]);
        let edges = EdgeSet::from_pairs(3, [(0, 2), (1, 2)], false).unwrap();
        let s = influence_scores(&mut tape, &h, &edges, &p, 0.5).unwrap();
        for norm in [Normalization::PerSourceOut, Normalization::PerTargetIn] {
            let a = influence_coefficients(&mut tape, &s, &edges, norm).unwrap();
            for variant in [Aggregator::Attention, Aggregator::FixedMean] {
                let z = aggregate(&mut tape, &h, &s, &a, &edges, variant).unwrap();
                assert_eq!(tape.value(z[2]).data(), &[0.5]);
            }
        }
    }

    #[test]
    fn none_variant_needs_matching_widths() {
        let mut tape = Tape::new();
        let h = leaves(&mut tape, &[&[0.3, -0.8], &[1.2, 0.1]]);
        let p = params(&mut tape, vec![0.5, -1.0], 1, 2, vec![0.1, 0.2]);
        let edges = EdgeSet::fully_connected(2);
        let s = influence_scores(&mut tape, &h, &edges, &p, 0.5).unwrap();
        let a = influence_coefficients(&mut tape, &s, &edges, Normalization::PerSourceOut).unwrap();
        assert!(matches!(
            aggregate(&mut tape, &h, &s, &a, &edges, Aggregator::None),
            Err(GnlError::Config(_))
        ));
    }

    #[test]
    fn enum_names_round_trip() {
        for a in [Aggregator::Attention, Aggregator::None, Aggregator::FixedMean] {
            assert_eq!(a.to_string().parse::<Aggregator>().unwrap(), a);
        }
        assert!("gat".parse::<Aggregator>().is_err());
        assert_eq!("per_target_in".parse::<Normalization>().unwrap(), Normalization::PerTargetIn);
    }

    proptest! {
        #[test]
        fn softmax_groups_are_normalized_and_shift_invariant(
            raw in proptest::collection::vec(-15.0f64..15.0, 12),
            shift in -50.0f64..50.0,
            norm_in in any::<bool>(),
        ) {
            let norm = if norm_in { Normalization::PerTargetIn } else { Normalization::PerSourceOut };
            let edges = EdgeSet::fully_connected(4);
            let mut tape = Tape::new();
            let s = scores_from(&mut tape, &raw);
            let a = influence_coefficients(&mut tape, &s, &edges, norm).unwrap();
            let m = InfluenceMatrix::from_edges(&tape, &a, &edges);
            for sum in m.group_sums(&edges, norm) {
                prop_assert!((sum - 1.0).abs() < 1e-12);
            }
            for &v in &a {
                prop_assert!(tape.scalar(v) > 0.0 && tape.scalar(v) < 1.0);
            }
            // shift one group (node 0's set) by a constant
            let group: Vec<usize> = edges.normalization_groups(norm).next().unwrap().to_vec();
            let shifted: Vec<f64> = raw.iter().enumerate()
                .map(|(e, v)| if group.contains(&e) { v + shift } else { *v })
                .collect();
            let s2 = scores_from(&mut tape, &shifted);
            let a2 = influence_coefficients(&mut tape, &s2, &edges, norm).unwrap();
            for (x, y) in a.iter().zip(&a2) {
                prop_assert!((tape.scalar(*x) - tape.scalar(*y)).abs() < 1e-12);
            }
        }

        #[test]
        fn attention_aggregate_is_in_unit_interval(seed in 0u64..1000) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let dims = GduDims::new(1, 3, 2).unwrap();
            let att = AttentionParameters::sample(dims, &mut rng);
            let mut tape = Tape::new();
            let vars = att.register(&mut tape);
            let h: Vec<Var> = (0..4).map(|_| {
                let v = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                tape.leaf(Tensor::vector(v))
            }).collect();
            let edges = EdgeSet::fully_connected(4);
            let s = influence_scores(&mut tape, &h, &edges, &vars, 0.5).unwrap();
            let a = influence_coefficients(&mut tape, &s, &edges, Normalization::PerSourceOut).unwrap();
            let z = aggregate(&mut tape, &h, &s, &a, &edges, Aggregator::Attention).unwrap();
            for zi in z {
                prop_assert!(tape.value(zi).data().iter().all(|&v| v > 0.0 && v < 1.0));
            }
        }
    }
}
