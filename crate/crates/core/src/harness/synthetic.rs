//! Linear diffusion toy data with known directed links.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::attention::EdgeSet;
use crate::error::{GnlError, Result};
use crate::harness::data::Dataset;

/// The first `drivers` nodes follow independent AR(1) processes. Every other
/// node is a noisy weighted sum of the drivers `lag` steps earlier.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub nodes: usize,
    pub drivers: usize,
    pub steps: usize,
    pub seed: u64,
    /// driver autocorrelation
    pub rho: f64,
    /// follower noise standard deviation
    pub noise: f64,
    pub lag: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            nodes: 6,
            drivers: 2,
            steps: 300,
            seed: 0,
            rho: 0.8,
            noise: 0.1,
            lag: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// driver -> follower links
    pub true_edges: EdgeSet,
    /// `weights[f][d]` couples driver `d` into follower `drivers + f`
    pub weights: Vec<Vec<f64>>,
}

impl Synthetic {
    pub fn is_true_edge(&self, source: usize, target: usize) -> bool {
        self.true_edges.contains(source, target)
    }
}

pub fn linear_diffusion(spec: &SyntheticSpec) -> Result<Synthetic> {
    if spec.drivers == 0 || spec.drivers >= spec.nodes {
        return Err(GnlError::Argument(format!(
            "need 0 < drivers < nodes, got {} of {}",
            spec.drivers, spec.nodes
        )));
    }
    if spec.lag == 0 || spec.steps <= spec.lag {
        return Err(GnlError::Argument("need 0 < lag < steps".into()));
    }
    if !(spec.rho.abs() < 1.0) || !(spec.noise >= 0.0) {
        return Err(GnlError::Argument("need |rho| < 1 and noise >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let followers = spec.nodes - spec.drivers;
    let weights: Vec<Vec<f64>> = (0..followers)
        .map(|_| {
            (0..spec.drivers)
                .map(|_| {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * rng.random_range(0.5..=1.0)
                })
                .collect()
        })
        .collect();
    let innovation = (1.0 - spec.rho * spec.rho).sqrt();
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let burn = spec.lag;
    let total = spec.steps + burn;
    let mut drivers = vec![vec![0.0; spec.drivers]; total];
    drivers[0].iter_mut().for_each(|v| *v = normal());
    for t in 1..total {
        for d in 0..spec.drivers {
            drivers[t][d] = spec.rho * drivers[t - 1][d] + innovation * normal();
        }
    }
    let mut rows = Vec::with_capacity(spec.steps);
    for t in burn..total {
        let mut row = drivers[t].clone();
        for w in &weights {
            let signal: f64 = w.iter().zip(&drivers[t - spec.lag]).map(|(a, x)| a * x).sum();
            row.push(signal + spec.noise * normal());
        }
        rows.push(row);
    }
    let node_ids = (0..spec.nodes)
        .map(|i| if i < spec.drivers { format!("d{i}") } else { format!("f{}", i - spec.drivers) })
        .collect();
    let mut dataset = Dataset::new((0..spec.steps).map(|t| t.to_string()).collect(), node_ids, 1, rows)?;
    let pairs = (0..spec.drivers).flat_map(|d| (spec.drivers..spec.nodes).map(move |f| (d, f)));
    let true_edges = EdgeSet::from_pairs(spec.nodes, pairs, false)?;
    dataset.prior_edges = None;
    Ok(Synthetic {
        dataset,
        true_edges,
        weights,
    })
}

/// MSE of always predicting each node's training mean, in normalized units.
pub fn variance_baseline(train_mean: &[f64], targets: &[Vec<f64>]) -> Result<f64> {
    if targets.is_empty() {
        return Err(GnlError::Argument("no targets".into()));
    }
    let n = train_mean.len() as f64;
    let total: f64 = targets
        .iter()
        .map(|row| row.iter().zip(train_mean).map(|(x, m)| (x - m).powi(2)).sum::<f64>() / n)
        .sum();
    Ok(total / targets.len() as f64)
}
