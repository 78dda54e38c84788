use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attention::Normalization;
use crate::autodiff::grad_check;
use crate::config::ModelConfig;
use crate::error::Result;
use crate::model::{GnlModel, WindowSample};
use crate::optim::Regularizer;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckCase {
    pub seed: u64,
    pub regularizer: Regularizer,
    pub max_rel_error: f64,
}

/// Finite-difference check of the full window objective on small random
/// models: `d_x = 1`, `d_a = 3`, `d_h = 4`, five nodes, window 3. Seeds
/// alternate the normalization direction.
pub fn grad_check_suite(seeds: u64, eps: f64) -> Result<Vec<GradCheckCase>> {
    let mut cases = Vec::new();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
        let cfg = ModelConfig {
            d_x: 1,
            d_a: 3,
            d_h: 4,
            window: 3,
            beta: 0.1,
            seed,
            normalization: if seed % 2 == 0 {
                Normalization::PerSourceOut
            } else {
                Normalization::PerTargetIn
            },
            ..ModelConfig::default()
        };
        let model = GnlModel::new(cfg, 5, None)?;
        let mut row = || (0..5).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>();
        let sample = WindowSample {
            start: 0,
            inputs: vec![row(), row(), row()],
            targets: vec![row()],
        };
        for reg in [Regularizer::None, Regularizer::Fro, Regularizer::L1] {
            let report = grad_check(
                |tape, vars| model.window_objective(tape, vars, &sample, reg),
                &model.params(),
                eps,
            )?;
            cases.push(GradCheckCase {
                seed,
                regularizer: reg,
                max_rel_error: report.max_rel_error,
            });
        }
    }
    Ok(cases)
}
