use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GnlModel, PARAM_NAMES};
use crate::attention::EdgeSet;
use crate::autodiff::Tensor;
use crate::config::ModelConfig;
use crate::error::{GnlError, Result};
use crate::harness::NormStats;

pub const CHECKPOINT_FORMAT: &str = "gnl-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct NamedArray {
    name: String,
    shape: Vec<usize>,
    /// row-major
    data: Vec<f64>,
}

/// Versioned JSON container: config, node ids, edge support, every
/// trainable array, the fixed initial states and the normalization stats
/// the model was trained with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    version: u32,
    pub config: ModelConfig,
    pub node_ids: Vec<String>,
    edges: Vec<(usize, usize)>,
    params: Vec<NamedArray>,
    h0: Vec<Vec<f64>>,
    pub stats: Option<NormStats>,
}

impl Checkpoint {
    pub fn from_model(model: &GnlModel, node_ids: Vec<String>, stats: Option<NormStats>) -> Self {
        let params = PARAM_NAMES
            .iter()
            .zip(model.params())
            .map(|(name, t)| NamedArray {
                name: (*name).to_string(),
                shape: t.shape().to_vec(),
                data: t.into_data(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            node_ids,
            edges: model.edges().edges().to_vec(),
            params,
            h0: model.h0.iter().map(|h| h.data().to_vec()).collect(),
            stats,
        }
    }

    pub fn model(&self) -> Result<GnlModel> {
        let mut params = Vec::with_capacity(self.params.len());
        for (expected, arr) in PARAM_NAMES.iter().zip(&self.params) {
            if arr.name != *expected {
                return Err(GnlError::Format(format!("expected array `{expected}`, found `{}`", arr.name)));
            }
            params.push(Tensor::new(arr.shape.clone(), arr.data.clone())?);
        }
        if self.params.len() != PARAM_NAMES.len() {
            return Err(GnlError::Format(format!(
                "expected {} arrays, found {}",
                PARAM_NAMES.len(),
                self.params.len()
            )));
        }
        let n = self.h0.len();
        let allow_self = self.edges.iter().any(|(j, i)| j == i);
        let edges = EdgeSet::from_pairs(n, self.edges.iter().copied(), allow_self)?;
        let h0 = self.h0.iter().map(|h| Tensor::vector(h.clone())).collect();
        GnlModel::from_parts(self.config.clone(), params, h0, edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| GnlError::Format(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(GnlError::Format(format!("not a checkpoint (format `{}`)", ckpt.format)));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(GnlError::Format(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| GnlError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GnlError::io(path, e))?;
        Checkpoint::from_json(&text)
    }
}
