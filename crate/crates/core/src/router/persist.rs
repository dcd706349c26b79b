use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExpertScorer, Hyperparameters, RouterError, RouterKind, RouterModel};

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(rename = "D")]
    dim: usize,
    seed: u64,
    kind: RouterKind,
    hyperparameters: Hyperparameters,
    #[serde(default)]
    loss_history: Vec<f64>,
    experts: Vec<ScorerFile>,
}

#[derive(Serialize, Deserialize)]
struct ScorerFile {
    expert_id: String,
    bias: f64,
    /// Nonzero weights as `[index, value]` pairs.
    weights: Vec<(u32, f64)>,
}

impl RouterModel {
    pub fn to_json(&self) -> Result<String, RouterError> {
        let file = ModelFile {
            version: MODEL_VERSION,
            dim: self.dim(),
            seed: self.seed,
            kind: self.kind,
            hyperparameters: self.hyperparameters,
            loss_history: self.loss_history.clone(),
            experts: self
                .scorers
                .iter()
                .map(|s| ScorerFile {
                    expert_id: s.expert_id.clone(),
                    bias: s.bias,
                    weights: s
                        .weights
                        .iter()
                        .enumerate()
                        .filter(|(_, w)| **w != 0.0)
                        .map(|(i, w)| (i as u32, *w))
                        .collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self, RouterError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_VERSION {
            return Err(RouterError::UnsupportedVersion(file.version));
        }
        let mut hyperparameters = file.hyperparameters;
        hyperparameters.dim = file.dim;
        let scorers = file
            .experts
            .into_iter()
            .map(|s| {
                let mut weights = vec![0.0; file.dim];
                for (i, w) in s.weights {
                    let slot = weights
                        .get_mut(i as usize)
                        .ok_or(RouterError::DimensionMismatch { index: i, dim: file.dim })?;
                    *slot = w;
                }
                Ok(ExpertScorer { expert_id: s.expert_id, bias: s.bias, weights })
            })
            .collect::<Result<Vec<_>, RouterError>>()?;
        Ok(RouterModel { kind: file.kind, seed: file.seed, hyperparameters, scorers, loss_history: file.loss_history })
    }

    pub fn save(&self, path: &Path) -> Result<(), RouterError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Loads a model and checks it scores exactly the active panel's experts.
    pub fn load_for_panel(path: &Path, panel_ids: &[&str]) -> Result<Self, RouterError> {
        let model = Self::from_json(&fs::read_to_string(path)?)?;
        model.ensure_matches(panel_ids)?;
        Ok(model)
    }
}
