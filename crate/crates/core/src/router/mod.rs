//! Query-to-expert routing.
//!
//! The router holds one logistic scorer per panel expert over hashed query
//! features. It is trained from supervision built out of expert correctness
//! and ranks experts by their sigmoid scores for Expert Routing (top 1) and
//! Elite Ensemble (top k).

mod features;
mod persist;
mod supervision;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{
    feature_index, featurize, named_features, FeatureConfig, FeatureVector, DEFAULT_DIM, DEFAULT_HORIZON, HISTORY_DECAY,
};
pub use persist::MODEL_VERSION;
pub use supervision::{build_supervision, SupervisionExample, SupervisionSet};
pub use train::{make_untrained_router, train_router, training_loss, Hyperparameters};

use crate::model::ForecastQuery;

#[derive(Debug, Error)]
pub enum RouterError {
    #[error("supervision set is empty")]
    EmptySupervision,
    #[error("k = {k} outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("router experts {model:?} do not match panel experts {panel:?}")]
    ExpertSetMismatch { model: Vec<String>, panel: Vec<String> },
    #[error("supervision names expert {0:?} which is not on the panel")]
    UnknownExpert(String),
    #[error("feature index {index} outside dimension {dim}")]
    DimensionMismatch { index: u32, dim: usize },
    #[error("every expert failed on query {query_id}: {first_error}")]
    AllExpertsFailed { query_id: String, first_error: String },
    #[error("invalid hyperparameters: {0}")]
    BadHyperparameters(String),
    #[error("unsupported router model version {0}")]
    UnsupportedVersion(u32),
    #[error("router model file: {0}")]
    Format(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouterKind {
    Trained,
    Untrained,
}

impl RouterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RouterKind::Trained => "trained",
            RouterKind::Untrained => "untrained",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertScorer {
    pub expert_id: String,
    pub bias: f64,
    /// Dense weights of length `dim`.
    pub weights: Vec<f64>,
}

impl ExpertScorer {
    pub fn logit(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouterModel {
    pub kind: RouterKind,
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
    pub scorers: Vec<ExpertScorer>,
    /// Objective value before training and after each epoch.
    pub loss_history: Vec<f64>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl RouterModel {
    pub fn dim(&self) -> usize {
        self.hyperparameters.dim
    }

    pub fn features(&self) -> FeatureConfig {
        FeatureConfig { dim: self.hyperparameters.dim, horizon: self.hyperparameters.horizon }
    }

    pub fn expert_ids(&self) -> Vec<&str> {
        self.scorers.iter().map(|s| s.expert_id.as_str()).collect()
    }

    /// Errors unless the model scores exactly the given expert set.
    pub fn ensure_matches(&self, panel_ids: &[&str]) -> Result<(), RouterError> {
        let mut mine = self.expert_ids();
        let mut theirs = panel_ids.to_vec();
        mine.sort_unstable();
        theirs.sort_unstable();
        if mine != theirs {
            return Err(RouterError::ExpertSetMismatch {
                model: mine.iter().map(|s| s.to_string()).collect(),
                panel: theirs.iter().map(|s| s.to_string()).collect(),
            });
        }
        Ok(())
    }

    /// Every expert with its sigmoid score, best first; equal scores fall
    /// back to lexicographic expert id.
    pub fn score_all(&self, query: &ForecastQuery) -> Vec<(String, f64)> {
        let x = featurize(query, self.features());
        let mut scored: Vec<(&str, f64)> = self.scorers.iter().map(|s| (s.expert_id.as_str(), s.logit(&x))).collect();
        // Ordering on logits avoids ties introduced by sigmoid saturation.
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scored.into_iter().map(|(id, z)| (id.to_string(), sigmoid(z))).collect()
    }
}

/// The `k` best experts for `query`, best first.
pub fn rank_experts(model: &RouterModel, query: &ForecastQuery, k: usize) -> Result<Vec<(String, f64)>, RouterError> {
    let n = model.scorers.len();
    if k == 0 || k > n {
        return Err(RouterError::BadK { k, n });
    }
    let mut ranked = model.score_all(query);
    ranked.truncate(k);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_query, EventHistory, EventQuad};

    fn query(s: &str) -> ForecastQuery {
        let e = EventQuad::new("q", s, "r", "b", "2024-01-01".parse().unwrap(), "ISR", None).unwrap();
        make_query(&e, EventHistory::empty()).unwrap()
    }

    fn fixed(scores: &[(&str, f64)]) -> RouterModel {
        let hp = Hyperparameters { dim: 4, ..Hyperparameters::default() };
        RouterModel {
            kind: RouterKind::Untrained,
            seed: 0,
            hyperparameters: hp,
            scorers: scores
                .iter()
                .map(|(id, p)| ExpertScorer {
                    expert_id: id.to_string(),
                    bias: (p / (1.0 - p)).ln(),
                    weights: vec![0.0; 4],
                })
                .collect(),
            loss_history: vec![],
        }
    }

    #[test]
    fn sort_and_truncate() {
        let m = fixed(&[("A", 0.9), ("B", 0.2), ("C", 0.5)]);
        let top: Vec<_> = rank_experts(&m, &query("s"), 2).unwrap().into_iter().map(|r| r.0).collect();
        assert_eq!(top, ["A", "C"]);
        let all = rank_experts(&m, &query("s"), 3).unwrap();
        assert_eq!(all.len(), 3);
        assert!((all[0].1 - 0.9).abs() < 1e-12);
        assert_eq!(all[2].0, "B");
    }

    #[test]
    fn lexicographic_tie() {
        let m = fixed(&[("B", 0.5), ("A", 0.5)]);
        assert_eq!(rank_experts(&m, &query("s"), 1).unwrap()[0].0, "A");
    }

    #[test]
    fn bad_k() {
        let m = fixed(&[("A", 0.5)]);
        assert!(matches!(rank_experts(&m, &query("s"), 0), Err(RouterError::BadK { .. })));
        assert!(matches!(rank_experts(&m, &query("s"), 2), Err(RouterError::BadK { .. })));
    }

    #[test]
    fn expert_set_check() {
        let m = fixed(&[("A", 0.5), ("B", 0.5)]);
        assert!(m.ensure_matches(&["B", "A"]).is_ok());
        assert!(m.ensure_matches(&["A"]).is_err());
        assert!(m.ensure_matches(&["A", "C"]).is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
