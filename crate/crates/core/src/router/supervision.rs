use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{featurize, FeatureConfig, FeatureVector, RouterError};
use crate::experts::{draw_key_for, ExpertContext, ExpertPanel};
use crate::model::ForecastQuery;
use crate::parallel::ordered_map;

/// One query's features and the experts that answered it correctly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisionExample {
    pub query_id: String,
    pub features: FeatureVector,
    pub positive_experts: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SupervisionSet {
    pub examples: Vec<SupervisionExample>,
    /// Queries no expert answered correctly.
    pub skipped: usize,
    /// Individual expert failures tolerated along the way.
    pub expert_failures: usize,
}

/// Queries every expert on every query; experts that return the gold object
/// become the query's positive labels.
pub fn build_supervision(
    queries: &[ForecastQuery],
    panel: &ExpertPanel,
    ctx: &ExpertContext,
    features: FeatureConfig,
    seed: u64,
    parallelism: usize,
) -> Result<SupervisionSet, RouterError> {
    let outcomes = ordered_map(queries, parallelism, |q| {
        let fan = panel.query_all(q, ctx, draw_key_for(seed, q));
        if fan.predictions.is_empty() {
            return Err(RouterError::AllExpertsFailed {
                query_id: q.query_id.clone(),
                first_error: fan.failures.first().map(|f| f.error.to_string()).unwrap_or_default(),
            });
        }
        let positives: BTreeSet<String> =
            fan.predictions.iter().filter(|p| q.is_correct(&p.object)).map(|p| p.expert_id.clone()).collect();
        Ok((positives, fan.failures.len()))
    });

    let mut set = SupervisionSet::default();
    for (q, outcome) in queries.iter().zip(outcomes) {
        let (positives, failures) = outcome?;
        set.expert_failures += failures;
        if positives.is_empty() {
            set.skipped += 1;
            continue;
        }
        set.examples.push(SupervisionExample {
            query_id: q.query_id.clone(),
            features: featurize(q, features),
            positive_experts: positives,
        });
    }
    Ok(set)
}
