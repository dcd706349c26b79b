//! Accuracy evaluation of leader strategies on held-out queries, k-sweeps
//! over the Elite Ensemble, and CSV export.
//!
//! Accuracy is the exact-match rate of the forecast object against the gold
//! object. Micro accuracy pools all queries; macro accuracy averages the
//! per-country accuracies of the countries present in the test set. A query
//! whose forecast failed counts as incorrect and is listed in the report.

mod export;
mod sweep;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{forecast, AggregationError, StrategyConfig};
use crate::experts::{draw_key_for, ExpertContext, ExpertPanel};
use crate::model::{AggregatedForecast, CountryCode, EntityId, ForecastQuery};
use crate::parallel::ordered_map;
use crate::router::{RouterError, RouterKind, RouterModel};

pub use export::{mean_sweep_csv, report_csv, sweep_csv};
pub use sweep::{k_sweep, mean_curve, KPoint, KSweepCurve, MeanKPoint};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("no outcomes to score")]
    EmptyOutcomes,
    #[error("strategy {0} needs a router model")]
    MissingRouter(StrategyConfig),
    #[error(transparent)]
    Router(#[from] RouterError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error("csv export: {0}")]
    Csv(#[from] csv::Error),
}

/// Whether one query was forecast correctly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub query_id: String,
    pub country: CountryCode,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountryScore {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub per_country: BTreeMap<CountryCode, CountryScore>,
    pub micro: f64,
    #[serde(rename = "macro")]
    pub macro_: f64,
}

pub fn score_predictions(outcomes: &[Outcome]) -> Result<Scores, EvaluationError> {
    if outcomes.is_empty() {
        return Err(EvaluationError::EmptyOutcomes);
    }
    let mut counts: BTreeMap<CountryCode, (usize, usize)> = BTreeMap::new();
    for o in outcomes {
        let c = counts.entry(o.country.clone()).or_default();
        c.0 += o.correct as usize;
        c.1 += 1;
    }
    let per_country: BTreeMap<_, _> = counts
        .into_iter()
        .map(|(country, (correct, total))| {
            let accuracy = correct as f64 / total as f64;
            (country, CountryScore { correct, total, accuracy })
        })
        .collect();
    let correct: usize = per_country.values().map(|s| s.correct).sum();
    let micro = correct as f64 / outcomes.len() as f64;
    let macro_ = per_country.values().map(|s| s.accuracy).sum::<f64>() / per_country.len() as f64;
    Ok(Scores { per_country, micro, macro_ })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedQuery {
    pub query_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub strategy: StrategyConfig,
    pub router_kind: Option<RouterKind>,
    pub seed: u64,
    pub query_count: usize,
    #[serde(flatten)]
    pub scores: Scores,
    /// Expert backend calls issued during the run.
    pub backend_calls: u64,
    pub failed_queries: Vec<FailedQuery>,
}

/// One query's forecast, or the reason there is none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryForecast {
    pub query_id: String,
    pub country: CountryCode,
    pub gold_object: EntityId,
    pub forecast: Option<AggregatedForecast>,
    pub error: Option<String>,
}

impl QueryForecast {
    pub fn is_correct(&self) -> bool {
        self.forecast.as_ref().is_some_and(|f| f.object == self.gold_object)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRun {
    pub report: EvaluationReport,
    pub forecasts: Vec<QueryForecast>,
}

/// Forecasts every query with `strategy` and scores the results.
///
/// Configuration problems (missing router, expert-set mismatch, bad k) are
/// reported before any expert is called; per-query failures are recorded
/// and the run continues.
pub fn run_strategy_eval(
    panel: &ExpertPanel,
    model: Option<&RouterModel>,
    strategy: StrategyConfig,
    ctx: &ExpertContext,
    test: &[ForecastQuery],
    seed: u64,
    parallelism: usize,
) -> Result<EvaluationRun, EvaluationError> {
    if test.is_empty() {
        return Err(EvaluationError::EmptyOutcomes);
    }
    if strategy.needs_router() {
        let m = model.ok_or(EvaluationError::MissingRouter(strategy))?;
        m.ensure_matches(&panel.expert_ids())?;
        if let StrategyConfig::Elite { k, .. } = strategy {
            if k == 0 || k > panel.len() {
                return Err(RouterError::BadK { k, n: panel.len() }.into());
            }
        }
    }

    panel.reset_calls();
    let forecasts = ordered_map(test, parallelism, |q| {
        let result = forecast(strategy, model, panel, q, ctx, draw_key_for(seed, q));
        let (forecast, error) = match result {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        QueryForecast {
            query_id: q.query_id.clone(),
            country: q.country.clone(),
            gold_object: q.gold_object.clone(),
            forecast,
            error,
        }
    });

    let outcomes: Vec<Outcome> = forecasts
        .iter()
        .map(|f| Outcome { query_id: f.query_id.clone(), country: f.country.clone(), correct: f.is_correct() })
        .collect();
    let report = EvaluationReport {
        strategy,
        router_kind: model.filter(|_| strategy.needs_router()).map(|m| m.kind),
        seed,
        query_count: test.len(),
        scores: score_predictions(&outcomes)?,
        backend_calls: panel.backend_calls(),
        failed_queries: forecasts
            .iter()
            .filter_map(|f| f.error.as_ref().map(|e| FailedQuery { query_id: f.query_id.clone(), error: e.clone() }))
            .collect(),
    };
    Ok(EvaluationRun { report, forecasts })
}
