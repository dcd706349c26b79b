//! The leader model: Expert Routing, Wisdom Aggregation (majority vote and
//! vanilla/weighted Best-of-N) and Elite Ensemble.
//!
//! Every arg-max uses the same tie-break: highest aggregate score, then the
//! highest single contributing confidence, then the lexicographically
//! smallest object id. Predictions are sorted by expert id before scoring,
//! so results never depend on input order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experts::{ExpertContext, ExpertError, ExpertPanel};
use crate::model::{AggregatedForecast, EntityId, ExpertPrediction, ForecastQuery};
use crate::router::{rank_experts, RouterError, RouterModel};

#[derive(Debug, Error)]
pub enum AggregationError {
    #[error("no predictions to aggregate")]
    EmptyPredictions,
    #[error("strategy {0} needs a router model")]
    MissingRouter(StrategyConfig),
    #[error("routed expert {expert_id} failed: {source}")]
    RoutedExpertFailed {
        expert_id: String,
        #[source]
        source: ExpertError,
    },
    #[error("every panel expert failed on query {0}")]
    AllExpertsFailed(String),
    #[error("every selected elite expert failed on query {0}")]
    AllEliteExpertsFailed(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    Router(#[from] RouterError),
}

/// Aggregation rule applied to a set of predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InnerStrategy {
    #[serde(rename = "majority")]
    MajorityVote,
    #[serde(rename = "vanilla_bon")]
    VanillaBestOfN,
    #[serde(rename = "weighted_bon")]
    WeightedBestOfN,
}

impl InnerStrategy {
    pub const ALL: [InnerStrategy; 3] =
        [InnerStrategy::MajorityVote, InnerStrategy::VanillaBestOfN, InnerStrategy::WeightedBestOfN];

    pub fn as_str(self) -> &'static str {
        match self {
            InnerStrategy::MajorityVote => "majority",
            InnerStrategy::VanillaBestOfN => "vanilla_bon",
            InnerStrategy::WeightedBestOfN => "weighted_bon",
        }
    }
}

impl FromStr for InnerStrategy {
    type Err = AggregationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InnerStrategy::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| AggregationError::UnknownStrategy(s.to_string()))
    }
}

impl fmt::Display for InnerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A leader strategy. Serializes as e.g.
/// `{"strategy": "elite", "k": 5, "inner": "weighted_bon"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "strategy")]
pub enum StrategyConfig {
    #[serde(rename = "routing")]
    Routing,
    #[serde(rename = "majority")]
    MajorityVote,
    #[serde(rename = "vanilla_bon")]
    VanillaBestOfN,
    #[serde(rename = "weighted_bon")]
    WeightedBestOfN,
    #[serde(rename = "elite")]
    Elite { k: usize, inner: InnerStrategy },
}

impl StrategyConfig {
    pub fn wisdom(inner: InnerStrategy) -> Self {
        match inner {
            InnerStrategy::MajorityVote => StrategyConfig::MajorityVote,
            InnerStrategy::VanillaBestOfN => StrategyConfig::VanillaBestOfN,
            InnerStrategy::WeightedBestOfN => StrategyConfig::WeightedBestOfN,
        }
    }

    /// Builds a strategy from its name plus the elite-only parameters.
    pub fn parse(name: &str, k: Option<usize>, inner: Option<InnerStrategy>) -> Result<Self, AggregationError> {
        match name {
            "routing" => Ok(StrategyConfig::Routing),
            "elite" => match (k, inner) {
                (Some(k), inner) => {
                    Ok(StrategyConfig::Elite { k, inner: inner.unwrap_or(InnerStrategy::WeightedBestOfN) })
                }
                (None, _) => Err(AggregationError::UnknownStrategy("elite requires k".into())),
            },
            other => Ok(StrategyConfig::wisdom(other.parse()?)),
        }
    }

    pub fn needs_router(self) -> bool {
        matches!(self, StrategyConfig::Routing | StrategyConfig::Elite { .. })
    }

    /// Compact label used in file names and CSV rows.
    pub fn label(self) -> String {
        match self {
            StrategyConfig::Routing => "routing".into(),
            StrategyConfig::MajorityVote => "majority".into(),
            StrategyConfig::VanillaBestOfN => "vanilla_bon".into(),
            StrategyConfig::WeightedBestOfN => "weighted_bon".into(),
            StrategyConfig::Elite { k, inner } => format!("elite_k{k}_{inner}"),
        }
    }
}

impl fmt::Display for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Copy)]
struct Tally {
    score: f64,
    best_confidence: f64,
}

fn sorted(predictions: &[ExpertPrediction]) -> Vec<&ExpertPrediction> {
    let mut v: Vec<_> = predictions.iter().collect();
    v.sort_by(|a, b| a.expert_id.cmp(&b.expert_id));
    v
}

/// Scores this close (relative) count as tied, so float summation order
/// cannot decide a winner that exact arithmetic would leave to the
/// tie-break.
pub const SCORE_TIE_TOLERANCE: f64 = 1e-9;

fn tied_with_max(score: f64, max: f64) -> bool {
    max - score <= SCORE_TIE_TOLERANCE * max.abs().max(1.0)
}

fn finish(
    tallies: BTreeMap<EntityId, Tally>,
    predictions: &[&ExpertPrediction],
    strategy: StrategyConfig,
) -> AggregatedForecast {
    let max = tallies.values().map(|t| t.score).fold(f64::NEG_INFINITY, f64::max);
    // BTreeMap iterates ids ascending, so keeping the first of equal
    // confidences resolves the final tie toward the smallest id.
    let mut winner: Option<(&EntityId, f64)> = None;
    for (object, t) in tallies.iter().filter(|(_, t)| tied_with_max(t.score, max)) {
        if winner.is_none_or(|(_, best)| t.best_confidence > best) {
            winner = Some((object, t.best_confidence));
        }
    }
    let object = winner.expect("tallies are non-empty").0.clone();
    AggregatedForecast {
        object,
        strategy,
        score_table: tallies.into_iter().map(|(o, t)| (o, t.score)).collect(),
        contributing_experts: predictions.iter().map(|p| p.expert_id.clone()).collect(),
    }
}

fn tally(
    predictions: &[ExpertPrediction],
    strategy: StrategyConfig,
    score_of: impl Fn(f64, &ExpertPrediction) -> f64,
) -> Result<AggregatedForecast, AggregationError> {
    if predictions.is_empty() {
        return Err(AggregationError::EmptyPredictions);
    }
    let ordered = sorted(predictions);
    let mut tallies: BTreeMap<EntityId, Tally> = BTreeMap::new();
    for p in &ordered {
        let t = tallies.entry(p.object.clone()).or_insert(Tally { score: 0.0, best_confidence: f64::NEG_INFINITY });
        t.score = score_of(t.score, p);
        t.best_confidence = t.best_confidence.max(p.confidence);
    }
    Ok(finish(tallies, &ordered, strategy))
}

/// Vote counts per object; most votes wins.
pub fn majority_vote(predictions: &[ExpertPrediction]) -> Result<AggregatedForecast, AggregationError> {
    tally(predictions, StrategyConfig::MajorityVote, |acc, _| acc + 1.0)
}

/// Maximum confidence per object; the single most confident prediction wins.
pub fn vanilla_best_of_n(predictions: &[ExpertPrediction]) -> Result<AggregatedForecast, AggregationError> {
    tally(predictions, StrategyConfig::VanillaBestOfN, |acc, p| acc.max(p.confidence))
}

/// `S_agg(o) = sum_j c_j * [o_j = o]`; the highest aggregated score wins.
pub fn weighted_best_of_n(predictions: &[ExpertPrediction]) -> Result<AggregatedForecast, AggregationError> {
    tally(predictions, StrategyConfig::WeightedBestOfN, |acc, p| acc + p.confidence)
}

pub fn aggregate(
    inner: InnerStrategy,
    predictions: &[ExpertPrediction],
) -> Result<AggregatedForecast, AggregationError> {
    match inner {
        InnerStrategy::MajorityVote => majority_vote(predictions),
        InnerStrategy::VanillaBestOfN => vanilla_best_of_n(predictions),
        InnerStrategy::WeightedBestOfN => weighted_best_of_n(predictions),
    }
}

/// Only the router's top expert is queried; its answer is the forecast.
pub fn expert_routing_forecast(
    model: &RouterModel,
    panel: &ExpertPanel,
    query: &ForecastQuery,
    ctx: &ExpertContext,
    draw_key: u64,
) -> Result<AggregatedForecast, AggregationError> {
    model.ensure_matches(&panel.expert_ids())?;
    let (expert_id, _) = rank_experts(model, query, 1)?.remove(0);
    let p = panel
        .query_expert(&expert_id, query, ctx, draw_key)
        .map_err(|source| AggregationError::RoutedExpertFailed { expert_id: expert_id.clone(), source })?;
    Ok(AggregatedForecast {
        object: p.object.clone(),
        strategy: StrategyConfig::Routing,
        score_table: BTreeMap::from([(p.object, p.confidence)]),
        contributing_experts: vec![expert_id],
    })
}

/// Queries the whole panel and aggregates the surviving predictions.
pub fn wisdom_forecast(
    panel: &ExpertPanel,
    query: &ForecastQuery,
    ctx: &ExpertContext,
    draw_key: u64,
    inner: InnerStrategy,
) -> Result<AggregatedForecast, AggregationError> {
    let fan = panel.query_all(query, ctx, draw_key);
    if fan.predictions.is_empty() {
        return Err(AggregationError::AllExpertsFailed(query.query_id.clone()));
    }
    aggregate(inner, &fan.predictions)
}

/// Queries the router's top-`k` experts and aggregates their predictions.
pub fn elite_ensemble_forecast(
    model: &RouterModel,
    panel: &ExpertPanel,
    query: &ForecastQuery,
    ctx: &ExpertContext,
    draw_key: u64,
    k: usize,
    inner: InnerStrategy,
) -> Result<AggregatedForecast, AggregationError> {
    model.ensure_matches(&panel.expert_ids())?;
    let elite = rank_experts(model, query, k)?;
    let ids: Vec<&str> = elite.iter().map(|(id, _)| id.as_str()).collect();
    let fan = panel.query_experts(&ids, query, ctx, draw_key);
    if fan.predictions.is_empty() {
        return Err(AggregationError::AllEliteExpertsFailed(query.query_id.clone()));
    }
    let mut forecast = aggregate(inner, &fan.predictions)?;
    forecast.strategy = StrategyConfig::Elite { k, inner };
    Ok(forecast)
}

/// Dispatches on `strategy`.
pub fn forecast(
    strategy: StrategyConfig,
    model: Option<&RouterModel>,
    panel: &ExpertPanel,
    query: &ForecastQuery,
    ctx: &ExpertContext,
    draw_key: u64,
) -> Result<AggregatedForecast, AggregationError> {
    let router = || model.ok_or(AggregationError::MissingRouter(strategy));
    match strategy {
        StrategyConfig::Routing => expert_routing_forecast(router()?, panel, query, ctx, draw_key),
        StrategyConfig::MajorityVote => wisdom_forecast(panel, query, ctx, draw_key, InnerStrategy::MajorityVote),
        StrategyConfig::VanillaBestOfN => wisdom_forecast(panel, query, ctx, draw_key, InnerStrategy::VanillaBestOfN),
        StrategyConfig::WeightedBestOfN => wisdom_forecast(panel, query, ctx, draw_key, InnerStrategy::WeightedBestOfN),
        StrategyConfig::Elite { k, inner } => elite_ensemble_forecast(router()?, panel, query, ctx, draw_key, k, inner),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(expert: &str, object: &str, c: f64) -> ExpertPrediction {
        ExpertPrediction::new(expert, EntityId::from_normalized(object), c).unwrap()
    }

    fn e(s: &str) -> EntityId {
        EntityId::from_normalized(s)
    }

    #[test]
    fn majority_examples() {
        let f = majority_vote(&[p("1", "A", 0.2), p("2", "B", 0.9), p("3", "A", 0.3)]).unwrap();
        assert_eq!(f.object, e("A"));
        assert_eq!(f.score_table[&e("A")], 2.0);
        let tie = majority_vote(&[p("1", "A", 0.4), p("2", "B", 0.7)]).unwrap();
        assert_eq!(tie.object, e("B"));
        let single = majority_vote(&[p("1", "Z", 0.1)]).unwrap();
        assert_eq!(single.object, e("Z"));
        assert_eq!(single.contributing_experts, ["1"]);
    }

    #[test]
    fn vanilla_examples() {
        assert_eq!(vanilla_best_of_n(&[p("1", "A", 0.6), p("2", "B", 0.9)]).unwrap().object, e("B"));
        assert_eq!(vanilla_best_of_n(&[p("1", "B", 0.6), p("2", "A", 0.6)]).unwrap().object, e("A"));
        let f = vanilla_best_of_n(&[p("1", "A", 0.3), p("2", "A", 0.5), p("3", "B", 0.4)]).unwrap();
        assert_eq!(f.score_table[&e("A")], 0.5);
    }

    #[test]
    fn weighted_examples() {
        let preds = [p("1", "A", 0.6), p("2", "B", 0.5), p("3", "B", 0.3)];
        let f = weighted_best_of_n(&preds).unwrap();
        assert_eq!(f.object, e("B"));
        assert!((f.score_table[&e("B")] - 0.8).abs() < 1e-12);
        assert_eq!(f.score_table[&e("A")], 0.6);
        let halved: Vec<_> = preds.iter().map(|x| p(&x.expert_id, x.object.as_str(), x.confidence * 0.5)).collect();
        assert_eq!(weighted_best_of_n(&halved).unwrap().object, e("B"));
    }

    #[test]
    fn float_rounding_does_not_break_ties() {
        // 0.1 + 0.2 exceeds 0.3 in binary floating point; the tie must still
        // go to the higher single confidence.
        let f = weighted_best_of_n(&[p("1", "a", 0.1), p("2", "a", 0.2), p("3", "b", 0.3)]).unwrap();
        assert_eq!(f.object, e("b"));
    }

    #[test]
    fn empty_is_an_error() {
        for inner in InnerStrategy::ALL {
            assert!(matches!(aggregate(inner, &[]), Err(AggregationError::EmptyPredictions)));
        }
    }

    #[test]
    fn unparseable_competes() {
        let f = weighted_best_of_n(&[
            p("1", "A", 0.2),
            ExpertPrediction::unparseable("2"),
            ExpertPrediction::unparseable("3"),
        ])
        .unwrap();
        assert_eq!(f.object, e("A"));
        let f =
            majority_vote(&[p("1", "A", 0.2), ExpertPrediction::unparseable("2"), ExpertPrediction::unparseable("3")])
                .unwrap();
        assert!(f.object.is_unparseable());
    }

    #[test]
    fn strategy_config_json() {
        let elite = StrategyConfig::Elite { k: 5, inner: InnerStrategy::WeightedBestOfN };
        assert_eq!(serde_json::to_string(&elite).unwrap(), r#"{"strategy":"elite","k":5,"inner":"weighted_bon"}"#);
        assert_eq!(serde_json::to_string(&StrategyConfig::Routing).unwrap(), r#"{"strategy":"routing"}"#);
        let back: StrategyConfig = serde_json::from_str(r#"{"strategy":"majority"}"#).unwrap();
        assert_eq!(back, StrategyConfig::MajorityVote);
        assert_eq!(StrategyConfig::parse("elite", Some(3), None).unwrap().label(), "elite_k3_weighted_bon");
        assert!(StrategyConfig::parse("elite", None, None).is_err());
        assert!(StrategyConfig::parse("debate", None, None).is_err());
    }

    fn arb_predictions() -> impl Strategy<Value = Vec<ExpertPrediction>> {
        proptest::collection::vec((0usize..4, 1u32..10), 1..7).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (o, c))| p(&format!("e{i}"), ["a", "b", "c", "d"][o], c as f64 / 10.0))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn order_independent(preds in arb_predictions(), rot in 0usize..7) {
            let mut shuffled = preds.clone();
            let len = shuffled.len();
            shuffled.rotate_left(rot % len);
            shuffled.reverse();
            for inner in InnerStrategy::ALL {
                prop_assert_eq!(aggregate(inner, &preds).unwrap(), aggregate(inner, &shuffled).unwrap());
            }
        }

        #[test]
        fn winner_attains_max_score(preds in arb_predictions()) {
            for inner in InnerStrategy::ALL {
                let f = aggregate(inner, &preds).unwrap();
                let best = f.score_table.values().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(tied_with_max(f.score_table[&f.object], best));
            }
        }

        #[test]
        fn score_totals(preds in arb_predictions()) {
            let w = weighted_best_of_n(&preds).unwrap();
            let total: f64 = w.score_table.values().sum();
            let conf: f64 = preds.iter().map(|p| p.confidence).sum();
            prop_assert!((total - conf).abs() < 1e-9);
            let m = majority_vote(&preds).unwrap();
            prop_assert_eq!(m.score_table.values().sum::<f64>(), preds.len() as f64);
        }

        #[test]
        fn weighted_scale_invariant(preds in arb_predictions(), shift in 0i32..6) {
            // Power-of-two scaling is exact, so near-ties cannot flip.
            let lambda = 2f64.powi(-shift);
            let scaled: Vec<_> = preds.iter().map(|x| p(&x.expert_id, x.object.as_str(), x.confidence * lambda)).collect();
            prop_assert_eq!(weighted_best_of_n(&preds).unwrap().object, weighted_best_of_n(&scaled).unwrap().object);
        }
    }
}
