use serde::{Deserialize, Serialize};

use super::{score_predictions, EvaluationError, Outcome};
use crate::aggregation::{aggregate, InnerStrategy};
use crate::experts::{draw_key_for, ExpertContext, ExpertPanel};
use crate::model::ForecastQuery;
use crate::parallel::ordered_map;
use crate::router::{RouterKind, RouterModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KPoint {
    pub k: usize,
    pub micro: f64,
    #[serde(rename = "macro")]
    pub macro_: f64,
}

/// Elite Ensemble accuracy for every `k` in `1..=N` under one router.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepCurve {
    pub router_kind: RouterKind,
    pub inner: InnerStrategy,
    pub seed: u64,
    pub points: Vec<KPoint>,
}

impl KSweepCurve {
    /// The point with the highest micro accuracy (smallest k on ties).
    pub fn best(&self) -> Option<KPoint> {
        self.points.iter().copied().fold(None, |best: Option<KPoint>, p| match best {
            Some(b) if b.micro >= p.micro => Some(b),
            _ => Some(p),
        })
    }

    pub fn at(&self, k: usize) -> Option<KPoint> {
        self.points.iter().copied().find(|p| p.k == k)
    }
}

/// Sweeps `k` over `1..=N`.
///
/// Each query's ranking is computed once and every expert is asked once;
/// the top-`k` subset of those answers is aggregated for each `k`. With
/// deterministic backends this equals running the Elite Ensemble separately
/// per `k`, at 1/N of the backend cost.
pub fn k_sweep(
    panel: &ExpertPanel,
    model: &RouterModel,
    inner: InnerStrategy,
    ctx: &ExpertContext,
    test: &[ForecastQuery],
    seed: u64,
    parallelism: usize,
) -> Result<KSweepCurve, EvaluationError> {
    model.ensure_matches(&panel.expert_ids())?;
    let n = panel.len();
    // correct[q][k-1]
    let per_query: Vec<Vec<bool>> = ordered_map(test, parallelism, |q| {
        let ranking = model.score_all(q);
        let fan = panel.query_all(q, ctx, draw_key_for(seed, q));
        let mut chosen = Vec::with_capacity(n);
        (0..n)
            .map(|k| {
                if let Some(p) = fan.predictions.iter().find(|p| p.expert_id == ranking[k].0) {
                    chosen.push(p.clone());
                }
                aggregate(inner, &chosen).is_ok_and(|f| q.is_correct(&f.object))
            })
            .collect()
    });

    let points = (1..=n)
        .map(|k| {
            let outcomes: Vec<Outcome> = test
                .iter()
                .zip(&per_query)
                .map(|(q, c)| Outcome { query_id: q.query_id.clone(), country: q.country.clone(), correct: c[k - 1] })
                .collect();
            let s = score_predictions(&outcomes)?;
            Ok(KPoint { k, micro: s.micro, macro_: s.macro_ })
        })
        .collect::<Result<Vec<_>, EvaluationError>>()?;
    Ok(KSweepCurve { router_kind: model.kind, inner, seed, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanKPoint {
    pub k: usize,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub macro_mean: f64,
}

/// Pointwise mean and (population) standard deviation across curves of
/// equal length.
pub fn mean_curve(curves: &[KSweepCurve]) -> Vec<MeanKPoint> {
    let Some(first) = curves.first() else {
        return Vec::new();
    };
    let n = curves.len() as f64;
    (0..first.points.len())
        .map(|i| {
            let micro: Vec<f64> = curves.iter().map(|c| c.points[i].micro).collect();
            let micro_mean = micro.iter().sum::<f64>() / n;
            let var = micro.iter().map(|m| (m - micro_mean).powi(2)).sum::<f64>() / n;
            MeanKPoint {
                k: first.points[i].k,
                micro_mean,
                micro_std: var.sqrt(),
                macro_mean: curves.iter().map(|c| c.points[i].macro_).sum::<f64>() / n,
            }
        })
        .collect()
}
