use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{sigmoid, ExpertScorer, RouterError, RouterKind, RouterModel, SupervisionExample};
use super::{DEFAULT_DIM, DEFAULT_HORIZON};
use crate::hashing::{mix, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    /// Standard deviation of the Gaussian weight initialization.
    pub init_sigma: f64,
    pub dim: usize,
    pub horizon: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            learning_rate: 0.1,
            epochs: 10,
            batch_size: 32,
            l2: 1e-4,
            init_sigma: 0.01,
            dim: DEFAULT_DIM,
            horizon: DEFAULT_HORIZON,
        }
    }
}

impl Hyperparameters {
    fn validate(&self) -> Result<(), RouterError> {
        let bad = |m: &str| Err(RouterError::BadHyperparameters(m.to_string()));
        if self.dim == 0 || self.dim > u32::MAX as usize {
            return bad("dim must lie in 1..=u32::MAX");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0 && self.learning_rate * self.l2 < 1.0) {
            return bad("l2 must be non-negative with learning_rate * l2 < 1");
        }
        if !(self.init_sigma.is_finite() && self.init_sigma >= 0.0) {
            return bad("init_sigma must be non-negative");
        }
        Ok(())
    }
}

fn initial_scorers(expert_ids: &[&str], hp: &Hyperparameters, seed: u64) -> Vec<ExpertScorer> {
    let mut rng = rng_from(mix(seed, 0x1417));
    let normal = (hp.init_sigma > 0.0).then(|| Normal::new(0.0, hp.init_sigma).expect("sigma is finite"));
    expert_ids
        .iter()
        .map(|id| ExpertScorer {
            expert_id: id.to_string(),
            bias: 0.0,
            weights: match &normal {
                Some(n) => (0..hp.dim).map(|_| n.sample(&mut rng)).collect(),
                None => vec![0.0; hp.dim],
            },
        })
        .collect()
}

/// Gaussian-initialized scorers that never see training data.
pub fn make_untrained_router(expert_ids: &[&str], hp: Hyperparameters, seed: u64) -> Result<RouterModel, RouterError> {
    hp.validate()?;
    Ok(RouterModel {
        kind: RouterKind::Untrained,
        seed,
        hyperparameters: hp,
        scorers: initial_scorers(expert_ids, &hp, seed),
        loss_history: Vec::new(),
    })
}

fn bce(z: f64, y: f64) -> f64 {
    // log(1 + e^z) - y z, computed without overflow.
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

/// Mean binary cross-entropy over examples, summed over experts, plus
/// `l2 / 2 * ||w||^2` (biases unpenalized).
pub fn training_loss(model: &RouterModel, supervision: &[SupervisionExample]) -> f64 {
    let n = supervision.len().max(1) as f64;
    model
        .scorers
        .iter()
        .map(|s| {
            let data: f64 = supervision
                .iter()
                .map(|ex| {
                    let y = if ex.positive_experts.contains(&s.expert_id) { 1.0 } else { 0.0 };
                    bce(s.logit(&ex.features), y)
                })
                .sum::<f64>()
                / n;
            let norm: f64 = s.weights.iter().map(|w| w * w).sum();
            data + 0.5 * model.hyperparameters.l2 * norm
        })
        .sum()
}

/// Weights stored as `scale * v` so the L2 shrink is O(1) per step.
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
    bias: f64,
}

impl ScaledWeights {
    fn logit(&self, x: &super::FeatureVector) -> f64 {
        self.scale * x.dot(&self.v) + self.bias
    }

    fn renormalize(&mut self) {
        for w in &mut self.v {
            *w *= self.scale;
        }
        self.scale = 1.0;
    }
}

/// One-vs-rest logistic scorers trained by mini-batch SGD on binary
/// cross-entropy with L2. Examples are reshuffled every epoch from a seeded
/// permutation.
pub fn train_router(
    supervision: &[SupervisionExample],
    expert_ids: &[&str],
    hp: Hyperparameters,
    seed: u64,
) -> Result<RouterModel, RouterError> {
    hp.validate()?;
    if supervision.is_empty() {
        return Err(RouterError::EmptySupervision);
    }
    for ex in supervision {
        if let Some(bad) = ex.positive_experts.iter().find(|p| !expert_ids.contains(&p.as_str())) {
            return Err(RouterError::UnknownExpert(bad.clone()));
        }
        if let Some(index) = ex.features.max_index().filter(|&i| i as usize >= hp.dim) {
            return Err(RouterError::DimensionMismatch { index, dim: hp.dim });
        }
    }

    let mut model = make_untrained_router(expert_ids, hp, seed)?;
    model.kind = RouterKind::Trained;
    model.loss_history.push(training_loss(&model, supervision));

    let labels: Vec<Vec<f64>> = model
        .scorers
        .iter()
        .map(|s| {
            supervision.iter().map(|ex| if ex.positive_experts.contains(&s.expert_id) { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    let mut state: Vec<ScaledWeights> = model
        .scorers
        .iter_mut()
        .map(|s| ScaledWeights { v: std::mem::take(&mut s.weights), scale: 1.0, bias: s.bias })
        .collect();

    let decay = 1.0 - hp.learning_rate * hp.l2;
    let mut order: Vec<usize> = (0..supervision.len()).collect();
    let mut rng = rng_from(mix(seed, 0x5afe));
    let mut residuals = Vec::with_capacity(hp.batch_size);

    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            let step = hp.learning_rate / batch.len() as f64;
            for (w, y) in state.iter_mut().zip(&labels) {
                residuals.clear();
                residuals.extend(batch.iter().map(|&i| sigmoid(w.logit(&supervision[i].features)) - y[i]));
                w.scale *= decay;
                if w.scale < 1e-6 {
                    w.renormalize();
                }
                for (&i, &r) in batch.iter().zip(&residuals) {
                    for &(j, x) in supervision[i].features.entries() {
                        w.v[j as usize] -= step * r * x / w.scale;
                    }
                }
                w.bias -= step * residuals.iter().sum::<f64>();
            }
        }
        for (s, w) in model.scorers.iter_mut().zip(&state) {
            s.bias = w.bias;
            s.weights = w.v.iter().map(|v| v * w.scale).collect();
        }
        model.loss_history.push(training_loss(&model, supervision));
    }

    for (s, mut w) in model.scorers.iter_mut().zip(state) {
        w.renormalize();
        s.bias = w.bias;
        s.weights = w.v;
    }
    Ok(model)
}
