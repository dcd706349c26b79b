//! Seeded specialist simulator.
//!
//! A mock expert answers correctly with probability `p_home` on queries from
//! its home countries and `p_away` elsewhere. Correct answers carry a
//! confidence drawn from `conf_correct`, wrong ones a uniformly chosen
//! non-gold candidate with a confidence from `conf_wrong`. Every draw is a
//! pure function of `(seed, draw_key)`.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ExpertBackend, ExpertContext, ExpertError};
use crate::hashing::{mix, rng_from};
use crate::model::{CountryCode, EntityId, ExpertPrediction, ForecastQuery};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockExpertProfile {
    pub home_countries: BTreeSet<CountryCode>,
    pub p_home: f64,
    pub p_away: f64,
    #[serde(default = "default_conf_correct")]
    pub conf_correct: (f64, f64),
    #[serde(default = "default_conf_wrong")]
    pub conf_wrong: (f64, f64),
    pub seed: u64,
}

pub fn default_conf_correct() -> (f64, f64) {
    (0.55, 0.95)
}

pub fn default_conf_wrong() -> (f64, f64) {
    (0.05, 0.60)
}

impl MockExpertProfile {
    pub fn specialist(home: impl IntoIterator<Item = CountryCode>, p_home: f64, p_away: f64, seed: u64) -> Self {
        MockExpertProfile {
            home_countries: home.into_iter().collect(),
            p_home,
            p_away,
            conf_correct: default_conf_correct(),
            conf_wrong: default_conf_wrong(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ExpertError> {
        let interval_ok = |(lo, hi): (f64, f64)| 0.0 <= lo && lo <= hi && hi <= 1.0;
        if !(0.0 <= self.p_away && self.p_away <= self.p_home && self.p_home <= 1.0) {
            return Err(ExpertError::Config(format!(
                "mock probabilities must satisfy 0 <= p_away <= p_home <= 1 (got {} / {})",
                self.p_away, self.p_home
            )));
        }
        if !interval_ok(self.conf_correct) || !interval_ok(self.conf_wrong) {
            return Err(ExpertError::Config("confidence intervals must lie within [0, 1]".into()));
        }
        Ok(())
    }
}

fn draw_in(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

pub fn mock_predict(
    expert_id: &str,
    profile: &MockExpertProfile,
    query: &ForecastQuery,
    candidates: &[EntityId],
    draw_key: u64,
) -> Result<ExpertPrediction, ExpertError> {
    let distractors = candidates.iter().filter(|c| **c != query.gold_object).count();
    if candidates.len() < 2 || distractors == 0 {
        return Err(ExpertError::CandidatePoolTooSmall(candidates.len()));
    }
    let mut rng = rng_from(mix(profile.seed, draw_key));
    let p = if profile.home_countries.contains(&query.country) { profile.p_home } else { profile.p_away };
    let (object, confidence) = if rng.random::<f64>() < p {
        (query.gold_object.clone(), draw_in(&mut rng, profile.conf_correct))
    } else {
        let pick = rng.random_range(0..distractors);
        let object =
            candidates.iter().filter(|c| **c != query.gold_object).nth(pick).expect("pick < distractor count").clone();
        (object, draw_in(&mut rng, profile.conf_wrong))
    };
    Ok(ExpertPrediction { expert_id: expert_id.to_string(), object, confidence })
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    pub profile: MockExpertProfile,
}

impl ExpertBackend for MockBackend {
    fn predict(
        &self,
        expert_id: &str,
        query: &ForecastQuery,
        ctx: &ExpertContext,
        draw_key: u64,
    ) -> Result<ExpertPrediction, ExpertError> {
        mock_predict(expert_id, &self.profile, query, ctx.pools.pool(&query.country), draw_key)
    }
}
