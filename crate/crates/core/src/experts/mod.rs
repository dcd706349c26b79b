//! Pluggable expert predictors and the panel that fans queries out to them.
//!
//! Backends implement [`ExpertBackend`]. Two ship here: seeded mock
//! specialists ([`MockBackend`]) and HTTP completion endpoints
//! ([`RemoteBackend`]). Panel results are always returned sorted by expert
//! id, so downstream aggregation never depends on completion order.

mod confidence;
mod mock;
mod prompt;
mod remote;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CandidatePools, EntityRegistry};
use crate::hashing::{fnv1a, mix};
use crate::model::{CountryCode, ExpertPrediction, ForecastQuery};

pub use confidence::extract_confidence;
pub use mock::{default_conf_correct, default_conf_wrong, mock_predict, MockBackend, MockExpertProfile};
pub use prompt::{build_prompt, MissingSlot, PromptTemplate, NO_HISTORY_MARKER};
pub use remote::{
    adapt_chat_response, interpret_completion, CallPolicy, EndpointConfig, NativeRequest, NativeResponse,
    RemoteBackend, WireProfile,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpertError {
    #[error("token logprob list is empty")]
    EmptyLogprobs,
    #[error("token logprob {0} is positive or not a number")]
    PositiveLogprob(f64),
    #[error("candidate pool of {0} entries has no distractor for the gold object")]
    CandidatePoolTooSmall(usize),
    #[error("expert {expert_id} timed out after {after_ms} ms")]
    Timeout { expert_id: String, after_ms: u64 },
    #[error("expert {expert_id} sent a malformed response: {message}")]
    Protocol { expert_id: String, message: String },
    #[error("expert {expert_id} is unreachable: {message}")]
    Transport { expert_id: String, message: String },
    #[error("invalid panel configuration: {0}")]
    Config(String),
    #[error("unknown expert {0:?}")]
    UnknownExpert(String),
}

impl ExpertError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ExpertError::Timeout { .. } | ExpertError::Transport { .. })
    }
}

/// Everything a backend may consult besides the query itself.
#[derive(Debug, Clone, Default)]
pub struct ExpertContext {
    pub pools: CandidatePools,
    pub registry: EntityRegistry,
    pub template: PromptTemplate,
}

pub trait ExpertBackend: Send + Sync + fmt::Debug {
    fn predict(
        &self,
        expert_id: &str,
        query: &ForecastQuery,
        ctx: &ExpertContext,
        draw_key: u64,
    ) -> Result<ExpertPrediction, ExpertError>;
}

/// Per-query randomness key shared by all experts of a panel.
pub fn draw_key_for(seed: u64, query: &ForecastQuery) -> u64 {
    mix(seed, fnv1a(query.query_id.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BackendConfig {
    Mock {
        p_home: f64,
        p_away: f64,
        #[serde(default = "default_conf_correct")]
        conf_correct: (f64, f64),
        #[serde(default = "default_conf_wrong")]
        conf_wrong: (f64, f64),
        seed: u64,
    },
    Remote(EndpointConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertConfig {
    pub expert_id: String,
    #[serde(default)]
    pub home_countries: BTreeSet<CountryCode>,
    pub backend: BackendConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelConfig {
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_ms: u64,
    /// Maximum concurrent backend calls per query.
    #[serde(default = "default_fanout")]
    pub fanout: usize,
    pub experts: Vec<ExpertConfig>,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    2
}

fn default_backoff_ms() -> u64 {
    200
}

fn default_fanout() -> usize {
    1
}

impl PanelConfig {
    pub fn new(experts: Vec<ExpertConfig>) -> Self {
        PanelConfig {
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
            retry_backoff_ms: default_backoff_ms(),
            fanout: default_fanout(),
            experts,
        }
    }

    /// One mock specialist per country, ids `expert_<code>`.
    pub fn specialists(countries: &[CountryCode], p_home: f64, p_away: f64, seed: u64) -> Self {
        let experts = countries
            .iter()
            .enumerate()
            .map(|(i, c)| ExpertConfig {
                expert_id: format!("expert_{}", c.as_str().to_lowercase()),
                home_countries: [c.clone()].into_iter().collect(),
                backend: BackendConfig::Mock {
                    p_home,
                    p_away,
                    conf_correct: default_conf_correct(),
                    conf_wrong: default_conf_wrong(),
                    seed: mix(seed, i as u64),
                },
            })
            .collect();
        PanelConfig::new(experts)
    }

    /// A single mock generalist with the same accuracy everywhere.
    pub fn generalist(p: f64, seed: u64) -> Self {
        PanelConfig::new(vec![ExpertConfig {
            expert_id: "generalist".into(),
            home_countries: BTreeSet::new(),
            backend: BackendConfig::Mock {
                p_home: p,
                p_away: p,
                conf_correct: default_conf_correct(),
                conf_wrong: default_conf_wrong(),
                seed,
            },
        }])
    }

    fn policy(&self) -> CallPolicy {
        CallPolicy {
            timeout: Duration::from_millis(self.timeout_ms),
            retries: self.retries,
            backoff: Duration::from_millis(self.retry_backoff_ms),
        }
    }
}

pub struct PanelMember {
    pub expert_id: String,
    pub home_countries: BTreeSet<CountryCode>,
    backend: Arc<dyn ExpertBackend>,
}

impl PanelMember {
    pub fn new(
        expert_id: impl Into<String>,
        home_countries: BTreeSet<CountryCode>,
        backend: Arc<dyn ExpertBackend>,
    ) -> Self {
        PanelMember { expert_id: expert_id.into(), home_countries, backend }
    }
}

impl fmt::Debug for PanelMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PanelMember")
            .field("expert_id", &self.expert_id)
            .field("home_countries", &self.home_countries)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertFailure {
    pub expert_id: String,
    pub error: ExpertError,
}

/// Predictions and failures of one fan-out, each sorted by expert id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FanOut {
    pub predictions: Vec<ExpertPrediction>,
    pub failures: Vec<ExpertFailure>,
}

#[derive(Debug)]
pub struct ExpertPanel {
    members: Vec<PanelMember>,
    fanout: usize,
    calls: AtomicU64,
}

impl ExpertPanel {
    pub fn new(members: Vec<PanelMember>) -> Result<Self, ExpertError> {
        if members.is_empty() {
            return Err(ExpertError::Config("panel has no experts".into()));
        }
        let mut seen = HashSet::new();
        for m in &members {
            if !seen.insert(m.expert_id.as_str()) {
                return Err(ExpertError::Config(format!("duplicate expert id {:?}", m.expert_id)));
            }
        }
        Ok(ExpertPanel { members, fanout: 1, calls: AtomicU64::new(0) })
    }

    pub fn from_config(config: &PanelConfig) -> Result<Self, ExpertError> {
        let policy = config.policy();
        let members = config
            .experts
            .iter()
            .map(|e| {
                let backend: Arc<dyn ExpertBackend> = match &e.backend {
                    BackendConfig::Mock { p_home, p_away, conf_correct, conf_wrong, seed } => {
                        let profile = MockExpertProfile {
                            home_countries: e.home_countries.clone(),
                            p_home: *p_home,
                            p_away: *p_away,
                            conf_correct: *conf_correct,
                            conf_wrong: *conf_wrong,
                            seed: *seed,
                        };
                        profile.validate()?;
                        Arc::new(MockBackend { profile })
                    }
                    BackendConfig::Remote(endpoint) => Arc::new(RemoteBackend::new(endpoint.clone(), policy)),
                };
                Ok(PanelMember::new(e.expert_id.clone(), e.home_countries.clone(), backend))
            })
            .collect::<Result<Vec<_>, ExpertError>>()?;
        Ok(ExpertPanel::new(members)?.with_fanout(config.fanout))
    }

    pub fn with_fanout(mut self, fanout: usize) -> Self {
        self.fanout = fanout.max(1);
        self
    }

    /// Panel size `N`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[PanelMember] {
        &self.members
    }

    pub fn expert_ids(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.expert_id.as_str()).collect()
    }

    /// Total backend invocations since construction or the last reset.
    pub fn backend_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn query_expert(
        &self,
        expert_id: &str,
        query: &ForecastQuery,
        ctx: &ExpertContext,
        draw_key: u64,
    ) -> Result<ExpertPrediction, ExpertError> {
        let member = self
            .members
            .iter()
            .find(|m| m.expert_id == expert_id)
            .ok_or_else(|| ExpertError::UnknownExpert(expert_id.to_string()))?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        member.backend.predict(&member.expert_id, query, ctx, draw_key)
    }

    /// Queries the given experts, at most `fanout` at a time.
    pub fn query_experts(
        &self,
        expert_ids: &[&str],
        query: &ForecastQuery,
        ctx: &ExpertContext,
        draw_key: u64,
    ) -> FanOut {
        let results: Vec<(String, Result<ExpertPrediction, ExpertError>)> = if self.fanout <= 1 || expert_ids.len() <= 1
        {
            expert_ids.iter().map(|id| (id.to_string(), self.query_expert(id, query, ctx, draw_key))).collect()
        } else {
            std::thread::scope(|scope| {
                expert_ids
                    .chunks(self.fanout)
                    .flat_map(|chunk| {
                        let handles: Vec<_> = chunk
                            .iter()
                            .map(|id| {
                                scope.spawn(move || (id.to_string(), self.query_expert(id, query, ctx, draw_key)))
                            })
                            .collect();
                        handles.into_iter().map(|h| h.join().expect("expert call panicked")).collect::<Vec<_>>()
                    })
                    .collect()
            })
        };

        let mut out = FanOut::default();
        for (expert_id, result) in results {
            match result {
                Ok(p) => out.predictions.push(p),
                Err(error) => out.failures.push(ExpertFailure { expert_id, error }),
            }
        }
        out.predictions.sort_by(|a, b| a.expert_id.cmp(&b.expert_id));
        out.failures.sort_by(|a, b| a.expert_id.cmp(&b.expert_id));
        out
    }

    pub fn query_all(&self, query: &ForecastQuery, ctx: &ExpertContext, draw_key: u64) -> FanOut {
        self.query_experts(&self.expert_ids(), query, ctx, draw_key)
    }
}
