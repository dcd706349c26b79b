//! HTTP completion-endpoint experts.
//!
//! The native wire protocol is `POST <url>/v1/predict` with
//! `{query_id, prompt, max_tokens}` answered by `{text, token_logprobs}`.
//! The `chat_completions` profile adapts OpenAI-style endpoints onto the same
//! contract.

use std::collections::BTreeMap;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{build_prompt, extract_confidence, ExpertBackend, ExpertContext, ExpertError};
use crate::dataset::EntityRegistry;
use crate::model::{ExpertPrediction, ForecastQuery};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireProfile {
    #[default]
    Native,
    ChatCompletions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default)]
    pub profile: WireProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub headers: BTreeMap<String, String>,
}

fn default_max_tokens() -> u32 {
    16
}

/// Request policy shared by every remote expert of a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallPolicy {
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for CallPolicy {
    fn default() -> Self {
        CallPolicy { timeout: Duration::from_secs(30), retries: 2, backoff: Duration::from_millis(200) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeRequest<'a> {
    pub query_id: &'a str,
    pub prompt: &'a str,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeResponse {
    pub text: String,
    pub token_logprobs: Vec<f64>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
    #[serde(default)]
    logprobs: Option<ChatLogprobs>,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChatLogprobs {
    #[serde(default)]
    content: Vec<ChatTokenLogprob>,
}

#[derive(Deserialize)]
struct ChatTokenLogprob {
    logprob: f64,
}

/// Maps a chat-completions response body onto the native contract.
pub fn adapt_chat_response(body: &serde_json::Value) -> Result<NativeResponse, String> {
    let parsed: ChatResponse = serde_json::from_value(body.clone()).map_err(|e| e.to_string())?;
    let choice = parsed.choices.into_iter().next().ok_or("response has no choices")?;
    let text = choice.message.content.ok_or("choice has no message content")?;
    let token_logprobs =
        choice.logprobs.map(|lp| lp.content.into_iter().map(|t| t.logprob).collect()).unwrap_or_default();
    Ok(NativeResponse { text, token_logprobs })
}

/// Resolves completion text against the registry: the whole text first, then
/// its first non-empty line.
pub fn interpret_completion(
    expert_id: &str,
    response: &NativeResponse,
    registry: &EntityRegistry,
) -> Result<ExpertPrediction, ExpertError> {
    let matched = registry
        .resolve(&response.text)
        .or_else(|| response.text.lines().find(|l| !l.trim().is_empty()).and_then(|l| registry.resolve(l)));
    match matched {
        Some(id) => {
            let confidence = extract_confidence(&response.token_logprobs).map_err(|e| ExpertError::Protocol {
                expert_id: expert_id.to_string(),
                message: format!("bad token logprobs: {e}"),
            })?;
            Ok(ExpertPrediction { expert_id: expert_id.to_string(), object: id.clone(), confidence })
        }
        None => Ok(ExpertPrediction::unparseable(expert_id)),
    }
}

#[derive(Debug)]
pub struct RemoteBackend {
    endpoint: EndpointConfig,
    policy: CallPolicy,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(endpoint: EndpointConfig, policy: CallPolicy) -> Self {
        let config =
            ureq::Agent::config_builder().timeout_global(Some(policy.timeout)).http_status_as_error(true).build();
        RemoteBackend { endpoint, policy, agent: ureq::Agent::new_with_config(config) }
    }

    fn target(&self) -> String {
        let base = self.endpoint.url.trim_end_matches('/');
        match self.endpoint.profile {
            WireProfile::Native => format!("{base}/v1/predict"),
            WireProfile::ChatCompletions => format!("{base}/v1/chat/completions"),
        }
    }

    fn body(&self, query_id: &str, prompt: &str) -> serde_json::Value {
        match self.endpoint.profile {
            WireProfile::Native => {
                serde_json::to_value(NativeRequest { query_id, prompt, max_tokens: self.endpoint.max_tokens })
                    .expect("request serializes")
            }
            WireProfile::ChatCompletions => json!({
                "model": self.endpoint.model.clone().unwrap_or_default(),
                "messages": [{"role": "user", "content": prompt}],
                "max_tokens": self.endpoint.max_tokens,
                "temperature": 0,
                "logprobs": true,
            }),
        }
    }

    fn call_once(&self, expert_id: &str, body: &serde_json::Value) -> Result<NativeResponse, ExpertError> {
        let mut request = self.agent.post(self.target());
        for (k, v) in &self.endpoint.headers {
            request = request.header(k, v);
        }
        let protocol = |message: String| ExpertError::Protocol { expert_id: expert_id.to_string(), message };
        let mut response = request.send_json(body).map_err(|e| classify(expert_id, self.policy.timeout, e))?;
        let value: serde_json::Value = response.body_mut().read_json().map_err(|e| match e {
            ureq::Error::Timeout(_) => classify(expert_id, self.policy.timeout, e),
            other => protocol(other.to_string()),
        })?;
        match self.endpoint.profile {
            WireProfile::Native => serde_json::from_value(value).map_err(|e| protocol(e.to_string())),
            WireProfile::ChatCompletions => adapt_chat_response(&value).map_err(protocol),
        }
    }
}

fn classify(expert_id: &str, timeout: Duration, err: ureq::Error) -> ExpertError {
    let timed_out = match &err {
        ureq::Error::Timeout(_) => true,
        ureq::Error::Io(io) => {
            matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock)
        }
        _ => false,
    };
    if timed_out {
        return ExpertError::Timeout { expert_id: expert_id.to_string(), after_ms: timeout.as_millis() as u64 };
    }
    match err {
        ureq::Error::StatusCode(code) if (400..500).contains(&code) => {
            ExpertError::Protocol { expert_id: expert_id.to_string(), message: format!("HTTP status {code}") }
        }
        other => ExpertError::Transport { expert_id: expert_id.to_string(), message: other.to_string() },
    }
}

impl ExpertBackend for RemoteBackend {
    fn predict(
        &self,
        expert_id: &str,
        query: &ForecastQuery,
        ctx: &ExpertContext,
        _draw_key: u64,
    ) -> Result<ExpertPrediction, ExpertError> {
        let prompt = build_prompt(query, &ctx.template);
        let body = self.body(&query.query_id, &prompt);
        let mut attempt = 0;
        let response = loop {
            match self.call_once(expert_id, &body) {
                Ok(r) => break r,
                Err(e) if e.is_retryable() && attempt < self.policy.retries => {
                    attempt += 1;
                    thread::sleep(self.policy.backoff * attempt);
                }
                Err(e) => return Err(e),
            }
        };
        interpret_completion(expert_id, &response, &ctx.registry)
    }
}
