use serde::{Deserialize, Serialize};

use crate::model::ForecastQuery;

pub const NO_HISTORY_MARKER: &str = "(no prior events recorded)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub role_preamble: String,
    /// Slots: `{date}`, `{subject}`, `{relation}`, `{object}`.
    pub history_line_format: String,
    /// Slots: `{date}`, `{subject}`, `{relation}`.
    pub query_line_format: String,
    #[serde(default = "default_max_history")]
    pub max_history: usize,
}

fn default_max_history() -> usize {
    30
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            role_preamble: "You are a geopolitical expert who analyses international and regional \
                            events. Using the historical events below, predict the missing object \
                            entity of the final query. Answer with the entity name only."
                .to_string(),
            history_line_format: "{date}: [{subject}, {relation}, {object}]".to_string(),
            query_line_format: "{date}: [{subject}, {relation}, ?]".to_string(),
            max_history: default_max_history(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("template format {format:?} is missing slot {slot}")]
pub struct MissingSlot {
    pub format: String,
    pub slot: &'static str,
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<(), MissingSlot> {
        let check = |format: &str, slots: &[&'static str]| {
            for slot in slots {
                if !format.contains(slot) {
                    return Err(MissingSlot { format: format.to_string(), slot });
                }
            }
            Ok(())
        };
        check(&self.history_line_format, &["{date}", "{subject}", "{relation}", "{object}"])?;
        check(&self.query_line_format, &["{date}", "{subject}", "{relation}"])
    }
}

/// Preamble, the most recent `max_history` events oldest first, then the
/// query line. The gold object is never rendered.
pub fn build_prompt(query: &ForecastQuery, template: &PromptTemplate) -> String {
    let events = query.history.events();
    let recent = &events[events.len().saturating_sub(template.max_history)..];

    let mut out = String::new();
    out.push_str(template.role_preamble.trim_end());
    out.push_str("\n\nHistorical events:\n");
    if recent.is_empty() {
        out.push_str(NO_HISTORY_MARKER);
        out.push('\n');
    }
    for e in recent {
        let line = template
            .history_line_format
            .replace("{date}", &e.timestamp.to_string())
            .replace("{subject}", e.subject.as_str())
            .replace("{relation}", &e.relation)
            .replace("{object}", e.object.as_str());
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("\nQuery:\n");
    out.push_str(
        &template
            .query_line_format
            .replace("{date}", &query.timestamp.to_string())
            .replace("{subject}", query.subject.as_str())
            .replace("{relation}", &query.relation),
    );
    out.push('\n');
    out
}
