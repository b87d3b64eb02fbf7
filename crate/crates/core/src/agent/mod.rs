//! Multi-turn think / search / translate protocol.

mod llm;
mod templates;
mod transcript;

use serde::{Deserialize, Serialize};

pub use llm::{
    approx_tokens, parse_chat_response, BackendError, ChatBackendConfig, Generation,
    GenerationRequest, HttpChatBackend, LlmBackend, ScriptEntry, ScriptedBackend, StopReason,
    CHARS_PER_TOKEN,
};
pub use templates::{
    render_agent_prompt, PromptTemplate, AGENT_TRAIN_TEMPLATE, DIRECT_TEMPLATE,
    GRPO_THINK_TEMPLATE, RAG_TEMPLATE, SFT_TEMPLATE,
};
pub use transcript::{
    extract_translation, parse_transcript, raw_slice, token_mask, Provenance, Segment, SegmentKind,
    Transcript,
};

use crate::dictionary::{DictionaryError, Retriever};
use crate::lang::UnknownLanguage;
use crate::template::TemplateError;
use transcript::char_len;

pub const SEARCH_STOP: &str = "</search>";
pub const TRANSLATION_STOP: &str = "</translation>";
const SEARCH_OPEN: &str = "<search>";
const INFO_OPEN: &str = "<information>";
const INFO_CLOSE: &str = "</information>";

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    UnknownLanguage(#[from] UnknownLanguage),
    #[error("missing field {0}")]
    MissingField(&'static str),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("search failed: {0}")]
    Search(#[from] DictionaryError),
    #[error("token span {start}..{end} outside transcript of {len} chars")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("invalid turn limits: {0}")]
    InvalidLimits(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnLimits {
    pub max_search_turns: usize,
    pub top_k: usize,
    pub max_info_chars: usize,
    pub max_response_tokens: usize,
    /// Charge injected information against the response budget.
    #[serde(default = "default_true")]
    pub count_information_tokens: bool,
}

fn default_true() -> bool {
    true
}

impl Default for TurnLimits {
    fn default() -> Self {
        Self {
            max_search_turns: 3,
            top_k: 5,
            max_info_chars: 2000,
            max_response_tokens: 4096,
            count_information_tokens: true,
        }
    }
}

impl TurnLimits {
    pub fn validate(&self) -> Result<(), AgentError> {
        for (name, v) in [
            ("max_search_turns", self.max_search_turns),
            ("top_k", self.top_k),
            ("max_info_chars", self.max_info_chars),
            ("max_response_tokens", self.max_response_tokens),
        ] {
            if v == 0 {
                return Err(AgentError::InvalidLimits(format!(
                    "{name} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Remove tag strings that would let retrieved text close or reopen its
/// own information block.
fn sanitize_block(block: &str) -> String {
    block.replace(INFO_CLOSE, "").replace(INFO_OPEN, "")
}

/// Run one agent session.
///
/// Generation pauses at each `</search>`; the query is served from
/// `searcher` and injected as `<information>…</information>`. After
/// `max_search_turns` searches the search stop is dropped and further
/// queries are left unanswered. The run ends at `</translation>`, at end of
/// text, or when the token budget runs out (flagged, not an error). A chunk
/// in which the model writes its own `<information>` is cut there and ends
/// the run, so information segments are always injected ones.
pub fn run_agent(
    llm: &dyn LlmBackend,
    searcher: &dyn Retriever,
    limits: &TurnLimits,
    prompt: &str,
) -> Result<Transcript, AgentError> {
    limits.validate()?;
    let mut response = String::new();
    let mut retrieved = Vec::new();
    let mut queries = Vec::new();
    let mut charged = 0usize;
    let mut budget_exhausted = false;

    loop {
        let used = approx_tokens(charged);
        if used >= limits.max_response_tokens {
            budget_exhausted = true;
            break;
        }
        let search_enabled = queries.len() < limits.max_search_turns;
        let mut stop = vec![TRANSLATION_STOP.to_string()];
        if search_enabled {
            stop.insert(0, SEARCH_STOP.to_string());
        }
        let generation = llm.generate(&GenerationRequest {
            prompt: prompt.to_string(),
            partial_response: response.clone(),
            stop,
            max_tokens: limits.max_response_tokens - used,
        })?;

        let mut text = generation.text;
        let fabricated = text.find(INFO_OPEN).map(|i| text.truncate(i)).is_some();
        response.push_str(&text);
        charged += char_len(&text);
        if fabricated {
            tracing::debug!("model wrote its own information tag; ending run");
            break;
        }

        match generation.stop {
            StopReason::StopSequence(s) => {
                response.push_str(&s);
                charged += char_len(&s);
                if s != SEARCH_STOP || !search_enabled {
                    if s == TRANSLATION_STOP {
                        break;
                    }
                    continue;
                }
                let Some(open) = text.rfind(SEARCH_OPEN) else {
                    continue;
                };
                let query = text[open + SEARCH_OPEN.len()..].trim().to_string();
                let block = if query.is_empty() {
                    String::new()
                } else {
                    sanitize_block(&searcher.retrieve(
                        &query,
                        limits.top_k,
                        limits.max_info_chars,
                    )?)
                };
                let injected = format!("{INFO_OPEN}{block}{INFO_CLOSE}");
                let start = char_len(&response);
                let len = char_len(&injected);
                retrieved.push(start..start + len);
                response.push_str(&injected);
                if limits.count_information_tokens {
                    charged += len;
                }
                queries.push(query);
            }
            StopReason::Length => {
                budget_exhausted = true;
                break;
            }
            StopReason::EndOfText => break,
        }
    }

    Ok(Transcript {
        prompt: prompt.to_string(),
        segments: parse_transcript(&response),
        full_text: response,
        retrieved,
        search_turns_used: queries.len(),
        queries,
        tokens_used: approx_tokens(charged),
        budget_exhausted,
    })
}
