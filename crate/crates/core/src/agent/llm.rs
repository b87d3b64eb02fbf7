//! Text generation backends.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::transcript::char_len;

/// Characters per token used for budget accounting and mock truncation.
pub const CHARS_PER_TOKEN: usize = 4;

pub fn approx_tokens(chars: usize) -> usize {
    chars.div_ceil(CHARS_PER_TOKEN)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("no scripted response for prompt: {0}")]
    NoScript(String),
    #[error("scripted response diverged from partial response")]
    ScriptDiverged,
}

/// One continuation request. The backend sees the prompt and everything
/// generated so far (including injected information) and returns only new
/// text, without the stop sequence that ended it.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub partial_response: String,
    pub stop: Vec<String>,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StopSequence(String),
    Length,
    EndOfText,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub text: String,
    pub stop: StopReason,
}

pub trait LlmBackend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<Generation, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// Substring of the prompt selecting this entry.
    #[serde(rename = "match")]
    pub matches: String,
    /// The whole model response, without information blocks.
    pub response: String,
}

/// Deterministic backend replaying canned responses.
///
/// Stateless: each call locates the script by prompt, removes information
/// blocks from the partial response, checks the remainder is a prefix of the
/// script and returns the next chunk up to the first stop sequence.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    entries: Vec<ScriptEntry>,
}

fn strip_information(text: &str) -> String {
    const OPEN: &str = "<information>";
    const CLOSE: &str = "</information>";
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(o) = rest.find(OPEN) {
        match rest[o..].find(CLOSE) {
            Some(c) => {
                out.push_str(&rest[..o]);
                rest = &rest[o + c + CLOSE.len()..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self { entries }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self, BackendError> {
        let text = fs::read_to_string(path)
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", path.display())))?;
        Self::parse_jsonl(&text)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, BackendError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ScriptEntry = serde_json::from_str(line)
                .map_err(|e| BackendError::Protocol(format!("script line {}: {e}", i + 1)))?;
            entries.push(e);
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl LlmBackend for ScriptedBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<Generation, BackendError> {
        let entry = self
            .entries
            .iter()
            .find(|e| request.prompt.contains(&e.matches))
            .ok_or_else(|| {
                let head: String = request
                    .prompt
                    .chars()
                    .rev()
                    .take(60)
                    .collect::<Vec<_>>()
                    .into_iter()
                    .rev()
                    .collect();
                BackendError::NoScript(head)
            })?;
        let done = strip_information(&request.partial_response);
        let rest = entry
            .response
            .strip_prefix(done.as_str())
            .ok_or(BackendError::ScriptDiverged)?;

        let first_stop = request
            .stop
            .iter()
            .filter_map(|s| rest.find(s.as_str()).map(|i| (i, s)))
            .min_by_key(|&(i, _)| i);
        let (chunk, mut reason) = match first_stop {
            Some((i, s)) => (&rest[..i], StopReason::StopSequence(s.clone())),
            None => (rest, StopReason::EndOfText),
        };
        let limit = request.max_tokens * CHARS_PER_TOKEN;
        let text: String = if char_len(chunk) > limit {
            reason = StopReason::Length;
            chunk.chars().take(limit).collect()
        } else {
            chunk.to_string()
        };
        Ok(Generation { text, stop: reason })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatBackendConfig {
    pub url: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub timeout_ms: u64,
    pub retries: u32,
}

/// Chat-completion client. A non-empty partial response is sent as a final
/// assistant message to be continued.
pub struct HttpChatBackend {
    cfg: ChatBackendConfig,
    agent: ureq::Agent,
}

impl HttpChatBackend {
    pub fn new(cfg: ChatBackendConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .build()
            .into();
        Self { cfg, agent }
    }

    pub fn request_body(&self, request: &GenerationRequest) -> Value {
        let mut messages = vec![json!({"role": "user", "content": request.prompt})];
        let cont = !request.partial_response.is_empty();
        if cont {
            messages.push(json!({"role": "assistant", "content": request.partial_response}));
        }
        json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": self.cfg.temperature,
            "top_p": self.cfg.top_p,
            "max_tokens": request.max_tokens,
            "stop": request.stop,
            "continue_final_message": cont,
            "add_generation_prompt": !cont,
        })
    }

    fn call_once(&self, body: &Value) -> Result<Value, BackendError> {
        self.agent
            .post(&self.cfg.url)
            .send_json(body)
            .and_then(|mut r| r.body_mut().read_json::<Value>())
            .map_err(|e| BackendError::Unavailable(e.to_string()))
    }
}

/// Interpret one chat-completion response.
pub fn parse_chat_response(v: &Value, stop: &[String]) -> Result<Generation, BackendError> {
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| BackendError::Protocol("response has no choices".into()))?;
    let mut text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::Protocol("choice has no message content".into()))?
        .to_string();
    // some servers echo the stop string, some report it separately
    if let Some(s) = stop.iter().find(|s| text.ends_with(s.as_str())) {
        text.truncate(text.len() - s.len());
        return Ok(Generation {
            text,
            stop: StopReason::StopSequence(s.clone()),
        });
    }
    if let Some(s) = choice.get("stop_reason").and_then(Value::as_str) {
        if stop.iter().any(|x| x == s) {
            return Ok(Generation {
                text,
                stop: StopReason::StopSequence(s.to_string()),
            });
        }
    }
    let reason = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("length") => StopReason::Length,
        _ => StopReason::EndOfText,
    };
    Ok(Generation { text, stop: reason })
}

impl LlmBackend for HttpChatBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<Generation, BackendError> {
        let body = self.request_body(request);
        let mut last = BackendError::Unavailable("no attempt made".into());
        for attempt in 0..=self.cfg.retries {
            match self.call_once(&body) {
                Ok(v) => return parse_chat_response(&v, &request.stop),
                Err(e) => {
                    tracing::warn!(attempt, error = %e, "chat backend call failed");
                    last = e;
                }
            }
        }
        Err(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(partial: &str, stop: &[&str], max_tokens: usize) -> GenerationRequest {
        GenerationRequest {
            prompt: "Chinese text: 視頻來源：優兔".into(),
            partial_response: partial.into(),
            stop: stop.iter().map(|s| s.to_string()).collect(),
            max_tokens,
        }
    }

    fn mock() -> ScriptedBackend {
        ScriptedBackend::new(vec![ScriptEntry {
            matches: "優兔".into(),
            response:
                "<think>a</think><search>q</search><think>b</think><translation>T</translation>"
                    .into(),
        }])
    }

    #[test]
    fn replays_up_to_stop() {
        let g = mock()
            .generate(&req("", &["</search>", "</translation>"], 100))
            .unwrap();
        assert_eq!(g.text, "<think>a</think><search>q");
        assert_eq!(g.stop, StopReason::StopSequence("</search>".into()));
    }

    #[test]
    fn skips_injected_information() {
        let partial = "<think>a</think><search>q</search><information>Doc 1</information>";
        let g = mock()
            .generate(&req(partial, &["</search>", "</translation>"], 100))
            .unwrap();
        assert_eq!(g.text, "<think>b</think><translation>T");
    }

    #[test]
    fn divergence_and_missing_script() {
        assert_eq!(
            mock().generate(&req("<think>zzz", &[], 100)),
            Err(BackendError::ScriptDiverged)
        );
        let mut r = req("", &[], 100);
        r.prompt = "other".into();
        assert!(matches!(
            mock().generate(&r),
            Err(BackendError::NoScript(_))
        ));
    }

    #[test]
    fn token_budget_truncates() {
        let g = mock().generate(&req("", &[], 2)).unwrap();
        assert_eq!(g.text, "<think>a");
        assert_eq!(g.stop, StopReason::Length);
    }

    #[test]
    fn chat_response_variants() {
        let stop = vec!["</search>".to_string()];
        let v = json!({"choices": [{"message": {"content": "x<search>q</search>"}, "finish_reason": "stop"}]});
        let g = parse_chat_response(&v, &stop).unwrap();
        assert_eq!(g.text, "x<search>q");
        let v = json!({"choices": [{"message": {"content": "x<search>q"}, "finish_reason": "stop", "stop_reason": "</search>"}]});
        assert_eq!(
            parse_chat_response(&v, &stop).unwrap().stop,
            StopReason::StopSequence("</search>".into())
        );
        let v = json!({"choices": [{"message": {"content": "x"}, "finish_reason": "length"}]});
        assert_eq!(
            parse_chat_response(&v, &stop).unwrap().stop,
            StopReason::Length
        );
        assert!(parse_chat_response(&json!({}), &stop).is_err());
    }

    #[test]
    fn continuation_request_shape() {
        let b = HttpChatBackend::new(ChatBackendConfig {
            url: "http://127.0.0.1:9/v1/chat/completions".into(),
            model: "m".into(),
            temperature: 0.2,
            top_p: 0.95,
            timeout_ms: 200,
            retries: 0,
        });
        let body = b.request_body(&req("<think>", &["</search>"], 10));
        assert_eq!(body["messages"].as_array().unwrap().len(), 2);
        assert_eq!(body["temperature"], 0.2);
        assert_eq!(body["top_p"], 0.95);
        assert!(matches!(
            b.generate(&req("", &[], 5)),
            Err(BackendError::Unavailable(_))
        ));
    }
}
