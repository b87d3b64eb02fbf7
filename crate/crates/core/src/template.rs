//! Minimal `{placeholder}` substitution shared by every prompt template.
//!
//! Substitution is single-pass: values are never rescanned, so a source
//! sentence that happens to contain `{src_text}` is inserted verbatim.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("no value supplied for placeholder {{{0}}}")]
    Unfilled(String),
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("static regex"))
}

/// Names of all placeholders appearing in `template`, in order of first use.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for cap in placeholder_re().captures_iter(template) {
        let name = cap[1].to_string();
        if !out.contains(&name) {
            out.push(name);
        }
    }
    out
}

/// Fill every placeholder of `template`. A placeholder without a value is an
/// error; extra values are ignored.
pub fn fill(template: &str, values: &HashMap<&str, &str>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len() + 64);
    let mut last = 0;
    for cap in placeholder_re().captures_iter(template) {
        let whole = cap.get(0).expect("group 0");
        let name = &cap[1];
        let value = values
            .get(name)
            .ok_or_else(|| TemplateError::Unfilled(name.to_string()))?;
        out.push_str(&template[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}
