//! Translation prompt templates.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::lang::Lang;
use crate::template;

pub const AGENT_TRAIN_TEMPLATE: &str = "You are a professional {src_lang} to {tgt_lang} translator. Please translate the following text from {src_lang} to {tgt_lang}. You must conduct reasoning inside <think> and </think> first. After reasoning, you can use the search tool by enclosing your query within <search> and </search>. The query could be unfamiliar terms, relevant keywords, or example sentences. The search tool will then return the top results between <information> and </information>. You can use the returned information to improve your translation. You can reason and search as many times as you want. In the end, you should directly provide the final translation inside <translation> and </translation> with a new line, without detailed illustrations. For example, <think> reasoning process here <think/> <search> query here </search><information> returned information </information><think> another reasoning process here <think/><search> another query here </search><information> another returned information </information><think> yet another reasoning process</think><translation> final translation here </translation>.
{src_lang} text: {src_text}";

pub const DIRECT_TEMPLATE: &str = "You are a professional {src_lang} to {tgt_lang} translator. Please translate the following text from {src_lang} to {tgt_lang}. Please provide the translation directly without reasoning inside <translation> and </translation>. For example, <translation> translation here </translation>.
{src_lang} text: {src_text}";

pub const RAG_TEMPLATE: &str = "You are a professional {src_lang} to {tgt_lang} translator. Please translate the following text from {src_lang} to {tgt_lang}.
Please provide the translation directly without reasoning inside <translation> and </translation>. For example, <translation> translation here </translation>.
{src_lang} text: {src_text}
{retrieved_result}";

pub const GRPO_THINK_TEMPLATE: &str = "You are a professional {src_lang} to {tgt_lang} translator. Please translate the following text from {src_lang} to {tgt_lang}.
You must conduct reasoning inside <think> and </think> first. In the end, you should directly provide the final translation inside <translation> and </translation> with a new line, without detailed illustrations. For example, <think> reasoning process here <think/><translation> final translation here </translation>.
{src_lang} text: {src_text}";

pub const SFT_TEMPLATE: &str = "You are a professional {src_lang} to {tgt_lang} translator. Please translate the following text from {src_lang} to {tgt_lang}. Please provide the translation directly without reasoning inside <translation> and </translation>. For example, <translation> translation here </translation>. {src_lang} text: {src_text}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTemplate {
    AgentTrain,
    Direct,
    Rag,
    GrpoThink,
    Sft,
}

impl PromptTemplate {
    pub const ALL: [PromptTemplate; 5] = [
        PromptTemplate::AgentTrain,
        PromptTemplate::Direct,
        PromptTemplate::Rag,
        PromptTemplate::GrpoThink,
        PromptTemplate::Sft,
    ];

    pub fn text(self) -> &'static str {
        match self {
            PromptTemplate::AgentTrain => AGENT_TRAIN_TEMPLATE,
            PromptTemplate::Direct => DIRECT_TEMPLATE,
            PromptTemplate::Rag => RAG_TEMPLATE,
            PromptTemplate::GrpoThink => GRPO_THINK_TEMPLATE,
            PromptTemplate::Sft => SFT_TEMPLATE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptTemplate::AgentTrain => "agent_train",
            PromptTemplate::Direct => "direct",
            PromptTemplate::Rag => "rag",
            PromptTemplate::GrpoThink => "grpo_think",
            PromptTemplate::Sft => "sft",
        }
    }

    /// Languages may be given as codes or English names; the rendered text
    /// always uses names.
    pub fn render(
        self,
        src_lang: &str,
        tgt_lang: &str,
        src_text: &str,
        retrieved_result: Option<&str>,
    ) -> Result<String, AgentError> {
        let src = Lang::parse(src_lang)?;
        let tgt = Lang::parse(tgt_lang)?;
        if src_text.trim().is_empty() {
            return Err(AgentError::MissingField("src_text"));
        }
        let mut vals = HashMap::from([
            ("src_lang", src.name()),
            ("tgt_lang", tgt.name()),
            ("src_text", src_text),
        ]);
        if let Some(r) = retrieved_result {
            vals.insert("retrieved_result", r);
        }
        Ok(template::fill(self.text(), &vals)?)
    }
}

pub fn render_agent_prompt(
    src_lang: &str,
    tgt_lang: &str,
    src_text: &str,
) -> Result<String, AgentError> {
    PromptTemplate::AgentTrain.render(src_lang, tgt_lang, src_text, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confirmation_example_prompt() {
        let p = render_agent_prompt("Chinese", "English", "視頻來源：優兔").unwrap();
        assert!(p.starts_with(
            "You are a professional Chinese to English translator. Please translate the following text from Chinese to English. You must conduct reasoning inside <think> and </think> first."
        ));
        assert!(p.ends_with("\nChinese text: 視頻來源：優兔"));
        assert!(p.contains("<translation> final translation here </translation>.\n"));
    }

    #[test]
    fn codes_render_as_names() {
        let a = render_agent_prompt("zh", "en", "x").unwrap();
        let b = render_agent_prompt("Chinese", "English", "x").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_text_and_unknown_language() {
        assert!(matches!(
            render_agent_prompt("zh", "en", "  "),
            Err(AgentError::MissingField("src_text"))
        ));
        assert!(matches!(
            render_agent_prompt("Klingon", "en", "x"),
            Err(AgentError::UnknownLanguage(_))
        ));
    }

    #[test]
    fn each_tag_pair_named_once() {
        let p = render_agent_prompt("de", "en", "Hallo").unwrap();
        for tag in ["think", "search", "information", "translation"] {
            let phrase = format!("<{tag}> and </{tag}>");
            assert_eq!(p.matches(&phrase).count(), 1, "{phrase}");
        }
    }

    #[test]
    fn every_template_fills_completely() {
        for t in PromptTemplate::ALL {
            let out = t
                .render("ja", "en", "乙女ゲーム", Some("Doc 1(Title: Word: x) y"))
                .unwrap();
            assert!(
                crate::template::placeholders(&out).is_empty(),
                "{}",
                t.name()
            );
        }
    }

    #[test]
    fn rag_requires_retrieved_result() {
        assert!(PromptTemplate::Rag.render("ja", "en", "x", None).is_err());
    }
}
