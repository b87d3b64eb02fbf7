//! Prompt payloads for the external translator and span aligner.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use super::{ExamplePair, IngestError};
use crate::template;

pub const TRANSLATION_TEMPLATE: &str = "You are a professional {src_lang} to {tgt_lang} translator.
I will provide you with the part-of-speech and gloss information of some words. Please use this information to translate the sentence.
Word: {word}
Part-of-speech: {pos}
Glosses: {glosses}
Please conduct the reasoning process first, and subsequently present the finalized translation enclosed within the tags: <translation> final translation </translation>.
{src_lang} text: {src_text}.";

pub const ALIGNMENT_TEMPLATE: &str = "You are a professional word aligner.
I will provide a translation pair along with the part-of-speech and gloss information for a specific word in {src_lang}.
Your task is to identify the corresponding word in {tgt_lang}.
{src_lang} text: {src_text}
{tgt_lang} text: {tgt_text}
{src_lang} Word: {word}
Part-of-speech: {pos}
Glosses: {glosses}
Please identify the corresponding word in the {tgt_lang} text.
Present the identified word enclosed within the tags: <aligned_word> corresponding word </aligned_word>";

const GLOSS_SEPARATOR: &str = "; ";

pub fn render_translation_prompt(pair: &ExamplePair) -> Result<String, IngestError> {
    if pair.glosses.is_empty() {
        return Err(IngestError::MissingGloss);
    }
    let glosses = pair.glosses.join(GLOSS_SEPARATOR);
    let vals = HashMap::from([
        ("src_lang", pair.src_lang.name()),
        ("tgt_lang", pair.tgt_lang.name()),
        ("word", pair.neologism.as_str()),
        ("pos", pair.pos.as_str()),
        ("glosses", glosses.as_str()),
        ("src_text", pair.src_text.as_str()),
    ]);
    Ok(template::fill(TRANSLATION_TEMPLATE, &vals)?)
}

/// The target-side text is the pair's reference translation.
pub fn render_alignment_prompt(pair: &ExamplePair) -> Result<String, IngestError> {
    if pair.glosses.is_empty() {
        return Err(IngestError::MissingGloss);
    }
    if pair.ref_translation.trim().is_empty() {
        return Err(IngestError::MissingTargetText);
    }
    let glosses = pair.glosses.join(GLOSS_SEPARATOR);
    let vals = HashMap::from([
        ("src_lang", pair.src_lang.name()),
        ("tgt_lang", pair.tgt_lang.name()),
        ("src_text", pair.src_text.as_str()),
        ("tgt_text", pair.ref_translation.as_str()),
        ("word", pair.neologism.as_str()),
        ("pos", pair.pos.as_str()),
        ("glosses", glosses.as_str()),
    ]);
    Ok(template::fill(ALIGNMENT_TEMPLATE, &vals)?)
}

fn aligned_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)<aligned_word>(.*?)</aligned_word>").expect("static regex"))
}

/// Trimmed content of the first `<aligned_word>…</aligned_word>` region.
pub fn parse_aligned_span(llm_output: &str) -> Result<String, IngestError> {
    aligned_re()
        .captures(llm_output)
        .map(|c| c[1].trim().to_string())
        .ok_or(IngestError::NoAlignedWordTag)
}
