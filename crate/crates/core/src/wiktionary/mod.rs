//! Wiktionary (kaikki.org raw JSONL) ingestion.
//!
//! One dump line becomes a [`RawRecord`]; [`clean_entry`] reduces it to a
//! [`WordEntry`] in one of the sixteen research languages, and
//! [`classify_entry`] buckets entries by whether they are neologisms with
//! translated, untranslated or no usable example sentences.

mod ingest;
mod prompts;
mod splits;

pub use ingest::{ingest_dump, IngestOutcome, IngestStats};
pub use prompts::{parse_aligned_span, render_alignment_prompt, render_translation_prompt};
pub use splits::{
    build_splits, extract_type1_pairs, DatasetSplit, ExamplePair, SplitName, SplitPlan, SplitSet,
    SplitSizes,
};

use serde::{Deserialize, Serialize};

use crate::lang::Lang;

pub const NEOLOGISM_TAG: &str = "neologism";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: u64, reason: String },
    #[error("line {line}: record has no \"word\" field")]
    MissingWordField { line: u64 },
    #[error("not enough Type1 examples: requested {requested}, available {available}")]
    InsufficientType1 { requested: usize, available: usize },
    #[error("not enough Type2 examples: requested {requested}, available {available}")]
    InsufficientType2 { requested: usize, available: usize },
    #[error("example pair has no glosses")]
    MissingGloss,
    #[error("example pair has no target-side text to align against")]
    MissingTargetText,
    #[error("no <aligned_word> tag in aligner output")]
    NoAlignedWordTag,
    #[error(transparent)]
    Template(#[from] crate::template::TemplateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One decoded dump line.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub source_line_no: u64,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UsageExample {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation_language: Option<String>,
}

impl UsageExample {
    /// Only English translations count: the dump is the English edition.
    pub fn has_english_translation(&self) -> bool {
        self.translation.is_some() && self.translation_language.as_deref() == Some("en")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSense {
    #[serde(default)]
    pub tags: Vec<String>,
    pub glosses: Vec<String>,
    #[serde(default)]
    pub examples: Vec<UsageExample>,
}

impl WordSense {
    pub fn is_neologism(&self) -> bool {
        self.tags
            .iter()
            .any(|t| t.eq_ignore_ascii_case(NEOLOGISM_TAG))
    }
}

/// A non-disambiguated translation listed on the entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermTranslation {
    pub language: Lang,
    pub term: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordEntry {
    pub word: String,
    pub language: Lang,
    pub pos: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etymology: Option<String>,
    pub senses: Vec<WordSense>,
    #[serde(default)]
    pub translations: Vec<TermTranslation>,
}

impl WordEntry {
    pub fn is_neologism(&self) -> bool {
        self.senses.iter().any(WordSense::is_neologism)
    }

    pub fn examples(&self) -> impl Iterator<Item = (&WordSense, &UsageExample)> {
        self.senses
            .iter()
            .flat_map(|s| s.examples.iter().map(move |e| (s, e)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntryClass {
    /// Neologism with at least one example carrying an English translation.
    Type1,
    /// Neologism with examples, none of them translated.
    Type2,
    /// Everything else.
    Type3,
}

/// Filters applied by [`clean_entry`]. The shipped defaults live in
/// `config/default.toml` under `[ingest.filter]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub languages: Vec<Lang>,
    #[serde(default)]
    pub blocked_sense_tags: Vec<String>,
    #[serde(default)]
    pub blocked_words: Vec<String>,
}

impl Default for CleanConfig {
    fn default() -> Self {
        crate::config::HarnessConfig::default().ingest.filter
    }
}

/// Decode one JSONL dump line. Never panics.
pub fn parse_record(line: &str, source_line_no: u64) -> Result<RawRecord, IngestError> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Err(IngestError::MalformedLine {
            line: source_line_no,
            reason: "empty line".into(),
        });
    }
    let payload: serde_json::Value =
        serde_json::from_str(trimmed).map_err(|e| IngestError::MalformedLine {
            line: source_line_no,
            reason: e.to_string(),
        })?;
    if !payload.is_object() {
        return Err(IngestError::MalformedLine {
            line: source_line_no,
            reason: "record is not a JSON object".into(),
        });
    }
    match payload.get("word").and_then(|w| w.as_str()) {
        Some(w) if !w.trim().is_empty() => Ok(RawRecord {
            source_line_no,
            payload,
        }),
        _ => Err(IngestError::MissingWordField {
            line: source_line_no,
        }),
    }
}

// Lenient view of the kaikki record shape; unknown fields are ignored.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct KaikkiRecord {
    word: String,
    lang_code: String,
    pos: String,
    etymology_text: String,
    senses: Vec<KaikkiSense>,
    translations: Vec<KaikkiTranslation>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct KaikkiSense {
    glosses: Vec<String>,
    tags: Vec<String>,
    examples: Vec<KaikkiExample>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct KaikkiExample {
    text: String,
    translation: String,
    // older dumps put the English rendering here
    english: String,
    translation_lang: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct KaikkiTranslation {
    #[serde(alias = "code")]
    lang_code: String,
    word: String,
    sense: String,
}

fn non_empty(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// Reduce a raw record to a cleaned entry, or `None` if any filter rejects it.
pub fn clean_entry(raw: &RawRecord, cfg: &CleanConfig) -> Option<WordEntry> {
    let rec = KaikkiRecord::deserialize(&raw.payload).ok()?;
    let word = non_empty(&rec.word)?;
    let language = Lang::from_code(rec.lang_code.trim())?;
    if !cfg.languages.contains(&language) {
        return None;
    }
    let pos = non_empty(&rec.pos)?;
    if cfg
        .blocked_words
        .iter()
        .any(|b| b.to_lowercase() == word.to_lowercase())
    {
        return None;
    }

    let senses: Vec<WordSense> = rec
        .senses
        .into_iter()
        .filter(|s| {
            !s.tags.iter().any(|t| {
                cfg.blocked_sense_tags
                    .iter()
                    .any(|b| b.eq_ignore_ascii_case(t))
            })
        })
        .filter_map(|s| {
            let glosses: Vec<String> = s.glosses.iter().filter_map(|g| non_empty(g)).collect();
            if glosses.is_empty() {
                return None;
            }
            let examples = s
                .examples
                .into_iter()
                .filter_map(|e| {
                    let text = non_empty(&e.text)?;
                    let translation = non_empty(&e.translation).or_else(|| non_empty(&e.english));
                    let translation_language = translation.as_ref().map(|_| {
                        non_empty(&e.translation_lang).unwrap_or_else(|| "en".to_string())
                    });
                    Some(UsageExample {
                        text,
                        translation,
                        translation_language,
                    })
                })
                .collect();
            Some(WordSense {
                tags: s.tags,
                glosses,
                examples,
            })
        })
        .collect();
    if senses.is_empty() {
        return None;
    }

    let translations = rec
        .translations
        .into_iter()
        .filter_map(|t| {
            Some(TermTranslation {
                language: Lang::from_code(t.lang_code.trim())?,
                term: non_empty(&t.word)?,
                sense: non_empty(&t.sense),
            })
        })
        .collect();

    Some(WordEntry {
        word,
        language,
        pos,
        etymology: non_empty(&rec.etymology_text),
        senses,
        translations,
    })
}

/// Total, pure classification of a cleaned entry.
pub fn classify_entry(entry: &WordEntry) -> EntryClass {
    if !entry.is_neologism() {
        return EntryClass::Type3;
    }
    let mut any_example = false;
    for (_, ex) in entry.examples() {
        if ex.has_english_translation() {
            return EntryClass::Type1;
        }
        any_example = true;
    }
    if any_example {
        EntryClass::Type2
    } else {
        EntryClass::Type3
    }
}
