use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DictionaryError, SearchHit};
use crate::wiktionary::{WordEntry, WordSense};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryDoc {
    pub doc_id: u64,
    /// `"Word: <word>"`.
    pub title: String,
    pub body: String,
}

fn render_sense(sense: &WordSense) -> String {
    let gloss = sense.glosses.join("; ");
    if sense.tags.is_empty() {
        return gloss;
    }
    let quals: Vec<String> = sense.tags.iter().map(|t| t.replace('-', " ")).collect();
    format!("({}) {}", quals.join(", "), gloss)
}

/// Render one entry as a single-line definition document:
/// headword, part of speech, optional etymology, numbered senses and the
/// optional non-disambiguated translation list.
pub fn format_doc(entry: &WordEntry, doc_id: u64) -> DictionaryDoc {
    let mut body = format!("{} Part-of-speech: {}", entry.word, entry.pos);
    if let Some(ety) = &entry.etymology {
        body.push_str(" Etymology: ");
        body.push_str(ety);
    }
    body.push_str(" Word senses:");
    for (i, sense) in entry.senses.iter().enumerate() {
        body.push_str(&format!(" {}. {}", i + 1, render_sense(sense)));
    }
    if !entry.translations.is_empty() {
        body.push_str(" **Non-disambiguated translation entries**:");
        // group by sense, keeping first-seen order
        let mut groups: Vec<(Option<&str>, Vec<String>)> = Vec::new();
        for t in &entry.translations {
            let item = format!("{}: {}", t.language.name(), t.term);
            match groups.iter_mut().find(|(s, _)| *s == t.sense.as_deref()) {
                Some((_, items)) => items.push(item),
                None => groups.push((t.sense.as_deref(), vec![item])),
            }
        }
        for (sense, items) in groups {
            if let Some(s) = sense {
                body.push_str(" Sense: ");
                body.push_str(s);
            }
            for item in items {
                body.push_str(" - ");
                body.push_str(&item);
            }
        }
    }
    DictionaryDoc {
        doc_id,
        title: format!("Word: {}", entry.word),
        body,
    }
}

/// Assign sequential ids starting at 0.
pub fn compile_dictionary<'a>(
    entries: impl IntoIterator<Item = &'a WordEntry>,
) -> Vec<DictionaryDoc> {
    entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| format_doc(e, i as u64))
        .collect()
}

/// Documents by id.
#[derive(Debug, Clone, Default)]
pub struct DocStore {
    docs: HashMap<u64, DictionaryDoc>,
}

impl DocStore {
    pub fn new(docs: impl IntoIterator<Item = DictionaryDoc>) -> Self {
        Self {
            docs: docs.into_iter().map(|d| (d.doc_id, d)).collect(),
        }
    }

    pub fn get(&self, id: u64) -> Option<&DictionaryDoc> {
        self.docs.get(&id)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Documents sorted by id.
    pub fn sorted(&self) -> Vec<&DictionaryDoc> {
        let mut v: Vec<_> = self.docs.values().collect();
        v.sort_by_key(|d| d.doc_id);
        v
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, DictionaryError> {
        let reader = BufReader::new(File::open(path)?);
        let mut docs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: DictionaryDoc = serde_json::from_str(&line)
                .map_err(|e| DictionaryError::Corrupt(format!("docs line {}: {e}", i + 1)))?;
            docs.push(doc);
        }
        Ok(Self::new(docs))
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), DictionaryError> {
        let mut w = BufWriter::new(File::create(path)?);
        for d in self.sorted() {
            serde_json::to_writer(&mut w, d).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Concatenate `Doc i(Title: …) body` in rank order, one per line, capped at
/// `max_chars` characters. The cap cuts inside a body at a character
/// boundary; a doc whose header would not fit is dropped entirely.
pub fn render_information_block(hits: &[SearchHit], docs: &DocStore, max_chars: usize) -> String {
    let mut out = String::new();
    let mut used = 0usize;
    let mut shown = 0usize;
    for hit in hits {
        let Some(doc) = docs.get(hit.doc_id) else {
            continue;
        };
        let sep = if shown == 0 { "" } else { "\n" };
        let header = format!("{sep}Doc {}(Title: {})", shown + 1, doc.title);
        let piece_body = format!(" {}", doc.body);
        let header_len = header.chars().count();
        let body_len = piece_body.chars().count();
        if used + header_len > max_chars {
            break;
        }
        out.push_str(&header);
        used += header_len;
        shown += 1;
        if used + body_len <= max_chars {
            out.push_str(&piece_body);
            used += body_len;
        } else {
            out.extend(piece_body.chars().take(max_chars - used));
            break;
        }
    }
    out
}
