//! Line-streaming dump ingestion with bounded memory.
//!
//! Lines are decoded and cleaned in parallel, one chunk at a time. Only
//! neologism entries (Type1/Type2) are retained in memory; every cleaned
//! entry is handed to a caller-supplied sink so the full dictionary can be
//! written out as it streams past.

use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    classify_entry, clean_entry, parse_record, CleanConfig, EntryClass, IngestError, WordEntry,
};

const CHUNK_LINES: usize = 4096;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: u64,
    pub malformed: u64,
    pub missing_word: u64,
    pub filtered: u64,
    pub kept: u64,
    pub type1: u64,
    pub type2: u64,
    pub type3: u64,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub stats: IngestStats,
    /// Type1 and Type2 entries, in dump order.
    pub neologisms: Vec<WordEntry>,
}

enum LineResult {
    Malformed,
    MissingWord,
    Filtered,
    Kept(Box<WordEntry>, EntryClass),
}

fn process_line(bytes: &[u8], line_no: u64, cfg: &CleanConfig) -> LineResult {
    let Ok(line) = std::str::from_utf8(bytes) else {
        return LineResult::Malformed;
    };
    match parse_record(line, line_no) {
        Err(IngestError::MissingWordField { .. }) => LineResult::MissingWord,
        Err(_) => LineResult::Malformed,
        Ok(raw) => match clean_entry(&raw, cfg) {
            None => LineResult::Filtered,
            Some(entry) => {
                let class = classify_entry(&entry);
                LineResult::Kept(Box::new(entry), class)
            }
        },
    }
}

/// Stream a JSONL dump. Malformed lines are counted and skipped; only I/O
/// failures of the reader or the sink abort.
pub fn ingest_dump<R, F>(
    mut reader: R,
    cfg: &CleanConfig,
    mut sink: F,
) -> Result<IngestOutcome, IngestError>
where
    R: BufRead,
    F: FnMut(&WordEntry, EntryClass) -> std::io::Result<()>,
{
    let mut out = IngestOutcome::default();
    let mut line_no: u64 = 0;
    loop {
        let mut chunk: Vec<(u64, Vec<u8>)> = Vec::with_capacity(CHUNK_LINES);
        while chunk.len() < CHUNK_LINES {
            let mut buf = Vec::new();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line_no += 1;
            chunk.push((line_no, buf));
        }
        if chunk.is_empty() {
            break;
        }
        let results: Vec<LineResult> = chunk
            .par_iter()
            .map(|(n, bytes)| process_line(bytes, *n, cfg))
            .collect();
        for r in results {
            out.stats.lines += 1;
            match r {
                LineResult::Malformed => out.stats.malformed += 1,
                LineResult::MissingWord => out.stats.missing_word += 1,
                LineResult::Filtered => out.stats.filtered += 1,
                LineResult::Kept(entry, class) => {
                    out.stats.kept += 1;
                    sink(&entry, class)?;
                    match class {
                        EntryClass::Type1 => out.stats.type1 += 1,
                        EntryClass::Type2 => out.stats.type2 += 1,
                        EntryClass::Type3 => out.stats.type3 += 1,
                    }
                    if class != EntryClass::Type3 {
                        out.neologisms.push(*entry);
                    }
                }
            }
        }
    }
    tracing::info!(?out.stats, "dump ingested");
    Ok(out)
}
