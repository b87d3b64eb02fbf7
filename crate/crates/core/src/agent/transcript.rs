//! Tag-level parsing of agent responses and provenance tracking.
//!
//! Spans are measured in characters (Unicode scalar values), never bytes.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Think,
    Search,
    Information,
    Translation,
    Plain,
}

impl SegmentKind {
    fn tag(self) -> Option<&'static str> {
        match self {
            SegmentKind::Think => Some("think"),
            SegmentKind::Search => Some("search"),
            SegmentKind::Information => Some("information"),
            SegmentKind::Translation => Some("translation"),
            SegmentKind::Plain => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Content without tags (raw for Plain).
    pub text: String,
    /// Character range in the full text, tags included.
    pub char_span: Range<usize>,
}

const TOP_LEVEL: [SegmentKind; 4] = [
    SegmentKind::Think,
    SegmentKind::Search,
    SegmentKind::Information,
    SegmentKind::Translation,
];
const IN_THINK: [SegmentKind; 2] = [SegmentKind::Search, SegmentKind::Information];

fn open_tag(kind: SegmentKind) -> String {
    format!("<{}>", kind.tag().expect("tagged kind"))
}

fn close_tag(kind: SegmentKind) -> String {
    format!("</{}>", kind.tag().expect("tagged kind"))
}

/// Earliest open tag among `kinds` at or after byte `from`.
fn next_open(text: &str, from: usize, kinds: &[SegmentKind]) -> Option<(usize, SegmentKind)> {
    kinds
        .iter()
        .filter_map(|&k| text[from..].find(&open_tag(k)).map(|i| (from + i, k)))
        .min_by_key(|&(i, _)| i)
}

/// Byte-level segment before conversion to character spans.
struct Piece {
    kind: SegmentKind,
    content: Range<usize>,
    raw: Range<usize>,
}

type NestedBlock = (SegmentKind, Range<usize>, Range<usize>);

/// Byte ranges of nested blocks inside a think body plus the position of
/// the closing `</think>`, or `None` if the think never closes.
fn scan_think(text: &str, body_start: usize) -> Option<(Vec<NestedBlock>, usize)> {
    let close = close_tag(SegmentKind::Think);
    let mut nested = Vec::new();
    let mut pos = body_start;
    loop {
        let end = text[pos..].find(&close).map(|i| pos + i);
        let open = next_open(text, pos, &IN_THINK);
        match (end, open) {
            (None, _) => return None,
            (Some(e), Some((o, kind))) if o < e => {
                let ot = open_tag(kind);
                let ct = close_tag(kind);
                let cstart = o + ot.len();
                match text[cstart..].find(&ct) {
                    Some(i) => {
                        let cend = cstart + i;
                        let rend = cend + ct.len();
                        nested.push((kind, cstart..cend, o..rend));
                        pos = rend;
                    }
                    None => pos = cstart,
                }
            }
            (Some(e), _) => return Some((nested, e)),
        }
    }
}

fn parse_pieces(text: &str) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::new();
    let push_plain = |out: &mut Vec<Piece>, r: Range<usize>| {
        if r.is_empty() {
            return;
        }
        if let Some(last) = out.last_mut() {
            if last.kind == SegmentKind::Plain && last.raw.end == r.start {
                last.raw.end = r.end;
                last.content.end = r.end;
                return;
            }
        }
        out.push(Piece {
            kind: SegmentKind::Plain,
            content: r.clone(),
            raw: r,
        });
    };

    let mut pos = 0;
    while pos < text.len() {
        let Some((o, kind)) = next_open(text, pos, &TOP_LEVEL) else {
            push_plain(&mut out, pos..text.len());
            break;
        };
        push_plain(&mut out, pos..o);
        let ot = open_tag(kind);
        let ct = close_tag(kind);
        let body = o + ot.len();
        if kind == SegmentKind::Think {
            let Some((nested, close_at)) = scan_think(text, body) else {
                push_plain(&mut out, o..body);
                pos = body;
                continue;
            };
            let raw_end = close_at + ct.len();
            // think runs around the nested blocks
            let mut run_raw_start = o;
            let mut run_start = body;
            for (nk, content, raw) in nested {
                if run_raw_start < raw.start {
                    out.push(Piece {
                        kind: SegmentKind::Think,
                        content: run_start..raw.start,
                        raw: run_raw_start..raw.start,
                    });
                }
                out.push(Piece {
                    kind: nk,
                    content,
                    raw: raw.clone(),
                });
                run_raw_start = raw.end;
                run_start = raw.end;
            }
            out.push(Piece {
                kind: SegmentKind::Think,
                content: run_start..close_at,
                raw: run_raw_start..raw_end,
            });
            pos = raw_end;
        } else {
            match text[body..].find(&ct) {
                Some(i) => {
                    let cend = body + i;
                    out.push(Piece {
                        kind,
                        content: body..cend,
                        raw: o..cend + ct.len(),
                    });
                    pos = cend + ct.len();
                }
                None => {
                    push_plain(&mut out, o..body);
                    pos = body;
                }
            }
        }
    }
    out
}

/// Maps byte offsets to character offsets.
struct CharIndex {
    starts: Vec<usize>,
}

impl CharIndex {
    fn new(text: &str) -> Self {
        let mut starts: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        starts.push(text.len());
        Self { starts }
    }

    fn char_at(&self, byte: usize) -> usize {
        self.starts
            .binary_search(&byte)
            .expect("byte offset on a char boundary")
    }

    fn byte_at(&self, ch: usize) -> usize {
        self.starts[ch]
    }
}

/// Total left-to-right parse. Text outside recognized tag pairs, and any
/// open tag without a matching close, becomes Plain. A closed think may
/// contain search and information blocks; it is split into think runs
/// around them. Concatenating the raw slices of the result reproduces
/// `text` exactly.
pub fn parse_transcript(text: &str) -> Vec<Segment> {
    let idx = CharIndex::new(text);
    parse_pieces(text)
        .into_iter()
        .map(|p| Segment {
            kind: p.kind,
            text: text[p.content].to_string(),
            char_span: idx.char_at(p.raw.start)..idx.char_at(p.raw.end),
        })
        .collect()
}

/// Raw slice of `text` covered by `seg`, tags included.
pub fn raw_slice<'a>(text: &'a str, seg: &Segment) -> &'a str {
    let idx = CharIndex::new(text);
    &text[idx.byte_at(seg.char_span.start)..idx.byte_at(seg.char_span.end)]
}

/// Content of the last translation segment, trimmed; `None` when there is
/// no translation or it is blank.
pub fn extract_translation(segments: &[Segment]) -> Option<String> {
    let last = segments
        .iter()
        .rev()
        .find(|s| s.kind == SegmentKind::Translation)?;
    let t = last.text.trim();
    (!t.is_empty()).then(|| t.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Model,
    Retrieved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub prompt: String,
    /// Model response with injected information blocks.
    pub full_text: String,
    pub segments: Vec<Segment>,
    /// Sorted, disjoint character ranges of retrieved text.
    pub retrieved: Vec<Range<usize>>,
    pub search_turns_used: usize,
    pub queries: Vec<String>,
    /// Approximate tokens charged against the response budget.
    pub tokens_used: usize,
    pub budget_exhausted: bool,
}

impl Transcript {
    /// Build from response text alone; information segments are taken to be
    /// the retrieved regions.
    pub fn from_text(prompt: &str, full_text: &str) -> Self {
        let segments = parse_transcript(full_text);
        let retrieved: Vec<Range<usize>> = segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Information)
            .map(|s| s.char_span.clone())
            .collect();
        let queries: Vec<String> = segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Search)
            .map(|s| s.text.trim().to_string())
            .collect();
        Self {
            prompt: prompt.to_string(),
            full_text: full_text.to_string(),
            search_turns_used: retrieved.len(),
            segments,
            retrieved,
            queries,
            tokens_used: 0,
            budget_exhausted: false,
        }
    }

    pub fn len_chars(&self) -> usize {
        self.full_text.chars().count()
    }

    pub fn provenance(&self) -> Vec<Provenance> {
        let mut p = vec![Provenance::Model; self.len_chars()];
        for r in &self.retrieved {
            p[r.clone()].fill(Provenance::Retrieved);
        }
        p
    }

    pub fn translation(&self) -> Option<String> {
        extract_translation(&self.segments)
    }

    pub fn segments_of(&self, kind: SegmentKind) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.kind == kind)
    }

    /// Search queries as they appear in search segments, trimmed.
    pub fn search_queries(&self) -> Vec<String> {
        self.segments_of(SegmentKind::Search)
            .map(|s| s.text.trim().to_string())
            .collect()
    }
}

/// 0 for tokens overlapping retrieved text, 1 otherwise. Spans are character
/// ranges into `full_text`.
pub fn token_mask(
    transcript: &Transcript,
    token_spans: &[Range<usize>],
) -> Result<Vec<u8>, AgentError> {
    let n = transcript.len_chars();
    token_spans
        .iter()
        .map(|span| {
            if span.start > span.end || span.end > n {
                return Err(AgentError::SpanOutOfRange {
                    start: span.start,
                    end: span.end,
                    len: n,
                });
            }
            let hit = transcript
                .retrieved
                .iter()
                .any(|r| span.start < r.end && r.start < span.end);
            Ok(if hit { 0 } else { 1 })
        })
        .collect()
}

pub(crate) fn char_len(s: &str) -> usize {
    s.chars().count()
}
