//! Seeded random inputs.

use neolex_core::dictionary::DictionaryDoc;
use neolex_core::grpo::{Rollout, RolloutGroup};
use neolex_core::lang::Lang;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: &[&str] = &[
    "the",
    "game",
    "games",
    "YouTube",
    "video",
    "source",
    "GTA",
    "players",
    "player",
    "hardcore",
    "zoomer",
    "zoomers",
    "covidiot",
    "plandemic",
    "lateral",
    "thinkers",
    "thinker",
    "running",
    "ran",
    "spoil",
    "spoiled",
    "smartphone",
    "liking",
    "liked",
    "vaccine",
    "envy",
    "給她愛",
    "優兔",
    "推し活",
    "ガチ勢",
    "Querdenker",
    "зумер",
    "удалёнка",
    "Übersetzung",
    "séance",
    "rizz",
    "doomscrolling",
    "a",
    "is",
    "of",
    "and",
    "",
];

pub fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.random_range(lo..=hi);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn lang(rng: &mut ChaCha8Rng) -> Lang {
    *Lang::ALL.choose(rng).unwrap()
}

pub struct GenTranscript {
    pub text: String,
    /// Format indicator implied by the construction.
    pub format: u8,
}

fn translation_body(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..5) {
        0 => String::new(),
        1 => " \n\t ".into(),
        _ => words(rng, 1, 8),
    }
}

/// Well-formed blocks in random order, optionally followed by an unclosed
/// tag. The format is 1 iff the last closed translation block is non-blank.
pub fn transcript(rng: &mut ChaCha8Rng) -> GenTranscript {
    let mut text = String::new();
    let mut last: Option<String> = None;
    for _ in 0..rng.random_range(0..7) {
        match rng.random_range(0..6) {
            0 => {
                text.push_str("<think>");
                text.push_str(&words(rng, 0, 6));
                if rng.random_bool(0.5) {
                    text.push_str(&format!(
                        "<search>{}</search>\n<information>{}</information>",
                        words(rng, 1, 3),
                        words(rng, 0, 10)
                    ));
                }
                text.push_str(&words(rng, 0, 4));
                text.push_str("</think>");
            }
            1 => text.push_str(&format!("<search>{}</search>", words(rng, 1, 3))),
            2 => text.push_str(&format!("<information>{}</information>", words(rng, 0, 10))),
            3 => {
                let body = translation_body(rng);
                text.push_str(&format!("<translation>{body}</translation>"));
                last = Some(body);
            }
            4 => text.push_str(&words(rng, 1, 5)),
            _ => text.push_str("\n\n"),
        }
    }
    match rng.random_range(0..6) {
        0 => text.push_str(&format!("<translation>{}", words(rng, 1, 4))),
        1 => text.push_str(&format!("<think>{}", words(rng, 1, 4))),
        _ => {}
    }
    let format = last.map_or(0, |b| u8::from(!b.trim().is_empty()));
    GenTranscript { text, format }
}

/// Span sets of one to four entries; hyps often contain an inflected span.
pub fn hyp_and_spans(rng: &mut ChaCha8Rng) -> (String, Vec<String>) {
    let spans: Vec<String> = (0..rng.random_range(1..=4))
        .map(|_| match words(rng, 1, 2).trim() {
            "" => "GTA".to_string(),
            w => w.to_string(),
        })
        .collect();
    let mut hyp = words(rng, 0, 8);
    if rng.random_bool(0.5) {
        let s = spans.choose(rng).unwrap();
        let suffix = ["", "s", "es", "ed", "ing"].choose(rng).unwrap();
        hyp = format!("{hyp} {s}{suffix} {}", words(rng, 0, 3));
    }
    if rng.random_bool(0.2) {
        hyp = hyp.to_uppercase();
    }
    (hyp, spans)
}

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "zu", "qe", "bri", "str", "ung", "ion", "給",
    "她", "愛", "兔", "ガ", "チ", "зу", "мер", "é", "ü",
];

fn token(rng: &mut ChaCha8Rng) -> String {
    (0..rng.random_range(1..=4))
        .map(|_| *SYLLABLES.choose(rng).unwrap())
        .collect()
}

pub fn phrase(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    (0..rng.random_range(lo..=hi))
        .map(|_| token(rng))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `n` documents with unique shuffled ids. Some bodies repeat exactly and
/// some are long enough to hit the information cap on their own.
pub fn corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<DictionaryDoc> {
    let mut ids: Vec<u64> = (0..n as u64 * 3).collect();
    ids.shuffle(rng);
    let mut docs: Vec<DictionaryDoc> = Vec::with_capacity(n);
    for (i, &id) in ids.iter().take(n).enumerate() {
        let body = match rng.random_range(0..10) {
            0 if i > 0 => docs[rng.random_range(0..i)].body.clone(),
            1 => phrase(rng, 200, 400),
            _ => phrase(rng, 1, 30),
        };
        docs.push(DictionaryDoc {
            doc_id: id,
            title: format!("Word: {}", token(rng)),
            body,
        });
    }
    docs
}

pub fn query(rng: &mut ChaCha8Rng, docs: &[DictionaryDoc]) -> String {
    match rng.random_range(0..4) {
        0 => docs.choose(rng).unwrap().body.chars().take(40).collect(),
        1 => token(rng),
        _ => phrase(rng, 1, 4),
    }
}

/// Difficulty scores drawn from a mix of a continuous range and a few
/// repeated values so equal-v recipients are common.
pub fn difficulties(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    const TIES: &[f64] = &[-1.0, -0.3, -0.05, 0.0, 0.02, 0.1, 0.1, 0.25, 0.5, 1.0];
    (0..n)
        .map(|_| {
            if rng.random_bool(0.4) {
                *TIES.choose(rng).unwrap()
            } else {
                rng.random_range(-1.0..=1.0)
            }
        })
        .collect()
}

fn logps(rng: &mut ChaCha8Rng, len: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let old: Vec<f64> = (0..len).map(|_| rng.random_range(-6.0..-0.01)).collect();
    let cur: Vec<f64> = old
        .iter()
        .map(|o| o + rng.random_range(-0.5..0.5))
        .collect();
    let r#ref: Vec<f64> = cur
        .iter()
        .map(|c| c + rng.random_range(-0.3..0.3))
        .collect();
    (old, cur, r#ref)
}

pub fn group(rng: &mut ChaCha8Rng) -> RolloutGroup {
    let n = rng.random_range(2..=8);
    let shared = rng.random::<f64>();
    let reward_kind = rng.random_range(0..4);
    let density = *[0.3, 0.7, 1.0].choose(rng).unwrap();
    let rollouts = (0..n)
        .map(|_| {
            let len = rng.random_range(1..=48);
            let mut mask: Vec<u8> = (0..len)
                .map(|_| u8::from(rng.random_bool(density)))
                .collect();
            let keep = rng.random_range(0..len);
            mask[keep] = 1;
            let (logp_old, logp_cur, logp_ref) = logps(rng, len);
            let reward = match reward_kind {
                0 => shared,
                1 => f64::from(u8::from(rng.random_bool(0.5))),
                _ => rng.random(),
            };
            Rollout {
                reward,
                mask,
                logp_old,
                logp_cur,
                logp_ref,
            }
        })
        .collect();
    RolloutGroup::new(rollouts)
}

/// Overwrite every masked-out position with junk, including non-finite values.
pub fn perturb_masked(rng: &mut ChaCha8Rng, g: &RolloutGroup) -> RolloutGroup {
    let mut out = g.clone();
    for r in &mut out.rollouts {
        for t in 0..r.mask.len() {
            if r.mask[t] == 1 {
                continue;
            }
            for v in [&mut r.logp_old[t], &mut r.logp_cur[t], &mut r.logp_ref[t]] {
                *v = match rng.random_range(0..5) {
                    0 => f64::NAN,
                    1 => f64::INFINITY,
                    2 => -1e300,
                    _ => rng.random_range(-50.0..50.0),
                };
            }
        }
    }
    out
}
