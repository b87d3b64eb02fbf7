//! Deterministic validation / test / reference-free / train split building.
//!
//! Type1 examples (human-translated into English) feed val and test. Type2
//! examples (untranslated) feed the reference-free test split and the train
//! split, drawn disjointly from one shuffled pool. Train pairs carry no
//! reference yet: an external translator fills it from the translation
//! prompt payloads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{classify_entry, EntryClass, IngestError, WordEntry};
use crate::lang::Lang;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExamplePair {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub src_text: String,
    /// Empty for reference-free and not-yet-translated train pairs.
    #[serde(default)]
    pub ref_translation: String,
    pub neologism: String,
    pub glosses: Vec<String>,
    pub pos: String,
    /// Target-side renderings of the neologism. Empty until aligned.
    #[serde(default)]
    pub spans: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Val,
    Test,
    TestReferenceFree,
}

impl SplitName {
    pub const ALL: [SplitName; 4] = [
        SplitName::Train,
        SplitName::Val,
        SplitName::Test,
        SplitName::TestReferenceFree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
            SplitName::TestReferenceFree => "test_reference_free",
        }
    }

    /// Splits whose pairs must carry a human reference.
    pub fn is_reference_based(self) -> bool {
        matches!(self, SplitName::Val | SplitName::Test)
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub pairs: Vec<ExamplePair>,
}

/// Requested sizes, counted in source examples (before target expansion).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub val: usize,
    pub test: usize,
    pub reference_free: usize,
    pub train: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub sizes: SplitSizes,
    pub seed: u64,
    /// Each train source example is expanded to every listed target except
    /// its own language.
    pub train_targets: Vec<Lang>,
    pub reference_free_targets: Vec<Lang>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSet {
    pub splits: BTreeMap<SplitName, DatasetSplit>,
}

impl SplitSet {
    pub fn get(&self, name: SplitName) -> &DatasetSplit {
        &self.splits[&name]
    }

    /// Fraction of each split taken by each `src-tgt` direction.
    pub fn pair_proportions(&self) -> BTreeMap<SplitName, BTreeMap<String, f64>> {
        self.splits
            .iter()
            .map(|(name, split)| {
                let mut counts: BTreeMap<String, usize> = BTreeMap::new();
                for p in &split.pairs {
                    *counts
                        .entry(format!("{}-{}", p.src_lang, p.tgt_lang))
                        .or_default() += 1;
                }
                let n = split.pairs.len().max(1) as f64;
                (
                    *name,
                    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect(),
                )
            })
            .collect()
    }
}

/// Every (example, English translation) pair of a Type1 entry, xx→en.
/// English-language entries yield nothing (there is no direction to test).
pub fn extract_type1_pairs(entry: &WordEntry) -> Vec<ExamplePair> {
    if entry.language == Lang::En {
        return Vec::new();
    }
    entry
        .examples()
        .filter(|(_, ex)| ex.has_english_translation())
        .map(|(sense, ex)| ExamplePair {
            src_lang: entry.language,
            tgt_lang: Lang::En,
            src_text: ex.text.clone(),
            ref_translation: ex.translation.clone().unwrap_or_default(),
            neologism: entry.word.clone(),
            glosses: sense.glosses.clone(),
            pos: entry.pos.clone(),
            spans: Vec::new(),
        })
        .collect()
}

// An untranslated example waiting for a target language.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct SourceExample {
    lang: Lang,
    word: String,
    pos: String,
    text: String,
    glosses: Vec<String>,
}

fn type2_sources(entry: &WordEntry) -> Vec<SourceExample> {
    entry
        .examples()
        .map(|(sense, ex)| SourceExample {
            lang: entry.language,
            word: entry.word.clone(),
            pos: entry.pos.clone(),
            text: ex.text.clone(),
            glosses: sense.glosses.clone(),
        })
        .collect()
}

fn expand(src: &SourceExample, targets: &[Lang]) -> Vec<ExamplePair> {
    targets
        .iter()
        .filter(|&&t| t != src.lang)
        .map(|&t| ExamplePair {
            src_lang: src.lang,
            tgt_lang: t,
            src_text: src.text.clone(),
            ref_translation: String::new(),
            neologism: src.word.clone(),
            glosses: src.glosses.clone(),
            pos: src.pos.clone(),
            spans: Vec::new(),
        })
        .collect()
}

/// Sort, dedup and shuffle with a seeded RNG so the result does not depend on
/// dump order.
fn seeded_pool<T: Ord>(items: impl IntoIterator<Item = T>, seed: u64) -> Vec<T> {
    let set: BTreeSet<T> = items.into_iter().collect();
    let mut pool: Vec<T> = set.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool
}

pub fn build_splits(entries: &[WordEntry], plan: &SplitPlan) -> Result<SplitSet, IngestError> {
    let sizes = plan.sizes;

    let type1 = seeded_pool(
        entries
            .iter()
            .filter(|e| classify_entry(e) == EntryClass::Type1)
            .flat_map(extract_type1_pairs),
        plan.seed,
    );
    let need1 = sizes.val + sizes.test;
    if type1.len() < need1 {
        return Err(IngestError::InsufficientType1 {
            requested: need1,
            available: type1.len(),
        });
    }

    // Distinct stream for the Type2 pool so that changing Type1 content does
    // not reshuffle Type2.
    let type2 = seeded_pool(
        entries
            .iter()
            .filter(|e| classify_entry(e) == EntryClass::Type2)
            .flat_map(type2_sources),
        plan.seed ^ 0x9e37_79b9_7f4a_7c15,
    );
    let need2 = sizes.reference_free + sizes.train;
    if type2.len() < need2 {
        return Err(IngestError::InsufficientType2 {
            requested: need2,
            available: type2.len(),
        });
    }

    let mut type1 = type1.into_iter();
    let val: Vec<ExamplePair> = type1.by_ref().take(sizes.val).collect();
    let test: Vec<ExamplePair> = type1.take(sizes.test).collect();

    let (rf_src, rest) = type2.split_at(sizes.reference_free);
    let train_src = &rest[..sizes.train];
    let rf: Vec<ExamplePair> = rf_src
        .iter()
        .flat_map(|s| expand(s, &plan.reference_free_targets))
        .collect();
    let train: Vec<ExamplePair> = train_src
        .iter()
        .flat_map(|s| expand(s, &plan.train_targets))
        .collect();

    let splits = [
        (SplitName::Train, train),
        (SplitName::Val, val),
        (SplitName::Test, test),
        (SplitName::TestReferenceFree, rf),
    ]
    .into_iter()
    .map(|(name, pairs)| (name, DatasetSplit { name, pairs }))
    .collect();
    Ok(SplitSet { splits })
}
