//! Rule-based lemmatization and lemma-level containment.

use crate::lang::Lang;

pub trait Lemmatizer: Send + Sync {
    fn lemmatize(&self, text: &str, lang: Lang) -> String;
}

/// Words, or single non-space symbols. Apostrophes inside a word are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            while i < chars.len()
                && (chars[i].is_alphanumeric()
                    || (chars[i] == '\''
                        && i + 1 < chars.len()
                        && chars[i + 1].is_alphanumeric()
                        && i > start))
            {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else {
            out.push(c.to_string());
            i += 1;
        }
    }
    out
}

const IRREGULAR: &[(&str, &str)] = &[
    ("am", "be"),
    ("are", "be"),
    ("is", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("went", "go"),
    ("gone", "go"),
    ("goes", "go"),
    ("came", "come"),
    ("coming", "come"),
    ("made", "make"),
    ("making", "make"),
    ("took", "take"),
    ("taken", "take"),
    ("taking", "take"),
    ("gave", "give"),
    ("given", "give"),
    ("giving", "give"),
    ("saw", "see"),
    ("seen", "see"),
    ("said", "say"),
    ("got", "get"),
    ("ran", "run"),
    ("used", "use"),
    ("using", "use"),
    ("uses", "use"),
    ("living", "live"),
    ("lived", "live"),
    ("liked", "like"),
    ("liking", "like"),
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("people", "person"),
    ("mice", "mouse"),
    ("feet", "foot"),
    ("teeth", "tooth"),
];

/// Words that look inflected but are not.
const KEEP: &[&str] = &[
    "this",
    "his",
    "hers",
    "its",
    "us",
    "thus",
    "yes",
    "gas",
    "bus",
    "news",
    "series",
    "species",
    "always",
    "perhaps",
    "less",
    "unless",
    "across",
    "kiss",
    "thing",
    "nothing",
    "something",
    "anything",
    "everything",
    "king",
    "ring",
    "sing",
    "sting",
    "bring",
    "string",
    "spring",
    "swing",
    "wing",
    "morning",
    "evening",
    "ceiling",
    "during",
    "bed",
    "red",
    "need",
    "seed",
    "speed",
    "feed",
    "hundred",
    "shed",
    "sled",
    "embed",
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Undo consonant doubling (`running` → `runn` → `run`), except for
/// letters that commonly end a stem doubled.
fn undouble(stem: &str) -> String {
    let cs: Vec<char> = stem.chars().collect();
    let n = cs.len();
    if n >= 2
        && cs[n - 1] == cs[n - 2]
        && !is_vowel(cs[n - 1])
        && !matches!(cs[n - 1], 'l' | 's' | 'z' | 'f')
    {
        return cs[..n - 1].iter().collect();
    }
    stem.to_string()
}

/// Lemma of one lowercase English word.
pub fn english_lemma(word: &str) -> String {
    if let Some((_, l)) = IRREGULAR.iter().find(|(w, _)| *w == word) {
        return l.to_string();
    }
    if KEEP.contains(&word) || !word.chars().all(|c| c.is_alphabetic()) {
        return word.to_string();
    }
    let n = word.chars().count();
    if n > 4 && word.ends_with("ies") {
        return format!("{}y", &word[..word.len() - 3]);
    }
    if n > 4 && word.ends_with("ied") {
        return format!("{}y", &word[..word.len() - 3]);
    }
    if n > 4
        && ["sses", "shes", "ches", "xes", "zzes"]
            .iter()
            .any(|s| word.ends_with(s))
    {
        return word[..word.len() - 2].to_string();
    }
    if n > 3 && word.ends_with('s') && !["ss", "us", "is"].iter().any(|s| word.ends_with(s)) {
        return word[..word.len() - 1].to_string();
    }
    if n > 5 && word.ends_with("ing") {
        return undouble(&word[..word.len() - 3]);
    }
    if n > 4 && word.ends_with("ed") && !word.ends_with("eed") {
        return undouble(&word[..word.len() - 2]);
    }
    word.to_string()
}

/// English: lowercase, tokenize and apply suffix rules, joining tokens with
/// single spaces. Every other language passes through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixLemmatizer;

impl Lemmatizer for SuffixLemmatizer {
    fn lemmatize(&self, text: &str, lang: Lang) -> String {
        if lang != Lang::En {
            return text.to_string();
        }
        tokenize(&text.to_lowercase())
            .iter()
            .map(|t| english_lemma(t))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Whether `needle` occurs in `hay` as a whole-token run (or as a raw
/// substring in languages written without spaces).
pub fn lemma_contains(hay: &str, needle: &str, lang: Lang) -> bool {
    if lang.is_unsegmented() {
        return hay.contains(needle);
    }
    let h = tokenize(hay);
    let n = tokenize(needle);
    if n.is_empty() {
        return true;
    }
    h.windows(n.len()).any(|w| w == n.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_forms_collapse() {
        for w in ["walks", "walking", "walked", "walk"] {
            assert_eq!(english_lemma(w), "walk", "{w}");
        }
    }

    #[test]
    fn suffix_rules() {
        let cases = [
            ("studies", "study"),
            ("studied", "study"),
            ("classes", "class"),
            ("watches", "watch"),
            ("boxes", "box"),
            ("running", "run"),
            ("stopped", "stop"),
            ("games", "game"),
            ("railfans", "railfan"),
            ("rizzes", "rizz"),
            ("calling", "call"),
            ("thing", "thing"),
            ("bus", "bus"),
            ("was", "be"),
            ("gta", "gta"),
            ("need", "need"),
            ("agreed", "agreed"),
        ];
        for (w, l) in cases {
            assert_eq!(english_lemma(w), l, "{w}");
        }
    }

    #[test]
    fn tokenize_splits_punctuation() {
        assert_eq!(
            tokenize("Video source: YouTube!"),
            vec!["Video", "source", ":", "YouTube", "!"]
        );
        assert_eq!(tokenize("don't 'x'"), vec!["don't", "'", "x", "'"]);
        assert_eq!(tokenize("乙女ゲーム"), vec!["乙女ゲーム"]);
    }

    #[test]
    fn english_lemmatized_text() {
        let l = SuffixLemmatizer;
        assert_eq!(
            l.lemmatize("Three GTA Games.", Lang::En),
            "three gta game ."
        );
        assert_eq!(l.lemmatize("Drei Spiele", Lang::De), "Drei Spiele");
    }

    #[test]
    fn token_boundaries() {
        assert!(lemma_contains("the gta game", "gta", Lang::En));
        assert!(!lemma_contains("the gtav game", "gta", Lang::En));
        assert!(lemma_contains("come on !", "come on", Lang::En));
        assert!(lemma_contains("看優兔視頻", "優兔", Lang::Zh));
    }
}
