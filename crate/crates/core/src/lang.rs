//! The sixteen research languages and their display names.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lang {
    En,
    Is,
    Ru,
    Km,
    Ha,
    De,
    Ja,
    Zh,
    Cs,
    Uk,
    Ta,
    Pl,
    Fr,
    He,
    Hr,
    Ps,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language: {0:?}")]
pub struct UnknownLanguage(pub String);

impl Lang {
    pub const ALL: [Lang; 16] = [
        Lang::En,
        Lang::Is,
        Lang::Ru,
        Lang::Km,
        Lang::Ha,
        Lang::De,
        Lang::Ja,
        Lang::Zh,
        Lang::Cs,
        Lang::Uk,
        Lang::Ta,
        Lang::Pl,
        Lang::Fr,
        Lang::He,
        Lang::Hr,
        Lang::Ps,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Is => "is",
            Lang::Ru => "ru",
            Lang::Km => "km",
            Lang::Ha => "ha",
            Lang::De => "de",
            Lang::Ja => "ja",
            Lang::Zh => "zh",
            Lang::Cs => "cs",
            Lang::Uk => "uk",
            Lang::Ta => "ta",
            Lang::Pl => "pl",
            Lang::Fr => "fr",
            Lang::He => "he",
            Lang::Hr => "hr",
            Lang::Ps => "ps",
        }
    }

    /// English display name, as used in prompts and dictionary documents.
    pub fn name(self) -> &'static str {
        match self {
            Lang::En => "English",
            Lang::Is => "Icelandic",
            Lang::Ru => "Russian",
            Lang::Km => "Khmer",
            Lang::Ha => "Hausa",
            Lang::De => "German",
            Lang::Ja => "Japanese",
            Lang::Zh => "Chinese",
            Lang::Cs => "Czech",
            Lang::Uk => "Ukrainian",
            Lang::Ta => "Tamil",
            Lang::Pl => "Polish",
            Lang::Fr => "French",
            Lang::He => "Hebrew",
            Lang::Hr => "Croatian",
            Lang::Ps => "Pashto",
        }
    }

    /// Languages written without spaces between words. Span matching on
    /// these falls back to raw substring containment.
    pub fn is_unsegmented(self) -> bool {
        matches!(self, Lang::Zh | Lang::Ja | Lang::Km)
    }

    pub fn from_code(code: &str) -> Option<Lang> {
        Lang::ALL.into_iter().find(|l| l.code() == code)
    }

    /// Accepts either an ISO code (`"zh"`) or an English name (`"Chinese"`,
    /// case-insensitive).
    pub fn parse(s: &str) -> Result<Lang, UnknownLanguage> {
        let t = s.trim();
        Lang::from_code(&t.to_ascii_lowercase())
            .or_else(|| {
                Lang::ALL
                    .into_iter()
                    .find(|l| l.name().eq_ignore_ascii_case(t))
            })
            .ok_or_else(|| UnknownLanguage(s.to_string()))
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Lang {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Lang::parse(s)
    }
}

impl Serialize for Lang {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Lang {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Lang::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Parse a comma-separated language list such as `"zh,ja,en"`.
pub fn parse_lang_list(csv: &str) -> Result<Vec<Lang>, UnknownLanguage> {
    let mut out = Vec::new();
    for part in csv.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let lang = Lang::parse(part)?;
        if !out.contains(&lang) {
            out.push(lang);
        }
    }
    Ok(out)
}
