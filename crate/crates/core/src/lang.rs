//! ISO-639 language identifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("`{0}` is not a registered ISO-639 language code")]
pub struct UnknownLanguage(pub String);

/// A registered ISO-639-1 or ISO-639-3 code, stored lowercase as given.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LangCode(String);

impl LangCode {
    pub fn english() -> Self {
        LangCode("en".into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for LangCode {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code = s.trim().to_ascii_lowercase();
        let known = match code.len() {
            2 => isolang::Language::from_639_1(&code).is_some(),
            3 => isolang::Language::from_639_3(&code).is_some(),
            _ => false,
        };
        if known {
            Ok(LangCode(code))
        } else {
            Err(UnknownLanguage(s.to_string()))
        }
    }
}

impl TryFrom<String> for LangCode {
    type Error = UnknownLanguage;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<LangCode> for String {
    fn from(value: LangCode) -> Self {
        value.0
    }
}

impl fmt::Display for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Source language of a translation: a code, or left to the service.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SourceLang {
    #[default]
    Auto,
    Code(LangCode),
}

impl SourceLang {
    pub fn code(&self) -> Option<&LangCode> {
        match self {
            SourceLang::Auto => None,
            SourceLang::Code(c) => Some(c),
        }
    }
}

impl FromStr for SourceLang {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("auto") {
            Ok(SourceLang::Auto)
        } else {
            s.parse().map(SourceLang::Code)
        }
    }
}

impl TryFrom<String> for SourceLang {
    type Error = UnknownLanguage;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<SourceLang> for String {
    fn from(value: SourceLang) -> Self {
        value.to_string()
    }
}

impl fmt::Display for SourceLang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceLang::Auto => f.write_str("auto"),
            SourceLang::Code(c) => c.fmt(f),
        }
    }
}
