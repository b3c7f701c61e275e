//! Class-label normalization into textual prompts.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelStyle {
    /// `063.electric-guitar-101` style: numeric prefix and postfix, hyphens.
    Caltech,
    /// `apple_pie` style.
    Food,
    /// `general_store/indoor` style bi-level names.
    Places,
}

impl std::str::FromStr for LabelStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "caltech" => Ok(Self::Caltech),
            "food" => Ok(Self::Food),
            "places" => Ok(Self::Places),
            other => Err(format!(
                "unknown label style {other:?} (expected caltech, food or places)"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("label {0:?} is empty after normalization")]
    Empty(String),
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

/// Lowercase words separated by single spaces; never empty, no digit-only
/// words, no punctuation other than apostrophes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TextualPrompt(String);

impl TextualPrompt {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Accepts text that is already in normal form.
    pub fn parse(text: &str) -> Result<Self, LabelError> {
        let cleaned = clean_words(text);
        if cleaned.is_empty() || cleaned != text {
            return Err(LabelError::Empty(text.to_string()));
        }
        Ok(Self(cleaned))
    }
}

impl fmt::Display for TextualPrompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for TextualPrompt {
    type Error = LabelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(&s)
    }
}

impl From<TextualPrompt> for String {
    fn from(t: TextualPrompt) -> String {
        t.0
    }
}

/// Second-level Places qualifiers that name a part of the place and read
/// naturally after it; every other qualifier goes in front.
const APPENDED_QUALIFIERS: &[&str] = &["platform"];

fn clean_words(s: &str) -> String {
    let mapped: String = s
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| {
            if c.is_alphanumeric() || c == '\'' {
                c
            } else {
                ' '
            }
        })
        .collect();
    mapped
        .split_whitespace()
        .filter(|w| !w.chars().all(|c| c.is_ascii_digit()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn strip_caltech(raw: &str) -> &str {
    let mut s = raw.trim();
    if let Some(dot) = s.find('.') {
        if dot > 0 && s[..dot].bytes().all(|b| b.is_ascii_digit()) {
            s = &s[dot + 1..];
        }
    }
    if let Some(dash) = s.rfind('-') {
        let tail = &s[dash + 1..];
        if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            s = &s[..dash];
        }
    }
    s
}

fn places_words(raw: &str) -> String {
    let mut parts = raw.trim().split('/').filter(|p| !p.is_empty());
    let Some(name) = parts.next() else {
        return String::new();
    };
    let mut words = vec![name.replace('_', " ")];
    for qualifier in parts {
        let q = qualifier.replace('_', " ");
        if APPENDED_QUALIFIERS.contains(&q.as_str()) {
            words.push(q);
        } else {
            words.insert(0, q);
        }
    }
    words.join(" ")
}

pub fn normalize_label(raw: &str, style: LabelStyle) -> Result<TextualPrompt, LabelError> {
    let words = match style {
        LabelStyle::Caltech => strip_caltech(raw).replace('-', " "),
        LabelStyle::Food => raw.replace('_', " "),
        LabelStyle::Places => places_words(raw),
    };
    let cleaned = clean_words(&words);
    if cleaned.is_empty() {
        return Err(LabelError::Empty(raw.to_string()));
    }
    Ok(TextualPrompt(cleaned))
}

/// Reads a label table: one raw label per line, line index = class id.
/// Trailing blank lines are ignored; blank lines in between are an error.
pub fn read_label_file(path: &Path, style: LabelStyle) -> Result<Vec<TextualPrompt>, LabelError> {
    let file_err = |message: String| LabelError::File {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
    let lines: Vec<&str> = text.lines().collect();
    let used = lines
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .map_or(0, |i| i + 1);
    lines[..used]
        .iter()
        .enumerate()
        .map(|(i, line)| {
            if line.trim().is_empty() {
                return Err(file_err(format!("blank label on line {}", i + 1)));
            }
            normalize_label(line, style)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_labels() {
        let n = |raw, style| normalize_label(raw, style).unwrap().to_string();
        assert_eq!(
            n("063.electric-guitar-101", LabelStyle::Caltech),
            "electric guitar"
        );
        assert_eq!(n("apple_pie", LabelStyle::Food), "apple pie");
        assert_eq!(
            n("train_station/platform", LabelStyle::Places),
            "train station platform"
        );
        assert_eq!(
            n("general_store/indoor", LabelStyle::Places),
            "indoor general store"
        );
        assert_eq!(
            n("general_store/outdoor", LabelStyle::Places),
            "outdoor general store"
        );
    }

    #[test]
    fn caltech_without_affixes() {
        let n = |raw| {
            normalize_label(raw, LabelStyle::Caltech)
                .unwrap()
                .to_string()
        };
        assert_eq!(n("232.t-shirt"), "t shirt");
        assert_eq!(n("257.clutter"), "clutter");
        assert_eq!(n("ak47"), "ak47");
    }

    #[test]
    fn empty_after_stripping_is_rejected() {
        assert!(matches!(
            normalize_label("001.-7", LabelStyle::Caltech),
            Err(LabelError::Empty(_))
        ));
        assert!(normalize_label("___", LabelStyle::Food).is_err());
        assert!(normalize_label("//", LabelStyle::Places).is_err());
    }

    #[test]
    fn idempotent_on_reference_labels() {
        for style in [LabelStyle::Caltech, LabelStyle::Food, LabelStyle::Places] {
            for raw in [
                "063.electric-guitar-101",
                "apple_pie",
                "train_station/platform",
                "Hot_Dog",
            ] {
                let once = normalize_label(raw, style).unwrap();
                let twice = normalize_label(once.as_str(), style).unwrap();
                assert_eq!(once, twice);
            }
        }
    }

    #[test]
    fn parse_accepts_only_normal_form() {
        assert!(TextualPrompt::parse("apple pie").is_ok());
        assert!(TextualPrompt::parse("apple_pie").is_err());
        assert!(TextualPrompt::parse("Apple pie").is_err());
        assert!(TextualPrompt::parse("").is_err());
    }
}
