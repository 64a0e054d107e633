//! Typed scores recovered from raw completion text.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::ResponseSchema;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("no class label found in response")]
    NoMatch,
    #[error("classes `{0}` and `{1}` match at the same position")]
    Ambiguity(String, String),
    #[error("no number found in response")]
    NoNumber,
    #[error("value {value} outside [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },
    #[error("`{0}` is not in the class list")]
    UnknownClass(String),
    #[error("response schema `{0}` has no scalar reading")]
    UnsupportedSchema(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub class_index: usize,
    pub class_string: String,
}

impl CategoryScore {
    pub fn ordinal(&self) -> usize {
        self.class_index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarScore {
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarScore {
    pub stars: u32,
}

/// What to do with a pair whose score could not be obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropPolicy {
    /// Exclude the pair from counting.
    #[default]
    Drop,
    /// Substitute the middle ordinal of the scale.
    Middle,
}

impl std::str::FromStr for DropPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop" => Ok(DropPolicy::Drop),
            "middle" => Ok(DropPolicy::Middle),
            _ => Err(format!("unknown drop policy `{s}` (expected drop or middle)")),
        }
    }
}

/// Earliest word-bounded occurrence of `needle` in `haystack`.
fn find_bounded(haystack: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let mut from = 0;
    while let Some(rel) = haystack[from..].find(needle) {
        let start = from + rel;
        let end = start + needle.len();
        let before_ok = haystack[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric())
            || !needle.chars().next().is_some_and(char::is_alphanumeric);
        let after_ok = haystack[end..].chars().next().is_none_or(|c| !c.is_alphanumeric())
            || !needle.chars().next_back().is_some_and(char::is_alphanumeric);
        if before_ok && after_ok {
            return Some(start);
        }
        from = start + haystack[start..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// Finds the class named in `text`.
///
/// Matching is case-insensitive and word-bounded. When several classes
/// occur, the longest class string wins; among equally long matches the
/// earliest occurrence wins.
pub fn parse_categorical(text: &str, classes: &[String]) -> Result<CategoryScore, ParseError> {
    let haystack = text.to_lowercase();
    let mut best: Option<(usize, usize, usize)> = None; // (class, pos, len)
    let mut tie: Option<usize> = None;
    for (idx, class) in classes.iter().enumerate() {
        let needle = class.to_lowercase();
        let Some(pos) = find_bounded(&haystack, &needle) else {
            continue;
        };
        let len = needle.chars().count();
        match best {
            None => {
                best = Some((idx, pos, len));
                tie = None;
            }
            Some((_, bpos, blen)) => {
                if len > blen || (len == blen && pos < bpos) {
                    best = Some((idx, pos, len));
                    tie = None;
                } else if len == blen && pos == bpos {
                    tie = Some(idx);
                }
            }
        }
    }
    match (best, tie) {
        (Some((idx, _, _)), Some(other)) => Err(ParseError::Ambiguity(classes[idx].clone(), classes[other].clone())),
        (Some((idx, _, _)), None) => Ok(CategoryScore {
            class_index: idx,
            class_string: classes[idx].clone(),
        }),
        (None, _) => Err(ParseError::NoMatch),
    }
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^0-9.])(-?[0-9]+(?:\.[0-9]+)?|-?\.[0-9]+)").unwrap())
}

fn first_number(text: &str) -> Option<f64> {
    let caps = number_re().captures(text)?;
    let m = caps.get(1)?;
    // a hyphen directly after a letter or digit is a range dash, not a sign
    let s = m.as_str();
    let prev = text[..m.start()].chars().next_back();
    let s = if s.starts_with('-') && prev.is_some_and(char::is_alphanumeric) {
        &s[1..]
    } else {
        s
    };
    s.parse().ok()
}

/// First decimal number in `text`; out-of-range values are errors.
pub fn parse_scalar(text: &str, lo: f64, hi: f64) -> Result<ScalarScore, ParseError> {
    let value = first_number(text).ok_or(ParseError::NoNumber)?;
    if value < lo || value > hi {
        return Err(ParseError::Range { value, lo, hi });
    }
    Ok(ScalarScore { value })
}

/// Accepts `N`, `N/5`, `N stars` or a run of `★` glyphs.
pub fn parse_stars(text: &str, min: u32, max: u32) -> Result<StarScore, ParseError> {
    let glyphs = longest_glyph_run(text);
    let stars = if glyphs > 0 {
        glyphs as f64
    } else {
        first_number(text).ok_or(ParseError::NoMatch)?
    };
    if stars.fract() != 0.0 || stars < min as f64 || stars > max as f64 {
        return Err(ParseError::Range {
            value: stars,
            lo: min as f64,
            hi: max as f64,
        });
    }
    Ok(StarScore { stars: stars as u32 })
}

fn longest_glyph_run(text: &str) -> usize {
    let mut best = 0;
    let mut run = 0;
    for c in text.chars() {
        if c == '★' {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Exact (case-sensitive) position of `class` in the list.
pub fn category_to_ordinal(class: &str, classes: &[String]) -> Result<usize, ParseError> {
    classes
        .iter()
        .position(|c| c == class)
        .ok_or_else(|| ParseError::UnknownClass(class.to_string()))
}

/// A completion parsed according to its response schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParsedResponse {
    Category(CategoryScore),
    Stars(StarScore),
    Scalar(ScalarScore),
}

impl ParsedResponse {
    /// Integer position on the scale used for ranking. Scalars round to nearest.
    pub fn ordinal(&self) -> i64 {
        match self {
            ParsedResponse::Category(c) => c.class_index as i64,
            ParsedResponse::Stars(s) => s.stars as i64,
            ParsedResponse::Scalar(s) => s.value.round() as i64,
        }
    }

    /// Text bound into a follow-up prompt.
    pub fn answer_text(&self) -> String {
        match self {
            ParsedResponse::Category(c) => c.class_string.clone(),
            ParsedResponse::Stars(s) => format!("{} stars", s.stars),
            ParsedResponse::Scalar(s) => format!("{}", s.value),
        }
    }
}

pub fn parse_response(text: &str, schema: &ResponseSchema) -> Result<ParsedResponse, ParseError> {
    match schema {
        ResponseSchema::Categorical { classes } => parse_categorical(text, classes).map(ParsedResponse::Category),
        ResponseSchema::Stars { min, max } => parse_stars(text, *min, *max).map(ParsedResponse::Stars),
        ResponseSchema::Scalar { lo, hi } => parse_scalar(text, *lo, *hi).map(ParsedResponse::Scalar),
        ResponseSchema::Matrix => Err(ParseError::UnsupportedSchema("matrix".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::GEMBA_CLASSES;
    use proptest::prelude::*;

    fn gemba() -> Vec<String> {
        GEMBA_CLASSES.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn categorical_examples() {
        let classes = gemba();
        assert_eq!(parse_categorical("Class: Perfect translation", &classes).unwrap().class_index, 4);
        let s = parse_categorical("some meaning preserved, but not understandable.", &classes).unwrap();
        assert_eq!(s.class_index, 1);
        assert_eq!(s.class_string, "Some meaning preserved, but not understandable");
        assert_eq!(parse_categorical("I cannot evaluate this.", &classes), Err(ParseError::NoMatch));
    }

    #[test]
    fn longest_match_beats_shared_prefix() {
        let classes: Vec<String> = vec!["Good".into(), "Good translation".into()];
        let s = parse_categorical("Verdict: good translation", &classes).unwrap();
        assert_eq!(s.class_index, 1);
    }

    #[test]
    fn earliest_wins_among_equal_length() {
        let classes: Vec<String> = vec!["bad".into(), "ok!".into()];
        assert_eq!(parse_categorical("ok! not bad", &classes).unwrap().class_index, 1);
        assert_eq!(parse_categorical("bad, not ok!", &classes).unwrap().class_index, 0);
    }

    #[test]
    fn word_boundaries_respected() {
        assert_eq!(
            parse_categorical("Imperfect translation", &gemba()),
            Err(ParseError::NoMatch)
        );
    }

    #[test]
    fn case_variant_classes_are_ambiguous() {
        let classes: Vec<String> = vec!["Good".into(), "GOOD".into()];
        assert!(matches!(parse_categorical("good", &classes), Err(ParseError::Ambiguity(_, _))));
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(parse_scalar("Score: 87", 0.0, 100.0).unwrap().value, 87.0);
        assert!(matches!(parse_scalar("150", 0.0, 100.0), Err(ParseError::Range { .. })));
        assert_eq!(parse_scalar("between 60 and 70", 0.0, 100.0).unwrap().value, 60.0);
        assert_eq!(parse_scalar("Score: 72.5/100", 0.0, 100.0).unwrap().value, 72.5);
        assert!(matches!(parse_scalar("Score: -3", 0.0, 100.0), Err(ParseError::Range { .. })));
        assert_eq!(parse_scalar("none", 0.0, 100.0), Err(ParseError::NoNumber));
    }

    #[test]
    fn star_examples() {
        assert_eq!(parse_stars("4/5", 1, 5).unwrap().stars, 4);
        assert_eq!(parse_stars("★★★", 1, 5).unwrap().stars, 3);
        assert_eq!(parse_stars("★★★☆☆", 1, 5).unwrap().stars, 3);
        assert_eq!(parse_stars("Stars: 2 stars", 1, 5).unwrap().stars, 2);
        assert_eq!(parse_stars("no stars deserved", 1, 5), Err(ParseError::NoMatch));
        assert!(matches!(parse_stars("0", 1, 5), Err(ParseError::Range { .. })));
        assert_eq!(parse_stars("0", 0, 5).unwrap().stars, 0);
        assert!(matches!(parse_stars("3.5", 1, 5), Err(ParseError::Range { .. })));
    }

    #[test]
    fn ordinal_lookup() {
        let classes = gemba();
        assert_eq!(category_to_ordinal("No meaning preserved", &classes).unwrap(), 0);
        assert_eq!(category_to_ordinal("Most meaning preserved, minor issues", &classes).unwrap(), 3);
        assert_eq!(category_to_ordinal("Perfect translation", &classes).unwrap(), 4);
        assert!(matches!(
            category_to_ordinal("Great", &classes),
            Err(ParseError::UnknownClass(_))
        ));
    }

    proptest! {
        #[test]
        fn scalar_format_round_trip(v in 0i64..=100) {
            prop_assert_eq!(parse_scalar(&v.to_string(), 0.0, 100.0).unwrap().value, v as f64);
            prop_assert_eq!(parse_scalar(&format!("Score: {v}"), 0.0, 100.0).unwrap().value, v as f64);
        }

        #[test]
        fn categorical_survives_surrounding_noise(idx in 0usize..5, pre in "[ \n:\"'*(]{0,4}", post in "[ \n.\"'*)!]{0,4}") {
            let classes = gemba();
            let text = format!("{pre}{}{post}", classes[idx]);
            prop_assert_eq!(parse_categorical(&text, &classes).unwrap().class_index, idx);
        }

        #[test]
        fn parsers_are_pure(text in ".{0,40}") {
            let classes = gemba();
            prop_assert_eq!(parse_categorical(&text, &classes), parse_categorical(&text, &classes));
            prop_assert_eq!(parse_scalar(&text, 0.0, 100.0), parse_scalar(&text, 0.0, 100.0));
        }
    }
}
