//! Mapping an evaluated value onto one of a question's answer options.
//!
//! Normalisation is deliberately narrow. Anything not recognised becomes
//! [`NormalizedOption::Other`] and only ever matches by exact text, so an
//! unusual option falls through to model-based selection rather than being
//! guessed at.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::temporal::{self, parse_date, CalDate, DateInterval};

use super::eval::TelValue;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizedOption {
    Date(CalDate),
    Days(i64),
    /// Calendar months (years count as 12).
    Months(i64),
    Interval(DateInterval),
    Unanswerable,
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionMatch {
    Index(usize),
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("no options to match against")]
    NoOptions,
    #[error("options {0:?} all normalize to the answer value")]
    Ambiguous(Vec<usize>),
}

static MONTH_FIRST: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:[a-z]+,\s*)?([a-z]+)\.?\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4})$").unwrap()
});
static DAY_FIRST: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:[a-z]+,\s*)?(\d{1,2})(?:st|nd|rd|th)?\s+(?:of\s+)?([a-z]+)\.?,?\s+(\d{4})$").unwrap()
});
static MONTH_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([a-z]+)\.?,?\s+(\d{4})$").unwrap());
static WEEK_OF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:the\s+)?week\s+of\s+(.+)$").unwrap());
static RANGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:from\s+|between\s+)?(.+?)\s+(?:-|–|to|until|and)\s+(.+)$").unwrap()
});
static SPAN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^([a-z]+|\d+)\s+(day|week|month|year)s?$").unwrap()
});
static LETTER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:option\s+)?\(?([a-z])\)?[.:]?$").unwrap()
});

fn month_number(name: &str) -> Option<u32> {
    temporal::month_from_name(name)
}

fn small_number(word: &str) -> Option<i64> {
    if let Ok(n) = word.parse() {
        return Some(n);
    }
    const WORDS: [&str; 13] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve",
    ];
    match word {
        "a" | "an" => Some(1),
        w => WORDS.iter().position(|x| *x == w).map(|i| i as i64),
    }
}

fn clean(text: &str) -> String {
    let t = text.trim().trim_end_matches('.').trim();
    t.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn date_text(t: &str) -> Option<CalDate> {
    let t = t.trim().trim_start_matches("on ").trim();
    if let Ok(d) = parse_date(t) {
        return Some(d);
    }
    if let Some(c) = MONTH_FIRST.captures(t) {
        return CalDate::new(c[3].parse().ok()?, month_number(&c[1])?, c[2].parse().ok()?).ok();
    }
    if let Some(c) = DAY_FIRST.captures(t) {
        return CalDate::new(c[3].parse().ok()?, month_number(&c[2])?, c[1].parse().ok()?).ok();
    }
    None
}

/// Reads an option's text as a date, a span of days or months, an interval,
/// or the explicit "Unanswerable" choice.
pub fn normalize_option(text: &str) -> NormalizedOption {
    let t = clean(text);
    if t == "unanswerable" {
        return NormalizedOption::Unanswerable;
    }
    if let Some(d) = date_text(&t) {
        return NormalizedOption::Date(d);
    }
    if let Some(c) = SPAN.captures(&t) {
        if let Some(n) = small_number(&c[1]) {
            return match &c[2] {
                "day" => NormalizedOption::Days(n),
                "week" => NormalizedOption::Days(n * 7),
                "month" => NormalizedOption::Months(n),
                _ => NormalizedOption::Months(n * 12),
            };
        }
    }
    if let Some(c) = WEEK_OF.captures(&t) {
        if let Some(w) = date_text(&c[1]).and_then(|d| temporal::week_range(d).ok()) {
            return NormalizedOption::Interval(w);
        }
    }
    if let Some(c) = MONTH_YEAR.captures(&t) {
        if let Some(m) = month_number(&c[1]) {
            if let Some(r) = c[2]
                .parse()
                .ok()
                .and_then(|y| CalDate::new(y, m, 1).ok())
                .and_then(|d| temporal::month_range(d).ok())
            {
                return NormalizedOption::Interval(r);
            }
        }
    }
    if let Some(c) = RANGE.captures(&t) {
        if let (Some(a), Some(b)) = (date_text(&c[1]), date_text(&c[2])) {
            if let Ok(i) = DateInterval::new(a, b) {
                return NormalizedOption::Interval(i);
            }
        }
    }
    NormalizedOption::Other(t)
}

fn value_matches(v: &TelValue, opt: &NormalizedOption) -> bool {
    match (v, opt) {
        (TelValue::Date(d), NormalizedOption::Date(o)) => d == o,
        (TelValue::Duration(d), NormalizedOption::Days(n)) => d.is_days_only() && d.days == *n,
        (TelValue::Duration(d), NormalizedOption::Months(n)) => {
            d.days == 0 && !d.is_days_only() && d.calendar_months() == *n
        }
        (TelValue::Interval(i), NormalizedOption::Interval(o)) => i == o,
        _ => false,
    }
}

/// Finds the option denoted by `v`.
///
/// Text values may name an option letter (`"C"`, `"(C)"`), the word
/// "Unanswerable", or repeat an option's text. Everything else compares
/// normalised option values. Booleans never match.
pub fn match_option(v: &TelValue, options: &[String]) -> Result<OptionMatch, MatchError> {
    if options.is_empty() {
        return Err(MatchError::NoOptions);
    }
    let normalized: Vec<NormalizedOption> = options.iter().map(|o| normalize_option(o)).collect();

    let hits: Vec<usize> = match v {
        TelValue::Boolean(_) => Vec::new(),
        TelValue::Text(s) => {
            let t = clean(s);
            if let Some(c) = LETTER.captures(&t) {
                let idx = (c[1].as_bytes()[0] - b'a') as usize;
                return Ok(if idx < options.len() { OptionMatch::Index(idx) } else { OptionMatch::NoMatch });
            }
            let as_option = normalize_option(s);
            normalized
                .iter()
                .enumerate()
                .filter(|(i, o)| match (&as_option, o) {
                    (NormalizedOption::Other(_), _) => clean(&options[*i]) == t,
                    (a, b) => a == *b,
                })
                .map(|(i, _)| i)
                .collect()
        }
        _ => normalized
            .iter()
            .enumerate()
            .filter(|(_, o)| value_matches(v, o))
            .map(|(i, _)| i)
            .collect(),
    };
    match hits.as_slice() {
        [] => Ok(OptionMatch::NoMatch),
        [one] => Ok(OptionMatch::Index(*one)),
        many => Err(MatchError::Ambiguous(many.to_vec())),
    }
}
