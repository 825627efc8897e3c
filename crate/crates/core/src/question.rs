use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::DataError;
use crate::tel::{normalize_option, NormalizedOption};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QType {
    /// Date of a single event.
    TA,
    /// Which of two events came first.
    TP,
    /// Time elapsed between two events.
    TI,
}

impl QType {
    pub const ALL: [QType; 3] = [QType::TA, QType::TP, QType::TI];

    pub fn option_count(self) -> usize {
        match self {
            QType::TP => 3,
            QType::TA | QType::TI => 5,
        }
    }
}

impl fmt::Display for QType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QType::TA => "TA",
            QType::TP => "TP",
            QType::TI => "TI",
        })
    }
}

impl FromStr for QType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TA" => Ok(QType::TA),
            "TP" => Ok(QType::TP),
            "TI" => Ok(QType::TI),
            _ => Err(format!("unknown question type {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalQuestion {
    pub question_id: String,
    pub conversation_id: String,
    pub qtype: QType,
    pub text: String,
    pub options: Vec<String>,
    /// Index into `options`.
    pub gold: usize,
    pub gold_unanswerable: bool,
}

pub fn is_unanswerable_option(text: &str) -> bool {
    normalize_option(text) == NormalizedOption::Unanswerable
}

impl TemporalQuestion {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::Invalid(format!("question {}: {m}", self.question_id)));
        if self.options.len() != self.qtype.option_count() {
            return bad(format!(
                "{} questions take {} options, found {}",
                self.qtype,
                self.qtype.option_count(),
                self.options.len()
            ));
        }
        if self.gold >= self.options.len() {
            return bad(format!("gold index {} is out of range", self.gold));
        }
        if self.gold_unanswerable != is_unanswerable_option(&self.options[self.gold]) {
            return bad("gold_unanswerable disagrees with the gold option text".into());
        }
        Ok(())
    }

    /// Index of the explicit "Unanswerable" option, if any.
    pub fn unanswerable_index(&self) -> Option<usize> {
        self.options.iter().position(|o| is_unanswerable_option(o))
    }
}

/// Checks every question and that ids are unique.
pub fn validate_benchmark(questions: &[TemporalQuestion]) -> Result<(), DataError> {
    let mut ids = std::collections::BTreeSet::new();
    for q in questions {
        q.validate()?;
        if !ids.insert(q.question_id.as_str()) {
            return Err(DataError::Invalid(format!("question id {} repeats", q.question_id)));
        }
    }
    Ok(())
}
