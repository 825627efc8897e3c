//! Multi-session dialogues, plus an importer for the LoCoMo release layout.

use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::DataError;
use crate::temporal::{add_relative, month_from_name, CalDate, Duration};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSession {
    pub session_id: u32,
    pub timestamp: CalDate,
    pub turns: Vec<Turn>,
}

impl DialogueSession {
    /// Header line with the session date, then one `Speaker: text` line per turn.
    pub fn render(&self) -> String {
        let mut out = format!(
            "Session {} ({}, {})\n",
            self.session_id,
            self.timestamp,
            self.timestamp.weekday().name()
        );
        for t in &self.turns {
            let _ = writeln!(out, "{}: {}", t.speaker, t.text);
        }
        out
    }

    /// Plain transcript without the header, cut to at most `max_chars`.
    pub fn excerpt(&self, max_chars: usize) -> String {
        let text: String = self
            .turns
            .iter()
            .map(|t| format!("{}: {}", t.speaker, t.text))
            .collect::<Vec<_>>()
            .join(" ");
        match text.char_indices().nth(max_chars) {
            Some((i, _)) => format!("{}...", &text[..i]),
            None => text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueCorpus {
    pub conversation_id: String,
    #[serde(default)]
    pub speakers: Vec<String>,
    pub sessions: Vec<DialogueSession>,
}

/// Inclusive date range that inferred event dates must fall in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SanityWindow {
    pub start: CalDate,
    pub end: CalDate,
}

impl SanityWindow {
    pub fn contains(&self, d: CalDate) -> bool {
        self.start <= d && d <= self.end
    }
}

impl DialogueCorpus {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.sessions.is_empty() {
            return Err(DataError::Invalid(format!("{} has no sessions", self.conversation_id)));
        }
        for s in &self.sessions {
            if s.turns.is_empty() {
                return Err(DataError::Invalid(format!(
                    "{} session {} has no turns",
                    self.conversation_id, s.session_id
                )));
            }
        }
        for w in self.sessions.windows(2) {
            if w[1].timestamp <= w[0].timestamp {
                return Err(DataError::Invalid(format!(
                    "{}: session {} ({}) does not come after session {} ({})",
                    self.conversation_id, w[1].session_id, w[1].timestamp, w[0].session_id, w[0].timestamp
                )));
            }
        }
        let mut ids: Vec<u32> = self.sessions.iter().map(|s| s.session_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.sessions.len() {
            return Err(DataError::Invalid(format!("{} repeats a session id", self.conversation_id)));
        }
        Ok(())
    }

    pub fn session(&self, id: u32) -> Option<&DialogueSession> {
        self.sessions.iter().find(|s| s.session_id == id)
    }

    /// First session minus ten years to last session plus ten years.
    pub fn sanity_window(&self) -> SanityWindow {
        let first = self.sessions.first().map(|s| s.timestamp);
        let last = self.sessions.last().map(|s| s.timestamp);
        let shift = |d: Option<CalDate>, years: i32, fallback: CalDate| {
            d.and_then(|d| add_relative(d, Duration::years(years)).ok()).unwrap_or(fallback)
        };
        SanityWindow {
            start: shift(first, -10, CalDate::new(1, 1, 1).unwrap()),
            end: shift(last, 10, CalDate::new(9999, 12, 31).unwrap()),
        }
    }
}

static LOCOMO_STAMP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(\d{1,2})\s+([a-z]+),?\s+(\d{4})\s*$").unwrap());

/// Date of a LoCoMo stamp such as `1:56 pm on 8 May, 2023`.
pub fn parse_locomo_stamp(stamp: &str) -> Option<CalDate> {
    let c = LOCOMO_STAMP.captures(stamp.trim())?;
    CalDate::new(c[3].parse().ok()?, month_from_name(&c[2])?, c[1].parse().ok()?).ok()
}

/// Converts the upstream LoCoMo JSON (a list of samples, each holding
/// `conversation.session_N` turn lists and `session_N_date_time` stamps).
pub fn import_locomo(json: &str) -> Result<Vec<DialogueCorpus>, DataError> {
    let bad = |m: String| DataError::Invalid(format!("LoCoMo import: {m}"));
    let root: Value = serde_json::from_str(json).map_err(|e| bad(e.to_string()))?;
    let samples = match &root {
        Value::Array(a) => a.clone(),
        Value::Object(_) => vec![root.clone()],
        _ => return Err(bad("expected a list of samples".into())),
    };
    let mut out = Vec::new();
    for (i, sample) in samples.iter().enumerate() {
        let id = sample["sample_id"].as_str().map(str::to_string).unwrap_or_else(|| format!("conv-{i}"));
        let conv = sample
            .get("conversation")
            .and_then(Value::as_object)
            .ok_or_else(|| bad(format!("{id} has no conversation object")))?;
        let speakers: Vec<String> = ["speaker_a", "speaker_b"]
            .iter()
            .filter_map(|k| conv.get(*k).and_then(Value::as_str).map(str::to_string))
            .collect();
        let mut numbers: Vec<u32> = conv
            .keys()
            .filter_map(|k| k.strip_prefix("session_")?.parse().ok())
            .collect();
        numbers.sort_unstable();
        let mut sessions = Vec::new();
        for n in numbers {
            let turns: Vec<Turn> = conv[&format!("session_{n}")]
                .as_array()
                .map(|a| {
                    a.iter()
                        .filter_map(|t| {
                            Some(Turn {
                                speaker: t["speaker"].as_str()?.to_string(),
                                text: t["text"].as_str()?.to_string(),
                            })
                        })
                        .collect()
                })
                .unwrap_or_default();
            if turns.is_empty() {
                continue;
            }
            let stamp = conv
                .get(&format!("session_{n}_date_time"))
                .and_then(Value::as_str)
                .ok_or_else(|| bad(format!("{id} session {n} has no date_time")))?;
            let timestamp = parse_locomo_stamp(stamp)
                .ok_or_else(|| bad(format!("{id} session {n}: unreadable stamp {stamp:?}")))?;
            sessions.push(DialogueSession { session_id: n, timestamp, turns });
        }
        let corpus = DialogueCorpus { conversation_id: id, speakers, sessions };
        corpus.validate()?;
        out.push(corpus);
    }
    Ok(out)
}
