//! Session memorization (dated timeline or one flat summary per session) and
//! model-driven retrieval over the resulting pool.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{DialogueCorpus, DialogueSession, SanityWindow};
use crate::data::DataError;
use crate::gateway::{ChatBackend, ChatRequest, GatewayError, Message, RoleTag};
use crate::prompts;
use crate::temporal::{diff_days, month_from_name, parse_date, CalDate};

pub const DEFAULT_K: usize = 10;
/// Entries listed per retrieval prompt.
pub const RETRIEVAL_CHUNK: usize = 50;
/// Characters of raw session text kept in a fallback entry.
pub const FALLBACK_CHARS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Timeline,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    Timeline,
    Flat,
}

impl std::str::FromStr for MemoryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "timeline" => Ok(MemoryMode::Timeline),
            "flat" => Ok(MemoryMode::Flat),
            _ => Err(format!("unknown memory mode {s:?} (timeline or flat)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub entry_id: u32,
    pub session_id: u32,
    pub mention_date: CalDate,
    /// `None` when the day could not be inferred.
    pub event_date: Option<CalDate>,
    pub summary: String,
    pub kind: EntryKind,
}

impl MemoryEntry {
    /// Event date when known, else the mention date.
    pub fn anchor_date(&self) -> CalDate {
        self.event_date.unwrap_or(self.mention_date)
    }
}

impl fmt::Display for MemoryEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.event_date) {
            (EntryKind::Flat, _) => {
                write!(f, "[{}] {}: {}", self.entry_id, self.mention_date, self.summary)
            }
            (EntryKind::Timeline, Some(e)) => write!(
                f,
                "[{}] {} (mentioned {}): {}",
                self.entry_id, e, self.mention_date, self.summary
            ),
            (EntryKind::Timeline, None) => write!(
                f,
                "[{}] date unknown (mentioned {}): {}",
                self.entry_id, self.mention_date, self.summary
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryPool {
    pub conversation_id: String,
    pub entries: Vec<MemoryEntry>,
}

impl MemoryPool {
    pub fn new(conversation_id: impl Into<String>) -> Self {
        MemoryPool { conversation_id: conversation_id.into(), entries: Vec::new() }
    }

    /// Appends entries, numbering them after the current last id.
    pub fn append(&mut self, entries: Vec<MemoryEntry>) {
        let first = self.entries.last().map_or(1, |e| e.entry_id + 1);
        for (id, mut e) in (first..).zip(entries) {
            e.entry_id = id;
            self.entries.push(e);
        }
    }

    pub fn get(&self, id: u32) -> Option<&MemoryEntry> {
        self.entries.iter().find(|e| e.entry_id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Checks ids are unique and every entry agrees with its source session.
    pub fn validate(&self, corpus: &DialogueCorpus) -> Result<(), DataError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.entry_id) {
                return Err(DataError::Invalid(format!("entry id {} repeats", e.entry_id)));
            }
            let s = corpus.session(e.session_id).ok_or_else(|| {
                DataError::Invalid(format!("entry {} cites unknown session {}", e.entry_id, e.session_id))
            })?;
            if e.mention_date != s.timestamp {
                return Err(DataError::Invalid(format!(
                    "entry {} mention date {} differs from session {} timestamp {}",
                    e.entry_id, e.mention_date, s.session_id, s.timestamp
                )));
            }
            if e.kind == EntryKind::Flat && e.event_date != Some(e.mention_date) {
                return Err(DataError::Invalid(format!(
                    "flat entry {} carries a separate event date",
                    e.entry_id
                )));
            }
        }
        Ok(())
    }
}

fn fallback_entry(s: &DialogueSession) -> MemoryEntry {
    MemoryEntry {
        entry_id: 0,
        session_id: s.session_id,
        mention_date: s.timestamp,
        event_date: Some(s.timestamp),
        summary: s.excerpt(FALLBACK_CHARS),
        kind: EntryKind::Flat,
    }
}

static LIST_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:[-*•]\s+|\d+[.)]\s+)").unwrap());

/// Reads `DATE | SUMMARY` lines. Lines without a `|` are ignored; lines
/// with an unreadable date are dropped. Returns `None` when nothing usable
/// remains.
pub fn parse_timeline(
    response: &str,
    s: &DialogueSession,
    window: &SanityWindow,
) -> Option<Vec<MemoryEntry>> {
    let mut entries = Vec::new();
    for raw in response.lines() {
        let line = LIST_MARKER.replace(raw.trim(), "");
        let Some((date, summary)) = line.split_once('|') else { continue };
        let (date, summary) = (date.trim().trim_matches('*'), summary.trim());
        if summary.is_empty() {
            continue;
        }
        let event_date = if date.eq_ignore_ascii_case("unknown") {
            None
        } else {
            match parse_date(date) {
                Ok(d) if window.contains(d) => Some(d),
                Ok(d) => {
                    log::warn!("session {}: event date {d} outside sanity window, kept as unknown", s.session_id);
                    None
                }
                Err(_) => {
                    log::warn!("session {}: dropping timeline line {raw:?}", s.session_id);
                    continue;
                }
            }
        };
        entries.push(MemoryEntry {
            entry_id: 0,
            session_id: s.session_id,
            mention_date: s.timestamp,
            event_date,
            summary: summary.to_string(),
            kind: EntryKind::Timeline,
        });
    }
    (!entries.is_empty()).then_some(entries)
}

fn session_message(s: &DialogueSession) -> Message {
    Message::user(format!(
        "Session date: {} ({})\n\n{}",
        s.timestamp,
        s.timestamp.weekday().name(),
        s.render()
    ))
}

/// Dated timeline entries for one session. Malformed output gets one
/// reprompt; a second failure yields a single flat fallback entry.
pub fn memorize_timeline(
    s: &DialogueSession,
    gw: &dyn ChatBackend,
    window: &SanityWindow,
) -> Result<Vec<MemoryEntry>, GatewayError> {
    let mut messages = vec![Message::system(prompts::MEM_TIMELINE), session_message(s)];
    let first = gw.complete(&ChatRequest::new(RoleTag::Mem, messages.clone()))?;
    if let Some(entries) = parse_timeline(&first, s, window) {
        return Ok(entries);
    }
    log::warn!("session {}: malformed timeline output, reprompting", s.session_id);
    messages.push(Message::assistant(first));
    messages.push(Message::user(prompts::MEM_TIMELINE_RETRY));
    let second = gw.complete(&ChatRequest::new(RoleTag::Mem, messages))?;
    Ok(parse_timeline(&second, s, window).unwrap_or_else(|| {
        log::warn!("session {}: timeline output still malformed, storing raw excerpt", s.session_id);
        vec![fallback_entry(s)]
    }))
}

/// One summary entry for the session, dated with the session timestamp.
pub fn memorize_flat(s: &DialogueSession, gw: &dyn ChatBackend) -> Result<MemoryEntry, GatewayError> {
    let req = ChatRequest::new(RoleTag::Mem, vec![Message::system(prompts::MEM_FLAT), session_message(s)]);
    let response = gw.complete(&req)?;
    let summary = response.trim();
    let summary = summary.strip_prefix("Summary:").unwrap_or(summary).trim();
    if summary.is_empty() {
        log::warn!("session {}: empty summary, storing raw excerpt", s.session_id);
        return Ok(fallback_entry(s));
    }
    Ok(MemoryEntry { summary: summary.to_string(), kind: EntryKind::Flat, ..fallback_entry(s) })
}

pub fn memorize_session(
    s: &DialogueSession,
    gw: &dyn ChatBackend,
    mode: MemoryMode,
    window: &SanityWindow,
) -> Result<Vec<MemoryEntry>, GatewayError> {
    match mode {
        MemoryMode::Timeline => memorize_timeline(s, gw, window),
        MemoryMode::Flat => memorize_flat(s, gw).map(|e| vec![e]),
    }
}

/// Memorizes every session in order.
pub fn memorize_corpus(
    corpus: &DialogueCorpus,
    gw: &dyn ChatBackend,
    mode: MemoryMode,
) -> Result<MemoryPool, GatewayError> {
    let window = corpus.sanity_window();
    let mut pool = MemoryPool::new(&corpus.conversation_id);
    for s in &corpus.sessions {
        pool.append(memorize_session(s, gw, mode, &window)?);
    }
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Retrieval {
    pub entries: Vec<MemoryEntry>,
    /// True when no id list could be read and the date-based fallback was used.
    pub fallback: bool,
}

static BRACKET_LIST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[\s*(\d+(?:\s*,\s*\d+)*)?\s*,?\s*\]").unwrap());
static INTEGER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d+\b").unwrap());

/// Ids from the first bracketed list, else every bare integer. `None` when
/// the text holds neither.
pub fn parse_ids(text: &str) -> Option<Vec<u32>> {
    if let Some(c) = BRACKET_LIST.captures(text) {
        return Some(
            c.get(1)
                .map(|m| m.as_str().split(',').filter_map(|n| n.trim().parse().ok()).collect())
                .unwrap_or_default(),
        );
    }
    let ids: Vec<u32> = INTEGER.find_iter(text).filter_map(|m| m.as_str().parse().ok()).collect();
    (!ids.is_empty()).then_some(ids)
}

static ISO_IN_TEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b\d{4}-\d{2}-\d{2}\b|\b\d{1,2}/\d{1,2}/\d{4}\b").unwrap());
static MONTH_DAY_YEAR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b([a-z]{3,9})\.?\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4})\b").unwrap()
});
static DAY_MONTH_YEAR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(\d{1,2})(?:st|nd|rd|th)?\s+(?:of\s+)?([a-z]{3,9})\.?,?\s+(\d{4})\b").unwrap()
});

/// Calendar dates written out in `text`, in order of appearance.
pub fn dates_in_text(text: &str) -> Vec<CalDate> {
    let mut found: Vec<(usize, CalDate)> = Vec::new();
    for m in ISO_IN_TEXT.find_iter(text) {
        if let Ok(d) = parse_date(m.as_str()) {
            found.push((m.start(), d));
        }
    }
    for c in MONTH_DAY_YEAR.captures_iter(text) {
        let (Some(m), Ok(day), Ok(y)) = (month_from_name(&c[1]), c[2].parse(), c[3].parse()) else { continue };
        if let Ok(d) = CalDate::new(y, m, day) {
            found.push((c.get(0).unwrap().start(), d));
        }
    }
    for c in DAY_MONTH_YEAR.captures_iter(text) {
        let (Ok(day), Some(m), Ok(y)) = (c[1].parse(), month_from_name(&c[2]), c[3].parse()) else { continue };
        if let Ok(d) = CalDate::new(y, m, day) {
            found.push((c.get(0).unwrap().start(), d));
        }
    }
    found.sort_by_key(|(at, d)| (*at, *d));
    found.dedup_by_key(|(_, d)| *d);
    found.into_iter().map(|(_, d)| d).collect()
}

/// The `k` entries nearest any date written in the question, or the `k`
/// most recently mentioned when it names none.
pub fn fallback_selection(question: &str, pool: &MemoryPool, k: usize) -> Vec<MemoryEntry> {
    let dates = dates_in_text(question);
    let mut ranked: Vec<&MemoryEntry> = pool.entries.iter().collect();
    if dates.is_empty() {
        ranked.sort_by_key(|e| (std::cmp::Reverse(e.mention_date), e.entry_id));
    } else {
        ranked.sort_by_key(|e| {
            let gap = dates.iter().map(|d| diff_days(*d, e.anchor_date()).days.abs()).min();
            (gap, e.entry_id)
        });
    }
    ranked.into_iter().take(k).cloned().collect()
}

/// Asks the retrieval model for relevant entry ids, listing the pool in
/// chunks of [`RETRIEVAL_CHUNK`] and concatenating the selections.
pub fn retrieve(
    question: &str,
    pool: &MemoryPool,
    gw: &dyn ChatBackend,
    k: usize,
) -> Result<Retrieval, GatewayError> {
    if k == 0 {
        return Err(GatewayError::InvalidRequest("retrieval k must be at least 1".into()));
    }
    if pool.is_empty() {
        return Ok(Retrieval { entries: Vec::new(), fallback: false });
    }
    let mut chosen: Vec<u32> = Vec::new();
    let mut parsed_any = false;
    for chunk in pool.entries.chunks(RETRIEVAL_CHUNK) {
        let listing: Vec<String> = chunk.iter().map(|e| e.to_string()).collect();
        let req = ChatRequest::new(
            RoleTag::Retrieval,
            vec![
                Message::system(prompts::RETRIEVAL),
                Message::user(format!("Question: {question}\n\nMemories:\n{}", listing.join("\n"))),
            ],
        );
        let response = gw.complete(&req)?;
        if let Some(ids) = parse_ids(&response) {
            parsed_any = true;
            for id in ids {
                if chunk.iter().any(|e| e.entry_id == id) && !chosen.contains(&id) {
                    chosen.push(id);
                } else if !chosen.contains(&id) {
                    log::debug!("retrieval: ignoring id {id} not in this listing");
                }
            }
        }
    }
    if !parsed_any {
        log::warn!("retrieval: no id list in model output, using date fallback");
        return Ok(Retrieval { entries: fallback_selection(question, pool, k), fallback: true });
    }
    let entries = chosen.iter().take(k).filter_map(|id| pool.get(*id).cloned()).collect();
    Ok(Retrieval { entries, fallback: false })
}
