//! Drafting multiple-choice temporal questions from a dialogue corpus, and
//! the review file that gates them into a benchmark.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;

use serde::{Deserialize, Serialize};

use crate::corpus::{DialogueCorpus, DialogueSession, SanityWindow};
use crate::gateway::{ChatBackend, ChatRequest, GatewayError, Message, RoleTag};
use crate::prompts;
use crate::question::{is_unanswerable_option, QType, TemporalQuestion};
use crate::temporal::{parse_date, CalDate};

/// Relative expressions too vague to pin to a day.
pub const AMBIGUOUS_EXPRESSIONS: &[&str] = &[
    "the other day",
    "the other week",
    "a while ago",
    "a while back",
    "some time ago",
    "not long ago",
    "recently",
    "lately",
    "back then",
    "a few days ago",
    "a couple of days ago",
    "a few weeks ago",
    "a couple of weeks ago",
    "someday",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalEvent {
    pub event_id: u32,
    pub session_id: u32,
    pub description: String,
    pub relative_expression: Option<String>,
    pub inferred_date: Option<CalDate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventGroup {
    pub group_id: u32,
    pub members: Vec<u32>,
    pub entity: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewState {
    Pending,
    Accepted,
    Revised,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftQA {
    pub question: TemporalQuestion,
    /// Source event ids.
    pub provenance: Vec<u32>,
    pub review: ReviewState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Targets {
    pub ta: usize,
    pub tp: usize,
    pub ti: usize,
}

impl Targets {
    pub fn total(&self) -> usize {
        self.ta + self.tp + self.ti
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("insufficient material: {0}")]
    InsufficientMaterial(String),
    #[error("review file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Extraction {
    pub events: Vec<TemporalEvent>,
    /// Lines that did not fit the format.
    pub dropped: usize,
}

fn is_ambiguous(expr: &str) -> bool {
    let e = expr.to_lowercase();
    AMBIGUOUS_EXPRESSIONS.iter().any(|a| e.contains(a))
}

/// Reads `EVENT | RELATIVE_EXPR | INFERRED_DATE` lines.
pub fn parse_events(response: &str, s: &DialogueSession, window: &SanityWindow) -> Extraction {
    let mut out = Extraction::default();
    for raw in response.lines() {
        let line = raw.trim().trim_start_matches(['-', '*']).trim();
        if line.is_empty() || line.eq_ignore_ascii_case("none") {
            continue;
        }
        let parts: Vec<&str> = line.split('|').map(str::trim).collect();
        let [desc, rel, date] = parts.as_slice() else {
            out.dropped += 1;
            continue;
        };
        if desc.is_empty() {
            out.dropped += 1;
            continue;
        }
        let relative_expression = match *rel {
            "" | "-" => None,
            r if r.eq_ignore_ascii_case("none") => None,
            r => Some(r.to_string()),
        };
        let mut inferred_date = if date.eq_ignore_ascii_case("unknown") {
            None
        } else {
            match parse_date(date) {
                Ok(d) if window.contains(d) => Some(d),
                Ok(d) => {
                    log::warn!("session {}: event date {d} outside sanity window, kept as unknown", s.session_id);
                    None
                }
                Err(_) => {
                    out.dropped += 1;
                    continue;
                }
            }
        };
        if relative_expression.as_deref().is_some_and(is_ambiguous) {
            inferred_date = None;
        }
        out.events.push(TemporalEvent {
            event_id: 0,
            session_id: s.session_id,
            description: desc.to_string(),
            relative_expression,
            inferred_date,
        });
    }
    if out.dropped > 0 {
        log::warn!("session {}: dropped {} unreadable event lines", s.session_id, out.dropped);
    }
    out
}

pub fn extract_events(
    s: &DialogueSession,
    gw: &dyn ChatBackend,
    window: &SanityWindow,
) -> Result<Extraction, GatewayError> {
    let req = ChatRequest::new(
        RoleTag::Extract,
        vec![
            Message::system(prompts::EXTRACT),
            Message::user(format!("Session date: {} ({})\n\n{}", s.timestamp, s.timestamp.weekday().name(), s.render())),
        ],
    );
    Ok(parse_events(&gw.complete(&req)?, s, window))
}

/// Numbers events 1.. in the given order.
pub fn number_events(events: Vec<Vec<TemporalEvent>>) -> Vec<TemporalEvent> {
    let mut out: Vec<TemporalEvent> = events.into_iter().flatten().collect();
    for (i, e) in out.iter_mut().enumerate() {
        e.event_id = i as u32 + 1;
    }
    out
}

fn describe(e: &TemporalEvent, corpus: Option<&DialogueCorpus>) -> String {
    let mentioned = corpus
        .and_then(|c| c.session(e.session_id))
        .map(|s| format!(", mentioned {}", s.timestamp))
        .unwrap_or_default();
    let date = e.inferred_date.map_or("date unknown".to_string(), |d| d.to_string());
    let rel = e.relative_expression.as_deref().map(|r| format!(", said as \"{r}\"")).unwrap_or_default();
    format!("[{}] session {}{mentioned}: {} ({date}{rel})", e.event_id, e.session_id, e.description)
}

/// Groups events about the same entity. Groups not spanning two sessions
/// are discarded.
pub fn link_events(events: &[TemporalEvent], gw: &dyn ChatBackend) -> Result<Vec<EventGroup>, GatewayError> {
    let sessions: BTreeSet<u32> = events.iter().map(|e| e.session_id).collect();
    if sessions.len() < 2 {
        return Ok(Vec::new());
    }
    let by_id: BTreeMap<u32, &TemporalEvent> = events.iter().map(|e| (e.event_id, e)).collect();
    let listing: Vec<String> = events.iter().map(|e| describe(e, None)).collect();
    let req = ChatRequest::new(
        RoleTag::Link,
        vec![Message::system(prompts::LINK), Message::user(listing.join("\n"))],
    );
    let response = gw.complete(&req)?;
    let mut groups = Vec::new();
    for line in response.lines() {
        let parts: Vec<&str> = line.split('|').map(str::trim).collect();
        let [_, entity, ids] = parts.as_slice() else { continue };
        let mut members: Vec<u32> = Vec::new();
        for id in ids.split(|c: char| !c.is_ascii_digit()).filter_map(|t| t.parse().ok()) {
            if by_id.contains_key(&id) && !members.contains(&id) {
                members.push(id);
            }
        }
        let spans: BTreeSet<u32> = members.iter().map(|id| by_id[id].session_id).collect();
        if members.len() < 2 || spans.len() < 2 {
            log::info!("discarding group {entity:?}: needs events from two sessions");
            continue;
        }
        groups.push(EventGroup { group_id: groups.len() as u32 + 1, members, entity: entity.to_string() });
    }
    Ok(groups)
}

/// Whether draft `i` of `total` is made unanswerable, spreading `n` such
/// drafts evenly.
fn spread(i: usize, n: usize, total: usize) -> bool {
    total > 0 && (i + 1) * n / total > i * n / total
}

/// Rounds `fraction * total`, halves away from zero.
pub fn unanswerable_count(fraction: f64, total: usize) -> usize {
    (fraction.clamp(0.0, 1.0) * total as f64).round() as usize
}

/// Event pairs from one group, drawn from different sessions.
pub fn candidate_pairs(events: &[TemporalEvent], groups: &[EventGroup]) -> Vec<(u32, u32)> {
    let session: BTreeMap<u32, u32> = events.iter().map(|e| (e.event_id, e.session_id)).collect();
    let mut pairs = Vec::new();
    for g in groups {
        for (i, a) in g.members.iter().enumerate() {
            for b in &g.members[i + 1..] {
                if session.get(a) != session.get(b) && !pairs.contains(&(*a, *b)) {
                    pairs.push((*a, *b));
                }
            }
        }
    }
    pairs
}

/// Events eligible for anchoring questions: spoken relatively and resolved.
pub fn anchor_candidates(events: &[TemporalEvent]) -> Vec<u32> {
    events
        .iter()
        .filter(|e| e.relative_expression.is_some() && e.inferred_date.is_some())
        .map(|e| e.event_id)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQA {
    pub text: String,
    pub options: Vec<String>,
    pub gold: usize,
}

static OPTION_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:\(?[A-Z]\)\s*|[A-Z][.:]\s+)").unwrap());

/// Reads `QUESTION:`, `OPTION:` and `ANSWER:` lines. Appends Unanswerable
/// when the model gave one option fewer than `n` and left it out.
pub fn parse_qa(response: &str, n: usize) -> Option<ParsedQA> {
    let mut text = None;
    let mut options = Vec::new();
    let mut answer = None;
    for line in response.lines().map(str::trim) {
        let Some((tag, rest)) = line.split_once(':') else { continue };
        let rest = rest.trim().to_string();
        match tag.trim().to_ascii_uppercase().as_str() {
            "QUESTION" => text = Some(rest),
            "OPTION" => options.push(OPTION_LABEL.replace(&rest, "").trim().to_string()),
            "ANSWER" => answer = rest.trim_matches(|c: char| c == '(' || c == ')' || c == '.').chars().next(),
            _ => {}
        }
    }
    if options.len() + 1 == n && !options.iter().any(|o| is_unanswerable_option(o)) {
        options.push("Unanswerable".into());
    }
    let gold = (answer?.to_ascii_uppercase() as u8).checked_sub(b'A')? as usize;
    if options.len() != n || gold >= n || options.iter().filter(|o| is_unanswerable_option(o)).count() != 1 {
        return None;
    }
    Some(ParsedQA { text: text.filter(|t| !t.is_empty())?, options, gold })
}

struct Plan {
    qtype: QType,
    provenance: Vec<u32>,
    unanswerable: bool,
}

/// Drafts TA questions from single anchored events and TP/TI questions from
/// grouped pairs, making a spread-out share unanswerable. Malformed model
/// drafts are skipped with a warning.
pub fn create_qas(
    corpus: &DialogueCorpus,
    events: &[TemporalEvent],
    groups: &[EventGroup],
    gw: &dyn ChatBackend,
    targets: Targets,
    unanswerable_fraction: f64,
) -> Result<Vec<DraftQA>, BenchError> {
    if events.is_empty() && targets.total() > 0 {
        return Err(BenchError::InsufficientMaterial("no events were extracted".into()));
    }
    let anchors = anchor_candidates(events);
    if anchors.len() < targets.ta {
        return Err(BenchError::InsufficientMaterial(format!(
            "{} TA questions requested but only {} relative-time events resolve to a date",
            targets.ta,
            anchors.len()
        )));
    }
    let pairs = candidate_pairs(events, groups);
    for (want, name) in [(targets.tp, "TP"), (targets.ti, "TI")] {
        if pairs.len() < want {
            return Err(BenchError::InsufficientMaterial(format!(
                "{want} {name} questions requested but only {} cross-session event pairs exist",
                pairs.len()
            )));
        }
    }

    let mut plans: Vec<Plan> = Vec::new();
    plans.extend(anchors.iter().take(targets.ta).map(|id| Plan { qtype: QType::TA, provenance: vec![*id], unanswerable: false }));
    plans.extend(pairs.iter().take(targets.tp).map(|(a, b)| Plan { qtype: QType::TP, provenance: vec![*a, *b], unanswerable: false }));
    plans.extend(pairs.iter().take(targets.ti).map(|(a, b)| Plan { qtype: QType::TI, provenance: vec![*a, *b], unanswerable: false }));
    let total = plans.len();
    let n_unans = unanswerable_count(unanswerable_fraction, total);
    for (i, p) in plans.iter_mut().enumerate() {
        p.unanswerable = spread(i, n_unans, total);
    }

    let by_id: BTreeMap<u32, &TemporalEvent> = events.iter().map(|e| (e.event_id, e)).collect();
    let mut counters: BTreeMap<QType, usize> = BTreeMap::new();
    let mut drafts = Vec::new();
    for p in plans {
        let template = match p.qtype {
            QType::TA => prompts::CREATE_TA,
            QType::TP => prompts::CREATE_TP,
            QType::TI => prompts::CREATE_TI,
        };
        let system = if p.unanswerable {
            format!("{template}\n\n{}", prompts::CREATE_UNANSWERABLE)
        } else {
            template.to_string()
        };
        let listing: Vec<String> = p.provenance.iter().map(|id| describe(by_id[id], Some(corpus))).collect();
        let req = ChatRequest::new(
            RoleTag::Create,
            vec![Message::system(system), Message::user(format!("Events:\n{}", listing.join("\n")))],
        );
        let response = gw.complete(&req)?;
        let n = p.qtype.option_count();
        let Some(mut qa) = parse_qa(&response, n) else {
            log::warn!("skipping malformed {} draft for events {:?}", p.qtype, p.provenance);
            continue;
        };
        let unans_index = qa.options.iter().position(|o| is_unanswerable_option(o)).expect("checked by parse_qa");
        if p.unanswerable {
            qa.gold = unans_index;
        } else if qa.gold == unans_index {
            log::warn!("skipping {} draft for events {:?}: answerable draft gave Unanswerable as gold", p.qtype, p.provenance);
            continue;
        }
        let k = counters.entry(p.qtype).or_default();
        *k += 1;
        drafts.push(DraftQA {
            question: TemporalQuestion {
                question_id: format!("{}-{}-{:03}", corpus.conversation_id, p.qtype, k),
                conversation_id: corpus.conversation_id.clone(),
                qtype: p.qtype,
                text: qa.text,
                options: qa.options,
                gold: qa.gold,
                gold_unanswerable: p.unanswerable,
            },
            provenance: p.provenance,
            review: ReviewState::Pending,
        });
    }
    Ok(drafts)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewLine {
    pub question_id: String,
    pub decision: ReviewState,
    pub question: TemporalQuestion,
    #[serde(default)]
    pub provenance: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revised: Option<Revision>,
}

/// One JSONL line per draft, carrying its current review state.
pub fn export_review(drafts: &[DraftQA]) -> String {
    let lines: Vec<ReviewLine> = drafts
        .iter()
        .map(|d| ReviewLine {
            question_id: d.question.question_id.clone(),
            decision: d.review,
            question: d.question.clone(),
            provenance: d.provenance.clone(),
            revised: None,
        })
        .collect();
    crate::data::to_jsonl(&lines)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReviewOutcome {
    pub benchmark: Vec<TemporalQuestion>,
    pub rejected: Vec<String>,
    pub pending: Vec<String>,
}

/// Accepted and revised items form the benchmark; rejected and still
/// pending ones are reported.
pub fn import_review(text: &str) -> Result<ReviewOutcome, BenchError> {
    let mut out = ReviewOutcome::default();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let fmt = |m: String| BenchError::Format(format!("line {}: {m}", i + 1));
        let line: ReviewLine = serde_json::from_str(raw).map_err(|e| fmt(e.to_string()))?;
        if line.question_id != line.question.question_id {
            return Err(fmt(format!("question_id {} does not match the question", line.question_id)));
        }
        if !seen.insert(line.question_id.clone()) {
            return Err(fmt(format!("{} appears twice", line.question_id)));
        }
        let mut q = line.question;
        match line.decision {
            ReviewState::Rejected => {
                log::info!("review: {} rejected", q.question_id);
                out.rejected.push(q.question_id);
                continue;
            }
            ReviewState::Pending => {
                out.pending.push(q.question_id);
                continue;
            }
            ReviewState::Revised => {
                let r = line.revised.ok_or_else(|| fmt("decision is revised but no revision given".into()))?;
                if let Some(t) = r.text {
                    q.text = t;
                }
                if let Some(o) = r.options {
                    q.options = o;
                }
                if let Some(g) = r.gold {
                    q.gold = g;
                }
                if q.gold >= q.options.len() {
                    return Err(fmt(format!("revised gold {} is outside {} options", q.gold, q.options.len())));
                }
                q.gold_unanswerable = is_unanswerable_option(&q.options[q.gold]);
            }
            ReviewState::Accepted => {}
        }
        q.validate().map_err(|e| fmt(e.to_string()))?;
        out.benchmark.push(q);
    }
    Ok(out)
}
