//! Question answering strategies, from whole-dialogue prompting to the
//! generate, execute, retry and select loop over timeline memory.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;
use std::time::Instant;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::DialogueCorpus;
use crate::gateway::{ChatBackend, ChatRequest, GatewayError, Message, RoleTag};
use crate::memory::{retrieve, MemoryEntry, MemoryPool, DEFAULT_K};
use crate::prompts::{self, options_block};
use crate::question::TemporalQuestion;
use crate::tel::{self, match_option, MatchError, OptionMatch, TelError, TelTrace, TelValue};

pub const DEFAULT_RETRIES: usize = 3;
/// Prompt budget in tokens, estimated at four characters per token.
pub const DEFAULT_CONTEXT_TOKENS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "sp")]
    Sp,
    #[serde(rename = "cot")]
    Cot,
    #[serde(rename = "memochat")]
    MemoChat,
    #[serde(rename = "memochat-cot")]
    MemoChatCot,
    #[serde(rename = "timeline-cot")]
    TimelineCot,
    #[serde(rename = "tremu")]
    Tremu,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Sp,
        Strategy::Cot,
        Strategy::MemoChat,
        Strategy::MemoChatCot,
        Strategy::TimelineCot,
        Strategy::Tremu,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Sp => "sp",
            Strategy::Cot => "cot",
            Strategy::MemoChat => "memochat",
            Strategy::MemoChatCot => "memochat-cot",
            Strategy::TimelineCot => "timeline-cot",
            Strategy::Tremu => "tremu",
        }
    }

    /// Which memory the strategy reads, if any.
    pub fn memory_mode(self) -> Option<crate::memory::MemoryMode> {
        use crate::memory::MemoryMode;
        match self {
            Strategy::Sp | Strategy::Cot => None,
            Strategy::MemoChat | Strategy::MemoChatCot => Some(MemoryMode::Flat),
            Strategy::TimelineCot | Strategy::Tremu => Some(MemoryMode::Timeline),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionPath {
    AutoMatch,
    LlmSelect,
}

/// One program generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub program: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<TelError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TelTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<TelValue>,
}

impl Attempt {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    /// Oldest sessions were dropped to fit the prompt budget.
    pub truncated: bool,
    pub empty_retrieval: bool,
    pub retrieval_fallback: bool,
    pub exhausted_retries: bool,
    /// No option letter could be read; the last option was taken.
    pub unparsed_answer: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question_id: String,
    pub strategy: Strategy,
    pub predicted: usize,
    pub selection_path: SelectionPath,
    #[serde(default)]
    pub retrieved: Vec<u32>,
    #[serde(default)]
    pub attempts: Vec<Attempt>,
    #[serde(default)]
    pub flags: RecordFlags,
    #[serde(default)]
    pub latency_ms: u64,
}

impl AnswerRecord {
    pub fn failed_attempts(&self) -> usize {
        self.attempts.iter().filter(|a| a.failed()).count()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReasonError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("strategy {strategy} needs {what}")]
    MissingInput { strategy: Strategy, what: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReasonerConfig {
    pub k: usize,
    pub retries: usize,
    pub context_tokens: usize,
    pub step_budget: usize,
}

impl Default for ReasonerConfig {
    fn default() -> Self {
        ReasonerConfig {
            k: DEFAULT_K,
            retries: DEFAULT_RETRIES,
            context_tokens: DEFAULT_CONTEXT_TOKENS,
            step_budget: tel::DEFAULT_STEP_BUDGET,
        }
    }
}

static STRONG_LETTER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?:(?i:answer)(?:\s+(?i:is))?\s*[:\-]?\s*(?:(?i:option)\s+)?\(?([A-Z])\)?(?:[\s.,:;!)*]|$))|(?:\(([A-Z])\))|(?:(?i:option)\s+([A-Z])\b)",
    )
    .unwrap()
});
static BARE_LETTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\**\(?([A-Z])\)?[.:]?\**$").unwrap());

fn letter_index(c: &regex::Captures<'_>, n: usize) -> Option<usize> {
    let m = c.get(1).or_else(|| c.get(2)).or_else(|| c.get(3))?;
    let i = (m.as_str().as_bytes()[0] - b'A') as usize;
    (i < n).then_some(i)
}

/// Reads an option letter: the last non-empty line first, then the whole
/// text. `None` when neither yields a letter within range.
pub fn extract_letter(text: &str, n_options: usize) -> Option<usize> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let last = *lines.last()?;
    if let Some(i) = BARE_LETTER.captures(last).and_then(|c| letter_index(&c, n_options)) {
        return Some(i);
    }
    if let Some(i) = STRONG_LETTER.captures_iter(last).filter_map(|c| letter_index(&c, n_options)).last() {
        return Some(i);
    }
    if let Some(i) = STRONG_LETTER.captures_iter(text).filter_map(|c| letter_index(&c, n_options)).last() {
        return Some(i);
    }
    lines.iter().find_map(|l| BARE_LETTER.captures(l).and_then(|c| letter_index(&c, n_options)))
}

static FENCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)```[a-zA-Z]*[ \t]*\r?\n(.*?)```").unwrap());

/// The first fenced block, or the whole response when it has none.
pub fn extract_program(response: &str) -> String {
    FENCE
        .captures(response)
        .map(|c| c[1].to_string())
        .unwrap_or_else(|| response.to_string())
        .trim()
        .to_string()
}

fn question_block(q: &TemporalQuestion) -> String {
    format!("Question: {}\nOptions:\n{}", q.text, options_block(&q.options))
}

fn memory_block(entries: &[MemoryEntry]) -> String {
    if entries.is_empty() {
        return "Memories: none found.".into();
    }
    let lines: Vec<String> = entries.iter().map(|e| e.to_string()).collect();
    format!("Memories:\n{}", lines.join("\n"))
}

/// Renders the dialogue newest-last, dropping whole sessions from the front
/// until it fits `tokens` (estimated as characters / 4).
pub fn dialogue_context(corpus: &DialogueCorpus, tokens: usize) -> (String, bool) {
    let rendered: Vec<String> = corpus.sessions.iter().map(|s| s.render()).collect();
    let budget = tokens.saturating_mul(4);
    let mut start = 0;
    let mut total: usize = rendered.iter().map(|r| r.len() + 1).sum();
    while total > budget && start + 1 < rendered.len() {
        total -= rendered[start].len() + 1;
        start += 1;
    }
    (rendered[start..].join("\n"), start > 0)
}

/// Names bound for generated programs: every session date and the event
/// date of each retrieved entry that has one.
pub fn program_env(corpus: &DialogueCorpus, entries: &[MemoryEntry]) -> BTreeMap<String, TelValue> {
    let mut env = BTreeMap::new();
    for s in &corpus.sessions {
        env.insert(format!("session_{}_date", s.session_id), TelValue::Date(s.timestamp));
    }
    for e in entries {
        if let Some(d) = e.event_date {
            env.insert(format!("entry_{}_date", e.entry_id), TelValue::Date(d));
        }
    }
    env
}

fn env_block(env: &BTreeMap<String, TelValue>) -> String {
    let mut out = String::from("Predefined names:\n");
    for (k, v) in env {
        match v {
            TelValue::Date(d) => out.push_str(&format!("  {k} = {d} ({})\n", d.weekday().name())),
            other => out.push_str(&format!("  {k} = {other}\n")),
        }
    }
    out
}

pub struct Reasoner<'a> {
    gw: &'a dyn ChatBackend,
    cfg: ReasonerConfig,
}

struct Letter {
    index: usize,
    unparsed: bool,
}

impl<'a> Reasoner<'a> {
    pub fn new(gw: &'a dyn ChatBackend, cfg: ReasonerConfig) -> Self {
        Reasoner { gw, cfg }
    }

    fn ask_letter(&self, q: &TemporalQuestion, system: &str, user: String) -> Result<Letter, GatewayError> {
        let req = ChatRequest::new(RoleTag::Select, vec![Message::system(system), Message::user(user)]);
        let response = self.gw.complete(&req)?;
        Ok(match extract_letter(&response, q.options.len()) {
            Some(index) => Letter { index, unparsed: false },
            None => {
                log::warn!("{}: no option letter in response, taking the last option", q.question_id);
                Letter { index: q.options.len() - 1, unparsed: true }
            }
        })
    }

    fn record(&self, q: &TemporalQuestion, strategy: Strategy, letter: Letter) -> AnswerRecord {
        AnswerRecord {
            question_id: q.question_id.clone(),
            strategy,
            predicted: letter.index,
            selection_path: SelectionPath::LlmSelect,
            retrieved: Vec::new(),
            attempts: Vec::new(),
            flags: RecordFlags { unparsed_answer: letter.unparsed, ..RecordFlags::default() },
            latency_ms: 0,
        }
    }

    fn whole_dialogue(
        &self,
        q: &TemporalQuestion,
        corpus: &DialogueCorpus,
        strategy: Strategy,
        system: &str,
    ) -> Result<AnswerRecord, GatewayError> {
        let (dialogue, truncated) = dialogue_context(corpus, self.cfg.context_tokens);
        let letter = self.ask_letter(q, system, format!("Dialogue:\n{dialogue}\n{}", question_block(q)))?;
        let mut r = self.record(q, strategy, letter);
        r.flags.truncated = truncated;
        Ok(r)
    }

    /// Whole dialogue, answer letter only.
    pub fn answer_sp(&self, q: &TemporalQuestion, corpus: &DialogueCorpus) -> Result<AnswerRecord, GatewayError> {
        self.whole_dialogue(q, corpus, Strategy::Sp, prompts::ANSWER_DIRECT)
    }

    /// Whole dialogue with step-by-step reasoning.
    pub fn answer_cot(&self, q: &TemporalQuestion, corpus: &DialogueCorpus) -> Result<AnswerRecord, GatewayError> {
        self.whole_dialogue(q, corpus, Strategy::Cot, prompts::ANSWER_COT)
    }

    fn over_memory(
        &self,
        q: &TemporalQuestion,
        pool: &MemoryPool,
        strategy: Strategy,
        system: &str,
    ) -> Result<AnswerRecord, GatewayError> {
        let got = retrieve(&q.text, pool, self.gw, self.cfg.k)?;
        let letter = self.ask_letter(q, system, format!("{}\n\n{}", memory_block(&got.entries), question_block(q)))?;
        let mut r = self.record(q, strategy, letter);
        r.retrieved = got.entries.iter().map(|e| e.entry_id).collect();
        r.flags.empty_retrieval = got.entries.is_empty();
        r.flags.retrieval_fallback = got.fallback;
        Ok(r)
    }

    /// Retrieval over flat per-session summaries.
    pub fn answer_memochat(
        &self,
        q: &TemporalQuestion,
        pool: &MemoryPool,
        with_cot: bool,
    ) -> Result<AnswerRecord, GatewayError> {
        if with_cot {
            self.over_memory(q, pool, Strategy::MemoChatCot, prompts::ANSWER_COT)
        } else {
            self.over_memory(q, pool, Strategy::MemoChat, prompts::ANSWER_DIRECT)
        }
    }

    /// Retrieval over the dated timeline, then step-by-step reasoning.
    pub fn answer_timeline_cot(&self, q: &TemporalQuestion, pool: &MemoryPool) -> Result<AnswerRecord, GatewayError> {
        self.over_memory(q, pool, Strategy::TimelineCot, prompts::ANSWER_COT)
    }

    /// Retrieve, generate a program, run it (regenerating on errors), then
    /// map its value onto an option, asking the model only when no option
    /// matches.
    pub fn answer_tremu(
        &self,
        q: &TemporalQuestion,
        corpus: &DialogueCorpus,
        pool: &MemoryPool,
    ) -> Result<AnswerRecord, GatewayError> {
        let got = retrieve(&q.text, pool, self.gw, self.cfg.k)?;
        let env = program_env(corpus, &got.entries);
        let mut messages = vec![
            Message::system(format!("{}\n\n{}", prompts::CODE, tel::cheat_sheet())),
            Message::user(format!(
                "{}\n\n{}\n{}",
                memory_block(&got.entries),
                env_block(&env),
                question_block(q)
            )),
        ];
        let mut attempts: Vec<Attempt> = Vec::new();
        let mut success = None;
        for i in 0..=self.cfg.retries {
            let response = self.gw.complete(&ChatRequest::new(RoleTag::Code, messages.clone()))?;
            let program = extract_program(&response);
            match tel::run(&program, &env, self.cfg.step_budget) {
                Ok(out) => {
                    attempts.push(Attempt {
                        program: program.clone(),
                        error: None,
                        trace_digest: Some(out.trace.digest()),
                        trace: Some(out.trace.clone()),
                        value: Some(out.value.clone()),
                    });
                    success = Some((program, out));
                    break;
                }
                Err(fail) => {
                    log::info!("{}: attempt {} failed: {}", q.question_id, i + 1, fail.error);
                    attempts.push(Attempt {
                        program,
                        error: Some(fail.error.clone()),
                        trace_digest: None,
                        trace: None,
                        value: None,
                    });
                    messages.push(Message::assistant(response));
                    messages.push(Message::user(format!("{}\n\n{}", prompts::CODE_RETRY, fail.error)));
                }
            }
        }

        let mut record = AnswerRecord {
            question_id: q.question_id.clone(),
            strategy: Strategy::Tremu,
            predicted: 0,
            selection_path: SelectionPath::AutoMatch,
            retrieved: got.entries.iter().map(|e| e.entry_id).collect(),
            attempts,
            flags: RecordFlags {
                empty_retrieval: got.entries.is_empty(),
                retrieval_fallback: got.fallback,
                ..RecordFlags::default()
            },
            latency_ms: 0,
        };

        let Some((program, out)) = success else {
            log::warn!("{}: retries exhausted, selecting over memory", q.question_id);
            record.flags.exhausted_retries = true;
            let letter = self.ask_letter(
                q,
                prompts::SELECT_MEMORY,
                format!("{}\n\n{}", memory_block(&got.entries), question_block(q)),
            )?;
            record.predicted = letter.index;
            record.flags.unparsed_answer = letter.unparsed;
            record.selection_path = SelectionPath::LlmSelect;
            return Ok(record);
        };

        match match_option(&out.value, &q.options) {
            Ok(OptionMatch::Index(i)) => {
                record.predicted = i;
                return Ok(record);
            }
            Ok(OptionMatch::NoMatch) => {}
            Err(MatchError::Ambiguous(ix)) => {
                log::warn!("{}: value {} matches options {ix:?}", q.question_id, out.value)
            }
            Err(MatchError::NoOptions) => {}
        }
        let letter = self.ask_letter(
            q,
            prompts::SELECT,
            format!(
                "{}\n\nProgram:\n```tel\n{program}\n```\n\nTrace:\n{}Result: {}",
                question_block(q),
                out.trace,
                out.value
            ),
        )?;
        record.predicted = letter.index;
        record.flags.unparsed_answer = letter.unparsed;
        record.selection_path = SelectionPath::LlmSelect;
        Ok(record)
    }

    /// Dispatches on `strategy`, timing the call.
    pub fn answer(
        &self,
        strategy: Strategy,
        q: &TemporalQuestion,
        corpus: Option<&DialogueCorpus>,
        pool: Option<&MemoryPool>,
    ) -> Result<AnswerRecord, ReasonError> {
        let need = |what: &str| ReasonError::MissingInput { strategy, what: what.to_string() };
        let started = Instant::now();
        let mut record = match strategy {
            Strategy::Sp => self.answer_sp(q, corpus.ok_or_else(|| need("a corpus"))?)?,
            Strategy::Cot => self.answer_cot(q, corpus.ok_or_else(|| need("a corpus"))?)?,
            Strategy::MemoChat => self.answer_memochat(q, pool.ok_or_else(|| need("a flat memory"))?, false)?,
            Strategy::MemoChatCot => self.answer_memochat(q, pool.ok_or_else(|| need("a flat memory"))?, true)?,
            Strategy::TimelineCot => self.answer_timeline_cot(q, pool.ok_or_else(|| need("a timeline memory"))?)?,
            Strategy::Tremu => self.answer_tremu(
                q,
                corpus.ok_or_else(|| need("a corpus"))?,
                pool.ok_or_else(|| need("a timeline memory"))?,
            )?,
        };
        record.latency_ms = started.elapsed().as_millis() as u64;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DialogueSession, Turn};
    use crate::gateway::{ScriptRule, ScriptedBackend};
    use crate::memory::EntryKind;
    use crate::question::QType;
    use crate::temporal::CalDate;

    fn d(y: i32, m: u32, day: u32) -> CalDate {
        CalDate::new(y, m, day).unwrap()
    }

    fn corpus() -> DialogueCorpus {
        let s = |id, ts, text: &str| DialogueSession {
            session_id: id,
            timestamp: ts,
            turns: vec![Turn { speaker: "Sharon".into(), text: text.into() }],
        };
        DialogueCorpus {
            conversation_id: "c".into(),
            speakers: vec!["Sharon".into()],
            sessions: vec![s(1, d(2020, 3, 1), "first chat"), s(2, d(2020, 3, 16), "the course started last Thursday")],
        }
    }

    fn pool() -> MemoryPool {
        let mut p = MemoryPool::new("c");
        p.append(vec![MemoryEntry {
            entry_id: 0,
            session_id: 2,
            mention_date: d(2020, 3, 16),
            event_date: Some(d(2020, 3, 12)),
            summary: "Sharon started a survival course".into(),
            kind: EntryKind::Timeline,
        }]);
        p
    }

    fn question() -> TemporalQuestion {
        TemporalQuestion {
            question_id: "q1".into(),
            conversation_id: "c".into(),
            qtype: QType::TA,
            text: "When did Sharon start the course?".into(),
            options: ["March 5, 2020", "March 9, 2020", "March 12, 2020", "March 16, 2020", "Unanswerable"]
                .map(String::from)
                .to_vec(),
            gold: 2,
            gold_unanswerable: false,
        }
    }

    #[test]
    fn letter_extraction() {
        assert_eq!(extract_letter("C", 5), Some(2));
        assert_eq!(extract_letter("The answer is (B).", 5), Some(1));
        assert_eq!(extract_letter("Step 1...\nStep 2...\nAnswer: E", 5), Some(4));
        assert_eq!(extract_letter("B\nBecause the course began then.", 5), Some(1));
        assert_eq!(extract_letter("**Answer: D**", 5), Some(3));
        assert_eq!(extract_letter("I pick option A, then reconsider.\nFinal answer: C", 5), Some(2));
        assert_eq!(extract_letter("Answer: E", 3), None);
        assert_eq!(extract_letter("A survival course is a course.", 5), None);
        assert_eq!(extract_letter("the answer is a date", 5), None);
        assert_eq!(extract_letter("", 5), None);
    }

    #[test]
    fn program_extraction() {
        assert_eq!(extract_program("Here:\n```tel\nanswer x\n```\nDone"), "answer x");
        assert_eq!(extract_program("```\nanswer y\n```"), "answer y");
        assert_eq!(extract_program("  answer z \n"), "answer z");
    }

    #[test]
    fn truncation_drops_oldest_sessions() {
        let c = corpus();
        let (all, cut) = dialogue_context(&c, 10_000);
        assert!(!cut && all.contains("first chat"));
        let (some, cut) = dialogue_context(&c, 20);
        assert!(cut && !some.contains("first chat") && some.contains("last Thursday"));
    }

    #[test]
    fn sp_falls_back_to_last_option() {
        let gw = ScriptedBackend::new(vec![ScriptRule::new(RoleTag::Select, &[], "I really cannot say.")]);
        let r = Reasoner::new(&gw, ReasonerConfig::default()).answer_sp(&question(), &corpus()).unwrap();
        assert_eq!(r.predicted, 4);
        assert!(r.flags.unparsed_answer);
        assert_eq!(r.selection_path, SelectionPath::LlmSelect);
    }

    fn tremu_gw(code: Vec<ScriptRule>) -> ScriptedBackend {
        let mut rules = vec![ScriptRule::new(RoleTag::Retrieval, &[], "[1]")];
        rules.extend(code);
        rules.push(ScriptRule::new(RoleTag::Select, &[], "Answer: D"));
        ScriptedBackend::new(rules)
    }

    #[test]
    fn tremu_auto_matches() {
        let gw = tremu_gw(vec![ScriptRule::new(
            RoleTag::Code,
            &["entry_1_date = 2020-03-12"],
            "```tel\nlet t_start_course := entry_1_date\nanswer t_start_course\n```",
        )]);
        let r = Reasoner::new(&gw, ReasonerConfig::default()).answer_tremu(&question(), &corpus(), &pool()).unwrap();
        assert_eq!((r.predicted, r.selection_path), (2, SelectionPath::AutoMatch));
        assert_eq!(r.attempts.len(), 1);
        assert_eq!(r.attempts[0].trace.as_ref().unwrap().steps()[0].name, "t_start_course");
        assert_eq!(r.retrieved, vec![1]);
    }

    #[test]
    fn tremu_retries_then_succeeds() {
        let gw = tremu_gw(vec![
            ScriptRule::new(RoleTag::Code, &["ParseError"], "let t := date(2020,3,12)\nanswer t"),
            ScriptRule::new(RoleTag::Code, &[], "let t := date(2020,3,12\nanswer t"),
        ]);
        let r = Reasoner::new(&gw, ReasonerConfig::default()).answer_tremu(&question(), &corpus(), &pool()).unwrap();
        assert_eq!(r.attempts.len(), 2);
        assert_eq!(r.failed_attempts(), 1);
        assert!(r.attempts[0].trace.is_none() && r.attempts[1].trace.is_some());
        assert_eq!(r.predicted, 2);
    }

    #[test]
    fn tremu_unmatched_value_goes_to_select() {
        let gw = tremu_gw(vec![ScriptRule::new(RoleTag::Code, &[], "answer date(2020,3,13)")]);
        let r = Reasoner::new(&gw, ReasonerConfig::default()).answer_tremu(&question(), &corpus(), &pool()).unwrap();
        assert_eq!((r.predicted, r.selection_path), (3, SelectionPath::LlmSelect));
    }

    #[test]
    fn tremu_exhausted_retries() {
        let gw = tremu_gw(vec![ScriptRule::new(RoleTag::Code, &[], "answer undefined_name")]);
        let cfg = ReasonerConfig { retries: 2, ..ReasonerConfig::default() };
        let r = Reasoner::new(&gw, cfg).answer_tremu(&question(), &corpus(), &pool()).unwrap();
        assert_eq!(r.attempts.len(), 3);
        assert_eq!(r.failed_attempts(), 3);
        assert!(r.flags.exhausted_retries);
        assert_eq!((r.predicted, r.selection_path), (3, SelectionPath::LlmSelect));
    }

    #[test]
    fn empty_retrieval_is_flagged() {
        let gw = ScriptedBackend::new(vec![
            ScriptRule::new(RoleTag::Retrieval, &[], "[]"),
            ScriptRule::new(RoleTag::Select, &["Memories: none found."], "Answer: E"),
        ]);
        let r = Reasoner::new(&gw, ReasonerConfig::default()).answer_timeline_cot(&question(), &pool()).unwrap();
        assert!(r.flags.empty_retrieval);
        assert_eq!(r.predicted, 4);
    }

    #[test]
    fn dispatch_requires_inputs() {
        let gw = ScriptedBackend::new(vec![]);
        let err = Reasoner::new(&gw, ReasonerConfig::default())
            .answer(Strategy::Tremu, &question(), Some(&corpus()), None)
            .unwrap_err();
        assert!(matches!(err, ReasonError::MissingInput { .. }));
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
    }
}
