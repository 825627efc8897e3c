//! Scoring answer logs against a benchmark.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::question::{QType, TemporalQuestion};
use crate::reasoner::{AnswerRecord, Strategy};

/// A percentage held as whole hundredths, so values compare and round-trip
/// exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pct(pub i64);

impl Pct {
    /// `100 * num / den` to two decimals, halves rounded away from zero.
    /// Zero when `den` is zero.
    pub fn ratio(num: u64, den: u64) -> Pct {
        if den == 0 {
            return Pct(0);
        }
        let scaled = num as u128 * 10_000;
        let den = den as u128;
        Pct(((2 * scaled + den) / (2 * den)) as i64)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Pct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

impl Serialize for Pct {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Pct {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(Pct((v * 100.0).round() as i64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeScore {
    pub total: u64,
    pub correct: u64,
    pub accuracy: Pct,
}

impl TypeScore {
    fn new(total: u64, correct: u64) -> Self {
        TypeScore { total, correct, accuracy: Pct::ratio(correct, total) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnanswerableScore {
    /// Records that chose the Unanswerable option.
    pub predicted: u64,
    /// Questions whose gold is Unanswerable.
    pub gold: u64,
    /// Records in both groups.
    pub correct: u64,
    pub precision: Pct,
    pub recall: Pct,
    pub f1: Pct,
}

impl UnanswerableScore {
    pub fn new(predicted: u64, gold: u64, correct: u64) -> Self {
        UnanswerableScore {
            predicted,
            gold,
            correct,
            precision: Pct::ratio(correct, predicted),
            recall: Pct::ratio(correct, gold),
            // 2PR / (P + R) with P = c/p and R = c/g reduces to 2c / (p + g).
            f1: Pct::ratio(2 * correct, predicted + gold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRate {
    pub attempts: u64,
    pub failures: u64,
    pub rate: Pct,
    /// No program-generating records were present.
    pub absent: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagCounts {
    pub truncated: u64,
    pub empty_retrieval: u64,
    pub retrieval_fallback: u64,
    pub exhausted_retries: u64,
    pub unparsed_answer: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategies: Vec<Strategy>,
    pub by_type: BTreeMap<QType, TypeScore>,
    pub overall: TypeScore,
    pub unanswerable: UnanswerableScore,
    pub execution_failures: FailureRate,
    pub flags: FlagCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MismatchError {
    #[error("no record for question {0}")]
    Missing(String),
    #[error("more than one record for question {0}")]
    Duplicate(String),
    #[error("record for unknown question {0}")]
    Unknown(String),
    #[error("record for question {0} predicts option {1}, which does not exist")]
    OptionOutOfRange(String, usize),
}

/// Failed generations over all generations, across program-generating
/// records.
pub fn failure_rate(records: &[AnswerRecord]) -> FailureRate {
    let tremu: Vec<&AnswerRecord> = records.iter().filter(|r| r.strategy == Strategy::Tremu).collect();
    let attempts: u64 = tremu.iter().map(|r| r.attempts.len() as u64).sum();
    let failures: u64 = tremu.iter().map(|r| r.failed_attempts() as u64).sum();
    FailureRate { attempts, failures, rate: Pct::ratio(failures, attempts), absent: tremu.is_empty() }
}

pub fn compute_metrics(
    records: &[AnswerRecord],
    questions: &[TemporalQuestion],
) -> Result<EvalReport, MismatchError> {
    let by_id: BTreeMap<&str, &TemporalQuestion> =
        questions.iter().map(|q| (q.question_id.as_str(), q)).collect();
    let mut seen = BTreeSet::new();
    let mut per_type: BTreeMap<QType, (u64, u64)> = BTreeMap::new();
    let (mut pred_u, mut gold_u, mut both_u) = (0u64, 0u64, 0u64);
    let mut flags = FlagCounts::default();
    for r in records {
        let q = by_id.get(r.question_id.as_str()).ok_or_else(|| MismatchError::Unknown(r.question_id.clone()))?;
        if !seen.insert(r.question_id.as_str()) {
            return Err(MismatchError::Duplicate(r.question_id.clone()));
        }
        if r.predicted >= q.options.len() {
            return Err(MismatchError::OptionOutOfRange(r.question_id.clone(), r.predicted));
        }
        let slot = per_type.entry(q.qtype).or_default();
        slot.0 += 1;
        if r.predicted == q.gold {
            slot.1 += 1;
        }
        let predicts_u = q.unanswerable_index() == Some(r.predicted);
        pred_u += predicts_u as u64;
        gold_u += q.gold_unanswerable as u64;
        both_u += (predicts_u && q.gold_unanswerable) as u64;
        flags.truncated += r.flags.truncated as u64;
        flags.empty_retrieval += r.flags.empty_retrieval as u64;
        flags.retrieval_fallback += r.flags.retrieval_fallback as u64;
        flags.exhausted_retries += r.flags.exhausted_retries as u64;
        flags.unparsed_answer += r.flags.unparsed_answer as u64;
    }
    if let Some(q) = questions.iter().find(|q| !seen.contains(q.question_id.as_str())) {
        return Err(MismatchError::Missing(q.question_id.clone()));
    }
    let total: u64 = per_type.values().map(|v| v.0).sum();
    let correct: u64 = per_type.values().map(|v| v.1).sum();
    let strategies: BTreeSet<Strategy> = records.iter().map(|r| r.strategy).collect();
    Ok(EvalReport {
        strategies: strategies.into_iter().collect(),
        by_type: QType::ALL
            .iter()
            .map(|t| {
                let (n, c) = per_type.get(t).copied().unwrap_or_default();
                (*t, TypeScore::new(n, c))
            })
            .collect(),
        overall: TypeScore::new(total, correct),
        unanswerable: UnanswerableScore::new(pred_u, gold_u, both_u),
        execution_failures: failure_rate(records),
        flags,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(format!("unknown report format {s:?} (text, json or csv)")),
        }
    }
}

pub const CSV_HEADER: &str = "strategy,TA,TP,TI,Overall,P,R,F1,ExecFail";

fn strategy_label(r: &EvalReport) -> String {
    if r.strategies.is_empty() {
        "-".into()
    } else {
        r.strategies.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("+")
    }
}

fn failure_cell(r: &EvalReport) -> String {
    if r.execution_failures.absent {
        "-".into()
    } else {
        r.execution_failures.rate.to_string()
    }
}

pub fn render_report(r: &EvalReport, format: ReportFormat) -> String {
    let acc = |t: QType| r.by_type.get(&t).map(|s| s.accuracy).unwrap_or_default();
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => format!(
            "{CSV_HEADER}\n{},{},{},{},{},{},{},{},{}\n",
            strategy_label(r),
            acc(QType::TA),
            acc(QType::TP),
            acc(QType::TI),
            r.overall.accuracy,
            r.unanswerable.precision,
            r.unanswerable.recall,
            r.unanswerable.f1,
            failure_cell(r),
        ),
        ReportFormat::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "strategy: {}", strategy_label(r));
            let _ = writeln!(
                s,
                "{:<10}{:>8}{:>8}{:>8}{:>9}{:>8}{:>8}{:>8}",
                "", "TA", "TP", "TI", "Overall", "P", "R", "F1"
            );
            let _ = writeln!(
                s,
                "{:<10}{:>8}{:>8}{:>8}{:>9}{:>8}{:>8}{:>8}",
                "score",
                acc(QType::TA).to_string(),
                acc(QType::TP).to_string(),
                acc(QType::TI).to_string(),
                r.overall.accuracy.to_string(),
                r.unanswerable.precision.to_string(),
                r.unanswerable.recall.to_string(),
                r.unanswerable.f1.to_string()
            );
            let n = |t: QType| r.by_type.get(&t).map_or(0, |s| s.total);
            let _ = writeln!(
                s,
                "{:<10}{:>8}{:>8}{:>8}{:>9}{:>8}{:>8}",
                "questions",
                n(QType::TA),
                n(QType::TP),
                n(QType::TI),
                r.overall.total,
                r.unanswerable.predicted,
                r.unanswerable.gold
            );
            let f = &r.execution_failures;
            if f.absent {
                let _ = writeln!(s, "execution failures: n/a");
            } else {
                let _ = writeln!(s, "execution failures: {}/{} ({}%)", f.failures, f.attempts, f.rate);
            }
            let g = &r.flags;
            let _ = writeln!(
                s,
                "flags: truncated={} empty_retrieval={} retrieval_fallback={} exhausted_retries={} unparsed_answer={}",
                g.truncated, g.empty_retrieval, g.retrieval_fallback, g.exhausted_retries, g.unparsed_answer
            );
            s
        }
    }
}
