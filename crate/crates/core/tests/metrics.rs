//! Scoring properties over random answer logs, checked against plain
//! counting done here.

use chronoqa_core::eval::{compute_metrics, failure_rate, Pct, UnanswerableScore};
use chronoqa_core::question::{QType, TemporalQuestion};
use chronoqa_core::reasoner::{AnswerRecord, Attempt, RecordFlags, SelectionPath, Strategy};
use proptest::prelude::*;

/// (qtype, gold is unanswerable, gold index if answerable, prediction)
type Spec = (u8, bool, usize, usize);

fn question(i: usize, (t, gold_u, gold, _): Spec) -> TemporalQuestion {
    let qtype = [QType::TA, QType::TP, QType::TI][t as usize % 3];
    let n = qtype.option_count();
    let mut options: Vec<String> = (0..n - 1).map(|k| format!("option {k}")).collect();
    options.push("Unanswerable".into());
    TemporalQuestion {
        question_id: format!("q{i}"),
        conversation_id: "c".into(),
        qtype,
        text: format!("question {i}"),
        options,
        gold: if gold_u { n - 1 } else { gold % (n - 1) },
        gold_unanswerable: gold_u,
    }
}

fn record(q: &TemporalQuestion, predicted: usize, attempts: Vec<Attempt>) -> AnswerRecord {
    AnswerRecord {
        question_id: q.question_id.clone(),
        strategy: Strategy::Tremu,
        predicted: predicted % q.options.len(),
        selection_path: SelectionPath::AutoMatch,
        retrieved: Vec::new(),
        attempts,
        flags: RecordFlags::default(),
        latency_ms: 0,
    }
}

/// Percent to two decimals by float rounding, for comparison with the
/// integer implementation.
fn pct(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        (10_000.0 * num as f64 / den as f64).round() / 100.0
    }
}

fn specs() -> impl proptest::strategy::Strategy<Value = Vec<Spec>> {
    prop::collection::vec((0u8..3, any::<bool>(), 0usize..4, 0usize..5), 1..80)
}

fn attempt() -> Attempt {
    Attempt {
        program: "answer 1 day".into(),
        error: None,
        trace_digest: None,
        trace: None,
        value: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scores_match_counting(specs in specs()) {
        let qs: Vec<TemporalQuestion> = specs.iter().enumerate().map(|(i, s)| question(i, *s)).collect();
        let recs: Vec<AnswerRecord> = qs.iter().zip(&specs).map(|(q, s)| record(q, s.3, vec![])).collect();
        let r = compute_metrics(&recs, &qs).unwrap();

        let is_u = |q: &TemporalQuestion, p: usize| p == q.options.len() - 1;
        let pairs: Vec<(&TemporalQuestion, usize)> = qs.iter().zip(recs.iter().map(|r| r.predicted)).collect();
        let correct = pairs.iter().filter(|(q, p)| q.gold == *p).count() as u64;
        prop_assert_eq!(r.overall.correct, correct);
        prop_assert_eq!(r.overall.accuracy.value(), pct(correct, qs.len() as u64));

        let pu = pairs.iter().filter(|(q, p)| is_u(q, *p)).count() as u64;
        let gu = qs.iter().filter(|q| q.gold_unanswerable).count() as u64;
        let both = pairs.iter().filter(|(q, p)| is_u(q, *p) && q.gold_unanswerable).count() as u64;
        let u = &r.unanswerable;
        prop_assert_eq!((u.predicted, u.gold, u.correct), (pu, gu, both));
        prop_assert_eq!(u.precision.value(), pct(both, pu));
        prop_assert_eq!(u.recall.value(), pct(both, gu));

        // Harmonic mean of the unrounded P and R.
        let (p, rc) = (both as f64 / pu.max(1) as f64, both as f64 / gu.max(1) as f64);
        let f1 = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
        prop_assert!((u.f1.value() - 100.0 * f1).abs() <= 0.005 + 1e-9);

        for t in QType::ALL {
            let of_t: Vec<_> = pairs.iter().filter(|(q, _)| q.qtype == t).collect();
            let c = of_t.iter().filter(|(q, p)| q.gold == *p).count() as u64;
            prop_assert_eq!(r.by_type[&t].total, of_t.len() as u64);
            prop_assert_eq!(r.by_type[&t].accuracy.value(), pct(c, of_t.len() as u64));
        }
    }

    #[test]
    fn order_of_records_does_not_matter(specs in specs(), rot in 0usize..80) {
        let qs: Vec<TemporalQuestion> = specs.iter().enumerate().map(|(i, s)| question(i, *s)).collect();
        let recs: Vec<AnswerRecord> = qs.iter().zip(&specs).map(|(q, s)| record(q, s.3, vec![])).collect();
        let mut shuffled = recs.clone();
        shuffled.rotate_left(rot % recs.len());
        shuffled.reverse();
        prop_assert_eq!(compute_metrics(&recs, &qs).unwrap(), compute_metrics(&shuffled, &qs).unwrap());
    }

    #[test]
    fn f1_lies_between_precision_and_recall(p in 0u64..700, g in 0u64..700, c in 0u64..700) {
        let c = c.min(p).min(g);
        let u = UnanswerableScore::new(p, g, c);
        // Swapping predictions and gold swaps P and R but keeps F1.
        let swapped = UnanswerableScore::new(g, p, c);
        prop_assert_eq!(u.f1, swapped.f1);
        prop_assert_eq!((u.precision, u.recall), (swapped.recall, swapped.precision));
        if p > 0 && g > 0 {
            let (lo, hi) = (u.precision.min(u.recall), u.precision.max(u.recall));
            prop_assert!(u.f1.0 >= lo.0 - 1 && u.f1.0 <= hi.0 + 1, "{:?}", u);
        }
        prop_assert!(u.f1 <= Pct(10_000));
    }

    #[test]
    fn failure_rate_counts_generations(fails in prop::collection::vec(0usize..4, 1..40), ok in any::<bool>()) {
        let q = question(0, (0, false, 0, 0));
        let recs: Vec<AnswerRecord> = fails
            .iter()
            .map(|&f| {
                let mut attempts: Vec<Attempt> = (0..f).map(|_| failed_attempt()).collect();
                if ok || f == 0 {
                    attempts.push(attempt());
                }
                record(&q, 0, attempts)
            })
            .collect();
        let total: u64 = recs.iter().map(|r| r.attempts.len() as u64).sum();
        let failed: u64 = fails.iter().map(|&f| f as u64).sum();
        let fr = failure_rate(&recs);
        prop_assert_eq!((fr.attempts, fr.failures), (total, failed));
        prop_assert_eq!(fr.rate.value(), pct(failed, total));
        prop_assert!(!fr.absent);
    }
}

fn failed_attempt() -> Attempt {
    let err = chronoqa_core::tel::run("answer x", &Default::default(), 8).unwrap_err().error;
    Attempt { error: Some(err), ..attempt() }
}

#[test]
fn non_program_strategies_have_no_failure_rate() {
    let q = question(0, (0, false, 0, 0));
    let mut r = record(&q, 0, vec![]);
    r.strategy = Strategy::Cot;
    let fr = failure_rate(&[r]);
    assert!(fr.absent);
    assert_eq!((fr.attempts, fr.failures), (0, 0));
}
