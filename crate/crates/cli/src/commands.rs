use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use chronoqa_core::bench::{self, Targets};
use chronoqa_core::corpus::DialogueCorpus;
use chronoqa_core::data::{read_json, read_jsonl, to_jsonl, write_atomic, write_json};
use chronoqa_core::eval::{compute_metrics, render_report, ReportFormat};
use chronoqa_core::memory::{memorize_session, MemoryMode, MemoryPool};
use chronoqa_core::question::{validate_benchmark, TemporalQuestion};
use chronoqa_core::reasoner::{AnswerRecord, Reasoner, ReasonerConfig, Strategy};
use chronoqa_core::tel::{self, TelValue};
use chronoqa_core::temporal::parse_date;

use crate::config::{self, FileConfig};
use crate::error::CliError;
use crate::{backend, EvalArgs, GatewayArgs};

/// 112 of 600 questions in the reference benchmark are unanswerable.
pub const DEFAULT_UNANSWERABLE_FRACTION: f64 = 112.0 / 600.0;

pub struct Context {
    pub file: FileConfig,
    pub gateway: GatewayArgs,
    pub jobs: usize,
    pub deterministic: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    Many(Vec<T>),
    One(T),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::Many(v) => v,
            OneOrMany::One(t) => vec![t],
        }
    }
}

fn load_many<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    Ok(read_json::<OneOrMany<T>>(path)?.into_vec())
}

fn load_corpora(path: &Path) -> Result<BTreeMap<String, DialogueCorpus>, CliError> {
    let mut out = BTreeMap::new();
    for c in load_many::<DialogueCorpus>(path)? {
        c.validate()?;
        if out.contains_key(&c.conversation_id) {
            return Err(CliError::Data(format!("{}: conversation {} appears twice", path.display(), c.conversation_id)));
        }
        out.insert(c.conversation_id.clone(), c);
    }
    Ok(out)
}

fn load_pools(path: &Path) -> Result<BTreeMap<String, MemoryPool>, CliError> {
    let mut out = BTreeMap::new();
    for p in load_many::<MemoryPool>(path)? {
        if out.contains_key(&p.conversation_id) {
            return Err(CliError::Data(format!("{}: memory for {} appears twice", path.display(), p.conversation_id)));
        }
        out.insert(p.conversation_id.clone(), p);
    }
    Ok(out)
}

fn load_benchmark(path: &Path) -> Result<Vec<TemporalQuestion>, CliError> {
    let questions: Vec<TemporalQuestion> = read_json(path)?;
    validate_benchmark(&questions)?;
    Ok(questions)
}

fn output_path(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| file.clone()).ok_or_else(|| CliError::Config(format!("--{name} is required")))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    Ok(write_atomic(path, text.as_bytes())?)
}

pub fn memorize(
    ctx: &Context,
    corpus: Option<PathBuf>,
    mode: Option<MemoryMode>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let corpus_path = config::existing(corpus, &ctx.file.corpus, "corpus")?;
    let out = output_path(out, &ctx.file.output, "out")?;
    let mode = mode.or(ctx.file.mode).unwrap_or(MemoryMode::Timeline);
    let gw = backend::build(&ctx.gateway, &ctx.file)?;
    let single = !matches!(read_json::<OneOrMany<serde_json::Value>>(&corpus_path)?, OneOrMany::Many(_));
    let corpora = load_corpora(&corpus_path)?;
    let mut pools = Vec::new();
    for c in corpora.values() {
        let window = c.sanity_window();
        let per_session: Vec<_> = c
            .sessions
            .par_iter()
            .map(|s| memorize_session(s, gw.as_ref(), mode, &window))
            .collect::<Result<_, _>>()?;
        let mut pool = MemoryPool::new(&c.conversation_id);
        for entries in per_session {
            pool.append(entries);
        }
        log::info!("{}: {} entries", c.conversation_id, pool.len());
        pools.push(pool);
    }
    if single {
        write_json(&out, &pools[0])?;
    } else {
        write_json(&out, &pools)?;
    }
    Ok(())
}

pub fn eval(ctx: &Context, a: EvalArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let strategy = a
        .strategy
        .or(f.strategy)
        .ok_or_else(|| CliError::Config("--strategy is required".into()))?;
    let bench_path = config::existing(a.benchmark, &f.benchmark, "benchmark")?;
    let corpus_path = config::optional_existing(a.corpus, &f.corpus, "corpus")?;
    let memory_path = config::optional_existing(a.memory, &f.memory, "memory")?;
    let out = output_path(a.out, &f.output, "out")?;
    let defaults = ReasonerConfig::default();
    let cfg = ReasonerConfig {
        k: a.k.or(f.k).unwrap_or(defaults.k),
        retries: a.retries.or(f.retries).unwrap_or(defaults.retries),
        context_tokens: a.context_tokens.or(f.context_tokens).unwrap_or(defaults.context_tokens),
        step_budget: defaults.step_budget,
    };
    if cfg.k == 0 {
        return Err(CliError::Config("--k must be at least 1".into()));
    }
    let needs_corpus = matches!(strategy, Strategy::Sp | Strategy::Cot | Strategy::Tremu);
    if needs_corpus && corpus_path.is_none() {
        return Err(CliError::Config(format!("strategy {} needs --corpus", strategy.as_str())));
    }
    if strategy.memory_mode().is_some() && memory_path.is_none() {
        return Err(CliError::Config(format!("strategy {} needs --memory", strategy.as_str())));
    }
    let gw = backend::build(&ctx.gateway, f)?;

    let questions = load_benchmark(&bench_path)?;
    let corpora = match &corpus_path {
        Some(p) => load_corpora(p)?,
        None => BTreeMap::new(),
    };
    let pools = match &memory_path {
        Some(p) => load_pools(p)?,
        None => BTreeMap::new(),
    };
    for (id, pool) in &pools {
        if let Some(c) = corpora.get(id) {
            pool.validate(c)?;
        }
    }
    for q in &questions {
        if corpus_path.is_some() && !corpora.contains_key(&q.conversation_id) {
            return Err(CliError::Data(format!("no corpus for conversation {}", q.conversation_id)));
        }
        if memory_path.is_some() && !pools.contains_key(&q.conversation_id) {
            return Err(CliError::Data(format!("no memory for conversation {}", q.conversation_id)));
        }
    }

    let started = Instant::now();
    let reasoner = Reasoner::new(gw.as_ref(), cfg);
    let mut records: Vec<AnswerRecord> = questions
        .par_iter()
        .map(|q| {
            let corpus = needs_corpus.then(|| &corpora[&q.conversation_id]);
            let pool = strategy.memory_mode().map(|_| &pools[&q.conversation_id]);
            reasoner.answer(strategy, q, corpus, pool)
        })
        .collect::<Result<_, _>>()?;
    if ctx.deterministic {
        for r in &mut records {
            r.latency_ms = 0;
        }
    }
    let report = compute_metrics(&records, &questions)?;
    let rendered = render_report(&report, a.format);

    ensure_dir(&out)?;
    write_text(&out.join("answers.jsonl"), &to_jsonl(&records))?;
    write_text(&out.join(report_name(a.format)), &rendered)?;
    let mut manifest = json!({
        "strategy": strategy.as_str(),
        "backend": gw.name(),
        "questions": questions.len(),
        "k": cfg.k,
        "retries": cfg.retries,
        "context_tokens": cfg.context_tokens,
        "jobs": ctx.jobs,
    });
    if !ctx.deterministic {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        manifest["finished_at_unix"] = json!(now);
        manifest["elapsed_ms"] = json!(started.elapsed().as_millis() as u64);
    }
    write_json(&out.join("run.json"), &manifest)?;
    print!("{rendered}");
    Ok(())
}

fn report_name(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Text => "report.txt",
        ReportFormat::Json => "report.json",
        ReportFormat::Csv => "report.csv",
    }
}

pub fn report(ctx: &Context, answers: PathBuf, benchmark: Option<PathBuf>, format: ReportFormat) -> Result<(), CliError> {
    let answers = config::existing(Some(answers), &None, "answers")?;
    let bench_path = config::existing(benchmark, &ctx.file.benchmark, "benchmark")?;
    let records: Vec<AnswerRecord> = read_jsonl(&answers)?;
    let questions = load_benchmark(&bench_path)?;
    let report = compute_metrics(&records, &questions)?;
    print!("{}", render_report(&report, format));
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EnvValue {
    Date(String),
    Tagged(TelValue),
}

fn parse_env(path: &Path) -> Result<BTreeMap<String, TelValue>, CliError> {
    let raw: BTreeMap<String, EnvValue> = read_json(path)?;
    raw.into_iter()
        .map(|(k, v)| {
            let value = match v {
                EnvValue::Tagged(t) => t,
                EnvValue::Date(s) => TelValue::Date(
                    parse_date(&s).map_err(|e| CliError::Data(format!("{}: {k}: {e}", path.display())))?,
                ),
            };
            Ok((k, value))
        })
        .collect()
}

pub fn exec_tel(program: PathBuf, env: Option<PathBuf>, budget: usize) -> Result<(), CliError> {
    let program = config::existing(Some(program), &None, "program")?;
    let env_path = config::optional_existing(env, &None, "env")?;
    let source = std::fs::read_to_string(&program).map_err(|e| CliError::Data(format!("{}: {e}", program.display())))?;
    let env = match env_path {
        Some(p) => parse_env(&p)?,
        None => BTreeMap::new(),
    };
    match tel::run(&source, &env, budget) {
        Ok(ev) => {
            print!("{}", ev.trace);
            println!("answer => {}", ev.value);
            Ok(())
        }
        Err(failure) => {
            print!("{}", failure.trace);
            Err(CliError::Tel(failure))
        }
    }
}

pub fn draft(
    ctx: &Context,
    corpus: Option<PathBuf>,
    out: Option<PathBuf>,
    targets: Targets,
    fraction: f64,
) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CliError::Config("--unanswerable-fraction must lie in [0, 1]".into()));
    }
    let corpus_path = config::existing(corpus, &ctx.file.corpus, "corpus")?;
    let out = output_path(out, &ctx.file.output, "out")?;
    let gw = backend::build(&ctx.gateway, &ctx.file)?;
    let corpora = load_corpora(&corpus_path)?;
    ensure_dir(&out)?;
    let mut drafts = Vec::new();
    for c in corpora.values() {
        let window = c.sanity_window();
        let per_session: Vec<Vec<_>> = c
            .sessions
            .par_iter()
            .map(|s| bench::extract_events(s, gw.as_ref(), &window).map(|x| x.events))
            .collect::<Result<_, _>>()?;
        let events = bench::number_events(per_session);
        let groups = bench::link_events(&events, gw.as_ref())?;
        let qas = bench::create_qas(c, &events, &groups, gw.as_ref(), targets, fraction)?;
        write_json(&out.join(format!("{}.events.json", c.conversation_id)), &events)?;
        write_json(&out.join(format!("{}.groups.json", c.conversation_id)), &groups)?;
        log::info!("{}: {} events, {} groups, {} drafts", c.conversation_id, events.len(), groups.len(), qas.len());
        drafts.extend(qas);
    }
    write_json(&out.join("drafts.json"), &drafts)?;
    write_text(&out.join("review.jsonl"), &bench::export_review(&drafts))?;
    println!("{} drafts written to {}", drafts.len(), out.join("review.jsonl").display());
    Ok(())
}

pub fn import(review: PathBuf, out: PathBuf) -> Result<(), CliError> {
    let review = config::existing(Some(review), &None, "review")?;
    let text = std::fs::read_to_string(&review).map_err(|e| CliError::Data(format!("{}: {e}", review.display())))?;
    let outcome = bench::import_review(&text)?;
    validate_benchmark(&outcome.benchmark)?;
    write_json(&out, &outcome.benchmark)?;
    println!(
        "{} questions kept, {} rejected, {} still pending",
        outcome.benchmark.len(),
        outcome.rejected.len(),
        outcome.pending.len()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_accepts_plain_and_tagged_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("env.json");
        std::fs::write(
            &p,
            r#"{"a": "2020-03-16", "b": "03/09/2020", "c": {"type": "boolean", "value": true}}"#,
        )
        .unwrap();
        let env = parse_env(&p).unwrap();
        assert_eq!(env["a"].to_string(), "2020-03-16");
        assert_eq!(env["b"].to_string(), "2020-03-09");
        assert_eq!(env["c"], TelValue::Boolean(true));
        std::fs::write(&p, r#"{"a": "not a date"}"#).unwrap();
        assert_eq!(parse_env(&p).err().unwrap().exit_code(), 3);
    }

    #[test]
    fn unanswerable_default_matches_reference_share() {
        assert!((DEFAULT_UNANSWERABLE_FRACTION - 0.1867).abs() < 1e-4);
    }
}
