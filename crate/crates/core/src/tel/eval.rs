use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::temporal::{
    self, add_relative, allen_relation, diff_days, diff_months, next_weekday, CalDate,
    DateInterval, Duration, TemporalError, Weekday,
};

use super::ast::{Expr, ExprKind, Pos};
use super::check::{TelType, TypedProgram};
use super::{TelError, TelErrorKind};

pub const DEFAULT_STEP_BUDGET: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum TelValue {
    Date(CalDate),
    Duration(Duration),
    Interval(DateInterval),
    Boolean(bool),
    Text(String),
}

impl TelValue {
    pub fn ty(&self) -> TelType {
        match self {
            TelValue::Date(_) => TelType::Date,
            TelValue::Duration(_) => TelType::Duration,
            TelValue::Interval(_) => TelType::Interval,
            TelValue::Boolean(_) => TelType::Boolean,
            TelValue::Text(_) => TelType::Text,
        }
    }
}

impl fmt::Display for TelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TelValue::Date(d) => write!(f, "{d}"),
            TelValue::Duration(d) => write!(f, "{d}"),
            TelValue::Interval(i) => write!(f, "{i}"),
            TelValue::Boolean(b) => write!(f, "{b}"),
            TelValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub name: String,
    pub source: String,
    pub value: TelValue,
}

/// One step per executed binding, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TelTrace(pub Vec<TraceStep>);

impl TelTrace {
    pub fn steps(&self) -> &[TraceStep] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Hex SHA-256 of the trace's canonical JSON.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("trace serializes");
        hex::encode(Sha256::digest(&json))
    }
}

impl fmt::Display for TelTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            writeln!(f, "{} := {}  =>  {}", s.name, s.source, s.value)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub value: TelValue,
    pub trace: TelTrace,
}

/// A failed run, with the bindings that completed before the failure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{error}")]
pub struct EvalFailure {
    pub error: TelError,
    pub trace: TelTrace,
}

impl From<TelError> for EvalFailure {
    fn from(error: TelError) -> Self {
        EvalFailure { error, trace: TelTrace::default() }
    }
}

/// Runtime operands; a superset of [`TelValue`] covering argument-only kinds.
#[derive(Debug, Clone)]
enum Operand {
    Value(TelValue),
    Int(i64),
    Weekday(Weekday),
}

/// Runs the bindings in order, then the answer expression. At most `budget`
/// bindings execute.
pub fn evaluate(
    program: &TypedProgram,
    env: &BTreeMap<String, TelValue>,
    budget: usize,
) -> Result<Evaluation, EvalFailure> {
    let mut scope: BTreeMap<&str, TelValue> =
        env.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    let mut trace = TelTrace::default();
    for (i, b) in program.program.bindings.iter().enumerate() {
        if i >= budget {
            let error = TelError::new(
                TelErrorKind::BudgetError,
                b.pos,
                format!("step budget of {budget} bindings exhausted"),
            );
            return Err(EvalFailure { error, trace });
        }
        let value = match eval_value(&b.expr, &scope) {
            Ok(v) => v,
            Err(error) => return Err(EvalFailure { error, trace }),
        };
        trace.0.push(TraceStep { name: b.name.clone(), source: b.source.clone(), value: value.clone() });
        scope.insert(b.name.as_str(), value);
    }
    match eval_value(&program.program.answer, &scope) {
        Ok(value) => Ok(Evaluation { value, trace }),
        Err(error) => Err(EvalFailure { error, trace }),
    }
}

fn domain(pos: Pos, e: TemporalError) -> TelError {
    TelError::new(TelErrorKind::DomainError, pos, e.to_string())
}

fn eval_value(e: &Expr, scope: &BTreeMap<&str, TelValue>) -> Result<TelValue, TelError> {
    match eval(e, scope)? {
        Operand::Value(v) => Ok(v),
        // Unreachable for type-checked programs.
        _ => Err(TelError::new(TelErrorKind::TypeError, e.pos, "expected a value")),
    }
}

fn eval(e: &Expr, scope: &BTreeMap<&str, TelValue>) -> Result<Operand, TelError> {
    use TelValue::*;
    let v = |x: TelValue| Ok(Operand::Value(x));
    match &e.kind {
        ExprKind::Int(n) => Ok(Operand::Int(*n)),
        ExprKind::Weekday(w) => Ok(Operand::Weekday(*w)),
        ExprKind::Str(s) => v(Text(s.clone())),
        ExprKind::Duration(d) => v(Duration(*d)),
        ExprKind::Var(name) => scope
            .get(name.as_str())
            .cloned()
            .map(Operand::Value)
            .ok_or_else(|| TelError::new(TelErrorKind::NameError, e.pos, format!("'{name}' is not bound"))),
        ExprKind::If { cond, then, otherwise } => match eval_value(cond, scope)? {
            Boolean(true) => eval(then, scope),
            Boolean(false) => eval(otherwise, scope),
            _ => Err(TelError::new(TelErrorKind::TypeError, cond.pos, "condition is not boolean")),
        },
        ExprKind::Call { name, args } => {
            let args = args.iter().map(|a| eval(a, scope)).collect::<Result<Vec<_>, _>>()?;
            call(name, &args, e.pos)
        }
    }
}

fn span(op: &Operand) -> Option<DateInterval> {
    match op {
        Operand::Value(TelValue::Date(d)) => Some(DateInterval::day(*d)),
        Operand::Value(TelValue::Interval(i)) => Some(*i),
        _ => None,
    }
}

fn call(name: &str, args: &[Operand], pos: Pos) -> Result<Operand, TelError> {
    use Operand::{Int, Value as V};
    use TelValue::*;
    let dom = |e| domain(pos, e);
    let overflow = || TelError::new(TelErrorKind::DomainError, pos, "duration overflow");
    let out = match (name, args) {
        ("date", [Int(y), Int(m), Int(d)]) => {
            let bad = || {
                TelError::new(TelErrorKind::DomainError, pos, format!("date({y},{m},{d}) is not a valid date"))
            };
            let y = i32::try_from(*y).map_err(|_| bad())?;
            let m = u32::try_from(*m).map_err(|_| bad())?;
            let d = u32::try_from(*d).map_err(|_| bad())?;
            Date(CalDate::new(y, m, d).map_err(dom)?)
        }
        ("add", [V(Date(d)), V(Duration(x))] | [V(Duration(x)), V(Date(d))]) => {
            Date(add_relative(*d, *x).map_err(dom)?)
        }
        ("add", [V(Duration(a)), V(Duration(b))]) => Duration(a.checked_add(b).ok_or_else(overflow)?),
        ("sub", [V(Date(d)), V(Duration(x))]) => Date(add_relative(*d, x.negated()).map_err(dom)?),
        ("sub", [V(Duration(a)), V(Duration(b))]) => {
            Duration(a.checked_add(&b.negated()).ok_or_else(overflow)?)
        }
        ("sub", [V(Date(a)), V(Date(b))]) => Duration(diff_days(*b, *a)),
        ("diff_days", [V(Date(a)), V(Date(b))]) => Duration(diff_days(*a, *b)),
        ("diff_months", [V(Date(a)), V(Date(b))]) => Duration(diff_months(*a, *b)),
        ("next_weekday", [V(Date(d)), Operand::Weekday(w)]) => {
            Date(next_weekday(*d, *w, 1).map_err(dom)?)
        }
        ("next_weekday", [V(Date(d)), Operand::Weekday(w), Int(n)]) => {
            Date(next_weekday(*d, *w, *n).map_err(dom)?)
        }
        ("week_range", [V(Date(d))]) => Interval(temporal::week_range(*d).map_err(dom)?),
        ("month_range", [V(Date(d))]) => Interval(temporal::month_range(*d).map_err(dom)?),
        ("interval", [V(Date(a)), V(Date(b))]) => Interval(DateInterval::new(*a, *b).map_err(dom)?),
        ("allen" | "before" | "after", [a, b]) if span(a).is_some() && span(b).is_some() => {
            let rel = allen_relation(&span(a).unwrap(), &span(b).unwrap());
            match name {
                "allen" => Text(rel.name().to_string()),
                "before" => Boolean(rel == temporal::AllenRelation::Before),
                _ => Boolean(rel == temporal::AllenRelation::After),
            }
        }
        ("same_day", [V(Date(a)), V(Date(b))]) => Boolean(a == b),
        ("same_day", [V(Interval(a)), V(Interval(b))]) => Boolean(a == b),
        ("min", [V(Date(a)), V(Date(b))]) => Date(*a.min(b)),
        ("max", [V(Date(a)), V(Date(b))]) => Date(*a.max(b)),
        ("min" | "max", [V(Duration(a)), V(Duration(b))]) => {
            if !a.is_days_only() || !b.is_days_only() {
                return Err(TelError::new(
                    TelErrorKind::DomainError,
                    pos,
                    format!("{name} cannot order durations with month or year parts"),
                ));
            }
            let pick = if name == "min" { a.days.min(b.days) } else { a.days.max(b.days) };
            Duration(temporal::Duration::days(pick))
        }
        _ => {
            return Err(TelError::new(
                TelErrorKind::TypeError,
                pos,
                format!("no runtime overload for {name} with {} arguments", args.len()),
            ))
        }
    };
    Ok(V(out))
}
