use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::{Expr, ExprKind, Program};
use super::{TelError, TelErrorKind};

/// Static types. `Int` and `Weekday` only appear as call arguments; they are
/// never bound to a name or returned as an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TelType {
    Date,
    Duration,
    Interval,
    Boolean,
    Text,
    Int,
    Weekday,
}

impl TelType {
    pub fn is_value(self) -> bool {
        !matches!(self, TelType::Int | TelType::Weekday)
    }

    pub fn name(self) -> &'static str {
        match self {
            TelType::Date => "date",
            TelType::Duration => "duration",
            TelType::Interval => "interval",
            TelType::Boolean => "boolean",
            TelType::Text => "text",
            TelType::Int => "int",
            TelType::Weekday => "weekday",
        }
    }
}

impl fmt::Display for TelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builtin names with their accepted signatures, for error messages and
/// the prompt cheat-sheet.
pub const BUILTINS: &[(&str, &str)] = &[
    ("date", "date(int, int, int) -> date"),
    ("add", "add(date, duration) -> date | add(duration, date) -> date | add(duration, duration) -> duration"),
    ("sub", "sub(date, duration) -> date | sub(duration, duration) -> duration | sub(date, date) -> duration"),
    ("diff_days", "diff_days(date, date) -> duration"),
    ("diff_months", "diff_months(date, date) -> duration"),
    ("next_weekday", "next_weekday(date, weekday) -> date | next_weekday(date, weekday, int) -> date"),
    ("week_range", "week_range(date) -> interval"),
    ("month_range", "month_range(date) -> interval"),
    ("interval", "interval(date, date) -> interval"),
    ("allen", "allen(date|interval, date|interval) -> text"),
    ("before", "before(date|interval, date|interval) -> boolean"),
    ("after", "after(date|interval, date|interval) -> boolean"),
    ("same_day", "same_day(date, date) -> boolean | same_day(interval, interval) -> boolean"),
    ("min", "min(date, date) -> date | min(duration, duration) -> duration"),
    ("max", "max(date, date) -> date | max(duration, duration) -> duration"),
];

/// Result type of a builtin call, `None` when no overload accepts `args`.
pub(crate) fn resolve_call(name: &str, args: &[TelType]) -> Option<TelType> {
    use TelType::*;
    let span = |t: TelType| matches!(t, Date | Interval);
    let out = match (name, args) {
        ("date", [Int, Int, Int]) => Date,
        ("add", [Date, Duration] | [Duration, Date]) => Date,
        ("add", [Duration, Duration]) => Duration,
        ("sub", [Date, Duration]) => Date,
        ("sub", [Duration, Duration] | [Date, Date]) => Duration,
        ("diff_days" | "diff_months", [Date, Date]) => Duration,
        ("next_weekday", [Date, Weekday] | [Date, Weekday, Int]) => Date,
        ("week_range" | "month_range", [Date]) => Interval,
        ("interval", [Date, Date]) => Interval,
        ("allen", [a, b]) if span(*a) && span(*b) => Text,
        ("before" | "after", [a, b]) if span(*a) && span(*b) => Boolean,
        ("same_day", [Date, Date] | [Interval, Interval]) => Boolean,
        ("min" | "max", [Date, Date]) => Date,
        ("min" | "max", [Duration, Duration]) => Duration,
        _ => return None,
    };
    Some(out)
}

/// A program that passed [`typecheck`].
#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub(crate) program: Program,
    pub(crate) binding_types: Vec<TelType>,
    pub(crate) answer_type: TelType,
}

impl TypedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn binding_types(&self) -> &[TelType] {
        &self.binding_types
    }

    pub fn answer_type(&self) -> TelType {
        self.answer_type
    }
}

/// Assigns a type to every expression. Names bind exactly once, including
/// against names already supplied in `env`.
pub fn typecheck(
    program: Program,
    env: &BTreeMap<String, TelType>,
) -> Result<TypedProgram, TelError> {
    let mut scope: BTreeMap<String, TelType> = env.clone();
    let mut binding_types = Vec::with_capacity(program.bindings.len());
    let mut bound_here = HashSet::new();
    for b in &program.bindings {
        if scope.contains_key(&b.name) {
            let what = if bound_here.contains(&b.name) { "earlier binding" } else { "environment" };
            return Err(TelError::new(
                TelErrorKind::NameError,
                b.pos,
                format!("'{}' is already bound by the {what}", b.name),
            ));
        }
        let ty = type_of(&b.expr, &scope)?;
        if !ty.is_value() {
            return Err(TelError::new(
                TelErrorKind::TypeError,
                b.expr.pos,
                format!("cannot bind '{}' to a bare {ty}", b.name),
            ));
        }
        scope.insert(b.name.clone(), ty);
        bound_here.insert(b.name.clone());
        binding_types.push(ty);
    }
    let answer_type = type_of(&program.answer, &scope)?;
    if !answer_type.is_value() {
        return Err(TelError::new(
            TelErrorKind::TypeError,
            program.answer.pos,
            format!("the answer cannot be a bare {answer_type}"),
        ));
    }
    Ok(TypedProgram { program, binding_types, answer_type })
}

fn type_of(e: &Expr, scope: &BTreeMap<String, TelType>) -> Result<TelType, TelError> {
    match &e.kind {
        ExprKind::Int(_) => Ok(TelType::Int),
        ExprKind::Str(_) => Ok(TelType::Text),
        ExprKind::Duration(_) => Ok(TelType::Duration),
        ExprKind::Weekday(_) => Ok(TelType::Weekday),
        ExprKind::Var(v) => scope.get(v).copied().ok_or_else(|| {
            TelError::new(TelErrorKind::NameError, e.pos, format!("'{v}' is not bound"))
        }),
        ExprKind::Call { name, args } => {
            let Some((_, sig)) = BUILTINS.iter().find(|(n, _)| n == name) else {
                return Err(TelError::new(
                    TelErrorKind::NameError,
                    e.pos,
                    format!("unknown function '{name}'"),
                ));
            };
            let arg_types =
                args.iter().map(|a| type_of(a, scope)).collect::<Result<Vec<_>, _>>()?;
            resolve_call(name, &arg_types).ok_or_else(|| {
                let got: Vec<_> = arg_types.iter().map(|t| t.name()).collect();
                TelError::new(
                    TelErrorKind::TypeError,
                    e.pos,
                    format!("no overload {name}({}); expected {sig}", got.join(", ")),
                )
            })
        }
        ExprKind::If { cond, then, otherwise } => {
            let c = type_of(cond, scope)?;
            if c != TelType::Boolean {
                return Err(TelError::new(
                    TelErrorKind::TypeError,
                    cond.pos,
                    format!("condition must be boolean, found {c}"),
                ));
            }
            let a = type_of(then, scope)?;
            let b = type_of(otherwise, scope)?;
            if a != b {
                return Err(TelError::new(
                    TelErrorKind::TypeError,
                    e.pos,
                    format!("branches disagree: then is {a}, else is {b}"),
                ));
            }
            Ok(a)
        }
    }
}
