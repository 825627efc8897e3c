//! A small typed language for date arithmetic.
//!
//! Programs are straight-line: a list of `let name := expr` bindings followed
//! by one `answer expr` line. Evaluation records every binding in a
//! [`TelTrace`] so a run can be audited line by line.
//!
//! ```text
//! # "last week" as seen from the session date
//! let session := session_4_date
//! let last_week := week_range(sub(session, 1 week))
//! answer last_week
//! ```

mod ast;
mod check;
mod eval;
mod lexer;
mod matching;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{Binding, Expr, ExprKind, Pos, Program};
pub use check::{typecheck, TelType, TypedProgram, BUILTINS};
pub use eval::{
    evaluate, EvalFailure, Evaluation, TelTrace, TelValue, TraceStep, DEFAULT_STEP_BUDGET,
};
pub use matching::{match_option, normalize_option, MatchError, NormalizedOption, OptionMatch};
pub use parser::parse_program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TelErrorKind {
    ParseError,
    TypeError,
    NameError,
    DomainError,
    BudgetError,
}

impl fmt::Display for TelErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TelErrorKind::ParseError => "ParseError",
            TelErrorKind::TypeError => "TypeError",
            TelErrorKind::NameError => "NameError",
            TelErrorKind::DomainError => "DomainError",
            TelErrorKind::BudgetError => "BudgetError",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind} at line {line}, column {column}: {message}")]
pub struct TelError {
    pub kind: TelErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl TelError {
    pub(crate) fn new(kind: TelErrorKind, pos: Pos, message: impl Into<String>) -> Self {
        TelError { kind, line: pos.line, column: pos.column, message: message.into() }
    }
}

/// Parse, check and evaluate in one go.
pub fn run(
    source: &str,
    env: &BTreeMap<String, TelValue>,
    budget: usize,
) -> Result<Evaluation, EvalFailure> {
    let program = parse_program(source)?;
    let types = env.iter().map(|(k, v)| (k.clone(), v.ty())).collect();
    let typed = typecheck(program, &types)?;
    evaluate(&typed, env, budget)
}

/// Language summary handed to code-generating models.
pub fn cheat_sheet() -> String {
    let mut s = String::from(
        "Programs are lines of `let NAME := EXPR` followed by a single `answer EXPR` line.\n\
         Every expression fits on one line. `#` starts a comment. Names bind once.\n\
         Literals: date(YYYY, M, D); durations such as 3 days, 2 weeks, 1 month, 1 year \
         (negative allowed: -7 days); \"text\"; weekdays MO TU WE TH FR SA SU; integers \
         as call arguments.\n\
         Conditional: if COND then EXPR else EXPR (both branches share a type).\n\
         Weeks run Monday to Sunday. Adding months clamps to the month end \
         (add(date(2020,1,31), 1 month) is 2020-02-29).\n\
         next_weekday(d, FR) is the first Friday on or after d; next_weekday(d, FR, -1) the \
         last Friday on or before d; n counts further occurrences.\n\
         allen(a, b) names the interval relation (before, meets, overlaps, starts, during, \
         finishes, equals, after, met_by, overlapped_by, started_by, contains, finished_by).\n\
         Builtins:\n",
    );
    for (_, sig) in BUILTINS {
        s.push_str("  ");
        s.push_str(sig);
        s.push('\n');
    }
    s.push_str(
        "The answer may be a date, duration or interval (matched against the options), or \
         the option letter as text, e.g. answer if before(a, b) then \"A\" else \"B\".\n",
    );
    s
}
