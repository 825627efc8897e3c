use std::fmt;

use crate::temporal::{Duration, Weekday};

pub use super::lexer::Pos;

/// A straight-line program: bindings in order, then one answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub bindings: Vec<Binding>,
    pub answer: Expr,
}

#[derive(Debug, Clone)]
pub struct Binding {
    pub name: String,
    pub expr: Expr,
    pub pos: Pos,
    /// Source text of the bound expression, as written.
    pub source: String,
}

/// Equality is structural; positions and original spelling are ignored.
impl PartialEq for Binding {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.expr == other.expr
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Duration(Duration),
    Weekday(Weekday),
    Var(String),
    Call { name: String, args: Vec<Expr> },
    If { cond: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
}

fn write_duration(f: &mut fmt::Formatter<'_>, d: &Duration) -> fmt::Result {
    // Literals only ever carry one component.
    let (n, unit) = if d.years != 0 {
        (d.years as i64, "year")
    } else if d.months != 0 {
        (d.months as i64, "month")
    } else {
        (d.days, "day")
    };
    if n.abs() == 1 {
        write!(f, "{n} {unit}")
    } else {
        write!(f, "{n} {unit}s")
    }
}

fn write_str_lit(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Int(n) => write!(f, "{n}"),
            ExprKind::Str(s) => write_str_lit(f, s),
            ExprKind::Duration(d) => write_duration(f, d),
            ExprKind::Weekday(w) => write!(f, "{w}"),
            ExprKind::Var(v) => f.write_str(v),
            ExprKind::Call { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            ExprKind::If { cond, then, otherwise } => {
                write!(f, "if {cond} then {then} else {otherwise}")
            }
        }
    }
}

/// Canonical source form; parsing it back yields an equal program.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bindings {
            writeln!(f, "let {} := {}", b.name, b.expr)?;
        }
        writeln!(f, "answer {}", self.answer)
    }
}
