//! Random well-typed expression-language programs paired with the value the
//! enumeration oracle computes for them.
//!
//! The generator builds its own little expression tree, renders it to source
//! text, and folds the tree with the functions in the crate root. The program
//! under test only ever sees the rendered text.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{
    add_relative, diff_days, month_range, next_weekday, week_range, ODate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Date,
    Duration,
    Interval,
    Bool,
}

const TYPES: [Ty; 4] = [Ty::Date, Ty::Duration, Ty::Interval, Ty::Bool];
const WEEKDAYS: [&str; 7] = ["MO", "TU", "WE", "TH", "FR", "SA", "SU"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OValue {
    Date(ODate),
    /// (years, months, days), never normalised.
    Duration(i64, i64, i64),
    Interval(ODate, ODate),
    Bool(bool),
}

impl OValue {
    fn ty(&self) -> Ty {
        match self {
            OValue::Date(_) => Ty::Date,
            OValue::Duration(..) => Ty::Duration,
            OValue::Interval(..) => Ty::Interval,
            OValue::Bool(_) => Ty::Bool,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub source: String,
    pub expected: OValue,
    /// Expected value of every binding, in order.
    pub binding_values: Vec<(String, OValue)>,
}

pub struct ProgramGen {
    rng: ChaCha8Rng,
}

struct Scope {
    vars: Vec<(String, OValue)>,
}

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        ProgramGen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn date(&mut self) -> ODate {
        let y = self.rng.random_range(2019..=2021);
        let m = self.rng.random_range(1..=12);
        let last = crate::month_range(ODate::new(y, m, 1)).1.d;
        let d = self.rng.random_range(1..=last);
        ODate::new(y, m, d)
    }

    pub fn program(&mut self) -> Generated {
        let mut scope = Scope { vars: Vec::new() };
        let mut source = String::new();
        let n = self.rng.random_range(0..=5);
        for i in 0..n {
            let ty = *TYPES.choose(&mut self.rng).unwrap();
            let (text, value) = self.expr(ty, 3, &scope);
            let name = format!("v{i}");
            source.push_str(&format!("let {name} := {text}\n"));
            scope.vars.push((name, value));
        }
        let ty = *TYPES.choose(&mut self.rng).unwrap();
        let (text, expected) = self.expr(ty, 3, &scope);
        source.push_str(&format!("answer {text}\n"));
        Generated { source, expected, binding_values: scope.vars }
    }

    fn var_of(&mut self, ty: Ty, scope: &Scope) -> Option<(String, OValue)> {
        let matching: Vec<_> = scope.vars.iter().filter(|(_, v)| v.ty() == ty).collect();
        matching.choose(&mut self.rng).map(|(n, v)| (n.clone(), v.clone()))
    }

    fn expr(&mut self, ty: Ty, depth: u32, scope: &Scope) -> (String, OValue) {
        if self.rng.random_bool(0.3) {
            if let Some(v) = self.var_of(ty, scope) {
                return v;
            }
        }
        let leaf = depth == 0;
        match ty {
            Ty::Date => self.date_expr(depth, leaf, scope),
            Ty::Duration => self.duration_expr(depth, leaf, scope),
            Ty::Interval => {
                let (d, dv) = self.expr(Ty::Date, depth.saturating_sub(1), scope);
                let OValue::Date(dv) = dv else { unreachable!() };
                if self.rng.random_bool(0.5) {
                    let (s, e) = week_range(dv);
                    (format!("week_range({d})"), OValue::Interval(s, e))
                } else {
                    let (s, e) = month_range(dv);
                    (format!("month_range({d})"), OValue::Interval(s, e))
                }
            }
            Ty::Bool => {
                let operand = if self.rng.random_bool(0.6) { Ty::Date } else { Ty::Interval };
                let (a, av) = self.expr(operand, depth.saturating_sub(1), scope);
                let (b, bv) = self.expr(operand, depth.saturating_sub(1), scope);
                let holds = match (av, bv) {
                    (OValue::Date(x), OValue::Date(y)) => x < y,
                    (OValue::Interval(_, ae), OValue::Interval(bs, _)) => ae < bs,
                    _ => unreachable!(),
                };
                (format!("before({a}, {b})"), OValue::Bool(holds))
            }
        }
    }

    fn date_expr(&mut self, depth: u32, leaf: bool, scope: &Scope) -> (String, OValue) {
        let choice = if leaf { 0 } else { self.rng.random_range(0..6) };
        let sub = depth.saturating_sub(1);
        match choice {
            1 | 2 => {
                let (d, dv) = self.expr(Ty::Date, sub, scope);
                let (dur, durv) = self.expr(Ty::Duration, sub, scope);
                let (OValue::Date(dv), OValue::Duration(y, m, days)) = (dv, durv) else { unreachable!() };
                if self.rng.random_bool(0.3) {
                    (format!("sub({d}, {dur})"), OValue::Date(add_relative(dv, -y, -m, -days)))
                } else {
                    (format!("add({d}, {dur})"), OValue::Date(add_relative(dv, y, m, days)))
                }
            }
            3 => {
                let (d, dv) = self.expr(Ty::Date, sub, scope);
                let OValue::Date(dv) = dv else { unreachable!() };
                let wd = self.rng.random_range(1..=7u32);
                let mut n = self.rng.random_range(-3..=3i64);
                if n == 0 {
                    n = 1;
                }
                let name = WEEKDAYS[(wd - 1) as usize];
                let text = if n == 1 && self.rng.random_bool(0.5) {
                    format!("next_weekday({d}, {name})")
                } else {
                    format!("next_weekday({d}, {name}, {n})")
                };
                (text, OValue::Date(next_weekday(dv, wd, n)))
            }
            4 => {
                let (c, cv) = self.expr(Ty::Bool, sub, scope);
                let (a, av) = self.expr(Ty::Date, sub, scope);
                let (b, bv) = self.expr(Ty::Date, sub, scope);
                let OValue::Bool(cv) = cv else { unreachable!() };
                (format!("if {c} then {a} else {b}"), if cv { av } else { bv })
            }
            _ => {
                let d = self.date();
                (format!("date({},{},{})", d.y, d.m, d.d), OValue::Date(d))
            }
        }
    }

    fn duration_expr(&mut self, depth: u32, leaf: bool, scope: &Scope) -> (String, OValue) {
        let choice = if leaf { 0 } else { self.rng.random_range(0..4) };
        let sub = depth.saturating_sub(1);
        match choice {
            1 => {
                let (a, av) = self.expr(Ty::Date, sub, scope);
                let (b, bv) = self.expr(Ty::Date, sub, scope);
                let (OValue::Date(av), OValue::Date(bv)) = (av, bv) else { unreachable!() };
                (format!("diff_days({a}, {b})"), OValue::Duration(0, 0, diff_days(av, bv)))
            }
            2 => {
                let (a, av) = self.duration_literal();
                let (b, bv) = self.duration_literal();
                let (OValue::Duration(y1, m1, d1), OValue::Duration(y2, m2, d2)) = (av, bv) else {
                    unreachable!()
                };
                (format!("add({a}, {b})"), OValue::Duration(y1 + y2, m1 + m2, d1 + d2))
            }
            _ => self.duration_literal(),
        }
    }

    fn duration_literal(&mut self) -> (String, OValue) {
        match self.rng.random_range(0..4) {
            0 => {
                let n = self.rng.random_range(-40..=40i64);
                (plural(n, "day"), OValue::Duration(0, 0, n))
            }
            1 => {
                let n = self.rng.random_range(-5..=5i64);
                (plural(n, "week"), OValue::Duration(0, 0, 7 * n))
            }
            2 => {
                let n = self.rng.random_range(-14..=14i64);
                (plural(n, "month"), OValue::Duration(0, n, 0))
            }
            _ => {
                let n = self.rng.random_range(-2..=2i64);
                (plural(n, "year"), OValue::Duration(n, 0, 0))
            }
        }
    }
}

fn plural(n: i64, unit: &str) -> String {
    if n.abs() == 1 {
        format!("{n} {unit}")
    } else {
        format!("{n} {unit}s")
    }
}
