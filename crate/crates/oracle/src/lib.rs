//! Brute-force calendar oracles for tests.
//!
//! Everything here works by stepping one day at a time from a known anchor.
//! Nothing in this crate depends on `chronoqa-core`, so the checks it backs
//! stay independent of the implementation they verify.

pub mod gen;

use std::cmp::Ordering;

/// A civil date, compared field by field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ODate {
    pub y: i32,
    pub m: u32,
    pub d: u32,
}

/// 2000-01-03 was a Monday.
const ANCHOR: ODate = ODate { y: 2000, m: 1, d: 3 };

fn month_len(y: i32, m: u32) -> u32 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if (y % 4 == 0 && y % 100 != 0) || y % 400 == 0 => 29,
        2 => 28,
        _ => panic!("bad month {m}"),
    }
}

impl ODate {
    pub fn new(y: i32, m: u32, d: u32) -> Self {
        assert!((1..=12).contains(&m) && d >= 1 && d <= month_len(y, m), "invalid {y}-{m}-{d}");
        ODate { y, m, d }
    }

    pub fn succ(self) -> Self {
        if self.d < month_len(self.y, self.m) {
            ODate { d: self.d + 1, ..self }
        } else if self.m < 12 {
            ODate { m: self.m + 1, d: 1, ..self }
        } else {
            ODate { y: self.y + 1, m: 1, d: 1 }
        }
    }

    pub fn pred(self) -> Self {
        if self.d > 1 {
            ODate { d: self.d - 1, ..self }
        } else if self.m > 1 {
            ODate { m: self.m - 1, d: month_len(self.y, self.m - 1), ..self }
        } else {
            ODate { y: self.y - 1, m: 12, d: 31 }
        }
    }

    /// ISO weekday, 1 = Monday .. 7 = Sunday.
    pub fn weekday(self) -> u32 {
        let n = diff_days(ANCHOR, self);
        (n.rem_euclid(7) + 1) as u32
    }

    pub fn iso(self) -> String {
        format!("{:04}-{:02}-{:02}", self.y, self.m, self.d)
    }
}

/// `b - a` in days, counted by stepping.
pub fn diff_days(a: ODate, b: ODate) -> i64 {
    let mut n = 0i64;
    let mut cur = a;
    match a.cmp(&b) {
        Ordering::Less => {
            while cur != b {
                cur = cur.succ();
                n += 1;
            }
        }
        Ordering::Greater => {
            while cur != b {
                cur = cur.pred();
                n -= 1;
            }
        }
        Ordering::Equal => {}
    }
    n
}

pub fn add_days(a: ODate, n: i64) -> ODate {
    let mut cur = a;
    if n >= 0 {
        for _ in 0..n {
            cur = cur.succ();
        }
    } else {
        for _ in 0..(-n) {
            cur = cur.pred();
        }
    }
    cur
}

/// Moves by whole months, then walks the day back until it exists.
pub fn add_months(a: ODate, months: i64) -> ODate {
    let mut y = a.y;
    let mut m = a.m as i64;
    let mut left = months;
    while left > 0 {
        m += 1;
        if m == 13 {
            m = 1;
            y += 1;
        }
        left -= 1;
    }
    while left < 0 {
        m -= 1;
        if m == 0 {
            m = 12;
            y -= 1;
        }
        left += 1;
    }
    // Find the last existing day of the target month by stepping from day 1.
    let first = ODate { y, m: m as u32, d: 1 };
    let mut last = first;
    while last.succ().m == first.m {
        last = last.succ();
    }
    ODate { y, m: m as u32, d: a.d.min(last.d) }
}

/// Years and months together (one clamp at the end), then days.
pub fn add_relative(a: ODate, years: i64, months: i64, days: i64) -> ODate {
    add_days(add_months(a, years * 12 + months), days)
}

/// `n > 0`: the n-th `wd` on or after `a`. `n < 0`: the |n|-th on or before.
pub fn next_weekday(a: ODate, wd: u32, n: i64) -> ODate {
    assert!(n != 0);
    let mut cur = a;
    let mut found = 0;
    loop {
        if cur.weekday() == wd {
            found += 1;
            if found == n.abs() {
                return cur;
            }
        }
        cur = if n > 0 { cur.succ() } else { cur.pred() };
    }
}

pub fn week_range(a: ODate) -> (ODate, ODate) {
    let mut start = a;
    while start.weekday() != 1 {
        start = start.pred();
    }
    let mut end = a;
    while end.weekday() != 7 {
        end = end.succ();
    }
    (start, end)
}

pub fn month_range(a: ODate) -> (ODate, ODate) {
    let mut start = a;
    while start.pred().m == a.m {
        start = start.pred();
    }
    let mut end = a;
    while end.succ().m == a.m {
        end = end.succ();
    }
    (start, end)
}

/// Allen relation name for closed intervals `[as, ae]`, `[bs, be]`.
///
/// Tie-breaks for single-point intervals: equals, then the starts and
/// finishes families, then meets, then the strict orderings.
pub fn allen(a: (i64, i64), b: (i64, i64)) -> &'static str {
    let (a_s, a_e) = a;
    let (b_s, b_e) = b;
    assert!(a_s <= a_e && b_s <= b_e);
    if a_s == b_s && a_e == b_e {
        "equals"
    } else if a_s == b_s {
        if a_e < b_e {
            "starts"
        } else {
            "started_by"
        }
    } else if a_e == b_e {
        if a_s > b_s {
            "finishes"
        } else {
            "finished_by"
        }
    } else if a_e == b_s {
        "meets"
    } else if b_e == a_s {
        "met_by"
    } else if a_e < b_s {
        "before"
    } else if b_e < a_s {
        "after"
    } else if a_s > b_s && a_e < b_e {
        "during"
    } else if a_s < b_s && a_e > b_e {
        "contains"
    } else if a_s < b_s {
        "overlaps"
    } else {
        "overlapped_by"
    }
}

/// Every closed interval with endpoints on `0..n`.
pub fn grid_intervals(n: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for s in 0..n {
        for e in s..n {
            out.push((s, e));
        }
    }
    out
}
