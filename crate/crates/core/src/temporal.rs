//! Calendar arithmetic over civil dates.
//!
//! Dates are proleptic Gregorian days in the years 1..=9999 with no time of
//! day and no time zone. Durations keep calendar parts (years, months) apart
//! from plain days; the calendar parts only take effect through
//! [`add_relative`], which clamps to the end of the month the way dateutil's
//! `relativedelta` does.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::{Datelike, Days, Months, NaiveDate};
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MIN_YEAR: i32 = 1;
pub const MAX_YEAR: i32 = 9999;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("unrecognized date format: {0:?}")]
    Format(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Contract(String),
}

static ISO_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap());
static US_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2})/(\d{1,2})/(\d{4})$").unwrap());

/// A calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalDate(NaiveDate);

impl CalDate {
    pub fn new(year: i32, month: u32, day: u32) -> Result<Self, TemporalError> {
        if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
            return Err(TemporalError::Domain(format!(
                "year {year} outside supported range {MIN_YEAR}..={MAX_YEAR}"
            )));
        }
        NaiveDate::from_ymd_opt(year, month, day)
            .map(CalDate)
            .ok_or_else(|| {
                TemporalError::Domain(format!("{year:04}-{month:02}-{day:02} is not a valid date"))
            })
    }

    fn checked(d: NaiveDate) -> Result<Self, TemporalError> {
        if (MIN_YEAR..=MAX_YEAR).contains(&d.year()) {
            Ok(CalDate(d))
        } else {
            Err(TemporalError::Domain(format!("{d} is outside the supported year range")))
        }
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }

    pub fn month(&self) -> u32 {
        self.0.month()
    }

    pub fn day(&self) -> u32 {
        self.0.day()
    }

    pub fn weekday(&self) -> Weekday {
        Weekday::from_iso(self.0.weekday().number_from_monday()).expect("1..=7")
    }

    /// Shift by whole days.
    pub fn add_days(&self, days: i64) -> Result<Self, TemporalError> {
        let shifted = if days >= 0 {
            self.0.checked_add_days(Days::new(days as u64))
        } else {
            self.0.checked_sub_days(Days::new(days.unsigned_abs()))
        };
        shifted
            .ok_or_else(|| TemporalError::Domain(format!("{self} shifted by {days} days overflows")))
            .and_then(Self::checked)
    }

    fn add_months(&self, months: i64) -> Result<Self, TemporalError> {
        let overflow = || TemporalError::Domain(format!("{self} shifted by {months} months overflows"));
        let n = u32::try_from(months.unsigned_abs()).map_err(|_| overflow())?;
        let shifted = if months >= 0 {
            self.0.checked_add_months(Months::new(n))
        } else {
            self.0.checked_sub_months(Months::new(n))
        };
        shifted.ok_or_else(overflow).and_then(Self::checked)
    }

    /// MM/DD/YYYY rendering, as dialogue timestamps are often shown.
    pub fn to_us_string(&self) -> String {
        format!("{:02}/{:02}/{:04}", self.month(), self.day(), self.year())
    }
}

impl fmt::Display for CalDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year(), self.month(), self.day())
    }
}

impl FromStr for CalDate {
    type Err = TemporalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_date(s)
    }
}

impl Serialize for CalDate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CalDate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_date(&text).map_err(serde::de::Error::custom)
    }
}

/// Parses `YYYY-MM-DD` or `MM/DD/YYYY`.
pub fn parse_date(text: &str) -> Result<CalDate, TemporalError> {
    let text = text.trim();
    let (y, m, d) = if let Some(c) = ISO_RE.captures(text) {
        (c[1].parse().unwrap(), c[2].parse().unwrap(), c[3].parse().unwrap())
    } else if let Some(c) = US_RE.captures(text) {
        (c[3].parse().unwrap(), c[1].parse().unwrap(), c[2].parse().unwrap())
    } else {
        return Err(TemporalError::Format(text.to_string()));
    };
    CalDate::new(y, m, d)
}

/// Month number for an English month name or its three-letter abbreviation
/// (case-insensitive; "sept" also accepted).
pub fn month_from_name(name: &str) -> Option<u32> {
    const NAMES: [&str; 12] = [
        "january", "february", "march", "april", "may", "june", "july", "august", "september",
        "october", "november", "december",
    ];
    let n = name.to_ascii_lowercase();
    NAMES
        .iter()
        .position(|full| *full == n || (n.len() == 3 && full.starts_with(&n)) || (n == "sept" && *full == "september"))
        .map(|i| i as u32 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Weekday {
    #[serde(rename = "MO")]
    Mon,
    #[serde(rename = "TU")]
    Tue,
    #[serde(rename = "WE")]
    Wed,
    #[serde(rename = "TH")]
    Thu,
    #[serde(rename = "FR")]
    Fri,
    #[serde(rename = "SA")]
    Sat,
    #[serde(rename = "SU")]
    Sun,
}

impl Weekday {
    pub const ALL: [Weekday; 7] = [
        Weekday::Mon,
        Weekday::Tue,
        Weekday::Wed,
        Weekday::Thu,
        Weekday::Fri,
        Weekday::Sat,
        Weekday::Sun,
    ];

    pub fn from_iso(n: u32) -> Option<Self> {
        Self::ALL.get(n.checked_sub(1)? as usize).copied()
    }

    /// 1 = Monday .. 7 = Sunday.
    pub fn iso(self) -> u32 {
        self as u32 + 1
    }

    /// Two-letter code (`MO` .. `SU`).
    pub fn code(self) -> &'static str {
        ["MO", "TU", "WE", "TH", "FR", "SA", "SU"][self as usize]
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|w| w.code() == code)
    }

    pub fn name(self) -> &'static str {
        ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]
            [self as usize]
    }
}

impl fmt::Display for Weekday {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A signed span of time. `days` is exact; `years` and `months` are calendar
/// parts that never convert to days on their own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Duration {
    #[serde(default, skip_serializing_if = "is_zero_i32")]
    pub years: i32,
    #[serde(default, skip_serializing_if = "is_zero_i32")]
    pub months: i32,
    pub days: i64,
}

fn is_zero_i32(v: &i32) -> bool {
    *v == 0
}

impl Duration {
    pub const ZERO: Duration = Duration { years: 0, months: 0, days: 0 };

    pub fn days(days: i64) -> Self {
        Duration { days, ..Self::ZERO }
    }

    pub fn weeks(weeks: i64) -> Self {
        Self::days(weeks * 7)
    }

    pub fn months(months: i32) -> Self {
        Duration { months, ..Self::ZERO }
    }

    pub fn years(years: i32) -> Self {
        Duration { years, ..Self::ZERO }
    }

    pub fn is_days_only(&self) -> bool {
        self.years == 0 && self.months == 0
    }

    /// Years folded into months.
    pub fn calendar_months(&self) -> i64 {
        self.years as i64 * 12 + self.months as i64
    }

    pub fn checked_add(&self, other: &Duration) -> Option<Duration> {
        Some(Duration {
            years: self.years.checked_add(other.years)?,
            months: self.months.checked_add(other.months)?,
            days: self.days.checked_add(other.days)?,
        })
    }

    pub fn negated(&self) -> Duration {
        Duration { years: -self.years, months: -self.months, days: -self.days }
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn part(n: i64, unit: &str) -> String {
            if n.abs() == 1 {
                format!("{n} {unit}")
            } else {
                format!("{n} {unit}s")
            }
        }
        let mut parts = Vec::new();
        if self.years != 0 {
            parts.push(part(self.years as i64, "year"));
        }
        if self.months != 0 {
            parts.push(part(self.months as i64, "month"));
        }
        if self.days != 0 || parts.is_empty() {
            parts.push(part(self.days, "day"));
        }
        f.write_str(&parts.join(" "))
    }
}

/// A closed run of days, `start <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct DateInterval {
    start: CalDate,
    end: CalDate,
}

#[derive(Deserialize)]
struct RawInterval {
    start: CalDate,
    end: CalDate,
}

impl TryFrom<RawInterval> for DateInterval {
    type Error = TemporalError;

    fn try_from(r: RawInterval) -> Result<Self, Self::Error> {
        DateInterval::new(r.start, r.end)
    }
}

impl DateInterval {
    pub fn new(start: CalDate, end: CalDate) -> Result<Self, TemporalError> {
        if start > end {
            return Err(TemporalError::Domain(format!("interval start {start} is after end {end}")));
        }
        Ok(DateInterval { start, end })
    }

    pub fn day(d: CalDate) -> Self {
        DateInterval { start: d, end: d }
    }

    pub fn start(&self) -> CalDate {
        self.start
    }

    pub fn end(&self) -> CalDate {
        self.end
    }

    pub fn contains(&self, d: CalDate) -> bool {
        self.start <= d && d <= self.end
    }

    /// Number of days covered, both ends included.
    pub fn len_days(&self) -> i64 {
        diff_days(self.start, self.end).days + 1
    }
}

impl fmt::Display for DateInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllenRelation {
    Before,
    Meets,
    Overlaps,
    Starts,
    During,
    Finishes,
    Equals,
    After,
    MetBy,
    OverlappedBy,
    StartedBy,
    Contains,
    FinishedBy,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 13] = [
        AllenRelation::Before,
        AllenRelation::Meets,
        AllenRelation::Overlaps,
        AllenRelation::Starts,
        AllenRelation::During,
        AllenRelation::Finishes,
        AllenRelation::Equals,
        AllenRelation::After,
        AllenRelation::MetBy,
        AllenRelation::OverlappedBy,
        AllenRelation::StartedBy,
        AllenRelation::Contains,
        AllenRelation::FinishedBy,
    ];

    pub fn inverse(self) -> Self {
        use AllenRelation::*;
        match self {
            Before => After,
            After => Before,
            Meets => MetBy,
            MetBy => Meets,
            Overlaps => OverlappedBy,
            OverlappedBy => Overlaps,
            Starts => StartedBy,
            StartedBy => Starts,
            During => Contains,
            Contains => During,
            Finishes => FinishedBy,
            FinishedBy => Finishes,
            Equals => Equals,
        }
    }

    pub fn name(self) -> &'static str {
        use AllenRelation::*;
        match self {
            Before => "before",
            Meets => "meets",
            Overlaps => "overlaps",
            Starts => "starts",
            During => "during",
            Finishes => "finishes",
            Equals => "equals",
            After => "after",
            MetBy => "met_by",
            OverlappedBy => "overlapped_by",
            StartedBy => "started_by",
            Contains => "contains",
            FinishedBy => "finished_by",
        }
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `b - a` in days.
pub fn diff_days(a: CalDate, b: CalDate) -> Duration {
    Duration::days(b.0.signed_duration_since(a.0).num_days())
}

/// Whole calendar months from `a` to `b`, truncated toward zero, as
/// relativedelta(b, a).months would count them.
pub fn diff_months(a: CalDate, b: CalDate) -> Duration {
    let raw = (b.year() - a.year()) as i64 * 12 + b.month() as i64 - a.month() as i64;
    let mut months = raw;
    // Step back one month if the day-of-month has not been reached yet.
    if months > 0 && b.day() < a.day() {
        months -= 1;
    } else if months < 0 && b.day() > a.day() {
        months += 1;
    }
    Duration::months(months as i32)
}

/// Applies the calendar part (years and months together, clamped to month
/// end), then the days.
pub fn add_relative(t: CalDate, delta: Duration) -> Result<CalDate, TemporalError> {
    let months = delta.calendar_months();
    let shifted = if months == 0 { t } else { t.add_months(months)? };
    shifted.add_days(delta.days)
}

/// `n = +k`: the k-th `w` on or after `t`; `n = -k`: the k-th on or before.
pub fn next_weekday(t: CalDate, w: Weekday, n: i64) -> Result<CalDate, TemporalError> {
    let from = t.weekday().iso() as i64;
    let to = w.iso() as i64;
    match n.cmp(&0) {
        Ordering::Equal => Err(TemporalError::Contract("next_weekday needs n != 0".into())),
        Ordering::Greater => {
            let first = (to - from).rem_euclid(7);
            t.add_days(first + 7 * (n - 1))
        }
        Ordering::Less => {
            let last = (from - to).rem_euclid(7);
            t.add_days(-(last + 7 * (-n - 1)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeUnit {
    Week,
    Month,
}

/// The Monday..Sunday week or the calendar month containing `t`.
pub fn calendar_range(t: CalDate, unit: RangeUnit) -> Result<DateInterval, TemporalError> {
    match unit {
        RangeUnit::Week => {
            let back = t.weekday().iso() as i64 - 1;
            let start = t.add_days(-back)?;
            Ok(DateInterval { start, end: start.add_days(6)? })
        }
        RangeUnit::Month => {
            let start = CalDate::new(t.year(), t.month(), 1)?;
            let end = (28..=31)
                .rev()
                .find_map(|d| CalDate::new(t.year(), t.month(), d).ok())
                .unwrap_or(start);
            Ok(DateInterval { start, end })
        }
    }
}

pub fn week_range(t: CalDate) -> Result<DateInterval, TemporalError> {
    calendar_range(t, RangeUnit::Week)
}

pub fn month_range(t: CalDate) -> Result<DateInterval, TemporalError> {
    calendar_range(t, RangeUnit::Month)
}

/// Classifies two closed day intervals. Single-day intervals tie-break in the
/// order equals, starts/finishes families, meets/met-by, then the rest.
pub fn allen_relation(a: &DateInterval, b: &DateInterval) -> AllenRelation {
    use AllenRelation::*;
    use Ordering::*;
    let starts = a.start.cmp(&b.start);
    let ends = a.end.cmp(&b.end);
    let end_vs_start = a.end.cmp(&b.start);
    let start_vs_end = a.start.cmp(&b.end);
    match (starts, ends, end_vs_start, start_vs_end) {
        (Equal, Equal, _, _) => Equals,
        (Equal, Less, _, _) => Starts,
        (Equal, Greater, _, _) => StartedBy,
        (Greater, Equal, _, _) => Finishes,
        (Less, Equal, _, _) => FinishedBy,
        (_, _, Equal, _) => Meets,
        (_, _, _, Equal) => MetBy,
        (_, _, Less, _) => Before,
        (_, _, _, Greater) => After,
        (Greater, Less, _, _) => During,
        (Less, Greater, _, _) => Contains,
        (Less, Less, _, _) => Overlaps,
        (Greater, Greater, _, _) => OverlappedBy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> CalDate {
        CalDate::new(y, m, day).unwrap()
    }

    #[test]
    fn parses_both_formats() {
        assert_eq!(parse_date("2020-03-12").unwrap(), d(2020, 3, 12));
        assert_eq!(parse_date("03/16/2020").unwrap(), d(2020, 3, 16));
        assert_eq!(parse_date("3/6/2020").unwrap(), d(2020, 3, 6));
    }

    #[test]
    fn rejects_bad_dates() {
        assert!(matches!(parse_date("2021-02-30"), Err(TemporalError::Domain(_))));
        assert!(matches!(parse_date("12 March 2020"), Err(TemporalError::Format(_))));
        assert!(matches!(parse_date("2020-3-12"), Err(TemporalError::Format(_))));
        assert!(matches!(parse_date("0000-01-01"), Err(TemporalError::Domain(_))));
    }

    #[test]
    fn diff_is_signed() {
        assert_eq!(diff_days(d(2020, 3, 12), d(2020, 3, 16)), Duration::days(4));
        assert_eq!(diff_days(d(2020, 3, 16), d(2020, 3, 12)), Duration::days(-4));
        assert_eq!(diff_days(d(2020, 2, 28), d(2020, 3, 1)), Duration::days(2));
    }

    #[test]
    fn relative_shifts() {
        assert_eq!(add_relative(d(2020, 1, 31), Duration::months(1)).unwrap(), d(2020, 2, 29));
        assert_eq!(add_relative(d(2020, 3, 16), Duration::ZERO).unwrap(), d(2020, 3, 16));
        assert_eq!(add_relative(d(2020, 3, 16), Duration::days(-7)).unwrap(), d(2020, 3, 9));
        assert_eq!(add_relative(d(2021, 3, 31), Duration::months(-1)).unwrap(), d(2021, 2, 28));
        let leap_year = Duration { years: 1, months: 1, days: 0 };
        assert_eq!(add_relative(d(2020, 2, 29), leap_year).unwrap(), d(2021, 3, 29));
        assert!(add_relative(d(9999, 12, 31), Duration::days(1)).is_err());
        assert!(add_relative(d(1, 1, 1), Duration::years(-1)).is_err());
    }

    #[test]
    fn weekday_resolution() {
        assert_eq!(d(2020, 3, 16).weekday(), Weekday::Mon);
        assert_eq!(next_weekday(d(2020, 3, 16), Weekday::Fri, 1).unwrap(), d(2020, 3, 20));
        assert_eq!(next_weekday(d(2020, 3, 20), Weekday::Fri, 1).unwrap(), d(2020, 3, 20));
        assert_eq!(next_weekday(d(2020, 3, 16), Weekday::Mon, -1).unwrap(), d(2020, 3, 16));
        assert_eq!(next_weekday(d(2020, 3, 16), Weekday::Thu, -1).unwrap(), d(2020, 3, 12));
        assert_eq!(next_weekday(d(2020, 3, 16), Weekday::Fri, 2).unwrap(), d(2020, 3, 27));
        assert!(matches!(
            next_weekday(d(2020, 3, 16), Weekday::Fri, 0),
            Err(TemporalError::Contract(_))
        ));
    }

    #[test]
    fn interval_serde_checks_order() {
        let ok: DateInterval = serde_json::from_str(r#"{"start":"2020-03-09","end":"2020-03-15"}"#).unwrap();
        assert_eq!(ok.len_days(), 7);
        assert!(serde_json::from_str::<DateInterval>(r#"{"start":"2020-03-15","end":"2020-03-09"}"#).is_err());
    }

    #[test]
    fn ranges() {
        let w = week_range(d(2020, 3, 11)).unwrap();
        assert_eq!((w.start(), w.end()), (d(2020, 3, 9), d(2020, 3, 15)));
        let w = week_range(d(2020, 3, 9)).unwrap();
        assert_eq!((w.start(), w.end()), (d(2020, 3, 9), d(2020, 3, 15)));
        let m = month_range(d(2020, 2, 10)).unwrap();
        assert_eq!((m.start(), m.end()), (d(2020, 2, 1), d(2020, 2, 29)));
        let m = month_range(d(9999, 12, 5)).unwrap();
        assert_eq!(m.end(), d(9999, 12, 31));
    }

    #[test]
    fn allen_examples() {
        let base = d(2020, 1, 1);
        let iv = |s: i64, e: i64| {
            DateInterval::new(base.add_days(s).unwrap(), base.add_days(e).unwrap()).unwrap()
        };
        assert_eq!(allen_relation(&iv(1, 3), &iv(2, 4)), AllenRelation::Overlaps);
        assert_eq!(allen_relation(&iv(1, 2), &iv(1, 2)), AllenRelation::Equals);
        assert_eq!(allen_relation(&iv(1, 2), &iv(2, 4)), AllenRelation::Meets);
        let a = week_range(d(2020, 3, 11)).unwrap();
        let b = week_range(d(2020, 3, 16)).unwrap();
        assert_eq!(allen_relation(&a, &b), AllenRelation::Before);
    }

    #[test]
    fn serde_uses_iso() {
        let json = serde_json::to_string(&d(2020, 3, 12)).unwrap();
        assert_eq!(json, "\"2020-03-12\"");
        let back: CalDate = serde_json::from_str("\"03/12/2020\"").unwrap();
        assert_eq!(back, d(2020, 3, 12));
    }

    #[test]
    fn diff_months_truncates() {
        assert_eq!(diff_months(d(2020, 1, 31), d(2020, 2, 29)), Duration::months(0));
        assert_eq!(diff_months(d(2020, 1, 15), d(2020, 3, 15)), Duration::months(2));
        assert_eq!(diff_months(d(2020, 3, 15), d(2020, 1, 16)), Duration::months(-1));
    }
}
