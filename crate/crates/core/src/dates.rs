//! Date layouts, format rule detection and the natural-date grammar.
//!
//! Layout patterns use the tokens `%Y` (4-digit year), `%y` (2-digit year),
//! `%m`, `%d`, `%b` (abbreviated month name) and `%B` (full month name) plus
//! literal separators. [`DATE_LAYOUTS`] is a closed candidate list, ordered
//! most-specific-first (4-digit year layouts before 2-digit), and is recorded
//! in artifact metadata so results stay reproducible.
//!
//! The relative-date grammar is a closed set: `today`, `tomorrow`,
//! `yesterday`, `next <weekday>` and `last <weekday>`, resolved against an
//! injected clock date. `next <weekday>` means the first strictly-future
//! occurrence of that weekday; `last <weekday>` the first strictly-past one.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::text::fold_ws;

/// Candidate date layouts, tried in order for both parsing and format rule
/// detection. First match wins, which resolves month/day ambiguity
/// deterministically.
pub const DATE_LAYOUTS: &[&str] = &[
    "%Y-%m-%d",
    "%Y/%m/%d",
    "%m/%d/%Y",
    "%d/%m/%Y",
    "%m-%d-%Y",
    "%d-%m-%Y",
    "%d.%m.%Y",
    "%b %d %Y",
    "%B %d %Y",
    "%d %b %Y",
    "%d %B %Y",
    "%b %d, %Y",
    "%B %d, %Y",
    "%y-%m-%d",
    "%m/%d/%y",
];

/// A layout that renders a parsed date back into the exact literal text a
/// query expects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatRule {
    pub pattern: String,
}

impl FormatRule {
    pub fn new(pattern: impl Into<String>) -> Self {
        FormatRule {
            pattern: pattern.into(),
        }
    }

    pub fn render(&self, date: NaiveDate) -> String {
        date.format(&self.pattern).to_string()
    }
}

/// Default rendering layout for date slots that never exhibited a
/// detectable format rule.
pub const DEFAULT_DATE_PATTERN: &str = "%Y-%m-%d";

/// Parses `text` under the fixed layout list. Returns the date and the
/// layout that matched. A layout only counts as a match when rendering the
/// parsed date under it reproduces the input exactly; this keeps parsing
/// and rendering consistent (chrono's `%Y` would otherwise swallow 2-digit
/// years meant for `%y`).
pub fn parse_absolute(text: &str) -> Option<(NaiveDate, &'static str)> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return None;
    }
    for layout in DATE_LAYOUTS {
        if let Ok(d) = NaiveDate::parse_from_str(trimmed, layout) {
            if d.format(layout).to_string() == trimmed {
                return Some((d, layout));
            }
        }
    }
    None
}

/// Returns the first candidate layout whose rendering of `parsed` equals
/// `literal` byte for byte, or `None` when no candidate matches.
pub fn detect_format_rule(parsed: NaiveDate, literal: &str) -> Option<FormatRule> {
    DATE_LAYOUTS
        .iter()
        .find(|layout| parsed.format(layout).to_string() == literal)
        .map(|layout| FormatRule::new(*layout))
}

fn weekday_from_name(name: &str) -> Option<Weekday> {
    match name {
        "monday" | "mon" => Some(Weekday::Mon),
        "tuesday" | "tue" => Some(Weekday::Tue),
        "wednesday" | "wed" => Some(Weekday::Wed),
        "thursday" | "thu" => Some(Weekday::Thu),
        "friday" | "fri" => Some(Weekday::Fri),
        "saturday" | "sat" => Some(Weekday::Sat),
        "sunday" | "sun" => Some(Weekday::Sun),
        _ => None,
    }
}

/// First strictly-future occurrence of `target` after `clock`.
pub fn next_weekday(clock: NaiveDate, target: Weekday) -> NaiveDate {
    let mut days = (target.num_days_from_monday() as i64
        - clock.weekday().num_days_from_monday() as i64)
        .rem_euclid(7);
    if days == 0 {
        days = 7;
    }
    clock + Duration::days(days)
}

/// First strictly-past occurrence of `target` before `clock`.
pub fn last_weekday(clock: NaiveDate, target: Weekday) -> NaiveDate {
    let mut days = (clock.weekday().num_days_from_monday() as i64
        - target.num_days_from_monday() as i64)
        .rem_euclid(7);
    if days == 0 {
        days = 7;
    }
    clock - Duration::days(days)
}

/// Resolves a relative-date phrase against `clock`. The grammar is closed;
/// anything outside it returns `None`.
pub fn parse_relative(text: &str, clock: NaiveDate) -> Option<NaiveDate> {
    let folded = fold_ws(text);
    match folded.as_str() {
        "today" => return Some(clock),
        "tomorrow" => return Some(clock + Duration::days(1)),
        "yesterday" => return Some(clock - Duration::days(1)),
        _ => {}
    }
    if let Some(rest) = folded.strip_prefix("next ") {
        return weekday_from_name(rest).map(|wd| next_weekday(clock, wd));
    }
    if let Some(rest) = folded.strip_prefix("last ") {
        return weekday_from_name(rest).map(|wd| last_weekday(clock, wd));
    }
    None
}

/// Absolute layouts first, then the relative grammar.
pub fn parse_date_phrase(text: &str, clock: NaiveDate) -> Option<NaiveDate> {
    parse_absolute(text)
        .map(|(d, _)| d)
        .or_else(|| parse_relative(text, clock))
}

/// Shape check for the phrase grammar without resolving against a clock;
/// candidate detection must stay a pure function of the question text.
pub fn is_date_phrase(text: &str) -> bool {
    if parse_absolute(text).is_some() {
        return true;
    }
    let folded = fold_ws(text);
    if matches!(folded.as_str(), "today" | "tomorrow" | "yesterday") {
        return true;
    }
    for prefix in ["next ", "last "] {
        if let Some(rest) = folded.strip_prefix(prefix) {
            if weekday_from_name(rest).is_some() {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn detects_four_digit_dashed_layout() {
        let rule = detect_format_rule(d(2020, 10, 20), "2020-10-20").unwrap();
        assert_eq!(rule.pattern, "%Y-%m-%d");
    }

    #[test]
    fn detects_two_digit_year_layout() {
        let rule = detect_format_rule(d(2020, 10, 20), "20-10-20").unwrap();
        assert_eq!(rule.pattern, "%y-%m-%d");
    }

    #[test]
    fn no_rule_for_partial_date_text() {
        assert_eq!(detect_format_rule(d(2020, 10, 20), "October"), None);
    }

    #[test]
    fn rule_render_roundtrip() {
        for layout in DATE_LAYOUTS {
            let rendered = d(2021, 3, 7).format(layout).to_string();
            // The same layout parses its own rendering back.
            assert_eq!(
                NaiveDate::parse_from_str(&rendered, layout).ok(),
                Some(d(2021, 3, 7)),
                "layout {layout}"
            );
            // parse_absolute may attribute the text to an earlier ambiguous
            // candidate, but its answer always re-renders to the input.
            let (parsed, matched) = parse_absolute(&rendered).expect(layout);
            assert_eq!(parsed.format(matched).to_string(), rendered);
        }
    }

    #[test]
    fn two_digit_year_goes_to_its_own_layout() {
        let (parsed, layout) = parse_absolute("20-10-20").unwrap();
        assert_eq!(layout, "%y-%m-%d");
        assert_eq!(parsed, d(2020, 10, 20));
    }

    #[test]
    fn parse_absolute_prefers_month_first() {
        // 03/04/2020 is ambiguous; the candidate order pins month-first.
        let (parsed, layout) = parse_absolute("03/04/2020").unwrap();
        assert_eq!(layout, "%m/%d/%Y");
        assert_eq!(parsed, d(2020, 3, 4));
    }

    #[test]
    fn next_weekday_is_strictly_future() {
        // 2020-10-15 is a Thursday; the next Thursday is one week out.
        let clock = d(2020, 10, 15);
        assert_eq!(clock.weekday(), Weekday::Thu);
        assert_eq!(next_weekday(clock, Weekday::Thu), d(2020, 10, 22));
        assert_eq!(next_weekday(d(2020, 10, 16), Weekday::Thu), d(2020, 10, 22));
    }

    #[test]
    fn last_weekday_is_strictly_past() {
        let clock = d(2020, 10, 15);
        assert_eq!(last_weekday(clock, Weekday::Thu), d(2020, 10, 8));
        assert_eq!(last_weekday(clock, Weekday::Wed), d(2020, 10, 14));
    }

    #[test]
    fn relative_grammar_closed_set() {
        let clock = d(2020, 10, 15);
        assert_eq!(parse_relative("today", clock), Some(clock));
        assert_eq!(parse_relative("Tomorrow", clock), Some(d(2020, 10, 16)));
        assert_eq!(parse_relative("yesterday", clock), Some(d(2020, 10, 14)));
        assert_eq!(
            parse_relative("next Thursday", clock),
            Some(d(2020, 10, 22))
        );
        assert_eq!(parse_relative("last friday", clock), Some(d(2020, 10, 9)));
        assert_eq!(parse_relative("two fridays ago", clock), None);
        assert_eq!(parse_relative("next", clock), None);
    }

    #[test]
    fn phrase_prefers_absolute_layouts() {
        let clock = d(2020, 10, 15);
        assert_eq!(
            parse_date_phrase("2020-01-02", clock),
            Some(d(2020, 1, 2))
        );
        assert_eq!(
            parse_date_phrase("next thursday", clock),
            Some(d(2020, 10, 22))
        );
        assert_eq!(parse_date_phrase("not a date", clock), None);
    }
}
