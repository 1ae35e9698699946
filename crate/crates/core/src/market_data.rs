//! Daily OHLCV ingestion and calendar validation.
//!
//! Input is the usual finance-site export: a header row
//! `Date,Open,High,Low,Close,Volume`, optionally with an `Adj Close` column
//! (ignored), and ISO dates. Rows with a blank or `null` numeric field are
//! dropped and counted; everything else that is wrong is an error.

use std::fmt::Write as _;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REQUIRED: [&str; 6] = ["Date", "Open", "High", "Low", "Close", "Volume"];
const IGNORED: &str = "Adj Close";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcvBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl OhlcvBar {
    /// Builds a bar, enforcing positivity and the low/high envelope.
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64, volume: f64) -> Result<Self> {
        let bar = Self { date, open, high, low, close, volume };
        bar.check()?;
        Ok(bar)
    }

    fn check(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::Validation { date: self.date, reason });
        for (name, v) in [("open", self.open), ("high", self.high), ("low", self.low), ("close", self.close)] {
            if !v.is_finite() || v <= 0.0 {
                return fail(format!("{name} must be a positive number, got {v}"));
            }
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return fail(format!("volume must be non-negative, got {}", self.volume));
        }
        if self.low > self.open.min(self.close) {
            return fail(format!("low {} above min(open, close)", self.low));
        }
        if self.high < self.open.max(self.close) {
            return fail(format!("high {} below max(open, close)", self.high));
        }
        if self.low > self.high {
            return fail(format!("low {} above high {}", self.low, self.high));
        }
        Ok(())
    }

    pub fn range(&self) -> f64 {
        self.high - self.low
    }
}

pub fn is_weekday(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Bars in strictly increasing weekday order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PriceSeries {
    bars: Vec<OhlcvBar>,
}

impl PriceSeries {
    pub fn new(bars: Vec<OhlcvBar>) -> Result<Self> {
        for bar in &bars {
            bar.check()?;
            if !is_weekday(bar.date) {
                return Err(Error::Validation { date: bar.date, reason: "weekend date".into() });
            }
        }
        for pair in bars.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(Error::Ordering { prev: pair[0].date, next: pair[1].date });
            }
        }
        Ok(Self { bars })
    }

    /// Wraps bars without any checks. Only useful for exercising
    /// [`validate_series`] on series the parser would have rejected.
    pub fn from_bars_unchecked(bars: Vec<OhlcvBar>) -> Self {
        Self { bars }
    }

    pub fn bars(&self) -> &[OhlcvBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Same bars, each price and the volume multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let bars = self
            .bars
            .iter()
            .map(|b| OhlcvBar::new(b.date, b.open * factor, b.high * factor, b.low * factor, b.close * factor, b.volume * factor))
            .collect::<Result<Vec<_>>>()?;
        PriceSeries::new(bars)
    }

    /// Serializes back to the canonical CSV layout. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Date,Open,High,Low,Close,Volume\n");
        for b in &self.bars {
            let _ = writeln!(out, "{},{},{},{},{},{}", b.date, b.open, b.high, b.low, b.close, b.volume);
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseReport {
    pub rows_read: usize,
    /// 1-based data-row numbers dropped for a missing numeric field.
    pub dropped_rows: Vec<usize>,
}

impl ParseReport {
    pub fn dropped(&self) -> usize {
        self.dropped_rows.len()
    }
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub series: PriceSeries,
    pub report: ParseReport,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("null") || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan")
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| Error::Format(format!("bad date {s:?}: {e}")))
}

/// Parses a daily OHLCV CSV export.
pub fn parse_ohlcv_csv(text: &str) -> Result<Parsed> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let mut columns = [usize::MAX; 6];
    for (idx, name) in header.iter().enumerate() {
        if let Some(slot) = REQUIRED.iter().position(|r| *r == name) {
            if columns[slot] != usize::MAX {
                return Err(Error::Format(format!("duplicate column {name:?}")));
            }
            columns[slot] = idx;
        } else if name != IGNORED {
            return Err(Error::Format(format!("unexpected column {name:?}")));
        }
    }
    if let Some(slot) = columns.iter().position(|&c| c == usize::MAX) {
        return Err(Error::Format(format!("missing column {:?}", REQUIRED[slot])));
    }

    let mut report = ParseReport::default();
    let mut bars = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        report.rows_read += 1;
        let field = |slot: usize| record.get(columns[slot]).unwrap_or("");
        if field(0).is_empty() && record.iter().all(str::is_empty) {
            report.rows_read -= 1;
            continue;
        }
        let date = parse_date(field(0))?;
        if (1..6).any(|slot| is_missing(field(slot))) {
            report.dropped_rows.push(row_no + 1);
            continue;
        }
        let mut values = [0.0; 5];
        for slot in 1..6 {
            values[slot - 1] = field(slot)
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("{date}: bad {} value {:?}", REQUIRED[slot], field(slot))))?;
        }
        let [open, high, low, close, volume] = values;
        let bar = OhlcvBar::new(date, open, high, low, close, volume)?;
        if !is_weekday(date) {
            return Err(Error::Validation { date, reason: "weekend date".into() });
        }
        if let Some(prev) = bars.last().map(|b: &OhlcvBar| b.date) {
            if date <= prev {
                return Err(Error::Ordering { prev, next: date });
            }
        }
        bars.push(bar);
    }
    Ok(Parsed { series: PriceSeries { bars }, report })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GapReport {
    pub missing_weekdays: Vec<NaiveDate>,
    pub duplicates: Vec<NaiveDate>,
    pub weekend_rows: Vec<NaiveDate>,
}

impl GapReport {
    pub fn is_clean(&self) -> bool {
        self.missing_weekdays.is_empty() && self.duplicates.is_empty() && self.weekend_rows.is_empty()
    }

    /// Removes gaps that fall on known exchange holidays.
    pub fn excluding(mut self, holidays: &[NaiveDate]) -> Self {
        self.missing_weekdays.retain(|d| !holidays.contains(d));
        self
    }

    /// One line per finding: `gap <date>`, `duplicate <date>`, `weekend <date>`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for d in &self.missing_weekdays {
            let _ = writeln!(out, "gap {d}");
        }
        for d in &self.duplicates {
            let _ = writeln!(out, "duplicate {d}");
        }
        for d in &self.weekend_rows {
            let _ = writeln!(out, "weekend {d}");
        }
        out
    }
}

/// Calendar audit of a series. Never modifies it.
pub fn validate_series(series: &PriceSeries) -> GapReport {
    let mut report = GapReport::default();
    for bar in &series.bars {
        if !is_weekday(bar.date) {
            report.weekend_rows.push(bar.date);
        }
    }
    for pair in series.bars.windows(2) {
        let (a, b) = (pair[0].date, pair[1].date);
        if a == b {
            report.duplicates.push(b);
            continue;
        }
        let mut d = a;
        while let Some(next) = d.checked_add_days(Days::new(1)) {
            if next >= b {
                break;
            }
            if is_weekday(next) {
                report.missing_weekdays.push(next);
            }
            d = next;
        }
    }
    report
}

/// Reads a list of dates, one per line; blank lines and `#` comments skipped.
pub fn parse_date_list(text: &str) -> Result<Vec<NaiveDate>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(parse_date)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    const HEADER: &str = "Date,Open,High,Low,Close,Volume\n";

    #[test]
    fn single_row() {
        let text = format!("{HEADER}2015-01-02,8272.80,8285.45,8245.80,8284.00,150000\n");
        let parsed = parse_ohlcv_csv(&text).unwrap();
        assert_eq!(parsed.series.len(), 1);
        let b = parsed.series.bars()[0];
        assert_eq!(b.date, d("2015-01-02"));
        assert_eq!((b.open, b.high, b.low, b.close, b.volume), (8272.80, 8285.45, 8245.80, 8284.00, 150000.0));
        assert_eq!(parsed.report.dropped(), 0);
    }

    #[test]
    fn low_above_high_names_date() {
        let text = format!("{HEADER}2015-01-02,100,101,102,100.5,10\n");
        match parse_ohlcv_csv(&text) {
            Err(Error::Validation { date, .. }) => assert_eq!(date, d("2015-01-02")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn blank_close_dropped() {
        let text = format!(
            "{HEADER}2015-01-05,100,101,99,100,10\n2015-01-06,100,101,99,,10\n2015-01-07,100,102,99,101,10\n"
        );
        let parsed = parse_ohlcv_csv(&text).unwrap();
        assert_eq!(parsed.series.len(), 2);
        assert_eq!(parsed.report.dropped(), 1);
        assert_eq!(parsed.report.dropped_rows, vec![2]);
    }

    #[test]
    fn adj_close_ignored() {
        let text = "Date,Open,High,Low,Close,Adj Close,Volume\n2015-01-05,100,101,99,100,1.0,10\n";
        let parsed = parse_ohlcv_csv(text).unwrap();
        assert_eq!(parsed.series.bars()[0].close, 100.0);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(parse_ohlcv_csv("Date,Open,High,Low,Close\n"), Err(Error::Format(_))));
        assert!(matches!(parse_ohlcv_csv("Date,Open,High,Low,Close,Volume,Extra\n"), Err(Error::Format(_))));
    }

    #[test]
    fn out_of_order_and_weekend() {
        let text = format!("{HEADER}2015-01-06,100,101,99,100,10\n2015-01-05,100,101,99,100,10\n");
        assert!(matches!(parse_ohlcv_csv(&text), Err(Error::Ordering { .. })));
        let text = format!("{HEADER}2015-01-03,100,101,99,100,10\n");
        assert!(matches!(parse_ohlcv_csv(&text), Err(Error::Validation { .. })));
    }

    #[test]
    fn crlf_matches_lf() {
        let lf = format!("{HEADER}2015-01-05,100,101,99,100,10\n2015-01-06,100,102,99,101,12\n");
        let crlf = lf.replace('\n', "\r\n");
        let padded = lf.replace('\n', "  \n");
        let a = parse_ohlcv_csv(&lf).unwrap().series;
        assert_eq!(a, parse_ohlcv_csv(&crlf).unwrap().series);
        assert_eq!(a, parse_ohlcv_csv(&padded).unwrap().series);
    }

    fn bar(date: &str) -> OhlcvBar {
        OhlcvBar::new(d(date), 10.0, 11.0, 9.0, 10.0, 1.0).unwrap()
    }

    #[test]
    fn gaps() {
        // 2015-01-05 is a Monday.
        let s = PriceSeries::new(vec![bar("2015-01-05"), bar("2015-01-06"), bar("2015-01-07")]).unwrap();
        assert!(validate_series(&s).is_clean());

        let s = PriceSeries::new(vec![bar("2015-01-05"), bar("2015-01-07")]).unwrap();
        let r = validate_series(&s);
        assert_eq!(r.missing_weekdays, vec![d("2015-01-06")]);
        assert_eq!(r.render(), "gap 2015-01-06\n");

        // Friday to Monday is not a gap.
        let s = PriceSeries::new(vec![bar("2015-01-09"), bar("2015-01-12")]).unwrap();
        assert!(validate_series(&s).is_clean());
    }

    #[test]
    fn duplicates_only_in_hand_built_series() {
        assert!(PriceSeries::new(vec![bar("2015-01-05"), bar("2015-01-05")]).is_err());
        let s = PriceSeries::from_bars_unchecked(vec![bar("2015-01-05"), bar("2015-01-05")]);
        let r = validate_series(&s);
        assert_eq!(r.duplicates.len(), 1);
        assert_eq!(r.render(), "duplicate 2015-01-05\n");
    }

    #[test]
    fn holidays_excluded() {
        let s = PriceSeries::new(vec![bar("2015-01-05"), bar("2015-01-07")]).unwrap();
        assert!(validate_series(&s).excluding(&[d("2015-01-06")]).is_clean());
    }
}
