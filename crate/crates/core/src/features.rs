//! The nine derived variables and the direction label.
//!
//! Every `*_norm` value is a day-over-day percent change (×100). Calendar fields
//! are coded month 1-12, day of month 1-31 and day of week Monday=1..Friday=5.

use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{is_weekday, parse_date, PriceSeries};
use crate::scalar::Scalar;

pub const FEATURE_CSV_HEADER: &str =
    "date,month,day_month,day_week,open_norm,high_norm,low_norm,close_norm,vol_norm,range_norm,label";

/// Number of variables per row (three calendar codes and six percent changes).
pub const N_VARIABLES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub date: NaiveDate,
    pub month: u32,
    pub day_month: u32,
    pub day_week: u32,
    pub open_norm: f64,
    pub high_norm: f64,
    pub low_norm: f64,
    pub close_norm: f64,
    pub vol_norm: f64,
    pub range_norm: f64,
    /// Previous day's volume was zero; `vol_norm` forced to 0.
    pub vol_flagged: bool,
    /// Previous day's high equalled its low; `range_norm` forced to 0.
    pub range_flagged: bool,
}

impl FeatureRow {
    pub fn label(&self) -> u8 {
        binarize_direction(self.close_norm)
    }

    /// All nine variables in canonical order:
    /// month, day_month, day_week, open, high, low, close, vol, range.
    pub fn variables(&self) -> [f64; N_VARIABLES] {
        [
            self.month as f64,
            self.day_month as f64,
            self.day_week as f64,
            self.open_norm,
            self.high_norm,
            self.low_norm,
            self.close_norm,
            self.vol_norm,
            self.range_norm,
        ]
    }

    /// The eight variables other than `close_norm`.
    pub fn predictors(&self) -> [f64; N_VARIABLES - 1] {
        [
            self.month as f64,
            self.day_month as f64,
            self.day_week as f64,
            self.open_norm,
            self.high_norm,
            self.low_norm,
            self.vol_norm,
            self.range_norm,
        ]
    }

    pub fn calendar(&self) -> [f64; 3] {
        [self.month as f64, self.day_month as f64, self.day_week as f64]
    }

    pub fn norms_mut(&mut self) -> [&mut f64; 6] {
        [
            &mut self.open_norm,
            &mut self.high_norm,
            &mut self.low_norm,
            &mut self.close_norm,
            &mut self.vol_norm,
            &mut self.range_norm,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureFrame {
    rows: Vec<FeatureRow>,
}

impl FeatureFrame {
    pub fn from_rows(rows: Vec<FeatureRow>) -> Result<Self> {
        for pair in rows.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(Error::Ordering { prev: pair[0].date, next: pair[1].date });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [FeatureRow] {
        &mut self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.rows.iter().map(|r| r.date).collect()
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.rows.binary_search_by_key(&date, |r| r.date).ok()
    }

    pub fn close_norms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.close_norm).collect()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(FeatureRow::label).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 96);
        out.push_str(FEATURE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.date,
                r.month,
                r.day_month,
                r.day_week,
                r.open_norm,
                r.high_norm,
                r.low_norm,
                r.close_norm,
                r.vol_norm,
                r.range_norm,
                r.label()
            );
        }
        out
    }

    /// Reads the CSV written by [`FeatureFrame::to_csv`]; `#` lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Format(e.to_string()))?;
        let header: Vec<&str> = header.iter().collect();
        if header.join(",") != FEATURE_CSV_HEADER {
            return Err(Error::Format(format!("unexpected feature header {:?}", header.join(","))));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Format(e.to_string()))?;
            let date = parse_date(&record[0])?;
            let int = |i: usize| {
                record[i].parse::<u32>().map_err(|_| Error::Format(format!("{date}: bad integer {:?}", &record[i])))
            };
            let num = |i: usize| {
                record[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Format(format!("{date}: bad number {:?}", &record[i])))
            };
            rows.push(FeatureRow {
                date,
                month: int(1)?,
                day_month: int(2)?,
                day_week: int(3)?,
                open_norm: num(4)?,
                high_norm: num(5)?,
                low_norm: num(6)?,
                close_norm: num(7)?,
                vol_norm: num(8)?,
                range_norm: num(9)?,
                vol_flagged: false,
                range_flagged: false,
            });
        }
        FeatureFrame::from_rows(rows)
    }
}

/// `(month, day_month, day_week)` with Monday coded 1 and Friday 5.
pub fn calendar_features(date: NaiveDate) -> Result<(u32, u32, u32)> {
    if !is_weekday(date) {
        return Err(Error::Domain(format!("{date} is not a weekday")));
    }
    Ok((date.month(), date.day(), date.weekday().number_from_monday()))
}

/// `100 * (curr - prev) / prev`.
pub fn pct_change<T: Scalar>(prev: T, curr: T) -> Result<T> {
    if !(prev > T::zero()) {
        return Err(Error::Domain(format!("percent change from non-positive base {prev}")));
    }
    Ok(T::of(100.0) * (curr - prev) / prev)
}

/// 1 for a rise, 0 otherwise; an unchanged close is not a rise.
pub fn binarize_direction<T: Scalar>(close_norm: T) -> u8 {
    u8::from(close_norm > T::zero())
}

fn pct_or_flag(prev: f64, curr: f64) -> Result<(f64, bool)> {
    if prev == 0.0 {
        Ok((0.0, true))
    } else {
        pct_change(prev, curr).map(|v| (v, false))
    }
}

pub fn derive_features(series: &PriceSeries) -> Result<FeatureFrame> {
    let bars = series.bars();
    if bars.len() < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 bars, got {}", bars.len())));
    }
    let mut rows = Vec::with_capacity(bars.len() - 1);
    for pair in bars.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let (month, day_month, day_week) = calendar_features(cur.date)?;
        let (vol_norm, vol_flagged) = pct_or_flag(prev.volume, cur.volume)?;
        let (range_norm, range_flagged) = pct_or_flag(prev.range(), cur.range())?;
        rows.push(FeatureRow {
            date: cur.date,
            month,
            day_month,
            day_week,
            open_norm: pct_change(prev.open, cur.open)?,
            high_norm: pct_change(prev.high, cur.high)?,
            low_norm: pct_change(prev.low, cur.low)?,
            close_norm: pct_change(prev.close, cur.close)?,
            vol_norm,
            range_norm,
            vol_flagged,
            range_flagged,
        });
    }
    FeatureFrame::from_rows(rows)
}
