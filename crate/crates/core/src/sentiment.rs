//! Lexicon-based mood scoring of dated short texts.
//!
//! Texts are normalized by fixed rules (no language model), matched against a
//! `token,mood,weight` lexicon, and aggregated into one four-mood vector per
//! trading day. The shipped lexicon is a starting point, not a calibrated
//! instrument.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureFrame;
use crate::market_data::parse_date;

pub const MOOD_CSV_HEADER: &str = "date,calm,happy,alert,kind";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mood {
    Calm,
    Happy,
    Alert,
    Kind,
}

impl Mood {
    pub const ALL: [Mood; 4] = [Mood::Calm, Mood::Happy, Mood::Alert, Mood::Kind];

    pub fn name(self) -> &'static str {
        match self {
            Mood::Calm => "calm",
            Mood::Happy => "happy",
            Mood::Alert => "alert",
            Mood::Kind => "kind",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Mood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mood::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Format(format!("unknown mood {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub date: NaiveDate,
    pub text: String,
}

/// Reads `YYYY-MM-DD<TAB>text` lines. Blank lines are skipped; a line whose
/// text is empty after trimming is an error.
pub fn parse_tweets(text: &str) -> Result<Vec<TweetRecord>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (date, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::Format(format!("line {}: expected date<TAB>text", no + 1)))?;
        let body = body.trim();
        if body.is_empty() {
            return Err(Error::Format(format!("line {}: empty text", no + 1)));
        }
        out.push(TweetRecord { date: parse_date(date)?, text: body.to_string() });
    }
    Ok(out)
}

/// Market vocabulary that carries no mood and is removed after stemming.
const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "of", "to", "in", "on", "at", "is", "are", "be", "it", "for", "with", "market",
    "stock", "share", "index", "nifty", "nse", "bse", "sensex", "trade", "today",
];

fn stem(token: &str) -> String {
    for suffix in ["ing", "ed", "ly"] {
        if let Some(stem) = token.strip_suffix(suffix) {
            if stem.chars().count() >= 3 {
                return stem.to_string();
            }
        }
    }
    if let Some(stem) = token.strip_suffix('s') {
        if !stem.ends_with('s') && stem.chars().count() >= 3 {
            return stem.to_string();
        }
    }
    token.to_string()
}

/// Lowercases, drops URLs and @mentions, keeps hashtag words, removes digits
/// and punctuation, splits on whitespace and strips one of the suffixes
/// -ing/-ed/-ly/-s when at least three letters remain.
pub fn normalize_text(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for raw in text.split_whitespace() {
        let lower = raw.to_lowercase();
        if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
            continue;
        }
        if lower.starts_with('@') {
            continue;
        }
        let cleaned: String = lower.chars().map(|c| if c.is_alphabetic() { c } else { ' ' }).collect();
        for word in cleaned.split_whitespace() {
            let stemmed = stem(word);
            if !STOPWORDS.contains(&stemmed.as_str()) {
                tokens.push(stemmed);
            }
        }
    }
    tokens
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    entries: BTreeMap<String, (Mood, f64)>,
}

impl Lexicon {
    /// Entry tokens go through the same normalization as text, so the file may
    /// list surface forms ("calming") or stems ("calm").
    pub fn insert(&mut self, token: &str, mood: Mood, weight: f64) -> Result<()> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Format(format!("weight for {token:?} must be positive")));
        }
        let normalized = normalize_text(token);
        let [key] = normalized.as_slice() else {
            return Err(Error::Format(format!("lexicon token {token:?} is not a single word")));
        };
        if self.entries.insert(key.clone(), (mood, weight)).is_some() {
            return Err(Error::Format(format!("duplicate lexicon token {key:?}")));
        }
        Ok(())
    }

    /// Parses `token,mood,weight` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Lexicon::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let [token, mood, weight] = parts.as_slice() else {
                return Err(Error::Format(format!("lexicon line {}: expected token,mood,weight", no + 1)));
            };
            let weight: f64 =
                weight.parse().map_err(|_| Error::Format(format!("lexicon line {}: bad weight", no + 1)))?;
            lex.insert(token, mood.parse()?, weight)?;
        }
        Ok(lex)
    }

    pub fn get(&self, token: &str) -> Option<(Mood, f64)> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { entries: self.entries.iter().map(|(k, &(m, w))| (k.clone(), (m, w * factor))).collect() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MoodVector {
    pub calm: f64,
    pub happy: f64,
    pub alert: f64,
    pub kind: f64,
    pub normalized: bool,
}

impl MoodVector {
    pub fn as_array(&self) -> [f64; 4] {
        [self.calm, self.happy, self.alert, self.kind]
    }

    pub fn from_array(v: [f64; 4], normalized: bool) -> Self {
        Self { calm: v[0], happy: v[1], alert: v[2], kind: v[3], normalized }
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

/// Sums matched weights per mood and rescales to unit sum; no matches gives zeros.
pub fn score_day<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> MoodVector {
    let mut raw = [0.0; 4];
    for t in tokens {
        if let Some((mood, w)) = lexicon.get(t.as_ref()) {
            raw[mood.index()] += w;
        }
    }
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        MoodVector::from_array(raw.map(|v| v / total), true)
    } else {
        MoodVector::from_array([0.0; 4], true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoodSeries {
    pub dates: Vec<NaiveDate>,
    pub moods: Vec<MoodVector>,
    /// Whether any text landed on the day.
    pub covered: Vec<bool>,
}

impl MoodSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn coverage(&self) -> f64 {
        if self.covered.is_empty() {
            return 0.0;
        }
        100.0 * self.covered.iter().filter(|&&c| c).count() as f64 / self.covered.len() as f64
    }

    pub fn column(&self, mood: Mood) -> Vec<f64> {
        self.moods.iter().map(|m| m.as_array()[mood.index()]).collect()
    }

    /// Errors unless the dates equal the frame's, in order.
    pub fn check_aligned(&self, frame: &FeatureFrame) -> Result<()> {
        if self.dates.len() != frame.len() {
            return Err(Error::Alignment(format!("{} mood days vs {} feature rows", self.dates.len(), frame.len())));
        }
        for (d, r) in self.dates.iter().zip(frame.rows()) {
            if *d != r.date {
                return Err(Error::Alignment(format!("mood date {d} vs feature date {}", r.date)));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(MOOD_CSV_HEADER);
        out.push('\n');
        for (d, m) in self.dates.iter().zip(&self.moods) {
            let _ = writeln!(out, "{d},{},{},{},{}", m.calm, m.happy, m.alert, m.kind);
        }
        out
    }

    /// Reads a precomputed `date,calm,happy,alert,kind` file. Values are taken as given.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> =
            reader.headers().map_err(|e| Error::Format(e.to_string()))?.iter().map(str::to_string).collect();
        if header.join(",") != MOOD_CSV_HEADER {
            return Err(Error::Format(format!("unexpected mood header {:?}", header.join(","))));
        }
        let mut series = MoodSeries { dates: Vec::new(), moods: Vec::new(), covered: Vec::new() };
        for record in reader.records() {
            let record = record.map_err(|e| Error::Format(e.to_string()))?;
            let date = parse_date(&record[0])?;
            let mut v = [0.0; 4];
            for (i, slot) in v.iter_mut().enumerate() {
                *slot = record[i + 1]
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Format(format!("{date}: bad mood value {:?}", &record[i + 1])))?;
            }
            if let Some(&prev) = series.dates.last() {
                if date <= prev {
                    return Err(Error::Ordering { prev, next: date });
                }
            }
            let covered = v.iter().any(|&x| x != 0.0);
            series.dates.push(date);
            series.moods.push(MoodVector::from_array(v, false));
            series.covered.push(covered);
        }
        Ok(series)
    }
}

/// Scores texts per trading day of `frame`.
///
/// A text dated on a non-trading day counts toward the next trading day.
/// Texts before the first or after the last frame date are ignored; if texts
/// exist but none fall inside the frame, that is an error.
pub fn build_mood_series(records: &[TweetRecord], lexicon: &Lexicon, frame: &FeatureFrame) -> Result<MoodSeries> {
    let dates = frame.dates();
    let mut tokens: Vec<Vec<String>> = vec![Vec::new(); dates.len()];
    let mut hits = vec![false; dates.len()];
    let mut placed = 0usize;
    for rec in records {
        let slot = dates.partition_point(|d| *d < rec.date);
        if slot == dates.len() || (slot == 0 && rec.date < dates[0]) {
            continue;
        }
        tokens[slot].extend(normalize_text(&rec.text));
        hits[slot] = true;
        placed += 1;
    }
    if !records.is_empty() && placed == 0 {
        return Err(Error::EmptyOverlap(format!("none of {} texts fall inside the frame", records.len())));
    }
    let moods = tokens.iter().map(|t| score_day(t, lexicon)).collect();
    Ok(MoodSeries { dates, moods, covered: hits })
}
