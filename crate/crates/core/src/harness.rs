//! Case I / Case II splits, weekly forecast windows and run assembly.
//!
//! Ranges are half-open index ranges into a [`FeatureFrame`]. A window's
//! anchor is the last trading day known when its five targets are forecast.
//!
//! Two input layouts exist per target day:
//! * `contemporaneous`: the target day's own eight non-close variables;
//! * `lagged`: all nine variables of the anchor and the four days before it
//!   (45 values) plus the target day's three calendar codes.

use std::fmt::{self, Write as _};
use std::ops::Range;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureFrame, N_VARIABLES};
use crate::metrics::{fmt_measure, ClassificationReport, RegressionReport};
use crate::models::{Task, TrainedModel};

pub const HORIZON: usize = 5;
/// Days of history used by the lagged layout.
pub const LAG_DEPTH: usize = 5;
pub const LAGGED_WIDTH: usize = LAG_DEPTH * N_VARIABLES + 3;
pub const CONTEMPORANEOUS_WIDTH: usize = N_VARIABLES - 1;

pub const REPORT_HEADER: &str =
    "model,task,case,mode,sensitivity,specificity,ppv,npv,ca,mape,pearson,matched_pct,n,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    CaseI,
    CaseII,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::CaseI => "I",
            Case::CaseII => "II",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Contemporaneous,
    Lagged,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Contemporaneous => "contemporaneous",
            Mode::Lagged => "lagged",
        }
    }

    pub fn width(self) -> usize {
        match self {
            Mode::Contemporaneous => CONTEMPORANEOUS_WIDTH,
            Mode::Lagged => LAGGED_WIDTH,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contemporaneous" => Ok(Mode::Contemporaneous),
            "lagged" => Ok(Mode::Lagged),
            _ => Err(Error::Domain(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub case: Case,
    pub train: Range<usize>,
    pub eval: Range<usize>,
}

/// Case I trains and evaluates on `[start, train_end]`; Case II trains on the
/// same rows and evaluates on `(train_end, test_end]`.
pub fn make_case_splits(frame: &FeatureFrame, train_end: NaiveDate, test_end: NaiveDate) -> Result<(SplitPlan, SplitPlan)> {
    let te = frame.index_of(train_end).ok_or(Error::MissingDate(train_end))?;
    let xe = frame.index_of(test_end).ok_or(Error::MissingDate(test_end))?;
    if xe <= te {
        return Err(Error::EmptyRange(format!("test end {test_end} is not after train end {train_end}")));
    }
    let train = 0..te + 1;
    Ok((
        SplitPlan { case: Case::CaseI, train: train.clone(), eval: train.clone() },
        SplitPlan { case: Case::CaseII, train, eval: te + 1..xe + 1 },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForecastWindow {
    /// `None` when the block starts at the first row of the frame.
    pub anchor: Option<usize>,
    pub targets: Range<usize>,
}

/// Consecutive blocks of five targets; the last block may be shorter.
pub fn weekly_windows(range: Range<usize>) -> Vec<ForecastWindow> {
    range
        .clone()
        .step_by(HORIZON)
        .map(|start| ForecastWindow {
            anchor: start.checked_sub(1),
            targets: start..(start + HORIZON).min(range.end),
        })
        .collect()
}

/// Input row for target day `t` of a window anchored at `anchor`.
pub fn input_row(frame: &FeatureFrame, mode: Mode, anchor: Option<usize>, t: usize) -> Result<Vec<f64>> {
    let rows = frame.rows();
    let row = match mode {
        Mode::Contemporaneous => rows[t].predictors().to_vec(),
        Mode::Lagged => {
            let a = anchor.ok_or_else(|| Error::InsufficientData("window has no anchor".into()))?;
            if a + 1 < LAG_DEPTH {
                return Err(Error::InsufficientData(format!("anchor {} has fewer than {LAG_DEPTH} days of history", rows[a].date)));
            }
            let mut v = Vec::with_capacity(LAGGED_WIDTH);
            for k in 0..LAG_DEPTH {
                v.extend(rows[a - k].variables());
            }
            v.extend(rows[t].calendar());
            v
        }
    };
    if !row.iter().all(|x| x.is_finite()) {
        return Err(Error::Numeric(format!("undefined input for {}", rows[t].date)));
    }
    Ok(row)
}

pub fn target_value(frame: &FeatureFrame, task: Task, t: usize) -> f64 {
    let r = &frame.rows()[t];
    match task {
        Task::Classify => r.label() as f64,
        Task::Regress => r.close_norm,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedWindow {
    pub first_target: NaiveDate,
    pub reason: String,
}

/// Training rows for `range`, laid out exactly as at evaluation time.
pub fn training_rows(
    frame: &FeatureFrame,
    range: Range<usize>,
    mode: Mode,
    task: Task,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<SkippedWindow>) {
    let (mut x, mut y, mut skipped) = (Vec::new(), Vec::new(), Vec::new());
    for w in weekly_windows(range) {
        let rows: Result<Vec<Vec<f64>>> = w.targets.clone().map(|t| input_row(frame, mode, w.anchor, t)).collect();
        match rows {
            Ok(rows) => {
                x.extend(rows);
                y.extend(w.targets.clone().map(|t| target_value(frame, task, t)));
            }
            Err(e) => skipped.push(SkippedWindow { first_target: frame.rows()[w.targets.start].date, reason: e.to_string() }),
        }
    }
    (x, y, skipped)
}

/// Anything that can forecast one window's targets.
pub trait Forecaster: Sync {
    fn id(&self) -> String;
    fn task(&self) -> Task;
    fn seed(&self) -> u64;
    fn predict_window(&self, frame: &FeatureFrame, mode: Mode, window: &ForecastWindow) -> Result<Vec<f64>>;
}

impl Forecaster for TrainedModel {
    fn id(&self) -> String {
        self.spec.algo.name().to_string()
    }

    fn task(&self) -> Task {
        self.spec.task
    }

    fn seed(&self) -> u64 {
        self.spec.seed
    }

    fn predict_window(&self, frame: &FeatureFrame, mode: Mode, window: &ForecastWindow) -> Result<Vec<f64>> {
        window.targets.clone().map(|t| self.predict_row(&input_row(frame, mode, window.anchor, t)?)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Classification(ClassificationReport),
    Regression(RegressionReport<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub model: String,
    pub task: Task,
    pub case: Case,
    pub mode: Mode,
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    pub skipped: Vec<SkippedWindow>,
    pub report: Report,
    pub seed: u64,
}

fn assemble(
    frame: &FeatureFrame,
    f: &dyn Forecaster,
    plan: &SplitPlan,
    mode: Mode,
    per_window: Vec<(ForecastWindow, Result<Vec<f64>>)>,
) -> Result<EvalRun> {
    let task = f.task();
    let (mut dates, mut actual, mut predicted, mut skipped) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (w, preds) in per_window {
        match preds {
            Ok(p) => {
                for (t, v) in w.targets.clone().zip(p) {
                    dates.push(frame.rows()[t].date);
                    actual.push(target_value(frame, task, t));
                    predicted.push(v);
                }
            }
            Err(e) if e.is_validation() || matches!(e, Error::Numeric(_)) => skipped.push(SkippedWindow {
                first_target: frame.rows()[w.targets.start].date,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if actual.is_empty() {
        return Err(Error::EmptyRange(format!("no window of case {} could be evaluated", plan.case.name())));
    }
    let report = match task {
        Task::Classify => {
            let a: Vec<u8> = actual.iter().map(|&v| v as u8).collect();
            let p: Vec<u8> = predicted.iter().map(|&v| u8::from(v > 0.5)).collect();
            Report::Classification(ClassificationReport::from_labels(&a, &p)?)
        }
        Task::Regress => Report::Regression(RegressionReport::from_values(&actual, &predicted)?),
    };
    Ok(EvalRun { model: f.id(), task, case: plan.case, mode, dates, actual, predicted, skipped, report, seed: f.seed() })
}

/// Forecasts every weekly window of the plan's evaluation range with one model.
pub fn evaluate(f: &dyn Forecaster, frame: &FeatureFrame, plan: &SplitPlan, mode: Mode) -> Result<EvalRun> {
    if plan.eval.is_empty() {
        return Err(Error::EmptyRange(format!("case {} has no evaluation days", plan.case.name())));
    }
    let per_window = weekly_windows(plan.eval.clone())
        .into_iter()
        .map(|w| {
            let p = f.predict_window(frame, mode, &w);
            (w, p)
        })
        .collect();
    assemble(frame, f, plan, mode, per_window)
}

/// Like [`evaluate`], but refits before every window on all rows up to its anchor.
pub fn evaluate_refit<F, M>(fit: F, frame: &FeatureFrame, plan: &SplitPlan, mode: Mode, reference: &dyn Forecaster) -> Result<EvalRun>
where
    F: Fn(Range<usize>) -> Result<M>,
    M: Forecaster,
{
    if plan.eval.is_empty() {
        return Err(Error::EmptyRange(format!("case {} has no evaluation days", plan.case.name())));
    }
    let per_window = weekly_windows(plan.eval.clone())
        .into_iter()
        .map(|w| {
            let end = w.anchor.map_or(0, |a| a + 1).max(plan.train.end);
            let p = fit(plan.train.start..end).and_then(|m| m.predict_window(frame, mode, &w));
            (w, p)
        })
        .collect();
    assemble(frame, reference, plan, mode, per_window)
}

impl EvalRun {
    /// One report row (no trailing newline).
    pub fn csv_row(&self) -> String {
        let mut s = format!("{},{},{},{}", self.model, self.task.name(), self.case.name(), self.mode.name());
        let na = |n: usize| vec!["NA"; n].join(",");
        match &self.report {
            Report::Classification(r) => {
                for v in [r.sensitivity, r.specificity, r.ppv, r.npv, r.accuracy] {
                    let _ = write!(s, ",{}", fmt_measure(v, 4));
                }
                let _ = write!(s, ",{}", na(3));
            }
            Report::Regression(r) => {
                let _ = write!(
                    s,
                    ",{},{},{},{}",
                    na(5),
                    fmt_measure(r.mape, 4),
                    fmt_measure(r.pearson, 6),
                    fmt_measure(Some(r.matched_pct), 4)
                );
            }
        }
        let _ = write!(s, ",{},{}", self.actual.len(), self.seed);
        s
    }

    /// `date,actual,predicted` per evaluated day.
    pub fn predictions_csv(&self) -> String {
        let mut s = String::from("date,actual,predicted\n");
        for ((d, a), p) in self.dates.iter().zip(&self.actual).zip(&self.predicted) {
            let _ = writeln!(s, "{d},{a},{p}");
        }
        s
    }
}

/// Header plus one row per run, in the order given.
pub fn report_csv(runs: &[EvalRun]) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for r in runs {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}
