//! Subcommand bodies. Each builds its output files in memory; `Outputs::write`
//! puts them on disk once, in path order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use stockcast::features::{derive_features, FeatureFrame};
use stockcast::granger::granger_grid;
use stockcast::harness::{
    evaluate, evaluate_refit, make_case_splits, training_rows, Case, EvalRun, Mode, SplitPlan, REPORT_HEADER,
};
use stockcast::lstm::{loss_curve_csv, train_lstm};
use stockcast::market_data::{parse_date_list, parse_ohlcv_csv, validate_series, Parsed};
use stockcast::metrics::fmt_measure;
use stockcast::models::fit;
use stockcast::sentiment::{build_mood_series, parse_tweets, Lexicon, Mood, MoodSeries};
use stockcast::sofnn::{train_sofnn, SofnnRun};

use crate::config::{Job, RunConfig};
use crate::error::{CliError, CliResult};
use crate::plot::line_chart;

pub const DEFAULT_TRAIN_END: &str = "2017-12-29";
pub const DEFAULT_TEST_END: &str = "2019-06-28";

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

/// Files to write, keyed by path relative to the output directory.
#[derive(Default)]
pub struct Outputs {
    pub files: BTreeMap<PathBuf, String>,
    /// Models that failed; non-empty means exit code 3.
    pub failures: Vec<String>,
}

impl Outputs {
    fn add(&mut self, path: impl Into<PathBuf>, body: String) {
        self.files.insert(path.into(), body);
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        for (rel, body) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

impl Ctx {
    /// `stockcast <version> seed=<seed> config=<sha256>`
    pub fn stamp(&self) -> CliResult<String> {
        Ok(format!("stockcast {} seed={} config={}", env!("CARGO_PKG_VERSION"), self.cfg.seed()?, self.cfg.hash()))
    }

    fn commented(&self, body: &str) -> CliResult<String> {
        Ok(format!("# {}\n{body}", self.stamp()?))
    }

    fn read(&self, path: &Path) -> CliResult<String> {
        std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
    }

    fn prices(&self, path: &Path) -> CliResult<Parsed> {
        Ok(parse_ohlcv_csv(&self.read(path)?)?)
    }

    /// Features from `prices` if configured, otherwise from a `features` CSV.
    fn frame(&self) -> CliResult<FeatureFrame> {
        if let Some(p) = self.cfg.path("prices") {
            return Ok(derive_features(&self.prices(&p)?.series)?);
        }
        if let Some(p) = self.cfg.path("features") {
            return Ok(FeatureFrame::from_csv(&self.read(&p)?)?);
        }
        Err(CliError::Usage("config needs `prices` or `features`".into()))
    }

    /// A precomputed mood CSV, or tweets scored with a lexicon.
    fn moods(&self, frame: &FeatureFrame) -> CliResult<MoodSeries> {
        let moods = if let Some(p) = self.cfg.path("moods") {
            MoodSeries::from_csv(&self.read(&p)?)?
        } else if let Some(p) = self.cfg.path("tweets") {
            let lexicon = Lexicon::parse(&self.read(&self.cfg.require_path("lexicon")?)?)?;
            build_mood_series(&parse_tweets(&self.read(&p)?)?, &lexicon, frame)?
        } else {
            return Err(CliError::Usage("config needs `moods` or `tweets` + `lexicon`".into()));
        };
        moods.check_aligned(frame)?;
        Ok(moods)
    }

    fn plans(&self, frame: &FeatureFrame) -> CliResult<(SplitPlan, SplitPlan)> {
        let train_end = self.cfg.date("train_end", DEFAULT_TRAIN_END)?;
        let test_end = self.cfg.date("test_end", DEFAULT_TEST_END)?;
        Ok(make_case_splits(frame, train_end, test_end)?)
    }
}

pub fn ingest(ctx: &Ctx, prices: Option<PathBuf>) -> CliResult<Outputs> {
    let path = match prices {
        Some(p) => p,
        None => ctx.cfg.require_path("prices")?,
    };
    let parsed = ctx.prices(&path)?;
    let mut gaps = validate_series(&parsed.series);
    let mut holidays = 0;
    if let Some(h) = ctx.cfg.path("holidays") {
        let list = parse_date_list(&ctx.read(&h)?)?;
        let before = gaps.missing_weekdays.len();
        gaps = gaps.excluding(&list);
        holidays = before - gaps.missing_weekdays.len();
    }
    let bars = parsed.series.bars();
    let mut body = String::new();
    let _ = writeln!(body, "bars {}", bars.len());
    if let (Some(first), Some(last)) = (bars.first(), bars.last()) {
        let _ = writeln!(body, "first {}\nlast {}", first.date, last.date);
    }
    let _ = writeln!(body, "dropped {}", parsed.report.dropped());
    let _ = writeln!(body, "holiday gaps {holidays}");
    body.push_str(&gaps.render());
    print!("{body}");
    let mut out = Outputs::default();
    out.add("ingest.txt", ctx.commented(&body)?);
    Ok(out)
}

pub fn features(ctx: &Ctx, prices: Option<PathBuf>) -> CliResult<Outputs> {
    let path = match prices {
        Some(p) => p,
        None => ctx.cfg.require_path("prices")?,
    };
    let frame = derive_features(&ctx.prices(&path)?.series)?;
    println!("{} feature rows", frame.len());
    let mut out = Outputs::default();
    out.add("features.csv", ctx.commented(&frame.to_csv())?);
    Ok(out)
}

struct JobResult {
    job: Job,
    runs: Vec<(Case, Result<EvalRun, String>)>,
    loss_curve: Option<Vec<f64>>,
}

fn run_job(job: &Job, frame: &FeatureFrame, plans: &(SplitPlan, SplitPlan), mode: Mode) -> JobResult {
    let cases = [&plans.0, &plans.1];
    let fail_all = |e: String| cases.iter().map(|p| (p.case, Err(e.clone()))).collect();
    match job {
        Job::Shallow(spec) => {
            let (x, y, _) = training_rows(frame, plans.0.train.clone(), mode, spec.task);
            let runs = match fit(spec, &x, &y) {
                Ok(model) => cases.iter().map(|p| (p.case, evaluate(&model, frame, p, mode).map_err(|e| e.to_string()))).collect(),
                Err(e) => fail_all(e.to_string()),
            };
            JobResult { job: job.clone(), runs, loss_curve: None }
        }
        Job::Lstm { config, refit } => match train_lstm(config, frame, plans.0.train.clone(), mode) {
            Ok(trained) => {
                let model = &trained.model;
                let case_ii = if *refit {
                    evaluate_refit(|r| train_lstm(config, frame, r, mode).map(|t| t.model), frame, &plans.1, mode, model)
                } else {
                    evaluate(model, frame, &plans.1, mode)
                };
                let runs = vec![
                    (Case::CaseI, evaluate(model, frame, &plans.0, mode).map_err(|e| e.to_string())),
                    (Case::CaseII, case_ii.map_err(|e| e.to_string())),
                ];
                JobResult { job: job.clone(), runs, loss_curve: Some(trained.loss_curve) }
            }
            Err(e) => JobResult { job: job.clone(), runs: fail_all(e.to_string()), loss_curve: None },
        },
    }
}

fn failed_row(job: &Job, case: Case, mode: Mode, seed: u64) -> String {
    let (model, task) = match job {
        Job::Shallow(s) => (s.algo.name(), s.task.name()),
        Job::Lstm { .. } => ("lstm", "regress"),
    };
    format!("{model},{task},{},{},{},0,{seed}", case.name(), mode.name(), ["failed"; 8].join(","))
}

fn plot(stamp: &str, run: &EvalRun) -> String {
    let title = format!("{} {} case {} ({})", run.model, run.task.name(), run.case.name(), run.mode.name());
    line_chart(stamp, &title, &run.actual, &run.predicted)
}

pub fn eval(ctx: &Ctx) -> CliResult<Outputs> {
    let jobs = ctx.cfg.jobs()?;
    let mode = ctx.cfg.mode()?;
    let seed = ctx.cfg.seed()?;
    let frame = ctx.frame()?;
    let plans = ctx.plans(&frame)?;
    let reference = ctx.cfg.path("reference").map(|p| ctx.read(&p)).transpose()?;

    let results: Vec<JobResult> = jobs.par_iter().map(|j| run_job(j, &frame, &plans, mode)).collect();

    let stamp = ctx.stamp()?;
    let mut out = Outputs::default();
    let mut report = format!("{REPORT_HEADER}\n");
    let mut failures = String::new();
    for r in &results {
        let label = r.job.label();
        for (case, run) in &r.runs {
            match run {
                Ok(run) => {
                    report.push_str(&run.csv_row());
                    report.push('\n');
                    out.add(format!("predictions/{label}_{}.csv", case.name()), format!("# {stamp}\n{}", run.predictions_csv()));
                    out.add(format!("plots/{label}_{}.svg", case.name()), plot(&stamp, run));
                    if !run.skipped.is_empty() {
                        let _ = writeln!(failures, "{label} case {}: {} window(s) skipped", case.name(), run.skipped.len());
                    }
                }
                Err(e) => {
                    report.push_str(&failed_row(&r.job, *case, mode, seed));
                    report.push('\n');
                    let _ = writeln!(failures, "{label} case {}: failed: {e}", case.name());
                    out.failures.push(format!("{label} case {}: {e}", case.name()));
                }
            }
        }
        if let Some(curve) = &r.loss_curve {
            out.add("lstm_loss.csv", format!("# {stamp}\n{}", loss_curve_csv(curve)));
        }
    }
    if let Some(reference) = reference {
        out.add("comparison.csv", format!("# {stamp}\n{}", compare(&[report.as_str()], &reference)?));
    }
    out.add("report.csv", format!("# {stamp}\n{report}"));
    if !failures.is_empty() {
        out.add("notes.txt", format!("# {stamp}\n{failures}"));
    }
    println!("{} model(s), {} report row(s)", results.len(), report.lines().count() - 1);
    Ok(out)
}

/// Rows of the training period only (dates up to `train_end`).
fn training_prefix(ctx: &Ctx, frame: &FeatureFrame) -> CliResult<usize> {
    let train_end = ctx.cfg.date("train_end", DEFAULT_TRAIN_END)?;
    Ok(frame.rows().partition_point(|r| r.date <= train_end))
}

pub fn granger(ctx: &Ctx) -> CliResult<Outputs> {
    let frame = ctx.frame()?;
    let moods = ctx.moods(&frame)?;
    let n = training_prefix(ctx, &frame)?;
    let lags = ctx.cfg.lags()?;
    let effect: Vec<f64> = frame.close_norms()[..n].to_vec();
    let columns: Vec<(&str, Vec<f64>)> = Mood::ALL.iter().map(|&m| (m.name(), moods.column(m)[..n].to_vec())).collect();
    let causes: Vec<(&str, &[f64])> = columns.iter().map(|(name, v)| (*name, v.as_slice())).collect();
    let grid = granger_grid(&causes, &effect, &lags)?;
    let table = grid.to_table();
    print!("{table}");
    let mut out = Outputs::default();
    out.add("granger.csv", ctx.commented(&grid.to_csv())?);
    out.add("granger.txt", ctx.commented(&format!("rows {n}\n{table}"))?);
    Ok(out)
}

fn sofnn_row(run: &SofnnRun, case: Case, seed: u64) -> String {
    let r = &run.report;
    format!(
        "sofnn,regress,{},lagged,NA,NA,NA,NA,NA,{},{},{},{},{seed}",
        case.name(),
        fmt_measure(r.mape, 4),
        fmt_measure(r.pearson, 6),
        fmt_measure(Some(r.matched_pct), 4),
        run.actual.len()
    )
}

pub fn sofnn(ctx: &Ctx) -> CliResult<Outputs> {
    let frame = ctx.frame()?;
    let moods = ctx.moods(&frame)?;
    let plans = ctx.plans(&frame)?;
    let config = ctx.cfg.sofnn()?;
    let seed = ctx.cfg.seed()?;
    let (model, log) = train_sofnn(&config, &moods, &frame, plans.0.train.clone())?;
    let stamp = ctx.stamp()?;
    let mut out = Outputs::default();
    let mut summary = format!("{REPORT_HEADER}\n");
    let mut table = format!("{:<16}{:>14}{:>14}\n", "SOFNN", "Case I", "Case II");
    let mut cells: Vec<[String; 3]> = Vec::new();
    for plan in [&plans.0, &plans.1] {
        let run = model.evaluate(&frame, &moods, plan.eval.clone())?;
        let c = plan.case.name();
        let mut preds = String::from("date,actual,predicted\n");
        for ((d, a), p) in run.dates.iter().zip(&run.actual).zip(&run.predicted) {
            let _ = writeln!(preds, "{d},{a},{p}");
        }
        out.add(format!("sofnn_predictions_{c}.csv"), format!("# {stamp}\n{preds}"));
        let title = format!("sofnn case {c}");
        out.add(format!("plots/sofnn_{c}.svg"), line_chart(&stamp, &title, &run.actual, &run.predicted));
        summary.push_str(&sofnn_row(&run, plan.case, seed));
        summary.push('\n');
        let r = &run.report;
        cells.push([fmt_measure(r.pearson, 2), fmt_measure(r.mape, 2), format!("{:.0} %", r.matched_pct)]);
    }
    for (i, name) in ["Correlation", "MAPE", "Matched Cases"].iter().enumerate() {
        let _ = writeln!(table, "{name:<16}{:>14}{:>14}", cells[0][i], cells[1][i]);
    }
    let _ = writeln!(table, "neurons {} epochs {}", model.rulebase.len(), log.epochs_run);
    print!("{table}");
    out.add("sofnn_summary.csv", format!("# {stamp}\n{summary}"));
    out.add("sofnn_summary.txt", format!("# {stamp}\n{table}"));
    Ok(out)
}

/// Side-by-side table of our metrics against a `model,task,case,metric,value` reference file.
pub fn compare(reports: &[&str], reference: &str) -> CliResult<String> {
    let columns: Vec<&str> = REPORT_HEADER.split(',').collect();
    let mut ours: BTreeMap<(String, String, String, String), String> = BTreeMap::new();
    let mut modes: BTreeMap<(String, String, String), String> = BTreeMap::new();
    for report in reports {
        for line in report.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(CliError::Usage(format!("malformed report row {line:?}")));
            }
            let key = (cells[0].to_string(), cells[1].to_string(), cells[2].to_string());
            modes.insert(key.clone(), cells[3].to_string());
            for (name, value) in columns.iter().zip(&cells).skip(4).take(8) {
                ours.insert((key.0.clone(), key.1.clone(), key.2.clone(), name.to_string()), value.to_string());
            }
        }
    }
    let mut out = String::from("model,task,case,mode,metric,ours,reference,difference\n");
    let mut lines = reference.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    if lines.next().map(str::trim) != Some("model,task,case,metric,value") {
        return Err(CliError::Usage("reference file must start with `model,task,case,metric,value`".into()));
    }
    for line in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let [model, task, case, metric, value] = cells[..] else {
            return Err(CliError::Usage(format!("malformed reference row {line:?}")));
        };
        let key3 = (model.to_string(), task.to_string(), case.to_string());
        let Some(mode) = modes.get(&key3) else { continue };
        let mine = ours
            .get(&(key3.0.clone(), key3.1.clone(), key3.2.clone(), metric.to_string()))
            .cloned()
            .unwrap_or_else(|| "NA".into());
        let diff = match (mine.parse::<f64>(), value.parse::<f64>()) {
            (Ok(a), Ok(b)) => format!("{:.4}", a - b),
            _ => "NA".into(),
        };
        let _ = writeln!(out, "{model},{task},{case},{mode},{metric},{mine},{value},{diff}");
    }
    Ok(out)
}

pub fn report(ctx: &Ctx) -> CliResult<Outputs> {
    let reference = ctx.read(&ctx.cfg.require_path("reference")?)?;
    let mut reports = Vec::new();
    for name in ["report.csv", "sofnn_summary.csv"] {
        let path = ctx.out.join(name);
        if path.exists() {
            reports.push(ctx.read(&path)?);
        }
    }
    if reports.is_empty() {
        return Err(CliError::Usage(format!("no report.csv or sofnn_summary.csv in {}", ctx.out.display())));
    }
    let refs: Vec<&str> = reports.iter().map(String::as_str).collect();
    let table = compare(&refs, &reference)?;
    println!("{} comparison row(s)", table.lines().count() - 1);
    let mut out = Outputs::default();
    out.add("comparison.csv", ctx.commented(&table)?);
    Ok(out)
}
