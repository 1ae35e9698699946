mod common;

use common::*;
use stockcast::features::FeatureFrame;
use stockcast::harness::{
    evaluate, evaluate_refit, input_row, make_case_splits, report_csv, training_rows, weekly_windows, Case, EvalRun,
    ForecastWindow, Forecaster, Mode, Report, SplitPlan, LAGGED_WIDTH, REPORT_HEADER,
};
use stockcast::models::{fit, Algo, ModelSpec, Task};
use stockcast::Result;

/// Returns the actual target for every day.
struct Oracle(Task);

/// Returns a constant.
struct Constant(Task, f64);

impl Forecaster for Oracle {
    fn id(&self) -> String {
        "oracle".into()
    }
    fn task(&self) -> Task {
        self.0
    }
    fn seed(&self) -> u64 {
        0
    }
    fn predict_window(&self, frame: &FeatureFrame, _: Mode, w: &ForecastWindow) -> Result<Vec<f64>> {
        Ok(w.targets.clone().map(|t| stockcast::harness::target_value(frame, self.0, t)).collect())
    }
}

impl Forecaster for Constant {
    fn id(&self) -> String {
        "constant".into()
    }
    fn task(&self) -> Task {
        self.0
    }
    fn seed(&self) -> u64 {
        0
    }
    fn predict_window(&self, _: &FeatureFrame, _: Mode, w: &ForecastWindow) -> Result<Vec<f64>> {
        Ok(vec![self.1; w.targets.len()])
    }
}

fn whole(frame: &FeatureFrame) -> SplitPlan {
    SplitPlan { case: Case::CaseI, train: 0..frame.len(), eval: 0..frame.len() }
}

fn regression_report(run: &EvalRun) -> &stockcast::RegressionReport64 {
    match &run.report {
        Report::Regression(r) => r,
        Report::Classification(_) => panic!("expected regression"),
    }
}

#[test]
fn window_examples() {
    let sizes = |n: usize| weekly_windows(0..n).iter().map(|w| w.targets.len()).collect::<Vec<_>>();
    assert_eq!(sizes(10), vec![5, 5]);
    assert_eq!(sizes(12), vec![5, 5, 2]);
    assert!(weekly_windows(3..3).is_empty());
    let w = weekly_windows(7..20);
    assert_eq!(w[0].anchor, Some(6));
    assert_eq!(w[2].anchor, Some(16));
    assert_eq!(weekly_windows(0..5)[0].anchor, None);
}

#[test]
fn windows_partition_the_range() {
    for (s, e) in [(0, 1), (3, 40), (10, 11), (5, 1106)] {
        let covered: Vec<usize> = weekly_windows(s..e).into_iter().flat_map(|w| w.targets).collect();
        assert_eq!(covered, (s..e).collect::<Vec<_>>());
    }
}

#[test]
fn case_split_examples() {
    let frame = random_frame(11, 1);
    let dates = frame.dates();
    let (c1, c2) = make_case_splits(&frame, dates[5], dates[9]).unwrap();
    assert_eq!((c1.train.clone(), c1.eval.clone()), (0..6, 0..6));
    assert_eq!(c2.eval.len(), 4);
    assert_eq!(c2.train, c1.train);
    assert!(make_case_splits(&frame, dates[9], dates[9]).is_err());
    assert!(make_case_splits(&frame, date("2014-01-01"), dates[9]).is_err());
}

#[test]
fn fixture_case_sizes() {
    let frame = fixture_frame();
    let (c1, c2) = make_case_splits(&frame, date("2017-12-29"), date("2019-06-28")).unwrap();
    let in_years = frame.rows().iter().filter(|r| r.date <= date("2017-12-29")).count();
    assert_eq!(c1.train.len(), in_years);
    assert_eq!(c2.eval.end, frame.len());
}

#[test]
fn oracle_regressor_is_perfect() {
    let frame = random_frame(60, 2);
    let run = evaluate(&Oracle(Task::Regress), &frame, &whole(&frame), Mode::Contemporaneous).unwrap();
    let r = regression_report(&run);
    assert_eq!(r.mape, Some(0.0));
    assert!((r.pearson.unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r.matched_pct, 100.0);
    assert_eq!(r.n, frame.len());
}

#[test]
fn zero_regressor_matches_down_days() {
    let frame = random_frame(80, 3);
    let run = evaluate(&Constant(Task::Regress, 0.0), &frame, &whole(&frame), Mode::Contemporaneous).unwrap();
    let down = frame.rows().iter().filter(|r| r.close_norm <= 0.0).count() as f64;
    assert!((regression_report(&run).matched_pct - 100.0 * down / frame.len() as f64).abs() < 1e-9);
    assert_eq!(regression_report(&run).pearson, None);
}

#[test]
fn majority_classifier_on_ten_rows() {
    let mut frame = random_frame(11, 4);
    let signs = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -0.5, 1.0, -2.0, 1.0];
    for (r, s) in frame.rows_mut().iter_mut().zip(signs) {
        r.close_norm = s;
    }
    let run = evaluate(&Constant(Task::Classify, 1.0), &frame, &whole(&frame), Mode::Contemporaneous).unwrap();
    let Report::Classification(c) = run.report else { panic!() };
    assert!((c.accuracy.unwrap() - 60.0).abs() < 1e-9);
    assert_eq!(c.specificity, Some(0.0));
    assert_eq!(c.npv, None);
    assert_eq!(c.sensitivity, Some(100.0));
}

#[test]
fn case_one_equals_direct_prediction() {
    let frame = random_frame(120, 5);
    let plan = whole(&frame);
    for mode in [Mode::Contemporaneous, Mode::Lagged] {
        let (x, y, skipped) = training_rows(&frame, plan.train.clone(), mode, Task::Regress);
        let spec = ModelSpec::new(Algo::MultivariateLinear, Task::Regress, 0).unwrap().with("l2", 1e-3).unwrap();
        let model = fit(&spec, &x, &y).unwrap();
        let run = evaluate(&model, &frame, &plan, mode).unwrap();
        assert_eq!(run.predicted, model.predict(&x).unwrap());
        assert_eq!(run.actual, y);
        assert_eq!(run.skipped.len(), skipped.len());
    }
}

#[test]
fn lagged_rows_use_anchor_history() {
    let frame = random_frame(30, 6);
    let row = input_row(&frame, Mode::Lagged, Some(9), 12).unwrap();
    assert_eq!(row.len(), LAGGED_WIDTH);
    assert_eq!(&row[..9], &frame.rows()[9].variables());
    assert_eq!(&row[36..45], &frame.rows()[5].variables());
    assert_eq!(&row[45..], &frame.rows()[12].calendar());
    // first windows lack five days of history and are skipped
    let (_, _, skipped) = training_rows(&frame, 0..frame.len(), Mode::Lagged, Task::Regress);
    assert_eq!(skipped.len(), 1);
    assert!(input_row(&frame, Mode::Lagged, None, 0).is_err());
}

#[test]
fn lagged_model_ignores_post_anchor_values() {
    let frame = random_frame(200, 7);
    let plan = whole(&frame);
    let (x, y, _) = training_rows(&frame, plan.train.clone(), Mode::Lagged, Task::Regress);
    let model = fit(&ModelSpec::new(Algo::Cart, Task::Regress, 0).unwrap(), &x, &y).unwrap();
    for w in weekly_windows(plan.eval.clone()).into_iter().skip(1) {
        let base = model.predict_window(&frame, Mode::Lagged, &w).unwrap();
        let mut poked = frame.clone();
        for t in w.anchor.unwrap() + 1..poked.len() {
            for v in poked.rows_mut()[t].norms_mut() {
                *v += 17.0;
            }
        }
        assert_eq!(model.predict_window(&poked, Mode::Lagged, &w).unwrap(), base);
    }
}

#[test]
fn refit_with_unchanged_model_equals_evaluate() {
    let frame = random_frame(90, 8);
    let dates = frame.dates();
    let (_, c2) = make_case_splits(&frame, dates[59], dates[88]).unwrap();
    let plain = evaluate(&Constant(Task::Regress, 0.25), &frame, &c2, Mode::Contemporaneous).unwrap();
    let refit = evaluate_refit(
        |r| {
            assert!(r.start == 0 && r.end >= 60);
            Ok(Constant(Task::Regress, 0.25))
        },
        &frame,
        &c2,
        Mode::Contemporaneous,
        &Constant(Task::Regress, 0.25),
    )
    .unwrap();
    assert_eq!(plain, refit);
}

#[test]
fn report_rows() {
    assert_eq!(report_csv(&[]), format!("{REPORT_HEADER}\n"));
    let frame = random_frame(40, 9);
    let run = evaluate(&Oracle(Task::Regress), &frame, &whole(&frame), Mode::Contemporaneous).unwrap();
    let text = report_csv(std::slice::from_ref(&run));
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text, report_csv(&[run]));
    assert!(text.lines().nth(1).unwrap().starts_with("oracle,regress,I,contemporaneous"));
}
