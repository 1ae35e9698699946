mod common;

use common::*;
use stockcast::features::{derive_features, FeatureFrame, FEATURE_CSV_HEADER};
use stockcast::market_data::{parse_date_list, parse_ohlcv_csv, validate_series, OhlcvBar, PriceSeries};
use stockcast::Error;

/// Plain-text rows of the fixture, comments and header removed.
fn raw_rows() -> Vec<Vec<String>> {
    fixture_text("nifty50_2015_2019.csv")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("Date"))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn fixture_first_rows_match_hand_formula() {
    let raw = raw_rows();
    let frame = fixture_frame();
    let num = |r: usize, c: usize| raw[r][c].parse::<f64>().unwrap();
    // row k of the frame compares raw rows k and k + 1
    for k in 0..2 {
        let row = &frame.rows()[k];
        assert_eq!(row.date.to_string(), raw[k + 1][0]);
        let pc = |c: usize| (num(k + 1, c) - num(k, c)) / num(k, c) * 100.0;
        let range = |r: usize| num(r, 2) - num(r, 3);
        let expect = [pc(1), pc(2), pc(3), pc(4), pc(5), (range(k + 1) - range(k)) / range(k) * 100.0];
        let got = [row.open_norm, row.high_norm, row.low_norm, row.close_norm, row.vol_norm, row.range_norm];
        for (g, e) in got.iter().zip(expect) {
            assert!((g - e).abs() < 1e-9, "row {k}: {g} vs {e}");
        }
    }
    // 2015-01-05 is a Monday
    assert_eq!((frame.rows()[0].month, frame.rows()[0].day_month, frame.rows()[0].day_week), (1, 5, 1));
}

#[test]
fn fixture_is_clean_apart_from_holidays() {
    let parsed = parse_ohlcv_csv(&fixture_text("nifty50_2015_2019.csv")).unwrap();
    assert_eq!(parsed.report.dropped(), 0);
    let holidays = parse_date_list(&fixture_text("nse_holidays_2015_2019.txt")).unwrap();
    let gaps = validate_series(&parsed.series);
    assert!(!gaps.missing_weekdays.is_empty());
    assert!(gaps.excluding(&holidays).is_clean());
}

#[test]
fn fixture_spans_expected_dates() {
    let frame = fixture_frame();
    assert_eq!(frame.rows()[0].date, date("2015-01-05"));
    assert_eq!(frame.rows().last().unwrap().date, date("2019-06-28"));
    assert!(frame.index_of(date("2017-12-29")).is_some());
}

#[test]
fn price_csv_round_trip() {
    let series = random_series(40, 3);
    let again = parse_ohlcv_csv(&series.to_csv()).unwrap().series;
    assert_eq!(again.bars(), series.bars());
}

#[test]
fn feature_csv_round_trip() {
    let frame = random_frame(60, 4);
    let text = frame.to_csv();
    assert!(text.starts_with(FEATURE_CSV_HEADER));
    let back = FeatureFrame::from_csv(&text).unwrap();
    assert_eq!(back.len(), frame.len());
    for (a, b) in back.rows().iter().zip(frame.rows()) {
        assert_eq!(a.variables(), b.variables());
        assert_eq!(a.label(), b.label());
    }
}

#[test]
fn constant_series_gives_zero_norms() {
    let bars: Vec<OhlcvBar> =
        weekdays(3).into_iter().map(|d| OhlcvBar::new(d, 10.0, 11.0, 9.0, 10.0, 500.0).unwrap()).collect();
    let frame = derive_features(&PriceSeries::new(bars).unwrap()).unwrap();
    assert_eq!(frame.len(), 2);
    for r in frame.rows() {
        assert_eq!(&r.variables()[3..], &[0.0; 6]);
        assert_eq!(r.label(), 0);
    }
}

#[test]
fn two_bar_example() {
    let d = weekdays(2);
    let bars = vec![
        OhlcvBar::new(d[0], 100.0, 105.0, 95.0, 100.0, 1.0).unwrap(),
        OhlcvBar::new(d[1], 101.0, 105.0, 95.0, 102.0, 1.0).unwrap(),
    ];
    let r = derive_features(&PriceSeries::new(bars).unwrap()).unwrap().rows()[0];
    assert_eq!((r.close_norm, r.high_norm, r.low_norm, r.range_norm), (2.0, 0.0, 0.0, 0.0));
    assert_eq!(r.label(), 1);
}

#[test]
fn zero_volume_is_flagged_not_fatal() {
    let d = weekdays(3);
    let bars = vec![
        OhlcvBar::new(d[0], 100.0, 101.0, 99.0, 100.0, 0.0).unwrap(),
        OhlcvBar::new(d[1], 100.0, 101.0, 99.0, 100.0, 10.0).unwrap(),
        OhlcvBar::new(d[2], 100.0, 101.0, 99.0, 100.0, 20.0).unwrap(),
    ];
    let frame = derive_features(&PriceSeries::new(bars).unwrap()).unwrap();
    assert!(frame.rows()[0].vol_flagged);
    assert_eq!(frame.rows()[0].vol_norm, 0.0);
    assert_eq!(frame.rows()[1].vol_norm, 100.0);
}

#[test]
fn short_series_rejected() {
    let series = random_series(1, 0);
    assert!(matches!(derive_features(&series), Err(Error::InsufficientData(_))));
}

#[test]
fn malformed_rows_report_position() {
    let text = "Date,Open,High,Low,Close,Volume\n2015-01-02,1,2,1,1.5,10\n2015-01-05,1,2,1,,10\n2015-01-06,1,2,1,1.7,10\n";
    let parsed = parse_ohlcv_csv(text).unwrap();
    assert_eq!(parsed.series.len(), 2);
    assert_eq!(parsed.report.dropped_rows, vec![2]);
    let bad = "Date,Open,High,Low,Close,Volume\n2015-01-02,1,1,2,1.5,10\n";
    let err = parse_ohlcv_csv(bad).unwrap_err().to_string();
    assert!(err.contains("2015-01-02"), "{err}");
}
