#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use stockcast::features::{derive_features, FeatureFrame};
use stockcast::market_data::{parse_ohlcv_csv, OhlcvBar, PriceSeries};
use stockcast::rng::SplitMix64;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

pub fn fixture_frame() -> FeatureFrame {
    derive_features(&parse_ohlcv_csv(&fixture_text("nifty50_2015_2019.csv")).unwrap().series).unwrap()
}

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

/// `n` consecutive weekdays from 2015-01-05 (a Monday).
pub fn weekdays(n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = date("2015-01-05");
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Random-walk bars on consecutive weekdays.
pub fn random_series(n: usize, seed: u64) -> PriceSeries {
    let mut rng = SplitMix64::new(seed);
    let mut close = 1000.0;
    let bars = weekdays(n)
        .into_iter()
        .map(|d| {
            let open = close * (1.0 + 0.004 * rng.normal());
            close *= 1.0 + 0.01 * rng.normal();
            let high = open.max(close) * (1.0 + 0.003 * rng.next_f64() + 1e-4);
            let low = open.min(close) * (1.0 - 0.003 * rng.next_f64() - 1e-4);
            OhlcvBar::new(d, open, high, low, close, 1e5 * (1.0 + rng.next_f64())).unwrap()
        })
        .collect();
    PriceSeries::new(bars).unwrap()
}

pub fn random_frame(n_bars: usize, seed: u64) -> FeatureFrame {
    derive_features(&random_series(n_bars, seed)).unwrap()
}

/// Two noisy Gaussian classes in `d` dimensions with unequal feature scales.
pub fn two_classes(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = SplitMix64::new(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as f64;
        let row: Vec<f64> = (0..d).map(|j| (j + 1) as f64 * (rng.normal() + if j < 2 { 1.2 * label } else { 0.0 })).collect();
        x.push(row);
        y.push(label);
    }
    (x, y)
}

/// Smooth regression target with noise.
pub fn regression(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = SplitMix64::new(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.uniform(-2.0, 2.0)).collect()).collect();
    let y = x.iter().map(|r| r[0].sin() + 0.5 * r[1] + 0.1 * rng.normal()).collect();
    (x, y)
}
