//! Regenerates `fixtures/nifty50_2015_2019.csv`, a synthetic daily index
//! series on the NSE trading calendar of 2015-01-02 .. 2019-06-28.
//!
//! Returns follow a GARCH(1,1) process; a bridge term pins the log level to a
//! handful of waypoints so the path has the broad shape of the index over the
//! period. Opens gap from the previous close, wicks extend past the body and
//! volume is log-AR(1) with a response to absolute returns.
//!
//! Usage: `cargo run -p stockcast-core --example synth_nifty -- <fixtures dir>`

use std::path::PathBuf;

use chrono::{Days, NaiveDate};
use stockcast::market_data::{is_weekday, parse_date_list, OhlcvBar, PriceSeries};
use stockcast::rng::SplitMix64;

const SEED: u64 = 20150102;

const WAYPOINTS: [(&str, f64); 15] = [
    ("2015-01-02", 8284.00),
    ("2015-03-03", 8996.25),
    ("2015-09-07", 7558.80),
    ("2015-12-31", 7946.35),
    ("2016-02-29", 6987.05),
    ("2016-09-07", 8943.00),
    ("2016-12-26", 7908.25),
    ("2017-12-29", 10530.70),
    ("2018-01-29", 11130.40),
    ("2018-03-23", 9998.05),
    ("2018-08-28", 11738.50),
    ("2018-10-26", 10030.00),
    ("2018-12-31", 10862.55),
    ("2019-06-03", 12088.55),
    ("2019-06-28", 11788.85),
];

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").expect("waypoint date")
}

fn cents(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    let holidays = parse_date_list(&std::fs::read_to_string(dir.join("nse_holidays_2015_2019.txt"))?)?;

    let (start, end) = (date("2015-01-02"), date("2019-06-28"));
    let mut days = Vec::new();
    let mut d = start;
    while d <= end {
        if is_weekday(d) && !holidays.contains(&d) {
            days.push(d);
        }
        d = d + Days::new(1);
    }

    let mut rng = SplitMix64::new(SEED);
    let n = days.len();

    // GARCH(1,1) log returns around a long-run daily volatility of 0.9%.
    let (alpha, beta) = (0.08, 0.90);
    let long_run = 0.009f64.powi(2);
    let omega = long_run * (1.0 - alpha - beta);
    let mut var = long_run;
    let mut noise = vec![0.0; n];
    let mut level = 0.0;
    for t in 1..n {
        // Student-like tails: scale a normal by a random volatility shock.
        let shock = rng.normal() * (1.0 + 0.25 * rng.normal().abs()) / 1.209;
        let r = var.sqrt() * shock;
        level += r;
        noise[t] = level;
        var = omega + alpha * r * r + beta * var;
    }

    // Bridge: add piecewise-linear corrections so the path meets each waypoint.
    let anchors: Vec<(usize, f64)> = WAYPOINTS
        .iter()
        .map(|(s, p)| (days.iter().position(|x| *x == date(s)).expect("waypoint on a trading day"), p.ln()))
        .collect();
    let mut log_close = vec![0.0; n];
    for pair in anchors.windows(2) {
        let ((i0, l0), (i1, l1)) = (pair[0], pair[1]);
        let (c0, c1) = (l0 - noise[i0], l1 - noise[i1]);
        for t in i0..=i1 {
            let w = (t - i0) as f64 / (i1 - i0) as f64;
            log_close[t] = noise[t] + c0 + w * (c1 - c0);
        }
    }

    let mut bars = Vec::with_capacity(n);
    bars.push(OhlcvBar::new(start, 8272.80, 8285.45, 8245.80, 8284.00, 150000.0)?);
    let mut log_vol = 150000f64.ln();
    let vol_mean = 190000f64.ln();
    for t in 1..n {
        let prev_close = bars[t - 1].close;
        let close = cents(log_close[t].exp());
        let r = (close / prev_close).ln();
        // Opening gap carries part of the day's move plus its own noise.
        let open = cents(prev_close * (0.35 * r + 0.0025 * rng.normal()).exp());
        let body_hi = open.max(close);
        let body_lo = open.min(close);
        let wick = 0.0035 + 0.25 * r.abs();
        let high = ((body_hi * (wick * rng.next_f64().powf(1.5)).exp()) * 100.0).ceil() / 100.0;
        let low = ((body_lo * (-wick * rng.next_f64().powf(1.5)).exp()) * 100.0).floor() / 100.0;
        log_vol = vol_mean + 0.6 * (log_vol - vol_mean) + 0.25 * rng.normal() + 12.0 * r.abs();
        let volume = log_vol.exp().round();
        bars.push(OhlcvBar::new(days[t], open, high, low, close, volume)?);
    }

    let series = PriceSeries::new(bars)?;
    let mut out = String::from("# Synthetic NIFTY-like daily series; regenerate with the synth_nifty example.\n");
    out.push_str(&series.to_csv());
    std::fs::write(dir.join("nifty50_2015_2019.csv"), out)?;
    eprintln!("wrote {} bars", series.len());
    Ok(())
}
