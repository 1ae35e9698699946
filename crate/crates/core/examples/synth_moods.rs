//! Regenerates `fixtures/moods_2015_2019.csv`, a synthetic four-mood series
//! aligned with the bundled price fixture.
//!
//! Calm carries a planted lead of one trading day over close_norm and happy a
//! weaker lead of two days; alert and kind are pure noise. Scores go through a
//! softmax so every day sums to one.
//!
//! Usage: `cargo run -p stockcast-core --example synth_moods -- <fixtures dir>`

use std::path::PathBuf;

use stockcast::features::derive_features;
use stockcast::market_data::parse_ohlcv_csv;
use stockcast::rng::SplitMix64;
use stockcast::sentiment::{MoodSeries, MoodVector};

const SEED: u64 = 20180102;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    let prices = parse_ohlcv_csv(&std::fs::read_to_string(dir.join("nifty50_2015_2019.csv"))?)?;
    let frame = derive_features(&prices.series)?;
    let close = frame.close_norms();
    let n = close.len();
    let sd = (close.iter().map(|c| c * c).sum::<f64>() / n as f64).sqrt();

    let mut rng = SplitMix64::new(SEED);
    let lead = |t: usize, k: usize| if t + k < n { close[t + k] / sd } else { 0.0 };
    let mut moods = Vec::with_capacity(n);
    for t in 0..n {
        let z = [
            0.3 * lead(t, 1) + rng.normal(),
            0.15 * lead(t, 2) + rng.normal(),
            rng.normal(),
            rng.normal(),
        ];
        let e: Vec<f64> = z.iter().map(|v| (0.5 * v).exp()).collect();
        let s: f64 = e.iter().sum();
        let r = |v: f64| (v / s * 1e6).round() / 1e6;
        moods.push(MoodVector::from_array([r(e[0]), r(e[1]), r(e[2]), r(e[3])], true));
    }
    let series = MoodSeries { dates: frame.dates(), moods, covered: vec![true; n] };
    let mut out = String::from("# Synthetic mood series with a planted calm lead; regenerate with the synth_moods example.\n");
    out.push_str(&series.to_csv());
    std::fs::write(dir.join("moods_2015_2019.csv"), out)?;
    eprintln!("wrote {n} mood rows");
    Ok(())
}
