//! Pairwise Granger causality F-test and the mood × lag p-value grid.
//!
//! For lag `L`, the restricted model regresses `y_t` on an intercept and
//! `y_{t-1..t-L}`; the unrestricted model adds `x_{t-1..t-L}`. The first `L`
//! observations are dropped, never padded.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{lstsq, Matrix};
use crate::scalar::{count, Scalar};
use crate::special::f_survival;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult<T> {
    pub lag: usize,
    pub f_stat: T,
    pub p_value: T,
    pub df_num: usize,
    pub df_den: usize,
    pub n_used: usize,
    pub rss_restricted: T,
    pub rss_unrestricted: T,
}

fn lagged_design<T: Scalar>(x: Option<&[T]>, y: &[T], lag: usize) -> Result<Matrix<T>> {
    let n = y.len();
    let width = 1 + lag * if x.is_some() { 2 } else { 1 };
    let mut rows = Vec::with_capacity(n - lag);
    for t in lag..n {
        let mut row = Vec::with_capacity(width);
        row.push(T::one());
        row.extend((1..=lag).map(|k| y[t - k]));
        if let Some(x) = x {
            row.extend((1..=lag).map(|k| x[t - k]));
        }
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

/// Does `cause` Granger-cause `effect` at `lag`?
pub fn granger_p<T: Scalar>(cause: &[T], effect: &[T], lag: usize) -> Result<GrangerResult<T>> {
    check_len(cause.len(), effect.len())?;
    let n = effect.len();
    if lag == 0 {
        return Err(Error::Domain("lag must be at least 1".into()));
    }
    if n < 2 * lag + 11 {
        return Err(Error::InsufficientData(format!("{n} observations too few for lag {lag}")));
    }
    let n_used = n - lag;
    let df_den = n_used - 2 * lag - 1;
    let target = &effect[lag..];
    let first = target[0];
    if target.iter().all(|&v| v == first) {
        return Err(Error::DegenerateTarget("effect series is constant".into()));
    }

    let restricted = lstsq(&lagged_design(None, effect, lag)?, target)?;
    let unrestricted = lstsq(&lagged_design(Some(cause), effect, lag)?, target)?;
    // Nested models: the unrestricted fit can only do better; clamp rounding noise.
    let rss_u = unrestricted.rss.min(restricted.rss);
    let rss_r = restricted.rss;

    let f_stat = if rss_u <= T::zero() {
        if rss_r > T::zero() {
            T::infinity()
        } else {
            T::zero()
        }
    } else {
        ((rss_r - rss_u) / count(lag)) / (rss_u / count(df_den))
    };
    let p_value = f_survival(f_stat, count(lag), count(df_den));
    Ok(GrangerResult {
        lag,
        f_stat,
        p_value,
        df_num: lag,
        df_den,
        n_used,
        rss_restricted: rss_r,
        rss_unrestricted: rss_u,
    })
}

/// One named candidate cause and its per-lag outcomes.
#[derive(Debug, Clone)]
pub struct GrangerColumn<T> {
    pub name: String,
    pub cells: Vec<std::result::Result<GrangerResult<T>, String>>,
}

#[derive(Debug, Clone)]
pub struct GrangerGrid<T> {
    pub lags: Vec<usize>,
    pub columns: Vec<GrangerColumn<T>>,
}

/// Tests every `(cause, lag)` pair against `effect`. Failed cells keep their error text.
pub fn granger_grid<T: Scalar>(causes: &[(&str, &[T])], effect: &[T], lags: &[usize]) -> Result<GrangerGrid<T>> {
    for (name, series) in causes {
        if series.len() != effect.len() {
            return Err(Error::Alignment(format!(
                "series {name:?} has {} points, effect has {}",
                series.len(),
                effect.len()
            )));
        }
    }
    let columns = causes
        .iter()
        .map(|(name, series)| GrangerColumn {
            name: name.to_string(),
            cells: lags.iter().map(|&lag| granger_p(series, effect, lag).map_err(|e| e.to_string())).collect(),
        })
        .collect();
    Ok(GrangerGrid { lags: lags.to_vec(), columns })
}

impl<T: Scalar> GrangerGrid<T> {
    pub fn p_value(&self, column: usize, lag_index: usize) -> Option<T> {
        self.columns[column].cells[lag_index].as_ref().ok().map(|r| r.p_value)
    }

    /// `lag,<name>,...` with one row per lag; failed cells are `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag");
        for c in &self.columns {
            out.push(',');
            out.push_str(&c.name);
        }
        out.push('\n');
        for (li, lag) in self.lags.iter().enumerate() {
            let _ = write!(out, "{lag}");
            for ci in 0..self.columns.len() {
                match self.p_value(ci, li) {
                    Some(p) => {
                        let _ = write!(out, ",{:.6}", p.to_f64_lossy());
                    }
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Fixed-width table: lags down, causes across.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<5}", "Lag");
        for c in &self.columns {
            let _ = write!(out, "{:>10}", c.name);
        }
        out.push('\n');
        for (li, lag) in self.lags.iter().enumerate() {
            let _ = write!(out, "{lag:<5}");
            for ci in 0..self.columns.len() {
                match self.p_value(ci, li) {
                    Some(p) => {
                        let _ = write!(out, "{:>10.4}", p.to_f64_lossy());
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "NA");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SplitMix64::new(seed);
        (0..n).map(|_| rng.normal()).collect()
    }

    #[test]
    fn planted_cause_detected() {
        let x = noise(300, 1);
        let eps = noise(300, 2);
        let mut y = vec![0.0; 300];
        for t in 1..300 {
            y[t] = 0.9 * x[t - 1] + 0.01 * eps[t];
        }
        let r = granger_p(&x, &y, 1).unwrap();
        assert!(r.p_value < 1e-3);
        assert_eq!((r.df_num, r.df_den, r.n_used), (1, 299 - 3, 299));
    }

    #[test]
    fn degrees_of_freedom() {
        let (x, y) = (noise(100, 3), noise(100, 4));
        let r = granger_p(&x, &y, 4).unwrap();
        assert_eq!(r.n_used, 96);
        assert_eq!(r.df_den, 96 - 8 - 1);
        assert!(r.rss_unrestricted <= r.rss_restricted);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn degenerate_inputs() {
        let y = vec![1.0; 50];
        assert!(matches!(granger_p(&noise(50, 1), &y, 1), Err(Error::DegenerateTarget(_))));
        assert!(matches!(granger_p(&noise(12, 1), &noise(12, 2), 1), Err(Error::InsufficientData(_))));
        assert!(matches!(granger_p(&vec![2.0; 50], &noise(50, 2), 2), Err(Error::SingularDesign)));
    }

    #[test]
    fn grid_layout() {
        let (a, y) = (noise(120, 5), noise(120, 6));
        let flat = vec![0.0; 120];
        let grid = granger_grid(&[("calm", &a[..]), ("calm2", &a[..]), ("flat", &flat[..])], &y, &[1, 2, 3, 4, 5]).unwrap();
        for li in 0..5 {
            assert_eq!(grid.p_value(0, li), grid.p_value(1, li));
            assert_eq!(grid.p_value(2, li), None);
        }
        let csv = grid.to_csv();
        assert!(csv.starts_with("lag,calm,calm2,flat\n1,"));
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.lines().nth(1).unwrap().ends_with(",NA"));
        assert!(granger_grid(&[("short", &a[..10])], &y, &[1]).is_err());
    }
}
