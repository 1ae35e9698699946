//! Multivariate linear regression by least squares.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{lstsq, ridge, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl Linear {
    /// Ordinary least squares when `l2 == 0`, ridge (intercept included) otherwise.
    pub fn fit(x: &[Vec<f64>], y: &[f64], l2: f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = x.iter().map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect()).collect();
        let a = Matrix::from_rows(&rows)?;
        let beta = if l2 > 0.0 { ridge(&a, y, None, l2)? } else { lstsq(&a, y)?.coefficients };
        Ok(Self { intercept: beta[0], weights: beta[1..].to_vec() })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_plane() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 3) % 7) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 1.5 - 2.0 * r[0] + 0.25 * r[1]).collect();
        let m = Linear::fit(&x, &y, 0.0).unwrap();
        assert!((m.intercept - 1.5).abs() < 1e-10);
        assert!((m.weights[0] + 2.0).abs() < 1e-10);
        assert!((m.weights[1] - 0.25).abs() < 1e-10);
    }
}
