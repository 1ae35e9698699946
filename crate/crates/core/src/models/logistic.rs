//! L2-penalized logistic regression fitted by Newton / IRLS.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    /// Minimizes `−Σ log-likelihood + λ‖w‖²/2`; the intercept is not penalized.
    pub fn fit(x: &[Vec<f64>], y: &[f64], l2: f64, max_iter: usize) -> Result<Self> {
        let d = x[0].len();
        let p = d + 1;
        let mut beta = vec![0.0; p];
        for _ in 0..max_iter {
            let mut hess = Matrix::<f64>::zeros(p, p);
            let mut grad = vec![0.0; p];
            for (row, &t) in x.iter().zip(y) {
                let z = beta[0] + row.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
                let prob = sigmoid(z);
                let w = (prob * (1.0 - prob)).max(1e-12);
                let r = prob - t;
                for i in 0..p {
                    let xi = if i == 0 { 1.0 } else { row[i - 1] };
                    grad[i] += r * xi;
                    for j in 0..=i {
                        let xj = if j == 0 { 1.0 } else { row[j - 1] };
                        let v = hess.get(i, j) + w * xi * xj;
                        hess.set(i, j, v);
                    }
                }
            }
            for i in 0..p {
                for j in 0..i {
                    let v = hess.get(i, j);
                    hess.set(j, i, v);
                }
                let pen = if i == 0 { 1e-10 } else { l2 };
                let v = hess.get(i, i) + pen;
                hess.set(i, i, v);
                grad[i] += pen * beta[i];
            }
            let step = cholesky_solve(&hess, &grad)?;
            let mut norm = 0.0;
            for (b, s) in beta.iter_mut().zip(&step) {
                *b -= s;
                norm += s * s;
            }
            if !beta.iter().all(|b| b.is_finite()) {
                return Err(Error::Numeric("logistic regression diverged".into()));
            }
            if norm.sqrt() < 1e-10 {
                break;
            }
        }
        Ok(Self { intercept: beta[0], weights: beta[1..].to_vec() })
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Label 1 only when the probability is strictly above one half.
    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.probability(x) > 0.5 {
            1.0
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_tie_to_zero() {
        let m = Logistic { intercept: 0.0, weights: vec![0.0, 0.0] };
        assert_eq!(m.probability(&[3.0, -1.0]), 0.5);
        assert_eq!(m.predict(&[3.0, -1.0]), 0.0);
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 - 20.0) / 10.0]).collect();
        // Overlapping classes so the unpenalized optimum is finite.
        let y: Vec<f64> = (0..40).map(|i| if (i * 7) % 10 < (i / 4) { 1.0 } else { 0.0 }).collect();
        let l2 = 1e-3;
        let m = Logistic::fit(&x, &y, l2, 100).unwrap();
        let (mut g0, mut g1) = (0.0, l2 * m.weights[0]);
        for (r, t) in x.iter().zip(&y) {
            let e = m.probability(r) - t;
            g0 += e;
            g1 += e * r[0];
        }
        assert!(g0.abs() < 1e-8 && g1.abs() < 1e-8, "{g0} {g1}");
    }
}
