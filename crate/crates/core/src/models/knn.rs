//! k-nearest neighbours on (already standardized) Euclidean distance.

use serde::{Deserialize, Serialize};

use crate::models::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub task: Task,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Knn {
    /// Indices of the `k` nearest training rows; equal distances go to the lower index.
    pub fn neighbours(&self, q: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    /// Fraction of neighbours labelled 1 (classify) or neighbour mean (regress).
    pub fn score(&self, q: &[f64]) -> f64 {
        let nb = self.neighbours(q);
        nb.iter().map(|&i| self.y[i]).sum::<f64>() / nb.len() as f64
    }

    pub fn predict(&self, q: &[f64]) -> f64 {
        let s = self.score(q);
        match self.task {
            Task::Regress => s,
            Task::Classify => {
                if s > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}
