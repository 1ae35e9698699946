//! Classification and regression evaluation measures.
//!
//! All rates are percentages. A measure whose denominator is zero is `None`
//! ("undefined", rendered `NA`), never 0 or NaN.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::features::binarize_direction;
use crate::scalar::{count, Scalar};

/// |actual| below this is excluded from MAPE.
pub const MAPE_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn ppv(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn npv(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fn_)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }
}

/// Counts with label 1 as the positive class.
pub fn confusion(actual: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    check_len(actual.len(), predicted.len())?;
    if actual.is_empty() {
        return Err(Error::InsufficientData("confusion of empty sequences".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&a, &p) in actual.iter().zip(predicted) {
        if a > 1 || p > 1 {
            return Err(Error::Domain(format!("labels must be 0 or 1, got ({a}, {p})")));
        }
        match (a, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape<T> {
    pub value: Option<T>,
    /// Points skipped because |actual| was below the guard.
    pub excluded: usize,
}

pub fn mape<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<Mape<T>> {
    mape_with_epsilon(actual, predicted, T::of(MAPE_EPSILON))
}

pub fn mape_with_epsilon<T: Scalar>(actual: &[T], predicted: &[T], eps: T) -> Result<Mape<T>> {
    check_len(actual.len(), predicted.len())?;
    if actual.is_empty() {
        return Err(Error::InsufficientData("MAPE of empty sequences".into()));
    }
    let mut sum = T::zero();
    let mut used = 0usize;
    for (&a, &p) in actual.iter().zip(predicted) {
        if a.abs() < eps {
            continue;
        }
        sum = sum + ((a - p) / a).abs();
        used += 1;
    }
    let value = (used > 0).then(|| T::of(100.0) * sum / count(used));
    Ok(Mape { value, excluded: actual.len() - used })
}

/// Product-moment correlation; `None` for fewer than two points or a constant input.
pub fn pearson<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<Option<T>> {
    check_len(actual.len(), predicted.len())?;
    let n = actual.len();
    if n < 2 {
        return Ok(None);
    }
    let mean = |v: &[T]| v.iter().copied().sum::<T>() / count(n);
    let (ma, mp) = (mean(actual), mean(predicted));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &p) in actual.iter().zip(predicted) {
        let (da, dp) = (a - ma, p - mp);
        sxy = sxy + da * dp;
        sxx = sxx + da * da;
        syy = syy + dp * dp;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return Ok(None);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(Some(r.max(-T::one()).min(T::one())))
}

/// Percent of positions where both series move the same way (a zero counts as down).
pub fn matched_cases<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<T> {
    check_len(actual.len(), predicted.len())?;
    if actual.is_empty() {
        return Err(Error::InsufficientData("matched cases of empty sequences".into()));
    }
    let hits = actual
        .iter()
        .zip(predicted)
        .filter(|(&a, &p)| binarize_direction(a) == binarize_direction(p))
        .count();
    Ok(T::of(100.0) * count::<T>(hits) / count(actual.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub confusion: ConfusionMatrix,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub accuracy: Option<f64>,
}

impl ClassificationReport {
    pub fn from_labels(actual: &[u8], predicted: &[u8]) -> Result<Self> {
        let cm = confusion(actual, predicted)?;
        Ok(Self {
            confusion: cm,
            sensitivity: cm.sensitivity(),
            specificity: cm.specificity(),
            ppv: cm.ppv(),
            npv: cm.npv(),
            accuracy: cm.accuracy(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport<T> {
    pub mape: Option<T>,
    pub mape_excluded: usize,
    pub pearson: Option<T>,
    pub matched_pct: T,
    pub n: usize,
}

impl<T: Scalar> RegressionReport<T> {
    pub fn from_values(actual: &[T], predicted: &[T]) -> Result<Self> {
        let m = mape(actual, predicted)?;
        Ok(Self {
            mape: m.value,
            mape_excluded: m.excluded,
            pearson: pearson(actual, predicted)?,
            matched_pct: matched_cases(actual, predicted)?,
            n: actual.len(),
        })
    }
}

/// Formats a measure with fixed decimals, or `NA`.
pub fn fmt_measure(value: Option<f64>, decimals: usize) -> String {
    match value {
        Some(v) => format!("{v:.decimals$}"),
        None => "NA".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, fp: 1, tn: 1, fn_: 1 });
        let cm = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        let cm = confusion(&[0; 7], &[1; 7]).unwrap();
        assert_eq!((cm.tp, cm.fp), (0, 7));
        assert!(matches!(confusion(&[1], &[1, 0]), Err(Error::LengthMismatch { .. })));
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn undefined_is_none() {
        let cm = ConfusionMatrix { tp: 0, fp: 0, tn: 5, fn_: 0 };
        assert_eq!(cm.sensitivity(), None);
        assert_eq!(cm.ppv(), None);
        assert_eq!(cm.specificity(), Some(100.0));
        assert_eq!(fmt_measure(cm.sensitivity(), 2), "NA");
    }

    #[test]
    fn mape_guard_counts_exclusions() {
        let m = mape(&[0.0, 1.0], &[5.0, 1.0]).unwrap();
        assert_eq!(m.value, Some(0.0));
        assert_eq!(m.excluded, 1);
        let m = mape(&[0.0, 0.0], &[5.0, 1.0]).unwrap();
        assert_eq!(m.value, None);
        assert!(mape::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn pearson_undefined_for_constant() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert_eq!(pearson(&[1.0], &[1.0]).unwrap(), None);
        let r: f32 = pearson(&[1.0f32, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn accuracy_identity(tp in 0usize..500, fp in 0usize..500, tn in 0usize..500, fn_ in 0usize..500) {
            let cm = ConfusionMatrix { tp, fp, tn, fn_ };
            prop_assume!(cm.positives() > 0 && cm.negatives() > 0);
            let (p, n) = (cm.positives() as f64, cm.negatives() as f64);
            let lhs = cm.accuracy().unwrap();
            let rhs = (cm.sensitivity().unwrap() * p + cm.specificity().unwrap() * n) / (p + n);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }

        #[test]
        fn pearson_affine_invariant(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            alpha in 0.01f64..100.0,
            beta in -100.0f64..100.0,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let scaled: Vec<f64> = a.iter().map(|x| alpha * x + beta).collect();
            if let (Some(r1), Some(r2)) = (pearson(&a, &p).unwrap(), pearson(&scaled, &p).unwrap()) {
                prop_assert!((r1 - r2).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&r1));
            }
        }

        #[test]
        fn mape_scale_invariant(
            pairs in prop::collection::vec((0.5f64..100.0, -100.0f64..100.0), 1..40),
            c in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let m1 = mape(&a, &p).unwrap().value.unwrap();
            let sa: Vec<f64> = a.iter().map(|x| c * x).collect();
            let sp: Vec<f64> = p.iter().map(|x| c * x).collect();
            let m2 = mape(&sa, &sp).unwrap().value.unwrap();
            prop_assert!((m1 - m2).abs() <= 1e-9 * m1.max(1.0));
        }

        #[test]
        fn self_match_is_total(a in prop::collection::vec(-10.0f64..10.0, 1..50)) {
            prop_assert_eq!(matched_cases(&a, &a).unwrap(), 100.0);
        }
    }
}
