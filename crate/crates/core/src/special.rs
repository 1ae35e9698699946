//! Log-gamma, the regularized incomplete beta function and the F tail.
//!
//! `I_x(a, b)` is evaluated with the classic continued fraction
//!
//! ```text
//! I_x(a,b) = x^a (1-x)^b / (a B(a,b)) * 1/(1+ d1/(1+ d2/(1+ ...)))
//! d_{2m+1} = -(a+m)(a+b+m) x / ((a+2m)(a+2m+1))
//! d_{2m}   =  m(b-m) x / ((a+2m-1)(a+2m))
//! ```
//!
//! using the modified Lentz recurrence, and the reflection
//! `I_x(a,b) = 1 - I_{1-x}(b,a)` when `x > (a+1)/(a+b+2)` so the fraction is
//! always evaluated on its rapidly converging side.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 10_000;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = T::of(0.5);
    if x < half {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = T::of(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::of(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::of(c) / (x + T::of(i as f64));
    }
    let t = x + T::of(LANCZOS_G) + half;
    T::of(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

fn beta_continued_fraction<T: Scalar>(x: T, a: T, b: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let one = T::one();
    let (qab, qap, qam) = (a + b, a + one, a - one);
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = T::of(m as f64);
        let m2 = m + m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= T::series_tol() {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`; `x` is clamped to `[0, 1]`.
pub fn reg_incomplete_beta<T: Scalar>(x: T, a: T, b: T) -> T {
    assert!(a > T::zero() && b > T::zero(), "incomplete beta needs a, b > 0");
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let one = T::one();
    // Closed forms: I_x(1,b) = 1-(1-x)^b and I_x(a,1) = x^a.
    if a == one {
        return one - (one - x).powf(b);
    }
    if b == one {
        return x.powf(a);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (one - x).ln();
    let front = ln_front.exp();
    if x < (a + one) / (a + b + T::of(2.0)) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        one - front * beta_continued_fraction(one - x, b, a) / b
    }
}

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_survival<T: Scalar>(f: T, d1: T, d2: T) -> T {
    if f <= T::zero() {
        return T::one();
    }
    if f.is_infinite() {
        return T::zero();
    }
    let half = T::of(0.5);
    reg_incomplete_beta(d2 / (d2 + d1 * f), half * d2, half * d1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0f64).abs() < 1e-14);
        assert!(ln_gamma(2.0f64).abs() < 1e-14);
        assert!((ln_gamma(5.0f64) - 24.0f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5f64) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(0.1f64) - 2.252_712_651_734_206).abs() < 1e-12);
    }

    // Reference values from scipy.special.betainc / scipy.stats.f.sf.
    #[test]
    fn incomplete_beta_reference() {
        let cases = [
            (0.5, 1.0, 1.0, 0.5),
            (0.3, 2.0, 5.0, 0.579_825_000_000_000_3),
            (0.9, 0.5, 0.5, 0.795_167_235_300_866_5),
            (0.2, 10.0, 3.0, 4.526_080_000_000_003e-6),
            (0.75, 30.0, 12.5, 0.726_339_724_632_397_6),
        ];
        for (x, a, b, expect) in cases {
            let got: f64 = reg_incomplete_beta(x, a, b);
            assert!((got - expect).abs() < 1e-12, "I({x};{a},{b}) = {got}, want {expect}");
        }
        assert_eq!(reg_incomplete_beta(0.5f64, 1.0, 1.0), 0.5);
    }

    #[test]
    fn f_tail_reference() {
        let cases = [
            (1.0, 1.0, 10.0, 0.340_893_132_302_059_75),
            (3.5, 4.0, 120.0, 0.009_683_693_152_466_522),
            (0.25, 5.0, 40.0, 0.937_355_807_205_798_4),
        ];
        for (f, d1, d2, expect) in cases {
            let got: f64 = f_survival(f, d1, d2);
            assert!((got - expect).abs() < 1e-12, "sf({f};{d1},{d2}) = {got}, want {expect}");
        }
        assert_eq!(f_survival(0.0f64, 2.0, 10.0), 1.0);
        assert_eq!(f_survival(f64::INFINITY, 2.0, 10.0), 0.0);
    }

    #[test]
    fn single_precision() {
        let got: f32 = reg_incomplete_beta(0.3f32, 2.0, 5.0);
        assert!((got - 0.579_825).abs() < 1e-5);
    }
}
