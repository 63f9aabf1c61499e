//! Student-t confidence intervals.
//!
//! Quantiles come from the regularized incomplete beta function evaluated by
//! its continued fraction (modified Lentz), inverted by bisection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cannot summarize an empty sample")]
    Empty,
    #[error("confidence level must lie in (0, 1), got {0}")]
    Confidence(f64),
    #[error("degrees of freedom must be positive, got {0}")]
    DegreesOfFreedom(f64),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// Mean and symmetric half-width of a confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub half_width: f64,
}

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

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the approximation in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// CDF of Student's t distribution with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Quantile (inverse CDF) of Student's t distribution.
pub fn student_t_quantile(p: f64, df: f64) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::Confidence(p));
    }
    if df.is_nan() || df <= 0.0 || !df.is_finite() {
        return Err(StatsError::DegreesOfFreedom(df));
    }
    if p < 0.5 {
        return student_t_quantile(1.0 - p, df).map(|q| -q);
    }
    let mut hi = 1.0;
    while student_t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-sided Student-t confidence interval for the mean:
/// `t_{(1+c)/2, n−1} · s / √n` with the `n − 1` sample standard deviation.
/// A single sample, or a sample of identical values, has half-width 0.
pub fn student_t_ci(samples: &[f64], confidence: f64) -> Result<ConfidenceInterval, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::Confidence(confidence));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() == 1 || samples.iter().all(|&v| v == samples[0]) {
        return Ok(ConfidenceInterval {
            mean,
            half_width: 0.0,
        });
    }
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let t = student_t_quantile(0.5 * (1.0 + confidence), n - 1.0)?;
    Ok(ConfidenceInterval {
        mean,
        half_width: t * var.sqrt() / n.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn binary(k: usize, n: usize) -> Vec<f64> {
        (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn quantiles_match_printed_t_table() {
        // Standard two-sided 95% critical values.
        assert!((student_t_quantile(0.975, 9.0).unwrap() - 2.262157).abs() < 1e-6);
        assert!((student_t_quantile(0.975, 99.0).unwrap() - 1.984217).abs() < 1e-6);
        assert!((student_t_quantile(0.975, 1.0).unwrap() - 12.706205).abs() < 1e-5);
        assert!((student_t_quantile(0.995, 4.0).unwrap() - 4.604095).abs() < 1e-6);
    }

    #[test]
    fn quantiles_agree_with_independent_library() {
        for df in [1.0, 2.0, 3.5, 9.0, 30.0, 99.0, 1000.0] {
            let reference = StudentsT::new(0.0, 1.0, df).unwrap();
            for p in [0.6, 0.9, 0.95, 0.975, 0.995, 0.05] {
                let ours = student_t_quantile(p, df).unwrap();
                let theirs = reference.inverse_cdf(p);
                assert!(
                    (ours - theirs).abs() < 1e-8 * theirs.abs().max(1.0),
                    "df {df} p {p}: {ours} vs {theirs}"
                );
            }
        }
    }

    #[test]
    fn binary_ten_trial_intervals() {
        let ci = student_t_ci(&binary(9, 10), 0.95).unwrap();
        assert!((ci.mean - 0.9).abs() < 1e-12);
        assert!(
            (ci.half_width - 0.226_215_7).abs() < 1e-6,
            "{}",
            ci.half_width
        );
        let ci = student_t_ci(&binary(10, 10), 0.95).unwrap();
        assert_eq!((ci.mean, ci.half_width), (1.0, 0.0));
        let ci = student_t_ci(&binary(5, 10), 0.95).unwrap();
        assert!((ci.half_width - 0.377_1).abs() < 1e-3);
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(student_t_ci(&[], 0.95), Err(StatsError::Empty));
        assert_eq!(student_t_ci(&[3.0], 0.95).unwrap().half_width, 0.0);
        assert_eq!(student_t_ci(&[0.1; 10], 0.95).unwrap().half_width, 0.0);
        assert!(student_t_ci(&[1.0, 2.0], 1.0).is_err());
        assert!(student_t_ci(&[1.0, f64::NAN], 0.95).is_err());
    }
}
