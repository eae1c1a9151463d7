//! Descriptive statistics, standardization, reliability and correlation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::AnalyticsError;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n − 1 denominator). NaN below two observations.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Standardize with the sample SD. `None` when there is no variance.
pub fn zscore(xs: &[f64]) -> Option<Vec<f64>> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let sd = sample_sd(xs);
    // Relative cutoff: values that differ only by rounding count as constant.
    let scale = xs.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    if sd.is_nan() || sd <= scale * 1e-12 {
        return None;
    }
    Some(xs.iter().map(|x| (x - m) / sd).collect())
}

/// Cronbach's alpha; `items[u][k]` is user `u`'s score on item `k`.
pub fn cronbach_alpha(items: &[Vec<f64>]) -> Result<f64, AnalyticsError> {
    let n = items.len();
    let k = items.first().map_or(0, Vec::len);
    if k < 2 {
        return Err(AnalyticsError::InvalidParameter(format!(
            "Cronbach's alpha needs at least 2 items, got {k}"
        )));
    }
    if n < 3 {
        return Err(AnalyticsError::TooFewObservations { needed: 3, got: n });
    }
    if let Some(row) = items.iter().find(|r| r.len() != k) {
        return Err(AnalyticsError::LengthMismatch {
            left: k,
            right: row.len(),
        });
    }
    let item_var: f64 = (0..k)
        .map(|j| sample_variance(&items.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = items.iter().map(|r| r.iter().sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var.is_nan() || total_var <= 0.0 {
        return Err(AnalyticsError::ZeroVariance {
            what: "row totals".into(),
        });
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_two_tailed: f64,
    pub n: usize,
    pub excluded_users: Vec<String>,
}

/// Two-tailed p for a sample correlation `r` over `n` pairs.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalyticsError::TooFewObservations { needed: 3, got: n });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    for (name, s) in [("x", sxx), ("y", syy)] {
        if s.is_nan() || s <= 0.0 {
            return Err(AnalyticsError::UndefinedCorrelation(format!("{name} is constant")));
        }
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(CorrelationResult {
        r,
        p_two_tailed: correlation_p_value(r, n),
        n,
        excluded_users: Vec::new(),
    })
}
