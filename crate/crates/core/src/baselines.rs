//! Order-selection test of Eubank and Hart, used as a one-sample baseline.
//!
//! Residuals against the null function are expanded in the half-cosine
//! basis `√2 cos(π j x)` and the statistic is the largest running mean of
//! the normalized squared coefficients.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, FmmtError, Result};
use crate::special::chi_square_sf;

const SERIES_TOLERANCE: f64 = 1e-12;
const MAX_SERIES_TERMS: usize = 1_000_000;
const BISECTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub sigma_hat_rice: f64,
    /// Order `m` attaining the maximum.
    pub order: usize,
}

/// Difference-based variance estimate `Σ (y_{i+1} − y_i)² / (2(n − 1))` for
/// responses already ordered by their inputs.
pub fn rice_variance(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return domain(format!(
            "variance estimate needs at least 2 responses, got {}",
            y.len()
        ));
    }
    let ss: f64 = y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(ss / (2.0 * (y.len() - 1) as f64))
}

/// `Σ_{j≥1} j⁻¹ P(χ²_j > j c)`.
fn critical_series(c: f64) -> f64 {
    let mut sum = 0.0;
    for j in 1..=MAX_SERIES_TERMS {
        let term = chi_square_sf(j as f64, j as f64 * c) / j as f64;
        sum += term;
        if term < SERIES_TOLERANCE {
            break;
        }
    }
    sum
}

/// Asymptotic level of the order-selection test at threshold `c`.
pub fn eh_limiting_level(c: f64) -> f64 {
    -(-critical_series(c)).exp_m1()
}

/// Threshold `c_α` solving `1 − exp(−Σ_j j⁻¹ P(χ²_j > j c)) = α`.
pub fn eh_critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return config(format!("alpha must lie in (0, 0.5), got {alpha}"));
    }
    let (mut lo, mut hi) = (1.05, 60.0);
    if eh_limiting_level(lo) < alpha || eh_limiting_level(hi) > alpha {
        return Err(FmmtError::Numerical(format!(
            "critical value for alpha = {alpha} is outside the search bracket"
        )));
    }
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if eh_limiting_level(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Runs the test at level `alpha`.
pub fn eh_test(x: &[f64], y: &[f64], null_fn: &dyn Fn(f64) -> f64, alpha: f64) -> Result<EhResult> {
    let c = eh_critical_value(alpha)?;
    eh_test_with_critical(x, y, null_fn, c)
}

/// Runs the test against a precomputed threshold.
pub fn eh_test_with_critical(
    x: &[f64],
    y: &[f64],
    null_fn: &dyn Fn(f64) -> f64,
    critical_value: f64,
) -> Result<EhResult> {
    let n = x.len();
    if y.len() != n {
        return domain(format!("{n} inputs but {} responses", y.len()));
    }
    if n < 3 {
        return domain(format!("the order-selection test needs n >= 3, got {n}"));
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return domain(format!("input {v} lies outside [0, 1]"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let r: Vec<f64> = order.iter().map(|&i| y[i] - null_fn(x[i])).collect();
    let sigma2 = rice_variance(&r)?;
    if !(sigma2 > 0.0) {
        return Err(FmmtError::DegenerateNoise);
    }

    let nf = n as f64;
    let mut running = 0.0;
    let mut best = (0.0, 1);
    for j in 1..n {
        let freq = PI * j as f64;
        let phi: f64 = xs
            .iter()
            .zip(&r)
            .map(|(xi, ri)| ri * SQRT_2 * (freq * xi).cos())
            .sum::<f64>()
            / nf;
        running += nf * phi * phi / sigma2;
        let value = running / j as f64;
        if value > best.0 {
            best = (value, j);
        }
    }
    Ok(EhResult {
        statistic: best.0,
        critical_value,
        reject: best.0 > critical_value,
        sigma_hat_rice: sigma2.sqrt(),
        order: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rice_hand_values() {
        assert!((rice_variance(&[0.0, 1.0, 0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(rice_variance(&[2.0; 7]).unwrap(), 0.0);
        assert!(rice_variance(&[1.0]).is_err());
    }

    #[test]
    fn zero_residuals_do_not_reject() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let r = eh_test(&x, &y, &|v| v * v, 0.05);
        assert!(matches!(r, Err(FmmtError::DegenerateNoise)));
        let y2: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v * v + (i % 2) as f64 * 1e-3)
            .collect();
        let r = eh_test(&x, &y2, &|v| v * v + 5e-4, 0.05).unwrap();
        assert!(!r.reject);
    }

    #[test]
    fn critical_values_are_monotone() {
        let c1 = eh_critical_value(0.01).unwrap();
        let c5 = eh_critical_value(0.05).unwrap();
        let c10 = eh_critical_value(0.1).unwrap();
        assert!(c1 > c5 && c5 > c10);
        assert!((eh_limiting_level(c5) - 0.05).abs() < 1e-6);
        assert!(eh_critical_value(0.5).is_err());
        assert!(eh_critical_value(0.0).is_err());
    }

    #[test]
    fn statistic_ignores_common_shift() {
        let x: Vec<f64> = (0..15).map(|i| ((i * 7) % 15) as f64 / 14.0).collect();
        let y: Vec<f64> = x.iter().map(|v| (3.0 * v).sin() + 0.1 * v * v).collect();
        let a = eh_test_with_critical(&x, &y, &|v| (3.0 * v).sin(), 4.0).unwrap();
        let y2: Vec<f64> = y.iter().map(|v| v + 2.5).collect();
        let b = eh_test_with_critical(&x, &y2, &|v| (3.0 * v).sin() + 2.5, 4.0).unwrap();
        assert!((a.statistic - b.statistic).abs() <= 1e-12 * a.statistic.max(1.0));
    }
}
