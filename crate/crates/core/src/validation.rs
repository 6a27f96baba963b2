//! The Fourier maximum modulus test.
//!
//! The discrepancy between a kernel ridge estimate of the physical process
//! and the simulator, weighted by the square root of the estimated input
//! density, is expanded in an orthonormal Fourier basis. The statistic is
//! the largest standardized, decay-weighted coefficient
//! `T = max_j |√n ρ_j ŝ_j / σ̂|`, and its p-value is `1 − Π_j (2Φ(T/ρ_j) − 1)`.

use serde::{Deserialize, Serialize};

use crate::basis::{default_kmax, enumerate_basis, AxisElement, BasisIndex, DEFAULT_ELL};
use crate::data::Dataset;
use crate::density::{estimate_density, BandwidthSelection, DensityEstimate};
use crate::domain::{validate_partition, Domain};
use crate::error::{config, domain, FmmtError, Result};
use crate::kernel::MaternParams;
use crate::krr::{cross_validate_lambda, default_c_grid, fit_krr, KrrFit};
use crate::quadrature::{TensorGrid, PANEL_ORDER};
use crate::special::two_sided_normal;

/// `σ̂` below this multiple of the response scale counts as zero. Fits of
/// noiseless data leave residuals of order 1e-6 from the diagonal jitter.
pub const DEGENERATE_SIGMA: f64 = 1e-4;
/// Coefficients below this multiple of the response scale (times the square
/// root of the box volume) count as zero when `σ̂` is degenerate.
pub const COEFFICIENT_ZERO_TOL: f64 = 1e-3;

/// How the ridge parameter is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// `λ = C*/n` with `C*` picked by k-fold cross-validation over `c_grid`.
    CrossValidated {
        c_grid: Vec<f64>,
        folds: usize,
        seed: u64,
    },
    Fixed(f64),
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::CrossValidated {
            c_grid: default_c_grid(),
            folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub ell: f64,
    /// `None` selects `floor(sqrt(n))`.
    pub k_max: Option<u32>,
    /// `None` selects [`default_quad_points`].
    pub quad_points_per_dim: Option<usize>,
    pub alpha: f64,
    pub kernel: MaternParams,
    pub lambda: LambdaRule,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            ell: DEFAULT_ELL,
            k_max: None,
            quad_points_per_dim: None,
            alpha: 0.05,
            kernel: MaternParams::new(3.5, 1.0).expect("valid default kernel"),
            lambda: LambdaRule::default(),
        }
    }
}

/// Smallest admissible number of quadrature nodes per dimension.
pub fn min_quad_points(k_max: u32) -> usize {
    16 * (k_max as usize + 1)
}

/// `max(512, 32 (k_max + 1))` in one dimension, `max(64, 16 (k_max + 1))`
/// above, rounded up to whole panels.
pub fn default_quad_points(k_max: u32, d: usize) -> usize {
    let k = k_max as usize + 1;
    let raw = if d <= 1 {
        (32 * k).max(512)
    } else {
        (16 * k).max(64)
    };
    raw.div_ceil(PANEL_ORDER) * PANEL_ORDER
}

/// Configuration with every default filled in for a given sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub ell: f64,
    pub k_max: u32,
    pub quad_points_per_dim: usize,
    pub alpha: f64,
    pub kernel: MaternParams,
    pub lambda: LambdaRule,
}

impl TestConfig {
    pub fn resolve(&self, n: usize, d: usize) -> Result<ResolvedConfig> {
        if !(self.ell > 0.5) {
            return config(format!("decay exponent must exceed 0.5, got {}", self.ell));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return config(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        let k_max = self.k_max.unwrap_or_else(|| default_kmax(n));
        let quad = match self.quad_points_per_dim {
            Some(q) => q.div_ceil(PANEL_ORDER) * PANEL_ORDER,
            None => default_quad_points(k_max, d),
        };
        if quad < min_quad_points(k_max) {
            return config(format!(
                "{quad} quadrature points per dimension cannot resolve k_max = {k_max} (need {})",
                min_quad_points(k_max)
            ));
        }
        if let LambdaRule::Fixed(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return config(format!("fixed lambda must be non-negative, got {l}"));
            }
        }
        Ok(ResolvedConfig {
            ell: self.ell,
            k_max,
            quad_points_per_dim: quad,
            alpha: self.alpha,
            kernel: self.kernel,
            lambda: self.lambda.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub basis: BasisIndex,
    pub s_hat: f64,
    /// `√n ρ ŝ / σ̂`.
    #[serde(with = "crate::serde_float")]
    pub weighted_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Ok,
    /// `σ̂` vanished; the p-value is 1 if every coefficient is zero and 0 otherwise.
    DegenerateNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    #[serde(with = "crate::serde_float")]
    pub statistic: f64,
    pub p_value: f64,
    pub coefficients: Vec<CoefficientRecord>,
    pub sigma_hat: f64,
    pub k_max: u32,
    pub ell: f64,
    pub domain: Domain,
    pub n: usize,
    pub lambda: f64,
    pub edf: f64,
    pub quad_points_per_dim: usize,
    pub status: TestStatus,
}

impl TestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainReport {
    pub reports: Vec<TestReport>,
    pub bonferroni_adjusted_p: Vec<f64>,
    pub rejected_ier: Vec<bool>,
    pub rejected_fwer: Vec<bool>,
    pub alpha: f64,
}

impl SubdomainReport {
    /// Whether any subdomain is rejected after Bonferroni adjustment.
    pub fn any_fwer_rejection(&self) -> bool {
        self.rejected_fwer.iter().any(|&r| r)
    }
}

/// Coefficients `ŝ_i = ∫ (f̂ − y^s) √p̂ h_i` over `bx` by a tensor Gauss–Legendre
/// rule with `points_per_dim` nodes per dimension.
pub fn fourier_coefficients(
    discrepancy: &dyn Fn(&[f64]) -> f64,
    sqrt_density: &dyn Fn(&[f64]) -> f64,
    basis: &[BasisIndex],
    bx: &Domain,
    points_per_dim: usize,
) -> Result<Vec<f64>> {
    let grid = TensorGrid::new(bx, points_per_dim);
    let values = grid.evaluate(|x| discrepancy(x) * sqrt_density(x));
    coefficients_on_grid(&values, &grid, basis, bx)
}

/// Projects integrand values on `grid` onto `basis`. The contraction runs one
/// axis at a time against tables of the one-dimensional elements.
pub fn coefficients_on_grid(
    values: &[f64],
    grid: &TensorGrid,
    basis: &[BasisIndex],
    bx: &Domain,
) -> Result<Vec<f64>> {
    let d = bx.dim();
    if grid.dim() != d || values.len() != grid.len() {
        return domain("integrand values do not match the quadrature grid");
    }
    if basis.iter().any(|b| b.dim() != d) {
        return domain("basis element dimension differs from the box");
    }
    let k_top = basis.iter().map(|b| b.total_frequency).max().unwrap_or(0);
    let needed = min_quad_points(k_top);
    if grid.axes.iter().any(|a| a.len() < needed) {
        return config(format!(
            "quadrature with {} nodes per dimension cannot resolve frequency {k_top} (need {needed})",
            grid.axes.iter().map(|a| a.len()).min().unwrap_or(0)
        ));
    }
    let slots = 2 * k_top as usize + 1;
    let weights = grid.weights();
    let mut data: Vec<f64> = values.iter().zip(&weights).map(|(v, w)| v * w).collect();
    let mut shape: Vec<usize> = grid.axes.iter().map(|a| a.len()).collect();
    for m in (0..d).rev() {
        let table: Vec<Vec<f64>> = (0..slots)
            .map(|s| {
                let e = AxisElement::from_slot(s);
                grid.axes[m]
                    .nodes
                    .iter()
                    .map(|&x| e.eval(x, bx.lower()[m], bx.side(m)))
                    .collect()
            })
            .collect();
        let pre: usize = shape[..m].iter().product();
        let post: usize = shape[m + 1..].iter().product();
        let len = shape[m];
        let mut next = vec![0.0; pre * slots * post];
        for a in 0..pre {
            for (s, row) in table.iter().enumerate() {
                let out = &mut next[(a * slots + s) * post..(a * slots + s + 1) * post];
                for (p, &t) in row.iter().enumerate() {
                    let src = &data[(a * len + p) * post..(a * len + p + 1) * post];
                    for (o, v) in out.iter_mut().zip(src) {
                        *o += t * v;
                    }
                }
            }
        }
        data = next;
        shape[m] = slots;
    }
    Ok(basis
        .iter()
        .map(|b| {
            let flat = b
                .per_dim
                .iter()
                .fold(0usize, |acc, e| acc * slots + e.slot());
            data[flat]
        })
        .collect())
}

/// `T = max_j |√n ρ_j ŝ_j / σ̂|`.
pub fn test_statistic(coeffs: &[f64], weights: &[f64], n: usize, sigma_hat: f64) -> Result<f64> {
    if coeffs.len() != weights.len() {
        return domain("coefficient and weight lists differ in length");
    }
    if !(sigma_hat > 0.0) {
        return Err(FmmtError::DegenerateNoise);
    }
    let scale = (n as f64).sqrt() / sigma_hat;
    Ok(coeffs
        .iter()
        .zip(weights)
        .map(|(s, r)| (scale * r * s).abs())
        .fold(0.0, f64::max))
}

/// `ln F(t) = Σ_j ln(1 − erfc(t / (ρ_j √2)))`.
fn log_limiting_cdf(t: f64, weights: &[f64]) -> f64 {
    let mut acc = 0.0;
    for r in weights {
        let (_, tail) = two_sided_normal(t / r);
        if tail >= 1.0 {
            return f64::NEG_INFINITY;
        }
        acc += (-tail).ln_1p();
    }
    acc
}

/// Limiting distribution `F(t) = Π_j (2Φ(t/ρ_j) − 1)` over the given weights.
pub fn limiting_cdf(t: f64, weights: &[f64]) -> Result<f64> {
    check_cdf_args(t, weights)?;
    Ok(log_limiting_cdf(t, weights).exp())
}

/// `1 − F(t)`, evaluated without cancellation in the upper tail.
pub fn limiting_p_value(t: f64, weights: &[f64]) -> Result<f64> {
    check_cdf_args(t, weights)?;
    Ok((-log_limiting_cdf(t, weights).exp_m1()).clamp(0.0, 1.0) + 0.0)
}

fn check_cdf_args(t: f64, weights: &[f64]) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return domain(format!("statistic must be non-negative, got {t}"));
    }
    if weights.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return domain("decay weights must be finite and positive");
    }
    Ok(())
}

/// Bonferroni adjustment: `(min(1, N p), p < α, N p < α)` per subdomain.
pub fn bonferroni(p_values: &[f64], alpha: f64) -> (Vec<f64>, Vec<bool>, Vec<bool>) {
    let n = p_values.len() as f64;
    let adjusted: Vec<f64> = p_values.iter().map(|p| (n * p).min(1.0)).collect();
    let ier = p_values.iter().map(|p| *p < alpha).collect();
    let fwer = adjusted.iter().map(|p| *p < alpha).collect();
    (adjusted, ier, fwer)
}

/// Quantities estimated once on the full domain and shared by every box.
#[derive(Debug, Clone)]
pub struct SharedFit {
    pub fit: KrrFit,
    pub density: DensityEstimate,
    pub bandwidth: BandwidthSelection,
    pub resolved: ResolvedConfig,
    pub domain: Domain,
    pub response_scale: f64,
}

/// Fits the regression, noise level and input density on `bx`.
pub fn prepare(data: &Dataset, bx: &Domain, cfg: &TestConfig) -> Result<SharedFit> {
    if data.n() < 5 {
        return domain(format!(
            "at least 5 observations are required, got {}",
            data.n()
        ));
    }
    if data.dim() != bx.dim() {
        return domain("dataset and domain differ in dimension");
    }
    for (i, p) in data.points.iter().enumerate() {
        bx.check_contains(p)
            .map_err(|e| FmmtError::Domain(format!("observation {}: {e}", i + 1)))?;
    }
    let resolved = cfg.resolve(data.n(), bx.dim())?;
    let lambda = match &resolved.lambda {
        LambdaRule::Fixed(l) => *l,
        LambdaRule::CrossValidated {
            c_grid,
            folds,
            seed,
        } => cross_validate_lambda(
            &data.points,
            &data.responses,
            resolved.kernel,
            c_grid,
            *folds,
            *seed,
        )?,
    };
    let fit = fit_krr(&data.points, &data.responses, resolved.kernel, lambda)?;
    let (density, bandwidth) = estimate_density(&data.points, bx, resolved.quad_points_per_dim)?;
    let response_scale = (data.responses.iter().map(|y| y * y).sum::<f64>() / data.n() as f64)
        .sqrt()
        .max(1.0);
    Ok(SharedFit {
        fit,
        density,
        bandwidth,
        resolved,
        domain: bx.clone(),
        response_scale,
    })
}

impl SharedFit {
    /// Runs the test on one box of the domain (the whole domain included).
    pub fn test_box(&self, simulator: &dyn Fn(&[f64]) -> f64, bx: &Domain) -> Result<TestReport> {
        let r = &self.resolved;
        // kink-aligned panels are cheap only in one dimension
        let grid = if bx.dim() == 1 {
            TensorGrid::with_breakpoints(bx, r.quad_points_per_dim, &self.density.breakpoints())
        } else {
            TensorGrid::new(bx, r.quad_points_per_dim)
        };
        let density = self.density.eval_on_grid(&grid);
        let fitted = self.fit.predict_on_grid(&grid);
        let mut x = vec![0.0; grid.dim()];
        let values: Vec<f64> = (0..grid.len())
            .map(|k| {
                grid.point(k, &mut x);
                (fitted[k] - simulator(&x)) * density[k].sqrt()
            })
            .collect();
        let basis = enumerate_basis(r.k_max, bx.dim(), r.ell);
        let s_hat = coefficients_on_grid(&values, &grid, &basis, bx)?;
        let weights: Vec<f64> = basis.iter().map(|b| b.decay_weight).collect();
        let n = self.fit.n();
        let sigma = self.fit.sigma_hat;

        let degenerate = !(sigma > DEGENERATE_SIGMA * self.response_scale);
        let (statistic, p_value, status, scale) = if degenerate {
            let tol = COEFFICIENT_ZERO_TOL * self.response_scale * bx.volume().sqrt();
            let all_zero = s_hat.iter().all(|s| s.abs() <= tol);
            if all_zero {
                (0.0, 1.0, TestStatus::DegenerateNoise, 0.0)
            } else {
                (
                    f64::INFINITY,
                    0.0,
                    TestStatus::DegenerateNoise,
                    f64::INFINITY,
                )
            }
        } else {
            let t = test_statistic(&s_hat, &weights, n, sigma)?;
            let p = limiting_p_value(t, &weights)?;
            (t, p, TestStatus::Ok, (n as f64).sqrt() / sigma)
        };
        let coefficients = basis
            .into_iter()
            .zip(&s_hat)
            .map(|(b, &s)| {
                let z = if scale.is_finite() {
                    scale * b.decay_weight * s
                } else if s == 0.0 {
                    0.0
                } else {
                    scale.copysign(s)
                };
                CoefficientRecord {
                    weighted_z: z,
                    basis: b,
                    s_hat: s,
                }
            })
            .collect();
        Ok(TestReport {
            statistic,
            p_value,
            coefficients,
            sigma_hat: sigma,
            k_max: r.k_max,
            ell: r.ell,
            domain: bx.clone(),
            n,
            lambda: self.fit.lambda,
            edf: self.fit.edf,
            quad_points_per_dim: r.quad_points_per_dim,
            status,
        })
    }

    /// Tests every box of `partition` and applies the Bonferroni correction.
    pub fn test_partition(
        &self,
        simulator: &dyn Fn(&[f64]) -> f64,
        partition: &[Domain],
    ) -> Result<SubdomainReport> {
        validate_partition(&self.domain, partition)?;
        let reports = partition
            .iter()
            .map(|bx| self.test_box(simulator, bx))
            .collect::<Result<Vec<_>>>()?;
        let p: Vec<f64> = reports.iter().map(|r| r.p_value).collect();
        let alpha = self.resolved.alpha;
        let (bonferroni_adjusted_p, rejected_ier, rejected_fwer) = bonferroni(&p, alpha);
        Ok(SubdomainReport {
            reports,
            bonferroni_adjusted_p,
            rejected_ier,
            rejected_fwer,
            alpha,
        })
    }
}

/// Global test of `f ≡ y^s` on `bx`.
pub fn global_test(
    data: &Dataset,
    simulator: &dyn Fn(&[f64]) -> f64,
    bx: &Domain,
    cfg: &TestConfig,
) -> Result<TestReport> {
    prepare(data, bx, cfg)?.test_box(simulator, bx)
}

/// Subdomain tests on a partition; the domain is the union of the boxes.
pub fn subdomain_tests(
    data: &Dataset,
    simulator: &dyn Fn(&[f64]) -> f64,
    partition: &[Domain],
    cfg: &TestConfig,
) -> Result<SubdomainReport> {
    let whole = Domain::bounding(partition)?;
    validate_partition(&whole, partition)?;
    prepare(data, &whole, cfg)?.test_partition(simulator, partition)
}

/// Global and subdomain tests sharing one regression and density fit.
pub fn global_and_subdomain_tests(
    data: &Dataset,
    simulator: &dyn Fn(&[f64]) -> f64,
    bx: &Domain,
    partition: &[Domain],
    cfg: &TestConfig,
) -> Result<(TestReport, SubdomainReport)> {
    validate_partition(bx, partition)?;
    let shared = prepare(data, bx, cfg)?;
    let global = shared.test_box(simulator, bx)?;
    let sub = shared.test_partition(simulator, partition)?;
    Ok((global, sub))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{AxisElement, Phase};
    use std::f64::consts::{PI, SQRT_2};

    fn one(idx: AxisElement) -> Vec<BasisIndex> {
        vec![BasisIndex::new(vec![idx], DEFAULT_ELL)]
    }

    #[test]
    fn zero_discrepancy_gives_zero_coefficients() {
        let basis = enumerate_basis(5, 1, DEFAULT_ELL);
        let c = fourier_coefficients(&|_| 0.0, &|_| 1.0, &basis, &Domain::unit(1), 512).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn recovers_sine_coefficient() {
        let unit = Domain::unit(1);
        let sin1 = AxisElement::new(1, Phase::Sine).unwrap();
        let f = |x: &[f64]| SQRT_2 * (2.0 * PI * x[0]).sin();
        let c = fourier_coefficients(&f, &|_| 1.0, &one(sin1), &unit, 512).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-8);
        let c =
            fourier_coefficients(&f, &|_| 1.0, &one(AxisElement::CONSTANT), &unit, 512).unwrap();
        assert!(c[0].abs() < 1e-8);
        let c = fourier_coefficients(&|x| x[0], &|_| 1.0, &one(sin1), &unit, 512).unwrap();
        assert!((c[0] + SQRT_2 / (2.0 * PI)).abs() < 1e-12);
        assert!((c[0] + 0.225_079).abs() < 1e-6);
    }

    #[test]
    fn coarse_quadrature_rejected() {
        let basis = enumerate_basis(10, 1, DEFAULT_ELL);
        let r = fourier_coefficients(&|_| 1.0, &|_| 1.0, &basis, &Domain::unit(1), 64);
        assert!(matches!(r, Err(FmmtError::Config(_))));
    }

    #[test]
    fn statistic_arithmetic() {
        assert_eq!(
            test_statistic(&[0.0, 0.0], &[1.0, 0.9], 10, 1.0).unwrap(),
            0.0
        );
        assert!((test_statistic(&[0.1], &[1.0], 100, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            test_statistic(&[0.1], &[1.0], 100, 0.0),
            Err(FmmtError::DegenerateNoise)
        );
    }

    #[test]
    fn limiting_distribution_values() {
        assert_eq!(limiting_cdf(0.0, &[1.0, 0.8]).unwrap(), 0.0);
        assert_eq!(limiting_p_value(0.0, &[1.0, 0.8]).unwrap(), 1.0);
        let p = limiting_p_value(1.959964, &[1.0]).unwrap();
        assert!((p - 0.05).abs() < 1e-6);
        let w = vec![1.3; 20];
        assert!(limiting_cdf(50.0, &w).unwrap() > 1.0 - 1e-12);
        assert!(limiting_cdf(-1.0, &w).is_err());
        assert!(limiting_cdf(1.0, &[0.0]).is_err());
    }

    #[test]
    fn bonferroni_arithmetic() {
        let (adj, ier, fwer) = bonferroni(&[0.01, 0.2, 0.5], 0.05);
        assert!((adj[0] - 0.03).abs() < 1e-15);
        assert!((adj[1] - 0.6).abs() < 1e-15);
        assert_eq!(adj[2], 1.0);
        assert_eq!(fwer, vec![true, false, false]);
        assert_eq!(ier, vec![true, false, false]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TestConfig::default();
        assert_eq!(cfg.resolve(50, 1).unwrap().k_max, 7);
        assert_eq!(cfg.resolve(50, 1).unwrap().quad_points_per_dim, 512);
        assert_eq!(cfg.resolve(200, 2).unwrap().quad_points_per_dim, 240);
        cfg.ell = 0.5;
        assert!(cfg.resolve(50, 1).is_err());
        cfg.ell = 0.7;
        cfg.quad_points_per_dim = Some(64);
        assert!(cfg.resolve(50, 1).is_err());
        cfg.quad_points_per_dim = None;
        cfg.alpha = 1.0;
        assert!(cfg.resolve(50, 1).is_err());
    }
}
