//! Kernel ridge regression with a Matérn kernel.
//!
//! The fitted function is `f(x) = K(x, X) w` with
//! `w = (K(X, X) + nλ I + jitter I)^{-1} Y`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, FmmtError, Result};
use crate::kernel::{euclidean, gram_matrix, kernel_matrix, MaternParams};
use crate::quadrature::TensorGrid;

pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-6;
/// Tolerance on `‖A w − Y‖ / ‖Y‖` for the ridge system.
pub const SOLVE_TOLERANCE: f64 = 1e-8;

/// A fitted kernel ridge regressor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrrFit {
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub params: MaternParams,
    /// Diagonal jitter that made the system factorizable.
    pub jitter: f64,
    pub sigma_hat: f64,
    /// Effective degrees of freedom `tr(S)`, `S = K (K + nλI + jitter I)^{-1}`.
    pub edf: f64,
    /// Whether the `RSS / n` fallback was used for the noise variance.
    pub variance_fallback: bool,
    pub fitted: Vec<f64>,
}

fn validate_xy(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return domain("kernel ridge regression needs at least one observation");
    }
    if x.len() != y.len() {
        return domain(format!("{} inputs but {} responses", x.len(), y.len()));
    }
    let d = x[0].len();
    for (i, p) in x.iter().enumerate() {
        if p.len() != d {
            return domain(format!(
                "row {} has dimension {}, expected {d}",
                i + 1,
                p.len()
            ));
        }
        if p.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
            return domain(format!("row {} contains a non-finite value", i + 1));
        }
    }
    Ok(d)
}

/// Factorizes `K + shift I`, escalating the jitter tenfold up to [`JITTER_MAX`]
/// until the factorization exists and solves `y` to [`SOLVE_TOLERANCE`].
fn factor_with_jitter(
    k: &DMatrix<f64>,
    shift: f64,
    y: &DVector<f64>,
) -> Result<(Cholesky<f64, Dyn>, DVector<f64>, f64)> {
    let n = k.nrows();
    let y_norm = y.norm();
    let mut jitter = JITTER_START;
    loop {
        let mut a = k.clone();
        for i in 0..n {
            a[(i, i)] += shift + jitter;
        }
        if let Some(chol) = Cholesky::new(a.clone()) {
            let mut w = chol.solve(y);
            // one step of iterative refinement
            let r = y - &a * &w;
            w += chol.solve(&r);
            let resid = (y - &a * &w).norm();
            if resid <= SOLVE_TOLERANCE * y_norm.max(f64::MIN_POSITIVE) || y_norm == 0.0 {
                return Ok((chol, w, jitter));
            }
        }
        jitter *= 10.0;
        if jitter > JITTER_MAX * (1.0 + 1e-9) {
            return Err(FmmtError::Numerical(format!(
                "ridge system not factorizable with jitter up to {JITTER_MAX:e}"
            )));
        }
    }
}

/// Fits `f` by kernel ridge regression with regularization `lambda`.
pub fn fit_krr(x: &[Vec<f64>], y: &[f64], params: MaternParams, lambda: f64) -> Result<KrrFit> {
    validate_xy(x, y)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return domain(format!(
            "regularization must be finite and non-negative, got {lambda}"
        ));
    }
    let n = x.len();
    let nf = n as f64;
    let k = gram_matrix(x, &params)?;
    let yv = DVector::from_column_slice(y);
    let shift = nf * lambda;
    let (chol, w, jitter) = factor_with_jitter(&k, shift, &yv)?;

    let fitted = &k * &w;
    // tr(K A^{-1}) = n - (shift + jitter) tr(A^{-1}), tr(A^{-1}) = ‖L^{-1}‖_F².
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| FmmtError::Numerical("triangular inverse failed".into()))?;
    let tr_inv = l_inv.norm_squared();
    let edf = (nf - (shift + jitter) * tr_inv).clamp(0.0, nf);

    let rss: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let (sigma2, variance_fallback) = residual_variance(rss, nf, edf);

    Ok(KrrFit {
        centers: x.to_vec(),
        weights: w.iter().copied().collect(),
        lambda,
        params,
        jitter,
        sigma_hat: sigma2.sqrt(),
        edf,
        variance_fallback,
        fitted: fitted.iter().copied().collect(),
    })
}

/// `RSS / (n − edf)`, or `RSS / n` once the residual degrees of freedom vanish.
fn residual_variance(rss: f64, n: f64, edf: f64) -> (f64, bool) {
    if n - edf <= 1e-6 * n {
        (rss / n, true)
    } else {
        (rss / (n - edf), false)
    }
}

impl KrrFit {
    pub fn dim(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return domain(format!(
                "prediction point has dimension {}, fit has {}",
                x.len(),
                self.dim()
            ));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * self.params.eval_unchecked(euclidean(x, c)))
            .sum()
    }

    /// Predictions at every node of `grid`, in flat-index order.
    pub fn predict_on_grid(&self, grid: &TensorGrid) -> Vec<f64> {
        let d = grid.dim();
        let mut pts = vec![0.0; grid.len() * d];
        for (k, chunk) in pts.chunks_mut(d.max(1)).enumerate().take(grid.len()) {
            grid.point(k, chunk);
        }
        self.predict_flat(&pts)
    }

    /// Predictions at points stored row-major in one slice.
    pub(crate) fn predict_flat(&self, pts: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let centers: Vec<f64> = self.centers.iter().flatten().copied().collect();
        let s = self.params.scale();
        match self.params.half_integer_order() {
            Some(0) => radial_sums(pts, &centers, &self.weights, d, |r2| (-s * r2.sqrt()).exp()),
            Some(1) => radial_sums(pts, &centers, &self.weights, d, |r2| {
                let z = s * r2.sqrt();
                (1.0 + z) * (-z).exp()
            }),
            Some(2) => radial_sums(pts, &centers, &self.weights, d, |r2| {
                let z = s * r2.sqrt();
                (1.0 + z + z * z / 3.0) * (-z).exp()
            }),
            Some(3) => radial_sums(pts, &centers, &self.weights, d, |r2| {
                let z = s * r2.sqrt();
                (1.0 + z * (1.0 + z * (0.4 + z / 15.0))) * (-z).exp()
            }),
            _ => radial_sums(pts, &centers, &self.weights, d, |r2| {
                self.params.eval_unchecked(r2.sqrt())
            }),
        }
    }

    /// Estimated noise variance `σ̂²`.
    pub fn sigma2(&self) -> f64 {
        self.sigma_hat * self.sigma_hat
    }
}

/// Noise variance of a fit: `Σ (y_i − f(x_i))² / (n − tr S)`, falling back to
/// division by `n` when `n ≤ tr S`.
pub fn noise_variance(fit: &KrrFit, x: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    validate_xy(x, y)?;
    let mut rss = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        rss += (yi - fit.predict(xi)?).powi(2);
    }
    Ok(residual_variance(rss, x.len() as f64, fit.edf).0)
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

/// Default grid of `C` values (`λ = C / n`): 25 points in `[1e-9, 1]`.
pub fn default_c_grid() -> Vec<f64> {
    log_grid(1e-9, 1.0, 25)
}

/// Fold label of every observation: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut label = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        label[i] = pos % folds;
    }
    label
}

/// Mean out-of-fold squared error for every value of `c_grid`.
pub fn cv_errors(
    x: &[Vec<f64>],
    y: &[f64],
    params: MaternParams,
    c_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    validate_xy(x, y)?;
    if c_grid.is_empty() {
        return config("cross-validation grid is empty");
    }
    if folds < 2 {
        return config(format!("need at least 2 folds, got {folds}"));
    }
    if x.len() < folds {
        return config(format!(
            "{} observations cannot fill {folds} folds",
            x.len()
        ));
    }
    let labels = fold_assignment(x.len(), folds, seed);
    let mut sse = vec![0.0; c_grid.len()];
    for fold in 0..folds {
        let (train, test): (Vec<usize>, Vec<usize>) =
            (0..x.len()).partition(|&i| labels[i] != fold);
        let xt: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let xs: Vec<Vec<f64>> = test.iter().map(|&i| x[i].clone()).collect();
        let yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
        let k = gram_matrix(&xt, &params)?;
        let cross = kernel_matrix(&xs, &xt, &params)?;
        let eig = SymmetricEigen::new(k);
        let proj = eig.eigenvectors.transpose() * &yt;
        let cross_v = &cross * &eig.eigenvectors;
        for (ci, &c) in c_grid.iter().enumerate() {
            let coef = DVector::from_iterator(
                proj.len(),
                proj.iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(p, e)| p / (e.max(0.0) + c + JITTER_START)),
            );
            let pred = &cross_v * coef;
            sse[ci] += test
                .iter()
                .zip(pred.iter())
                .map(|(&i, p)| (y[i] - p).powi(2))
                .sum::<f64>();
        }
    }
    let n = x.len() as f64;
    Ok(sse.into_iter().map(|s| s / n).collect())
}

/// Selects `λ = C*/n`, with `C*` minimizing the cross-validated error over
/// `c_grid`; near-ties go to the larger `C`.
pub fn cross_validate_lambda(
    x: &[Vec<f64>],
    y: &[f64],
    params: MaternParams,
    c_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    if c_grid.is_empty() {
        return config("cross-validation grid is empty");
    }
    if c_grid.len() == 1 {
        return Ok(c_grid[0] / x.len().max(1) as f64);
    }
    let errors = cv_errors(x, y, params, c_grid, folds, seed)?;
    let mut order: Vec<usize> = (0..c_grid.len()).collect();
    order.sort_by(|&a, &b| c_grid[a].total_cmp(&c_grid[b]));
    let mut best = order[0];
    for &i in &order[1..] {
        if errors[i] <= errors[best] * (1.0 + 1e-12) {
            best = i;
        }
    }
    Ok(c_grid[best] / x.len() as f64)
}

/// `Σ_j w_j k(|x − c_j|²)` for every row `x` of `pts`.
fn radial_sums<K: Fn(f64) -> f64>(
    pts: &[f64],
    centers: &[f64],
    weights: &[f64],
    d: usize,
    k: K,
) -> Vec<f64> {
    match d {
        0 => Vec::new(),
        1 => pts
            .iter()
            .map(|&x| {
                centers
                    .iter()
                    .zip(weights)
                    .map(|(&c, w)| w * k((x - c) * (x - c)))
                    .sum()
            })
            .collect(),
        2 => {
            let (cx, cy): (Vec<f64>, Vec<f64>) =
                centers.chunks_exact(2).map(|c| (c[0], c[1])).unzip();
            pts.chunks_exact(2)
                .map(|x| {
                    let mut acc = 0.0;
                    for j in 0..weights.len() {
                        let dx = x[0] - cx[j];
                        let dy = x[1] - cy[j];
                        acc += weights[j] * k(dx * dx + dy * dy);
                    }
                    acc
                })
                .collect()
        }
        _ => pts
            .chunks_exact(d)
            .map(|x| {
                centers
                    .chunks_exact(d)
                    .zip(weights)
                    .map(|(c, w)| {
                        let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                        w * k(r2)
                    })
                    .sum()
            })
            .collect(),
    }
}
