//! Boundary-corrected product Epanechnikov density estimation on a box.
//!
//! Within one bandwidth of a face, each one-dimensional kernel is replaced by
//! the local-linear boundary kernel `(a2 − a1 u) K(u) / (a0 a2 − a1²)`, where
//! `a_l` are the moments of `K` over the part of `[-1, 1]` that the data can
//! reach. The summed estimate is clipped at zero and divided by a normalizing
//! constant so that it integrates to one over the box.

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{domain, FmmtError, Result};
use crate::quadrature::TensorGrid;

/// Bandwidth multipliers searched by leave-one-out likelihood.
pub const MULTIPLIER_GRID: [f64; 11] = [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0];
const LOG_FLOOR: f64 = 1e-12;

/// Epanechnikov kernel `¾(1 − u²)` on `[-1, 1]`.
pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Moments `(a0, a1, a2)` of the Epanechnikov kernel over `[lo, hi]`.
fn truncated_moments(lo: f64, hi: f64) -> (f64, f64, f64) {
    let d = |k: i32| (hi.powi(k) - lo.powi(k)) / k as f64;
    (
        0.75 * (d(1) - d(3)),
        0.75 * (d(2) - d(4)),
        0.75 * (d(3) - d(5)),
    )
}

/// Per-axis kernel at evaluation coordinate `x` on side `[a, b]`.
#[derive(Debug, Clone, Copy)]
struct AxisKernel {
    h: f64,
    /// `None` in the interior; otherwise `(a0, a1, a2, det)`.
    boundary: Option<(f64, f64, f64, f64)>,
}

impl AxisKernel {
    fn at(x: f64, a: f64, b: f64, h: f64) -> Self {
        let p = (x - a) / h;
        let q = (b - x) / h;
        if p >= 1.0 && q >= 1.0 {
            return Self { h, boundary: None };
        }
        let lo = (-q).max(-1.0);
        let hi = p.min(1.0);
        let (a0, a1, a2) = truncated_moments(lo, hi);
        Self {
            h,
            boundary: Some((a0, a1, a2, a0 * a2 - a1 * a1)),
        }
    }

    /// Kernel weight of a sample at coordinate `xi` (already divided by `h`).
    fn weight(&self, x: f64, xi: f64) -> f64 {
        let u = (x - xi) / self.h;
        let k = epanechnikov(u);
        if k == 0.0 {
            return 0.0;
        }
        match self.boundary {
            None => k / self.h,
            Some((_, a1, a2, det)) => (a2 - a1 * u) * k / (det * self.h),
        }
    }
}

/// Bandwidth choice together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub bandwidths: Vec<f64>,
    /// Multiplier `c` in `h = c s n^{-1/(d+4)}`.
    pub multiplier: f64,
    /// Dimensions whose sample variance was zero; those use `0.1 × side`.
    pub degenerate: Vec<bool>,
}

impl BandwidthSelection {
    pub fn has_warning(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

/// Kernel density estimate on a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub sample: Vec<Vec<f64>>,
    pub bandwidths: Vec<f64>,
    pub domain: Domain,
    pub norm_const: f64,
}

impl DensityEstimate {
    /// Unnormalized estimate (`norm_const = 1`).
    pub fn new(sample: Vec<Vec<f64>>, bandwidths: Vec<f64>, bx: Domain) -> Result<Self> {
        if sample.is_empty() {
            return domain("density estimation needs at least one sample point");
        }
        if bandwidths.len() != bx.dim() || bandwidths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return domain(format!("invalid bandwidths {bandwidths:?}"));
        }
        for (i, p) in sample.iter().enumerate() {
            bx.check_contains(p)
                .map_err(|e| FmmtError::Domain(format!("sample {}: {e}", i + 1)))?;
        }
        Ok(Self {
            sample,
            bandwidths,
            domain: bx,
            norm_const: 1.0,
        })
    }

    pub fn n(&self) -> usize {
        self.sample.len()
    }

    /// Per-axis coordinates where the estimate fails to be smooth: the
    /// kernel support edges of every sample and the limits of the boundary
    /// correction zones.
    pub fn breakpoints(&self) -> Vec<Vec<f64>> {
        (0..self.domain.dim())
            .map(|m| {
                let h = self.bandwidths[m];
                let mut v: Vec<f64> = self
                    .sample
                    .iter()
                    .flat_map(|s| [s[m] - h, s[m] + h])
                    .collect();
                v.push(self.domain.lower()[m] + h);
                v.push(self.domain.upper()[m] - h);
                v
            })
            .collect()
    }

    fn axis_kernels(&self, x: &[f64]) -> Vec<AxisKernel> {
        (0..self.domain.dim())
            .map(|m| {
                AxisKernel::at(
                    x[m],
                    self.domain.lower()[m],
                    self.domain.upper()[m],
                    self.bandwidths[m],
                )
            })
            .collect()
    }

    fn corrected_sum(&self, x: &[f64], skip: Option<usize>) -> f64 {
        let kernels = self.axis_kernels(x);
        let mut sum = 0.0;
        for (i, s) in self.sample.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let mut prod = 1.0;
            for (m, k) in kernels.iter().enumerate() {
                prod *= k.weight(x[m], s[m]);
                if prod == 0.0 {
                    break;
                }
            }
            sum += prod;
        }
        sum
    }

    /// Boundary-corrected, clipped estimate before division by `norm_const`.
    pub fn raw_eval(&self, x: &[f64]) -> f64 {
        (self.corrected_sum(x, None) / self.n() as f64).max(0.0)
    }

    /// Plain product-kernel estimate without boundary correction or clipping.
    pub fn uncorrected_eval(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for s in &self.sample {
            let mut prod = 1.0;
            for (m, h) in self.bandwidths.iter().enumerate() {
                prod *= epanechnikov((x[m] - s[m]) / h) / h;
            }
            sum += prod;
        }
        sum / self.n() as f64
    }

    fn leave_one_out(&self, i: usize) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        (self.corrected_sum(&self.sample[i], Some(i)) / (n - 1) as f64).max(0.0)
    }

    /// Normalized estimate at every node of `grid` (flat order). The grid
    /// must lie inside the estimate's domain.
    pub fn eval_on_grid(&self, grid: &TensorGrid) -> Vec<f64> {
        let d = grid.dim();
        let sizes: Vec<usize> = grid.axes.iter().map(|a| a.len()).collect();
        let mut strides = vec![1usize; d];
        for m in (0..d.saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * sizes[m + 1];
        }
        // per-axis kernel state at every node
        let axis_kernels: Vec<Vec<AxisKernel>> = (0..d)
            .map(|m| {
                grid.axes[m]
                    .nodes
                    .iter()
                    .map(|&x| {
                        AxisKernel::at(
                            x,
                            self.domain.lower()[m],
                            self.domain.upper()[m],
                            self.bandwidths[m],
                        )
                    })
                    .collect()
            })
            .collect();
        let mut acc = vec![0.0; grid.len()];
        let mut support: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
        for s in &self.sample {
            let mut empty = false;
            for m in 0..d {
                support[m].clear();
                let nodes = &grid.axes[m].nodes;
                let h = self.bandwidths[m];
                let start = nodes.partition_point(|&x| x < s[m] - h);
                for (j, &x) in nodes.iter().enumerate().skip(start) {
                    if x > s[m] + h {
                        break;
                    }
                    let w = axis_kernels[m][j].weight(x, s[m]);
                    if w != 0.0 {
                        support[m].push((j * strides[m], w));
                    }
                }
                empty |= support[m].is_empty();
            }
            if !empty {
                accumulate(&support, 0, 0, 1.0, &mut acc);
            }
        }
        let scale = 1.0 / (self.n() as f64 * self.norm_const);
        acc.iter().map(|v| (v * scale).max(0.0)).collect()
    }
}

fn accumulate(support: &[Vec<(usize, f64)>], m: usize, offset: usize, w: f64, acc: &mut [f64]) {
    if m == support.len() {
        acc[offset] += w;
        return;
    }
    for &(off, v) in &support[m] {
        accumulate(support, m + 1, offset + off, w * v, acc);
    }
}

/// Normalized density value at `x`.
pub fn kde_eval(est: &DensityEstimate, x: &[f64]) -> Result<f64> {
    est.domain.check_contains(x)?;
    Ok(est.raw_eval(x) / est.norm_const)
}

/// Rescales `est` so that it integrates to one under a tensor Gauss–Legendre
/// rule with `points_per_dim` nodes per dimension.
pub fn normalize(est: &DensityEstimate, points_per_dim: usize) -> Result<DensityEstimate> {
    let grid = if est.domain.dim() == 1 {
        TensorGrid::with_breakpoints(&est.domain, points_per_dim, &est.breakpoints())
    } else {
        TensorGrid::new(&est.domain, points_per_dim)
    };
    let values = est.eval_on_grid(&grid);
    let integral: f64 = values.iter().zip(grid.weights()).map(|(v, w)| v * w).sum();
    if !(integral.is_finite() && integral > 0.0) {
        return Err(FmmtError::Numerical(format!(
            "density estimate integrates to {integral}"
        )));
    }
    let mut out = est.clone();
    out.norm_const = est.norm_const * integral;
    Ok(out)
}

fn sample_sd(sample: &[Vec<f64>], m: usize) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.iter().map(|p| p[m]).sum::<f64>() / n;
    let ss = sample.iter().map(|p| (p[m] - mean).powi(2)).sum::<f64>();
    (ss / (n - 1.0)).sqrt()
}

/// Base rate `s_m n^{-1/(d+4)}` for each dimension (zero for degenerate ones).
pub fn base_bandwidths(sample: &[Vec<f64>], d: usize) -> Vec<f64> {
    let rate = (sample.len() as f64).powf(-1.0 / (d as f64 + 4.0));
    (0..d).map(|m| sample_sd(sample, m) * rate).collect()
}

/// Picks `h_m = c s_m n^{-1/(d+4)}` with `c` maximizing the leave-one-out
/// log-likelihood over [`MULTIPLIER_GRID`]; ties go to the larger `c`.
pub fn select_bandwidth(sample: &[Vec<f64>], bx: &Domain) -> Result<BandwidthSelection> {
    if sample.len() < 2 {
        return domain("bandwidth selection needs at least two sample points");
    }
    let d = bx.dim();
    let base = base_bandwidths(sample, d);
    let degenerate: Vec<bool> = (0..d).map(|m| !(base[m] > 1e-12 * bx.side(m))).collect();
    let fallback: Vec<f64> = (0..d).map(|m| 0.1 * bx.side(m)).collect();
    let make = |c: f64| -> Vec<f64> {
        (0..d)
            .map(|m| {
                if degenerate[m] {
                    fallback[m]
                } else {
                    c * base[m]
                }
            })
            .collect()
    };
    if degenerate.iter().all(|&x| x) {
        return Ok(BandwidthSelection {
            bandwidths: fallback,
            multiplier: f64::NAN,
            degenerate,
        });
    }
    let mut best: Option<(f64, f64)> = None;
    for &c in &MULTIPLIER_GRID {
        let est = DensityEstimate::new(sample.to_vec(), make(c), bx.clone())?;
        let ll: f64 = (0..sample.len())
            .map(|i| est.leave_one_out(i).max(LOG_FLOOR).ln())
            .sum();
        if best.is_none_or(|(_, b)| ll >= b) {
            best = Some((c, ll));
        }
    }
    let c = best.map(|b| b.0).unwrap_or(1.0);
    Ok(BandwidthSelection {
        bandwidths: make(c),
        multiplier: c,
        degenerate,
    })
}

/// Bandwidth selection followed by normalization.
pub fn estimate_density(
    sample: &[Vec<f64>],
    bx: &Domain,
    points_per_dim: usize,
) -> Result<(DensityEstimate, BandwidthSelection)> {
    let sel = select_bandwidth(sample, bx)?;
    let raw = DensityEstimate::new(sample.to_vec(), sel.bandwidths.clone(), bx.clone())?;
    Ok((normalize(&raw, points_per_dim)?, sel))
}
