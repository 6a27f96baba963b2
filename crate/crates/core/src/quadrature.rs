//! Tensor-product composite Gauss–Legendre rules on boxes.

use crate::domain::Domain;
use crate::special::gauss_legendre;

/// Nodes per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 8;

/// One-dimensional composite rule.
#[derive(Debug, Clone)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    /// Composite rule with `ceil(points / 8)` eight-point panels on `[a, b]`.
    pub fn composite(a: f64, b: f64, points: usize) -> Self {
        let panels = points.div_ceil(PANEL_ORDER).max(1);
        let (x, w) = gauss_legendre(PANEL_ORDER);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
        for p in 0..panels {
            let left = a + width * p as f64;
            let mid = left + 0.5 * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * width * xi);
                weights.push(0.5 * width * wi);
            }
        }
        Self { nodes, weights }
    }

    /// Composite rule whose panel edges include every breakpoint strictly
    /// inside `(a, b)`, so that piecewise-smooth integrands with kinks at
    /// those points are integrated at full panel order.
    pub fn with_breakpoints(a: f64, b: f64, points: usize, breaks: &[f64]) -> Self {
        let panels = points.div_ceil(PANEL_ORDER).max(1);
        let width = (b - a) / panels as f64;
        let mut edges: Vec<f64> = (0..=panels).map(|p| a + width * p as f64).collect();
        edges[panels] = b;
        edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
        edges.sort_by(f64::total_cmp);
        let tiny = 1e-12 * (b - a);
        edges.dedup_by(|x, y| *x - *y <= tiny);
        if let Some(last) = edges.last_mut() {
            *last = b;
        }
        let (x, w) = gauss_legendre(PANEL_ORDER);
        let mut nodes = Vec::with_capacity(edges.len() * PANEL_ORDER);
        let mut weights = Vec::with_capacity(edges.len() * PANEL_ORDER);
        for pair in edges.windows(2) {
            let half = 0.5 * (pair[1] - pair[0]);
            let mid = pair[0] + half;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tensor grid over a box. Flat indices run with the last dimension fastest.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub axes: Vec<AxisRule>,
}

impl TensorGrid {
    pub fn new(domain: &Domain, points_per_dim: usize) -> Self {
        let axes = (0..domain.dim())
            .map(|m| AxisRule::composite(domain.lower()[m], domain.upper()[m], points_per_dim))
            .collect();
        Self { axes }
    }

    /// Like [`TensorGrid::new`], with extra panel edges per axis.
    pub fn with_breakpoints(domain: &Domain, points_per_dim: usize, breaks: &[Vec<f64>]) -> Self {
        let axes = (0..domain.dim())
            .map(|m| {
                AxisRule::with_breakpoints(
                    domain.lower()[m],
                    domain.upper()[m],
                    points_per_dim,
                    &breaks[m],
                )
            })
            .collect();
        Self { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(AxisRule::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the point with flat index `flat` into `out` and returns its weight.
    pub fn point(&self, flat: usize, out: &mut [f64]) -> f64 {
        let mut rem = flat;
        let mut w = 1.0;
        for m in (0..self.dim()).rev() {
            let ax = &self.axes[m];
            let i = rem % ax.len();
            rem /= ax.len();
            out[m] = ax.nodes[i];
            w *= ax.weights[i];
        }
        w
    }

    /// Values of `f` at every node, in flat order.
    pub fn evaluate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        (0..self.len())
            .map(|k| {
                self.point(k, &mut x);
                f(&x)
            })
            .collect()
    }

    /// Weight of every node, in flat order.
    pub fn weights(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        (0..self.len()).map(|k| self.point(k, &mut x)).collect()
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let mut x = vec![0.0; self.dim()];
        let mut sum = 0.0;
        for k in 0..self.len() {
            let w = self.point(k, &mut x);
            sum += w * f(&x);
        }
        sum
    }
}
