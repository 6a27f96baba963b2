//! Axis-aligned boxes and partitions.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// Axis-aligned box `Π [lower_m, upper_m]` with positive volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.is_empty() {
            return domain("a domain needs at least one dimension");
        }
        for (m, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return domain(format!("invalid bounds in dimension {}: ({a}, {b})", m + 1));
            }
        }
        Ok(Self {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
        })
    }

    /// `[0, 1]^d`.
    pub fn unit(d: usize) -> Self {
        Self {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, m: usize) -> f64 {
        self.upper[m] - self.lower[m]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|m| self.side(m)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub(crate) fn check_contains(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return domain(format!(
                "point has dimension {}, domain has {}",
                x.len(),
                self.dim()
            ));
        }
        for (m, v) in x.iter().enumerate() {
            if !(*v >= self.lower[m] && *v <= self.upper[m]) {
                return domain(format!(
                    "coordinate {} = {v} outside [{}, {}]",
                    m + 1,
                    self.lower[m],
                    self.upper[m]
                ));
            }
        }
        Ok(())
    }

    fn overlap_volume(&self, other: &Domain) -> f64 {
        (0..self.dim())
            .map(|m| {
                let lo = self.lower[m].max(other.lower[m]);
                let hi = self.upper[m].min(other.upper[m]);
                (hi - lo).max(0.0)
            })
            .product()
    }

    /// Equal-width grid split with `splits[m]` cells along dimension `m`.
    /// Cells are ordered with the first dimension varying fastest.
    pub fn split(&self, splits: &[usize]) -> Result<Vec<Domain>> {
        if splits.len() != self.dim() || splits.contains(&0) {
            return config(format!(
                "split needs one positive count per dimension ({}), got {splits:?}",
                self.dim()
            ));
        }
        let total: usize = splits.iter().product();
        let mut cells = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut bounds = Vec::with_capacity(self.dim());
            for (m, &s) in splits.iter().enumerate() {
                let idx = rem % s;
                rem /= s;
                let w = self.side(m) / s as f64;
                let a = self.lower[m] + w * idx as f64;
                let b = if idx + 1 == s {
                    self.upper[m]
                } else {
                    self.lower[m] + w * (idx + 1) as f64
                };
                bounds.push((a, b));
            }
            cells.push(Domain::new(&bounds)?);
        }
        Ok(cells)
    }

    /// Four quadrants of a 2D box in the order upper-right, upper-left,
    /// lower-left, lower-right.
    pub fn quadrants(&self) -> Result<Vec<Domain>> {
        if self.dim() != 2 {
            return config("quadrants are only defined for two-dimensional domains");
        }
        let mx = 0.5 * (self.lower[0] + self.upper[0]);
        let my = 0.5 * (self.lower[1] + self.upper[1]);
        let (x0, x1, y0, y1) = (self.lower[0], self.upper[0], self.lower[1], self.upper[1]);
        Ok(vec![
            Domain::new(&[(mx, x1), (my, y1)])?,
            Domain::new(&[(x0, mx), (my, y1)])?,
            Domain::new(&[(x0, mx), (y0, my)])?,
            Domain::new(&[(mx, x1), (y0, my)])?,
        ])
    }

    /// Smallest box containing every box of `parts`.
    pub fn bounding(parts: &[Domain]) -> Result<Domain> {
        let first = parts
            .first()
            .ok_or_else(|| crate::FmmtError::Config("empty partition".into()))?;
        let d = first.dim();
        let mut bounds: Vec<(f64, f64)> =
            (0..d).map(|m| (first.lower[m], first.upper[m])).collect();
        for p in parts {
            if p.dim() != d {
                return config("partition boxes differ in dimension");
            }
            for (m, b) in bounds.iter_mut().enumerate() {
                b.0 = b.0.min(p.lower[m]);
                b.1 = b.1.max(p.upper[m]);
            }
        }
        Domain::new(&bounds)
    }
}

/// Checks that `parts` are pairwise disjoint (up to shared faces), lie inside
/// `whole`, and that their volumes add up to the volume of `whole`.
pub fn validate_partition(whole: &Domain, parts: &[Domain]) -> Result<()> {
    if parts.is_empty() {
        return config("partition must contain at least one box");
    }
    let vol = whole.volume();
    let tol = 1e-9 * vol.max(1.0);
    for (i, p) in parts.iter().enumerate() {
        if p.dim() != whole.dim() {
            return config(format!("partition box {} has wrong dimension", i + 1));
        }
        if whole.overlap_volume(p) < p.volume() - tol {
            return config(format!(
                "partition box {} extends outside the domain",
                i + 1
            ));
        }
        for (j, q) in parts.iter().enumerate().skip(i + 1) {
            if p.overlap_volume(q) > tol {
                return config(format!("partition boxes {} and {} overlap", i + 1, j + 1));
            }
        }
    }
    let covered: f64 = parts.iter().map(Domain::volume).sum();
    if (covered - vol).abs() > tol {
        return config(format!(
            "partition covers volume {covered}, domain volume is {vol}"
        ));
    }
    Ok(())
}
