//! Orthonormal tensor-product Fourier bases on boxes.
//!
//! On a side `[a, a + L]` the one-dimensional elements are `1/√L`,
//! `√(2/L) cos(2πk(x−a)/L)` and `√(2/L) sin(2πk(x−a)/L)` for `k ≥ 1`.
//! A multivariate element is a product of one element per dimension and its
//! frequency is the sum of the per-dimension frequencies.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{domain, Result};

/// Default decay exponent.
pub const DEFAULT_ELL: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Constant,
    Cosine,
    Sine,
}

/// One-dimensional factor of a basis element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AxisElement {
    pub frequency: u32,
    pub phase: Phase,
}

impl AxisElement {
    pub const CONSTANT: AxisElement = AxisElement {
        frequency: 0,
        phase: Phase::Constant,
    };

    pub fn new(frequency: u32, phase: Phase) -> Result<Self> {
        if (frequency == 0) != (phase == Phase::Constant) {
            return domain(format!(
                "phase {phase:?} is inconsistent with frequency {frequency}"
            ));
        }
        Ok(Self { frequency, phase })
    }

    /// Position in the ordering const, cos 1, sin 1, cos 2, sin 2, ...
    pub fn slot(&self) -> usize {
        match self.phase {
            Phase::Constant => 0,
            Phase::Cosine => 2 * self.frequency as usize - 1,
            Phase::Sine => 2 * self.frequency as usize,
        }
    }

    pub fn from_slot(slot: usize) -> Self {
        if slot == 0 {
            Self::CONSTANT
        } else {
            let frequency = slot.div_ceil(2) as u32;
            let phase = if slot % 2 == 1 {
                Phase::Cosine
            } else {
                Phase::Sine
            };
            Self { frequency, phase }
        }
    }

    /// Value on `[lower, lower + length]` at `x` (no range check).
    pub fn eval(&self, x: f64, lower: f64, length: f64) -> f64 {
        match self.phase {
            Phase::Constant => 1.0 / length.sqrt(),
            Phase::Cosine => {
                (2.0 / length).sqrt()
                    * (2.0 * PI * self.frequency as f64 * (x - lower) / length).cos()
            }
            Phase::Sine => {
                (2.0 / length).sqrt()
                    * (2.0 * PI * self.frequency as f64 * (x - lower) / length).sin()
            }
        }
    }
}

/// A tensor-product basis element with its total frequency and decay weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisIndex {
    pub per_dim: Vec<AxisElement>,
    pub total_frequency: u32,
    pub decay_weight: f64,
}

impl BasisIndex {
    pub fn new(per_dim: Vec<AxisElement>, ell: f64) -> Self {
        let total_frequency = per_dim.iter().map(|e| e.frequency).sum();
        Self {
            per_dim,
            total_frequency,
            decay_weight: decay_weight(total_frequency, ell),
        }
    }

    pub fn dim(&self) -> usize {
        self.per_dim.len()
    }

    /// Compact label such as `cos1*sin2`.
    pub fn label(&self) -> String {
        self.per_dim
            .iter()
            .map(|e| match e.phase {
                Phase::Constant => "const".to_string(),
                Phase::Cosine => format!("cos{}", e.frequency),
                Phase::Sine => format!("sin{}", e.frequency),
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    fn product(&self, x: &[f64], bx: &Domain) -> f64 {
        self.per_dim
            .iter()
            .enumerate()
            .map(|(m, e)| e.eval(x[m], bx.lower()[m], bx.side(m)))
            .product()
    }
}

/// Evaluates a basis element rescaled to `bx`; `x` must lie in `bx`.
pub fn basis_eval(idx: &BasisIndex, x: &[f64], bx: &Domain) -> Result<f64> {
    if idx.dim() != bx.dim() {
        return domain("basis element and box differ in dimension");
    }
    bx.check_contains(x)?;
    Ok(idx.product(x, bx))
}

/// Same as [`basis_eval`] but extended by zero outside `bx`.
pub fn basis_eval_extended(idx: &BasisIndex, x: &[f64], bx: &Domain) -> f64 {
    if bx.contains(x) && idx.dim() == bx.dim() {
        idx.product(x, bx)
    } else {
        0.0
    }
}

/// `1 / ln(k + 2)^ell`.
pub fn decay_weight(total_frequency: u32, ell: f64) -> f64 {
    1.0 / ((total_frequency as f64 + 2.0).ln()).powf(ell)
}

/// `floor(sqrt(n))`.
pub fn default_kmax(n: usize) -> u32 {
    let mut k = (n as f64).sqrt().floor() as u64;
    while k * k > n as u64 {
        k -= 1;
    }
    while (k + 1) * (k + 1) <= n as u64 {
        k += 1;
    }
    k as u32
}

/// All elements with total frequency at most `k_max`, sorted by total
/// frequency and then lexicographically in (frequency, phase) per dimension.
pub fn enumerate_basis(k_max: u32, d: usize, ell: f64) -> Vec<BasisIndex> {
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::with_capacity(d);
    collect_tuples(k_max, d, &mut current, &mut tuples);
    let mut out: Vec<BasisIndex> = tuples
        .into_iter()
        .map(|slots| BasisIndex::new(slots.into_iter().map(AxisElement::from_slot).collect(), ell))
        .collect();
    out.sort_by(|a, b| {
        a.total_frequency
            .cmp(&b.total_frequency)
            .then_with(|| a.per_dim.cmp(&b.per_dim))
    });
    out
}

fn collect_tuples(budget: u32, d: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == d {
        out.push(current.clone());
        return;
    }
    for slot in 0..=(2 * budget as usize) {
        let f = AxisElement::from_slot(slot).frequency;
        current.push(slot);
        collect_tuples(budget - f, d, current, out);
        current.pop();
    }
}
