//! Isotropic Matérn kernel and Gram matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::{bessel_k, bessel_k_scaled, ln_gamma};

/// Largest half-integer order `p + 1/2` served by the closed-form path.
const MAX_CLOSED_FORM_P: u32 = 20;

/// Smoothness `nu` and length scale `theta` of a Matérn kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    nu: f64,
    theta: f64,
}

impl MaternParams {
    pub fn new(nu: f64, theta: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return domain(format!("Matérn smoothness must be positive, got {nu}"));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return domain(format!("Matérn length scale must be positive, got {theta}"));
        }
        Ok(Self { nu, theta })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `Some(p)` when `nu = p + 1/2`.
    pub(crate) fn half_integer_order(&self) -> Option<u32> {
        let twice = 2.0 * self.nu;
        if twice.fract() == 0.0 && (twice as u64) % 2 == 1 {
            let p = ((twice as u64) - 1) / 2;
            if p <= MAX_CLOSED_FORM_P as u64 {
                return Some(p as u32);
            }
        }
        None
    }

    /// `sqrt(2 nu) / theta`, the factor turning distances into kernel arguments.
    pub(crate) fn scale(&self) -> f64 {
        (2.0 * self.nu).sqrt() / self.theta
    }

    /// Evaluates the kernel at a distance that is already known to be valid.
    pub(crate) fn eval_unchecked(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 1.0;
        }
        let z = self.scale() * r;
        match self.half_integer_order() {
            Some(p) => half_integer_matern(p, z),
            None => general_matern(self.nu, z),
        }
    }
}

/// `exp(-z) p!/(2p)! Σ_i (p+i)!/(i!(p-i)!) (2z)^(p-i)`.
fn half_integer_matern(p: u32, z: f64) -> f64 {
    match p {
        0 => (-z).exp(),
        1 => (1.0 + z) * (-z).exp(),
        2 => (1.0 + z + z * z / 3.0) * (-z).exp(),
        3 => (1.0 + z + 0.4 * z * z + z * z * z / 15.0) * (-z).exp(),
        _ => {
            // coefficient of (2z)^(p-i): p!/(2p)! * (p+i)!/(i!(p-i)!)
            let pf = p as usize;
            let mut poly = 0.0;
            let two_z = 2.0 * z;
            for i in (0..=pf).rev() {
                let ln_coef = ln_factorial(pf) - ln_factorial(2 * pf) + ln_factorial(pf + i)
                    - ln_factorial(i)
                    - ln_factorial(pf - i);
                poly += ln_coef.exp() * two_z.powi((pf - i) as i32);
            }
            poly * (-z).exp()
        }
    }
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

fn general_matern(nu: f64, z: f64) -> f64 {
    let ln_norm = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu);
    if z < 2.0 {
        (ln_norm + nu * z.ln()).exp() * bessel_k(nu, z)
    } else {
        let ln_val = ln_norm + nu * z.ln() - z + bessel_k_scaled(nu, z).ln();
        ln_val.exp()
    }
}

/// Matérn correlation at Euclidean distance `r`.
pub fn matern_eval(r: f64, params: &MaternParams) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return domain(format!("distance must be finite and non-negative, got {r}"));
    }
    Ok(params.eval_unchecked(r))
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_dims(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    let d = a.first().or(b.first()).map_or(0, Vec::len);
    if let Some(p) = a.iter().chain(b).find(|p| p.len() != d) {
        return domain(format!(
            "point dimension mismatch: expected {d}, found {}",
            p.len()
        ));
    }
    Ok(d)
}

/// Cross-kernel matrix `K(A, B)`.
pub fn kernel_matrix(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    params: &MaternParams,
) -> Result<DMatrix<f64>> {
    check_dims(a, b)?;
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        params.eval_unchecked(euclidean(&a[i], &b[j]))
    }))
}

/// Gram matrix `K(A, A)`; symmetric with unit diagonal by construction.
pub fn gram_matrix(a: &[Vec<f64>], params: &MaternParams) -> Result<DMatrix<f64>> {
    check_dims(a, a)?;
    let n = a.len();
    let mut m = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = params.eval_unchecked(euclidean(&a[i], &a[j]));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}
