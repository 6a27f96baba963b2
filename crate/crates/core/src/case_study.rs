//! Compressible shear-layer case study: a simulator surrogate interpolating
//! a small simulation sample, tested against field measurements of the
//! compressibility factor over convective Mach numbers in `[0, 1.5]`.

use serde::{Deserialize, Serialize};

use crate::data::{parse_dataset, Dataset};
use crate::domain::Domain;
use crate::error::{config, domain, Result};
use crate::kernel::MaternParams;
use crate::krr::{fit_krr, KrrFit};
use crate::validation::{prepare, SubdomainReport, TestConfig, TestReport};

pub const PHYSICAL_CSV: &str = include_str!("../data/shear_layer_physical.csv");
pub const SIMULATION_CSV: &str = include_str!("../data/shear_layer_simulation.csv");

/// Length scales searched when fitting the surrogate.
pub const SURROGATE_THETA_GRID: [f64; 8] = [0.1, 0.15, 0.25, 0.4, 0.6, 1.0, 1.5, 2.5];
pub const SURROGATE_NU: f64 = 3.5;

/// Simulation and field samples with their domain and partition.
#[derive(Debug, Clone)]
pub struct ShearLayerBundle {
    pub simulation: Dataset,
    pub physical: Dataset,
    pub domain: Domain,
    pub partition: Vec<Domain>,
}

impl ShearLayerBundle {
    pub fn domain() -> Domain {
        Domain::new(&[(0.0, 1.5)]).expect("valid interval")
    }

    /// The samples shipped with the crate.
    pub fn bundled() -> Result<Self> {
        Self::from_text(SIMULATION_CSV, PHYSICAL_CSV)
    }

    pub fn from_text(simulation: &str, physical: &str) -> Result<Self> {
        let bx = Self::domain();
        Self::new(
            parse_dataset(simulation, &bx)?,
            parse_dataset(physical, &bx)?,
        )
    }

    pub fn new(simulation: Dataset, physical: Dataset) -> Result<Self> {
        let bx = Self::domain();
        if simulation.dim() != 1 || physical.dim() != 1 {
            return domain("shear-layer samples must be one-dimensional");
        }
        if simulation.n() < 2 {
            return domain("the simulation sample needs at least 2 points");
        }
        let partition = bx.split(&[6])?;
        Ok(Self {
            simulation,
            physical,
            domain: bx,
            partition,
        })
    }
}

/// Interpolating (`λ = 0`) kernel ridge surrogate of a simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Surrogate {
    pub fit: KrrFit,
    pub theta: f64,
    /// Leave-one-out mean squared error for each candidate length scale.
    pub loo_errors: Vec<(f64, f64)>,
}

impl Surrogate {
    /// Fits with `θ` chosen by leave-one-out error over `theta_grid`; ties go
    /// to the larger length scale.
    pub fn fit(sample: &Dataset, nu: f64, theta_grid: &[f64]) -> Result<Self> {
        if theta_grid.is_empty() {
            return config("empty length-scale grid");
        }
        let n = sample.n();
        if n < 2 {
            return domain("a surrogate needs at least 2 simulation points");
        }
        let mut loo_errors = Vec::with_capacity(theta_grid.len());
        for &theta in theta_grid {
            let params = MaternParams::new(nu, theta)?;
            let mut err = 0.0;
            for i in 0..n {
                let x: Vec<Vec<f64>> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| sample.points[j].clone())
                    .collect();
                let y: Vec<f64> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| sample.responses[j])
                    .collect();
                let fit = fit_krr(&x, &y, params, 0.0)?;
                err += (fit.predict(&sample.points[i])? - sample.responses[i]).powi(2);
            }
            loo_errors.push((theta, err / n as f64));
        }
        let best = loo_errors.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        let theta = loo_errors
            .iter()
            .filter(|e| e.1 <= best * (1.0 + 1e-12))
            .map(|e| e.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let fit = fit_krr(
            &sample.points,
            &sample.responses,
            MaternParams::new(nu, theta)?,
            0.0,
        )?;
        Ok(Self {
            fit,
            theta,
            loo_errors,
        })
    }

    pub fn with_theta(sample: &Dataset, nu: f64, theta: f64) -> Result<Self> {
        let fit = fit_krr(
            &sample.points,
            &sample.responses,
            MaternParams::new(nu, theta)?,
            0.0,
        )?;
        Ok(Self {
            fit,
            theta,
            loo_errors: Vec::new(),
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.fit.predict_unchecked(x)
    }
}

/// Curves behind the four diagnostic panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelData {
    /// `(x, physical fit, surrogate)` on an even grid.
    pub fits: Vec<(f64, f64, f64)>,
    /// `(x, density)` on the same grid.
    pub density: Vec<(f64, f64)>,
    /// `(label, statistic, p-value)` for the global test then each subdomain.
    pub tests: Vec<(String, f64, f64)>,
}

/// p-values obtained with the surrogate length scale at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub theta: f64,
    pub global_p: f64,
    pub subdomain_p: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ShearLayerResult {
    pub global: TestReport,
    pub subdomains: SubdomainReport,
    pub surrogate: Surrogate,
    pub panels: PanelData,
    pub sensitivity: Vec<Sensitivity>,
}

/// Runs the global and six subdomain tests of the field data against the
/// interpolated simulator.
pub fn run_shear_layer(bundle: &ShearLayerBundle, cfg: &TestConfig) -> Result<ShearLayerResult> {
    let surrogate = Surrogate::fit(&bundle.simulation, SURROGATE_NU, &SURROGATE_THETA_GRID)?;
    let shared = prepare(&bundle.physical, &bundle.domain, cfg)?;
    let sim = |x: &[f64]| surrogate.eval(x);
    let global = shared.test_box(&sim, &bundle.domain)?;
    let subdomains = shared.test_partition(&sim, &bundle.partition)?;

    let mut sensitivity = Vec::new();
    for theta in [
        SURROGATE_THETA_GRID[0],
        SURROGATE_THETA_GRID[SURROGATE_THETA_GRID.len() - 1],
    ] {
        let alt = Surrogate::with_theta(&bundle.simulation, SURROGATE_NU, theta)?;
        let f = |x: &[f64]| alt.eval(x);
        sensitivity.push(Sensitivity {
            theta,
            global_p: shared.test_box(&f, &bundle.domain)?.p_value,
            subdomain_p: shared
                .test_partition(&f, &bundle.partition)?
                .reports
                .iter()
                .map(|r| r.p_value)
                .collect(),
        });
    }

    let xs: Vec<f64> = (0..=150).map(|i| i as f64 * 0.01).collect();
    let fits = xs
        .iter()
        .map(|&x| (x, shared.fit.predict_unchecked(&[x]), surrogate.eval(&[x])))
        .collect();
    let density = xs
        .iter()
        .map(|&x| (x, shared.density.raw_eval(&[x]) / shared.density.norm_const))
        .collect();
    let mut tests = vec![("global".to_string(), global.statistic, global.p_value)];
    for (i, r) in subdomains.reports.iter().enumerate() {
        tests.push((format!("subdomain_{}", i + 1), r.statistic, r.p_value));
    }
    Ok(ShearLayerResult {
        global,
        subdomains,
        surrogate,
        panels: PanelData {
            fits,
            density,
            tests,
        },
        sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::estimate_density;
    use crate::quadrature::TensorGrid;

    #[test]
    fn bundle_shape() {
        let b = ShearLayerBundle::bundled().unwrap();
        assert_eq!(b.simulation.n(), 11);
        assert_eq!(b.physical.n(), 32);
        assert_eq!(b.physical.dim(), 1);
        assert_eq!(b.partition.len(), 6);
        for (i, p) in b.partition.iter().enumerate() {
            assert!((p.lower()[0] - 0.25 * i as f64).abs() < 1e-12);
            assert!((p.side(0) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn bundled_density_integrates_to_one() {
        let b = ShearLayerBundle::bundled().unwrap();
        let (est, _) = estimate_density(&b.physical.points, &b.domain, 512).unwrap();
        let grid = TensorGrid::new(&b.domain, 512);
        let total: f64 = est
            .eval_on_grid(&grid)
            .iter()
            .zip(grid.weights())
            .map(|(v, w)| v * w)
            .sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn surrogate_interpolates() {
        let b = ShearLayerBundle::bundled().unwrap();
        let s = Surrogate::fit(&b.simulation, SURROGATE_NU, &SURROGATE_THETA_GRID).unwrap();
        assert!(SURROGATE_THETA_GRID.contains(&s.theta));
        assert_eq!(s.loo_errors.len(), SURROGATE_THETA_GRID.len());
        for (x, y) in b.simulation.points.iter().zip(&b.simulation.responses) {
            assert!((s.eval(x) - y).abs() < 1e-6);
        }
    }
}
