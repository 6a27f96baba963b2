//! Configuration files and the textual forms of domains, splits and grids.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use fmmt::sim::c_range;
use fmmt::Domain;

use crate::error::{CliError, CliResult};

/// Settings readable from a TOML file. Command-line flags override them.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub ell: Option<f64>,
    pub kmax: Option<u32>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub n: Option<usize>,
    pub c: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub quad_points: Option<usize>,
    pub threads: Option<usize>,
    pub folds: Option<usize>,
    pub nu: Option<f64>,
    pub theta: Option<f64>,
    /// Fixed ridge parameter; cross-validation is used when absent.
    pub lambda: Option<f64>,
    pub domain: Option<Vec<[f64; 2]>>,
    pub split: Option<Vec<usize>>,
    /// Explicit partition boxes, each a list of `[lower, upper]` pairs.
    pub partition: Option<Vec<Vec<[f64; 2]>>>,
    pub data: Option<PathBuf>,
    pub simulator: Option<String>,
    pub scenario: Option<String>,
}

pub fn load_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

/// `a1,b1[:a2,b2…]`.
pub fn parse_domain(text: &str) -> CliResult<Domain> {
    let mut bounds = Vec::new();
    for part in text.split(':') {
        let nums: Vec<&str> = part.split(',').map(str::trim).collect();
        if nums.len() != 2 {
            return Err(CliError::usage(format!(
                "domain '{text}': expected 'lower,upper' per dimension"
            )));
        }
        let a = parse_f64(nums[0], "domain bound")?;
        let b = parse_f64(nums[1], "domain bound")?;
        bounds.push((a, b));
    }
    Ok(Domain::new(&bounds)?)
}

pub fn domain_from_pairs(pairs: &[[f64; 2]]) -> CliResult<Domain> {
    let bounds: Vec<(f64, f64)> = pairs.iter().map(|p| (p[0], p[1])).collect();
    Ok(Domain::new(&bounds)?)
}

/// `k[,k2…]`; a single count is applied to every dimension.
pub fn parse_split(text: &str, dim: usize) -> CliResult<Vec<usize>> {
    let counts = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("split '{text}': '{t}' is not a count")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    match counts.len() {
        1 => Ok(vec![counts[0]; dim]),
        k if k == dim => Ok(counts),
        k => Err(CliError::usage(format!(
            "split '{text}' has {k} counts for a {dim}-dimensional domain"
        ))),
    }
}

/// `from:to:step` or a comma-separated list.
pub fn parse_c_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let from = parse_f64(parts[0], "grid start")?;
        let to = parse_f64(parts[1], "grid end")?;
        let step = parse_f64(parts[2], "grid step")?;
        if !(step > 0.0) || to < from {
            return Err(CliError::usage(format!(
                "grid '{text}': need from <= to and a positive step"
            )));
        }
        return Ok(c_range(from, to, step));
    }
    text.split(',')
        .map(|t| parse_f64(t, "grid value"))
        .collect()
}

fn parse_f64(text: &str, what: &str) -> CliResult<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::usage(format!("{what} '{text}' is not a finite number")))
}
