//! Run reports and tabular outputs.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use fmmt::case_study::{PanelData, Sensitivity};
use fmmt::sim::PowerTable;
use fmmt::validation::{ResolvedConfig, SubdomainReport, TestReport};

use crate::error::{CliError, CliResult};

/// Surrogate details recorded when the simulator is interpolated from a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateInfo {
    pub source: String,
    pub n: usize,
    pub nu: f64,
    pub theta: f64,
    pub loo_errors: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: ResolvedConfig,
    pub data_source: Option<String>,
    pub n: usize,
    pub simulator: String,
    pub bandwidths: Vec<f64>,
    pub bandwidth_multiplier: f64,
    pub global: TestReport,
    pub subdomains: Option<SubdomainReport>,
    pub surrogate: Option<SurrogateInfo>,
    #[serde(default)]
    pub sensitivity: Vec<Sensitivity>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn parse_report(text: &str) -> CliResult<RunReport> {
    serde_json::from_str(text).map_err(|e| CliError::data(format!("invalid report: {e}")))
}

/// One row per coefficient of the global test and of each subdomain.
pub fn coefficients_csv(report: &RunReport) -> String {
    let mut out = String::from("test,index,basis,total_frequency,decay_weight,s_hat,weighted_z\n");
    let mut emit = |label: &str, r: &TestReport| {
        for (i, c) in r.coefficients.iter().enumerate() {
            let _ = writeln!(
                out,
                "{label},{i},{},{},{},{},{}",
                c.basis.label(),
                c.basis.total_frequency,
                c.basis.decay_weight,
                c.s_hat,
                c.weighted_z
            );
        }
    };
    emit("global", &report.global);
    if let Some(sub) = &report.subdomains {
        for (k, r) in sub.reports.iter().enumerate() {
            emit(&format!("subdomain_{}", k + 1), r);
        }
    }
    out
}

/// `c` against the rejection rate of one test.
pub fn curve_tsv(table: &PowerTable, column: &str) -> Option<String> {
    let values: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| {
            let v = match column {
                "global" => Some(r.global),
                "bonferroni" => Some(r.bonferroni),
                "eh" => r.eh,
                other => other
                    .strip_prefix("subdomain_")
                    .and_then(|k| k.parse::<usize>().ok())
                    .and_then(|k| r.subdomains.get(k.wrapping_sub(1)).copied()),
            };
            v.map(|v| (r.c, v))
        })
        .collect::<Option<Vec<_>>>()?;
    let mut out = format!("c\t{column}\n");
    for (c, v) in values {
        let _ = writeln!(out, "{c}\t{v}");
    }
    Some(out)
}

pub fn curve_columns(table: &PowerTable) -> Vec<String> {
    let mut cols = vec!["global".to_string()];
    let k = table.rows.first().map_or(0, |r| r.subdomains.len());
    cols.extend((1..=k).map(|i| format!("subdomain_{i}")));
    cols.push("bonferroni".into());
    if table.rows.first().is_some_and(|r| r.eh.is_some()) {
        cols.push("eh".into());
    }
    cols
}

pub fn panel_files(panels: &PanelData) -> Vec<(&'static str, String)> {
    let mut fits = String::from("x\tphysical_fit\tsurrogate\n");
    for (x, a, b) in &panels.fits {
        let _ = writeln!(fits, "{x}\t{a}\t{b}");
    }
    let mut density = String::from("x\tdensity\n");
    for (x, p) in &panels.density {
        let _ = writeln!(density, "{x}\t{p}");
    }
    let mut stats = String::from("test\tstatistic\n");
    let mut pvals = String::from("test\tp_value\n");
    for (label, t, p) in &panels.tests {
        let _ = writeln!(stats, "{label}\t{t}");
        let _ = writeln!(pvals, "{label}\t{p}");
    }
    vec![
        ("panel_fits.tsv", fits),
        ("panel_density.tsv", density),
        ("panel_statistics.tsv", stats),
        ("panel_pvalues.tsv", pvals),
    ]
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::output(&path, e))
}
