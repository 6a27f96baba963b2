use std::path::Path;

use fmmt::basis::DEFAULT_ELL;
use fmmt::case_study::{
    run_shear_layer, ShearLayerBundle, Surrogate, SURROGATE_NU, SURROGATE_THETA_GRID,
};
use fmmt::krr::default_c_grid;
use fmmt::sim::{builtin_scenarios, find_scenario, run_study, Scenario, StudySettings};
use fmmt::validation::{prepare, LambdaRule, SharedFit, TestConfig};
use fmmt::{load_dataset, parse_dataset, Dataset, Domain, MaternParams};

use crate::cli::{Cli, Command, CommonArgs, ShearArgs, StudyArgs, TestArgs};
use crate::config::{
    domain_from_pairs, load_config, parse_c_grid, parse_domain, parse_split, FileConfig,
};
use crate::error::{CliError, CliResult};
use crate::plot::{bar_chart, grid, line_chart, Series};
use crate::report::{
    coefficients_csv, curve_columns, curve_tsv, panel_files, report_json, write_file, RunReport,
    SurrogateInfo,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const DEFAULT_REPS: usize = 1000;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Test(args) => cmd_test(&args),
        Command::Simulate(args) => cmd_study(&args, false),
        Command::PowerCurve(args) => cmd_study(&args, true),
        Command::ShearLayer(args) => cmd_shear_layer(&args),
        Command::Scenarios => {
            print!("{}", scenario_listing());
            Ok(())
        }
    }
}

fn file_config(common: &CommonArgs) -> CliResult<FileConfig> {
    match &common.config {
        Some(path) => load_config(path),
        None => Ok(FileConfig::default()),
    }
}

fn seed(common: &CommonArgs, file: &FileConfig) -> u64 {
    common.seed.or(file.seed).unwrap_or(0)
}

/// Test configuration from flags, then the file, then the defaults.
pub fn test_config(common: &CommonArgs, file: &FileConfig, seed: u64) -> CliResult<TestConfig> {
    let kernel = MaternParams::new(file.nu.unwrap_or(3.5), file.theta.unwrap_or(1.0))?;
    let lambda = match file.lambda {
        Some(l) => LambdaRule::Fixed(l),
        None => LambdaRule::CrossValidated {
            c_grid: default_c_grid(),
            folds: file.folds.unwrap_or(5),
            seed,
        },
    };
    Ok(TestConfig {
        ell: common.ell.or(file.ell).unwrap_or(DEFAULT_ELL),
        k_max: common.kmax.or(file.kmax),
        quad_points_per_dim: file.quad_points,
        alpha: common.alpha.or(file.alpha).unwrap_or(0.05),
        kernel,
        lambda,
    })
}

enum Simulator {
    Builtin(Scenario),
    Surrogate(Surrogate, String),
}

impl Simulator {
    fn parse(spec: &str, file_domain: Option<&Domain>) -> CliResult<Self> {
        if let Some(path) = spec.strip_prefix("surrogate:") {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::io(Path::new(path), e))?;
            let sample = parse_sample(&text, file_domain)?;
            let s = Surrogate::fit(&sample, SURROGATE_NU, &SURROGATE_THETA_GRID)?;
            return Ok(Simulator::Surrogate(s, path.to_string()));
        }
        let name = spec.strip_prefix("builtin:").unwrap_or(spec);
        Ok(Simulator::Builtin(find_scenario(name)?))
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Simulator::Builtin(s) => (s.null_fn)(x),
            Simulator::Surrogate(s, _) => s.eval(x),
        }
    }

    fn describe(&self) -> String {
        match self {
            Simulator::Builtin(s) => format!("builtin:{}", s.name),
            Simulator::Surrogate(_, p) => format!("surrogate:{p}"),
        }
    }
}

/// Simulation samples are read against a box wide enough to hold them when
/// no domain is given.
fn parse_sample(text: &str, bx: Option<&Domain>) -> CliResult<Dataset> {
    let wide;
    let bx = match bx {
        Some(b) => b,
        None => {
            let probe = parse_dataset(text, &Domain::new(&[(-1e300, 1e300)])?);
            let d = match probe {
                Ok(ds) => ds.dim(),
                Err(_) => text
                    .lines()
                    .map(str::trim)
                    .find(|l| !l.is_empty() && !l.starts_with('#'))
                    .map_or(1, |h| {
                        h.split([',', ';', '\t', ' '])
                            .filter(|t| !t.is_empty())
                            .count()
                            .max(2)
                            - 1
                    }),
            };
            wide = Domain::new(&vec![(-1e300, 1e300); d])?;
            &wide
        }
    };
    Ok(parse_dataset(text, bx)?)
}

fn partition_for(
    bx: &Domain,
    split: Option<&str>,
    file: &FileConfig,
) -> CliResult<Option<Vec<Domain>>> {
    if let Some(s) = split {
        return Ok(Some(bx.split(&parse_split(s, bx.dim())?)?));
    }
    if let Some(boxes) = &file.partition {
        let parts = boxes
            .iter()
            .map(|b| domain_from_pairs(b))
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(Some(parts));
    }
    if let Some(counts) = &file.split {
        let counts = if counts.len() == 1 {
            vec![counts[0]; bx.dim()]
        } else {
            counts.clone()
        };
        return Ok(Some(bx.split(&counts)?));
    }
    Ok(None)
}

fn warnings_of(shared: &SharedFit) -> Vec<String> {
    let mut w = Vec::new();
    for (m, degenerate) in shared.bandwidth.degenerate.iter().enumerate() {
        if *degenerate {
            w.push(format!(
                "input x{} has no spread; density bandwidth set to a tenth of the side",
                m + 1
            ));
        }
    }
    if shared.fit.variance_fallback {
        w.push("effective degrees of freedom reach n; noise variance uses RSS / n".into());
    }
    w
}

fn cmd_test(args: &TestArgs) -> CliResult<()> {
    let file = file_config(&args.common)?;
    let seed = seed(&args.common, &file);
    let cfg = test_config(&args.common, &file, seed)?;

    let sim_spec = args
        .simulator
        .clone()
        .or(file.simulator.clone())
        .ok_or_else(|| CliError::usage("--simulator is required"))?;
    let explicit_domain = match (&args.domain, &file.domain) {
        (Some(d), _) => Some(parse_domain(d)?),
        (None, Some(pairs)) => Some(domain_from_pairs(pairs)?),
        _ => None,
    };
    let simulator = Simulator::parse(&sim_spec, explicit_domain.as_ref())?;
    let bx = match (explicit_domain, &simulator) {
        (Some(d), _) => d,
        (None, Simulator::Builtin(s)) => s.domain.clone(),
        (None, _) => {
            return Err(CliError::usage(
                "--domain is required with a surrogate simulator",
            ))
        }
    };
    let data_path = args
        .data
        .clone()
        .or(file.data.clone())
        .ok_or_else(|| CliError::usage("--data is required"))?;
    let data = load_dataset(&data_path, &bx)?;
    let partition = partition_for(&bx, args.split.as_deref(), &file)?;

    let shared = prepare(&data, &bx, &cfg)?;
    let f = |x: &[f64]| simulator.eval(x);
    let global = shared.test_box(&f, &bx)?;
    let subdomains = match &partition {
        Some(p) => Some(shared.test_partition(&f, p)?),
        None => None,
    };
    let surrogate = match &simulator {
        Simulator::Surrogate(s, path) => Some(SurrogateInfo {
            source: path.clone(),
            n: s.fit.n(),
            nu: SURROGATE_NU,
            theta: s.theta,
            loo_errors: s.loo_errors.clone(),
        }),
        Simulator::Builtin(_) => None,
    };
    let report = RunReport {
        version: VERSION.into(),
        command: "test".into(),
        seed,
        config: shared.resolved.clone(),
        data_source: Some(data_path.display().to_string()),
        n: data.n(),
        simulator: simulator.describe(),
        bandwidths: shared.bandwidth.bandwidths.clone(),
        bandwidth_multiplier: shared.bandwidth.multiplier,
        warnings: warnings_of(&shared),
        global,
        subdomains,
        surrogate,
        sensitivity: Vec::new(),
    };
    let out = &args.common.out;
    write_file(out, "report.json", &report_json(&report))?;
    write_file(out, "coefficients.csv", &coefficients_csv(&report))?;
    if args.common.plots {
        write_test_plots(out, &report, &shared, &data, &f)?;
    }
    print_summary(&report);
    Ok(())
}

fn write_test_plots(
    out: &Path,
    report: &RunReport,
    shared: &SharedFit,
    data: &Dataset,
    sim: &dyn Fn(&[f64]) -> f64,
) -> CliResult<()> {
    if let Some(sub) = &report.subdomains {
        let bars: Vec<(String, f64)> = sub
            .reports
            .iter()
            .enumerate()
            .map(|(k, r)| (format!("{}", k + 1), r.p_value))
            .collect();
        let svg = bar_chart(
            "Subdomain p-values",
            "p-value",
            &bars,
            Some((0.0, 1.0)),
            Some((sub.alpha, "alpha")),
        );
        write_file(out, "subdomain_pvalues.svg", &svg)?;
    }
    if data.dim() == 1 {
        let bx = &shared.domain;
        let xs: Vec<f64> = (0..=200)
            .map(|i| bx.lower()[0] + bx.side(0) * i as f64 / 200.0)
            .collect();
        let fit: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| (x, shared.fit.predict(&[x]).unwrap_or(f64::NAN)))
            .collect();
        let model: Vec<(f64, f64)> = xs.iter().map(|&x| (x, sim(&[x]))).collect();
        let obs: Vec<(f64, f64)> = data
            .points
            .iter()
            .zip(&data.responses)
            .map(|(p, y)| (p[0], *y))
            .collect();
        let svg = line_chart(
            "Fitted process and simulator",
            "x",
            "y",
            &[
                Series::points("data", obs),
                Series::line("kernel ridge fit", fit),
                Series::line("simulator", model),
            ],
            None,
            None,
        );
        write_file(out, "fit.svg", &svg)?;
    }
    Ok(())
}

fn print_summary(report: &RunReport) {
    let g = &report.global;
    println!(
        "global: T = {:.4}, p = {:.4e} (n = {}, k_max = {}, sigma_hat = {:.4e})",
        g.statistic, g.p_value, report.n, g.k_max, g.sigma_hat
    );
    if let Some(sub) = &report.subdomains {
        for (k, r) in sub.reports.iter().enumerate() {
            println!(
                "subdomain {}: T = {:.4}, p = {:.4e}, bonferroni p = {:.4e}, reject(IER) = {}, reject(FWER) = {}",
                k + 1,
                r.statistic,
                r.p_value,
                sub.bonferroni_adjusted_p[k],
                sub.rejected_ier[k],
                sub.rejected_fwer[k]
            );
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_study(args: &StudyArgs, always_plot: bool) -> CliResult<()> {
    let file = file_config(&args.common)?;
    let seed = seed(&args.common, &file);
    let name = args
        .scenario
        .clone()
        .or(file.scenario.clone())
        .ok_or_else(|| {
            CliError::usage(format!(
                "--scenario is required; valid names: {}",
                scenario_names()
            ))
        })?;
    let mut scenario = find_scenario(&name)?;
    if args.comparison {
        scenario = scenario.comparison_variant();
    }
    let c_grid = if !args.c.is_empty() {
        args.c.clone()
    } else if let Some(g) = &args.c_grid {
        parse_c_grid(g)?
    } else if let Some(c) = file.c {
        vec![c]
    } else if let Some(g) = &file.c_grid {
        g.clone()
    } else {
        scenario.c_grid.clone()
    };
    let cfg = test_config(&args.common, &file, seed)?;
    let settings = StudySettings {
        n: args.n.or(file.n).unwrap_or(scenario.n),
        reps: args.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
        alpha: cfg.alpha,
        seed,
        threads: args.threads.or(file.threads),
        baseline: true,
    };
    let table = run_study(&scenario, &c_grid, &settings, &cfg)?;

    let out = &args.common.out;
    write_file(out, "power_table.tsv", &table.to_tsv())?;
    let json = serde_json::to_string_pretty(&table).expect("tables serialize") + "\n";
    write_file(out, "power_table.json", &json)?;
    let curves = out.join("curves");
    let columns = curve_columns(&table);
    for col in &columns {
        if let Some(tsv) = curve_tsv(&table, col) {
            write_file(&curves, &format!("{col}.tsv"), &tsv)?;
        }
    }
    if always_plot || args.common.plots {
        let series: Vec<Series> = columns
            .iter()
            .filter_map(|col| {
                let pts = table
                    .rows
                    .iter()
                    .map(|r| {
                        let v = match col.as_str() {
                            "global" => r.global,
                            "bonferroni" => r.bonferroni,
                            "eh" => r.eh.unwrap_or(f64::NAN),
                            other => other
                                .strip_prefix("subdomain_")
                                .and_then(|k| k.parse::<usize>().ok())
                                .map_or(f64::NAN, |k| r.subdomains[k - 1]),
                        };
                        (r.c, v)
                    })
                    .collect();
                Some(Series::line(col.clone(), pts))
            })
            .collect();
        let title = format!("{} (n = {}, {} reps)", scenario.label, table.n, table.reps);
        let svg = line_chart(
            &title,
            "c",
            "rejection rate",
            &series,
            Some((0.0, 1.0)),
            Some((table.alpha, "alpha")),
        );
        write_file(out, "power_curve.svg", &svg)?;
    }
    print!("{}", table.to_tsv());
    Ok(())
}

fn cmd_shear_layer(args: &ShearArgs) -> CliResult<()> {
    let file = file_config(&args.common)?;
    let seed = seed(&args.common, &file);
    let cfg = test_config(&args.common, &file, seed)?;
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| CliError::io(p, e));
    let sim_text = match &args.simulator {
        Some(p) => read(p)?,
        None => fmmt::case_study::SIMULATION_CSV.to_string(),
    };
    let phys_path = args.data.clone().or(file.data.clone());
    let phys_text = match &phys_path {
        Some(p) => read(p)?,
        None => fmmt::case_study::PHYSICAL_CSV.to_string(),
    };
    let bundle = ShearLayerBundle::from_text(&sim_text, &phys_text)?;
    let result = run_shear_layer(&bundle, &cfg)?;
    let shared = prepare(&bundle.physical, &bundle.domain, &cfg)?;

    let report = RunReport {
        version: VERSION.into(),
        command: "shear-layer".into(),
        seed,
        config: shared.resolved.clone(),
        data_source: Some(phys_path.map_or("bundled".into(), |p| p.display().to_string())),
        n: bundle.physical.n(),
        simulator: format!(
            "surrogate:{}",
            args.simulator
                .as_ref()
                .map_or("bundled".into(), |p| p.display().to_string())
        ),
        bandwidths: shared.bandwidth.bandwidths.clone(),
        bandwidth_multiplier: shared.bandwidth.multiplier,
        warnings: warnings_of(&shared),
        global: result.global.clone(),
        subdomains: Some(result.subdomains.clone()),
        surrogate: Some(SurrogateInfo {
            source: "simulation sample".into(),
            n: bundle.simulation.n(),
            nu: SURROGATE_NU,
            theta: result.surrogate.theta,
            loo_errors: result.surrogate.loo_errors.clone(),
        }),
        sensitivity: result.sensitivity.clone(),
    };
    let out = &args.common.out;
    write_file(out, "report.json", &report_json(&report))?;
    write_file(out, "coefficients.csv", &coefficients_csv(&report))?;
    for (name, contents) in panel_files(&result.panels) {
        write_file(out, name, &contents)?;
    }
    if args.common.plots {
        let p = &result.panels;
        let fits = line_chart(
            "Kernel ridge fits",
            "convective Mach number",
            "compressibility factor",
            &[
                Series::points(
                    "field data",
                    bundle
                        .physical
                        .points
                        .iter()
                        .zip(&bundle.physical.responses)
                        .map(|(x, y)| (x[0], *y))
                        .collect(),
                ),
                Series::line("field fit", p.fits.iter().map(|f| (f.0, f.1)).collect()),
                Series::line("surrogate", p.fits.iter().map(|f| (f.0, f.2)).collect()),
            ],
            None,
            None,
        );
        let density = line_chart(
            "Input density",
            "convective Mach number",
            "density",
            &[Series::line("density", p.density.clone())],
            None,
            None,
        );
        let labels: Vec<String> = p.tests.iter().map(|t| short_label(&t.0)).collect();
        let stats = bar_chart(
            "Test statistics",
            "T",
            &labels
                .iter()
                .cloned()
                .zip(p.tests.iter().map(|t| t.1))
                .collect::<Vec<_>>(),
            None,
            None,
        );
        let pvals = bar_chart(
            "p-values",
            "p-value",
            &labels
                .into_iter()
                .zip(p.tests.iter().map(|t| t.2))
                .collect::<Vec<_>>(),
            Some((0.0, 1.0)),
            Some((result.subdomains.alpha, "alpha")),
        );
        write_file(
            out,
            "shear_layer.svg",
            &grid(&[fits, density, stats, pvals], 2),
        )?;
    }
    print_summary(&report);
    println!("surrogate length scale: {}", result.surrogate.theta);
    Ok(())
}

fn short_label(label: &str) -> String {
    label
        .strip_prefix("subdomain_")
        .map_or("G".to_string(), str::to_string)
}

fn scenario_names() -> String {
    builtin_scenarios()
        .iter()
        .map(|s| s.name)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn scenario_listing() -> String {
    let mut out = String::from("name\tlabel\tdim\tn\tnoise_sd\tsubdomains\taffected\n");
    for s in builtin_scenarios() {
        let affected: Vec<String> = s.affected.iter().map(|k| (k + 1).to_string()).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            s.name,
            s.label,
            s.dim(),
            s.n,
            s.noise_sd,
            s.partition.len(),
            affected.join(",")
        ));
    }
    out
}
