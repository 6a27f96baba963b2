//! Scenario registry and Monte Carlo power studies.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{eh_critical_value, eh_test_with_critical, EhResult};
use crate::data::Dataset;
use crate::domain::Domain;
use crate::error::{config, FmmtError, Result};
use crate::validation::{
    global_and_subdomain_tests, LambdaRule, SubdomainReport, TestConfig, TestReport,
};

/// Distribution of the design points on the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Uniform,
    /// Normal with the given mean and s.d., conditioned on `[0, 1]` per dimension.
    TruncatedNormal {
        mean: f64,
        sd: f64,
    },
}

impl Design {
    pub const COMPARISON: Design = Design::TruncatedNormal { mean: 0.5, sd: 0.2 };
}

/// A null computer model and a one-parameter family of alternatives.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub label: &'static str,
    pub domain: Domain,
    pub null_fn: fn(&[f64]) -> f64,
    pub alt_fn: fn(&[f64], f64) -> f64,
    pub noise_sd: f64,
    pub design: Design,
    pub n: usize,
    pub partition: Vec<Domain>,
    pub c_grid: Vec<f64>,
    /// Subdomains on which the alternative acts (all of them for global scenarios).
    pub affected: Vec<usize>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// The truncated-normal, `σ = 0.5` setting used to compare against the
    /// order-selection baseline.
    pub fn comparison_variant(&self) -> Scenario {
        Scenario {
            design: Design::COMPARISON,
            noise_sd: 0.5,
            ..self.clone()
        }
    }
}

fn const_null(_: &[f64]) -> f64 {
    1.0
}
fn exp_null(x: &[f64]) -> f64 {
    x[0].exp()
}
fn sin_null(x: &[f64]) -> f64 {
    (2.0 * PI * x[0]).sin()
}
fn const_linear(x: &[f64], c: f64) -> f64 {
    1.0 + c * x[0]
}
fn exp_linear(x: &[f64], c: f64) -> f64 {
    x[0].exp() + c * x[0]
}
fn sin_linear(x: &[f64], c: f64) -> f64 {
    (2.0 * PI * x[0]).sin() + c * x[0]
}
fn const_sin(x: &[f64], c: f64) -> f64 {
    1.0 + c * (2.0 * PI * x[0]).sin()
}
fn exp_sin(x: &[f64], c: f64) -> f64 {
    x[0].exp() + c * (2.0 * PI * x[0]).sin()
}
fn sin_scale(x: &[f64], c: f64) -> f64 {
    (1.0 + c) * (2.0 * PI * x[0]).sin()
}
fn sub1_low(x: &[f64], c: f64) -> f64 {
    let bump = if x[0] < 1.0 / 3.0 {
        c * (6.0 * PI * x[0]).sin()
    } else {
        0.0
    };
    x[0].exp() + bump
}
fn sub1_high(x: &[f64], c: f64) -> f64 {
    let bump = if x[0] < 1.0 / 3.0 {
        c * (12.0 * PI * x[0]).cos()
    } else {
        0.0
    };
    x[0].exp() + bump
}
fn multi_sub(x: &[f64], c: f64) -> f64 {
    let bump = if x[0] < 2.0 / 3.0 {
        c * (6.0 * PI * x[0]).sin()
    } else {
        0.0
    };
    x[0].exp() + bump
}

fn base_2d(x: &[f64]) -> f64 {
    1.0 + 0.5 * (x[0] + x[1])
        + 0.3 * x[0] * x[1]
        + 0.2 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()
}
fn modulation_2d(x: &[f64]) -> f64 {
    (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
}
fn in_quad1(x: &[f64]) -> bool {
    x[0] >= 0.5 && x[1] >= 0.5
}
fn in_quad2(x: &[f64]) -> bool {
    x[0] <= 0.5 && x[1] >= 0.5
}
fn sin_2d(x: &[f64], c: f64) -> f64 {
    base_2d(x) + c * modulation_2d(x)
}
fn constant_2d(x: &[f64], c: f64) -> f64 {
    base_2d(x) + c
}
fn quad1(x: &[f64], c: f64) -> f64 {
    let on = if in_quad1(x) { 1.0 } else { 0.0 };
    base_2d(x) + c * modulation_2d(x) * on
}
fn quad2(x: &[f64], c: f64) -> f64 {
    let on = if in_quad2(x) { 1.0 } else { 0.0 };
    base_2d(x) + c * modulation_2d(x) * on
}
fn multi_quad(x: &[f64], c: f64) -> f64 {
    let on = in_quad1(x) as u8 as f64 + in_quad2(x) as u8 as f64;
    base_2d(x) + c * modulation_2d(x) * on
}

/// `from, from + step, …, to` with the endpoints hit exactly.
pub fn c_range(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step).round() as i64;
    (0..=count)
        .map(|i| {
            let v = from + step * i as f64;
            let r = (v / step).round() * step;
            if r == 0.0 {
                0.0
            } else {
                r
            }
        })
        .collect()
}

/// The fourteen registered scenarios.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let line = Domain::unit(1);
    let thirds = line.split(&[3]).expect("valid split");
    let square = Domain::unit(2);
    let quads = square.quadrants().expect("two-dimensional box");
    let grid_1d = c_range(-2.0, 2.0, 0.2);
    let grid_2d = c_range(-0.5, 0.5, 0.05);

    let one_d = |name, label, null_fn, alt_fn, affected: Vec<usize>| Scenario {
        name,
        label,
        domain: line.clone(),
        null_fn,
        alt_fn,
        noise_sd: 0.1,
        design: Design::Uniform,
        n: 50,
        partition: thirds.clone(),
        c_grid: grid_1d.clone(),
        affected,
    };
    let two_d = |name, label, alt_fn, affected: Vec<usize>| Scenario {
        name,
        label,
        domain: square.clone(),
        null_fn: base_2d,
        alt_fn,
        noise_sd: 0.1,
        design: Design::Uniform,
        n: 200,
        partition: quads.clone(),
        c_grid: grid_2d.clone(),
        affected,
    };
    let all3 = vec![0, 1, 2];
    let all4 = vec![0, 1, 2, 3];
    vec![
        one_d(
            "const-linear",
            "Const-Linear",
            const_null,
            const_linear,
            all3.clone(),
        ),
        one_d(
            "exp-linear",
            "Exp-Linear",
            exp_null,
            exp_linear,
            all3.clone(),
        ),
        one_d(
            "sin-linear",
            "Sin-Linear",
            sin_null,
            sin_linear,
            all3.clone(),
        ),
        one_d(
            "const-sin",
            "Const-Sin",
            const_null,
            const_sin,
            all3.clone(),
        ),
        one_d("exp-sin", "Exp-Sin", exp_null, exp_sin, all3.clone()),
        one_d("sin-scale", "Sin-Scale", sin_null, sin_scale, all3),
        one_d(
            "sub1-low-frequency",
            "Sub1 Low Frequency",
            exp_null,
            sub1_low,
            vec![0],
        ),
        one_d(
            "sub1-high-frequency",
            "Sub1 High Frequency",
            exp_null,
            sub1_high,
            vec![0],
        ),
        one_d(
            "multi-subdomain",
            "Multi Subdomain",
            exp_null,
            multi_sub,
            vec![0, 1],
        ),
        two_d("2d-sin", "2D-Sin", sin_2d, all4.clone()),
        two_d("2d-constant", "2D-Constant", constant_2d, all4),
        two_d("quad-1-modulation", "Quad 1 Modulation", quad1, vec![0]),
        two_d("quad-2-modulation", "Quad 2 Modulation", quad2, vec![1]),
        two_d(
            "multi-quad-modulation",
            "Multi Quad Modulation",
            multi_quad,
            vec![0, 1],
        ),
    ]
}

fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_string()
}

/// Looks a scenario up by name or label, ignoring case and punctuation.
/// The `-modulation` suffix of the quadrant scenarios may be omitted.
pub fn find_scenario(name: &str) -> Result<Scenario> {
    let key = slug(name);
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == key || s.name == format!("{key}-modulation"))
        .ok_or_else(|| {
            let names: Vec<&str> = builtin_scenarios().iter().map(|s| s.name).collect();
            FmmtError::Config(format!(
                "unknown scenario '{name}'; valid names: {}",
                names.join(", ")
            ))
        })
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` at modulation `c`, a pure function of its inputs.
pub fn child_seed(seed: u64, c: f64, rep: u64) -> u64 {
    let c_bits = if c == 0.0 { 0 } else { c.to_bits() };
    mix(mix(mix(seed) ^ c_bits) ^ rep)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws `n` design points on `bx`.
pub fn sample_design(design: Design, n: usize, bx: &Domain, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_points(design, n, bx, &mut rng)
}

fn draw_points(design: Design, n: usize, bx: &Domain, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..bx.dim())
                .map(|m| {
                    let u = match design {
                        Design::Uniform => rng.random::<f64>(),
                        Design::TruncatedNormal { mean, sd } => loop {
                            let v = mean + sd * standard_normal(rng);
                            if (0.0..=1.0).contains(&v) {
                                break v;
                            }
                        },
                    };
                    bx.lower()[m] + u * bx.side(m)
                })
                .collect()
        })
        .collect()
}

/// One simulated dataset from the alternative at modulation `c`.
pub fn draw_sample(scenario: &Scenario, c: f64, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = draw_points(scenario.design, n, &scenario.domain, &mut rng);
    let responses = points
        .iter()
        .map(|x| (scenario.alt_fn)(x, c) + scenario.noise_sd * standard_normal(&mut rng))
        .collect();
    Dataset::new(points, responses, &scenario.domain)
}

/// Results of every test on one replication.
#[derive(Debug, Clone)]
pub struct Replication {
    pub global: TestReport,
    pub subdomains: SubdomainReport,
    pub eh: Option<EhResult>,
}

/// Runs all tests on one simulated dataset. The cross-validation shuffle is
/// reseeded from `seed` so replications stay independent.
pub fn replicate(
    scenario: &Scenario,
    c: f64,
    n: usize,
    seed: u64,
    cfg: &TestConfig,
    eh_critical: Option<f64>,
) -> Result<Replication> {
    let data = draw_sample(scenario, c, n, seed)?;
    let mut cfg = cfg.clone();
    if let LambdaRule::CrossValidated { seed: cv_seed, .. } = &mut cfg.lambda {
        *cv_seed = mix(seed ^ 0x5EED);
    }
    let simulator = |x: &[f64]| (scenario.null_fn)(x);
    let (global, subdomains) = global_and_subdomain_tests(
        &data,
        &simulator,
        &scenario.domain,
        &scenario.partition,
        &cfg,
    )?;
    let eh = match eh_critical {
        Some(crit) if scenario.dim() == 1 => {
            let x: Vec<f64> = data.points.iter().map(|p| p[0]).collect();
            let null = |v: f64| (scenario.null_fn)(&[v]);
            match eh_test_with_critical(&x, &data.responses, &null, crit) {
                Ok(r) => Some(r),
                Err(FmmtError::DegenerateNoise) => None,
                Err(e) => return Err(e),
            }
        }
        _ => None,
    };
    Ok(Replication {
        global,
        subdomains,
        eh,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Run the order-selection baseline alongside (1D only).
    pub baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub c: f64,
    pub global: f64,
    pub subdomains: Vec<f64>,
    pub bonferroni: f64,
    pub eh: Option<f64>,
    /// Replications that ended in a numerical error; counted as non-rejections.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub scenario: String,
    pub n: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub noise_sd: f64,
    pub design: Design,
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn row(&self, c: f64) -> Option<&PowerRow> {
        self.rows.iter().find(|r| (r.c - c).abs() < 1e-12)
    }

    /// Tab-separated table with one row per `c`.
    pub fn to_tsv(&self) -> String {
        let k = self.rows.first().map_or(0, |r| r.subdomains.len());
        let mut out = format!(
            "# scenario={} n={} alpha={} reps={} seed={} noise_sd={} design={}\n",
            self.scenario,
            self.n,
            self.alpha,
            self.reps,
            self.seed,
            self.noise_sd,
            design_label(self.design)
        );
        out.push_str("c\tglobal");
        for i in 1..=k {
            let _ = write!(out, "\tsubdomain_{i}");
        }
        out.push_str("\tbonferroni\teh\tfailures\n");
        for r in &self.rows {
            let _ = write!(out, "{}\t{}", r.c, r.global);
            for s in &r.subdomains {
                let _ = write!(out, "\t{s}");
            }
            let eh = r.eh.map_or("NA".to_string(), |v| v.to_string());
            let _ = writeln!(out, "\t{}\t{eh}\t{}", r.bonferroni, r.failures);
        }
        out
    }
}

pub fn design_label(design: Design) -> String {
    match design {
        Design::Uniform => "uniform".into(),
        Design::TruncatedNormal { mean, sd } => format!("truncated-normal({mean},{sd})"),
    }
}

#[derive(Default, Clone)]
struct Tally {
    global: usize,
    subdomains: Vec<usize>,
    bonferroni: usize,
    eh: usize,
    eh_runs: usize,
    failures: usize,
}

/// Rejection rates over `reps` replications at each `c`. Every replication
/// draws from its own seed, so the table does not depend on the order of
/// `c_grid` or on the number of threads; rows are sorted by `c`.
pub fn run_study(
    scenario: &Scenario,
    c_grid: &[f64],
    settings: &StudySettings,
    cfg: &TestConfig,
) -> Result<PowerTable> {
    if settings.reps == 0 {
        return config("at least one replication is required");
    }
    if c_grid.is_empty() {
        return config("empty modulation grid");
    }
    let mut cfg = cfg.clone();
    cfg.alpha = settings.alpha;
    cfg.resolve(settings.n, scenario.dim())?;
    let eh_critical = if settings.baseline && scenario.dim() == 1 {
        Some(eh_critical_value(settings.alpha)?)
    } else {
        None
    };
    let mut grid: Vec<f64> = c_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|ci| (0..settings.reps as u64).map(move |r| (ci, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(ci, r)| {
                let seed = child_seed(settings.seed, grid[ci], r);
                (
                    ci,
                    replicate(scenario, grid[ci], settings.n, seed, &cfg, eh_critical),
                )
            })
            .collect::<Vec<_>>()
    };
    let outcomes = match settings.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| FmmtError::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let parts = scenario.partition.len();
    let mut tallies = vec![
        Tally {
            subdomains: vec![0; parts],
            ..Tally::default()
        };
        grid.len()
    ];
    let alpha = settings.alpha;
    for (ci, outcome) in outcomes {
        let t = &mut tallies[ci];
        match outcome {
            Ok(rep) => {
                t.global += rep.global.rejects(alpha) as usize;
                for (k, r) in rep.subdomains.rejected_ier.iter().enumerate() {
                    t.subdomains[k] += *r as usize;
                }
                t.bonferroni += rep.subdomains.any_fwer_rejection() as usize;
                if let Some(eh) = rep.eh {
                    t.eh += eh.reject as usize;
                }
                if eh_critical.is_some() {
                    t.eh_runs += 1;
                }
            }
            Err(FmmtError::Numerical(_)) | Err(FmmtError::DegenerateNoise) => t.failures += 1,
            Err(e) => return Err(e),
        }
    }
    let reps = settings.reps as f64;
    let rows = grid
        .iter()
        .zip(tallies)
        .map(|(&c, t)| PowerRow {
            c,
            global: t.global as f64 / reps,
            subdomains: t.subdomains.iter().map(|&k| k as f64 / reps).collect(),
            bonferroni: t.bonferroni as f64 / reps,
            eh: eh_critical.map(|_| t.eh as f64 / reps),
            failures: t.failures,
        })
        .collect();
    Ok(PowerTable {
        scenario: scenario.name.to_string(),
        n: settings.n,
        alpha,
        reps: settings.reps,
        seed: settings.seed,
        noise_sd: scenario.noise_sd,
        design: scenario.design,
        rows,
    })
}
