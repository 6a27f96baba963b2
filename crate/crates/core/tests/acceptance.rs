//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Exits with status 0 after reporting, unless `FMMT_ACCEPTANCE_STRICT=1`
//! is set, in which case any failure gives a non-zero exit status.

use std::f64::consts::PI;
use std::time::Instant;

use fmmt::baselines::eh_critical_value;
use fmmt::basis::{basis_eval_extended, enumerate_basis};
use fmmt::case_study::{run_shear_layer, ShearLayerBundle};
use fmmt::kernel::{matern_eval, MaternParams};
use fmmt::krr::fit_krr;
use fmmt::quadrature::TensorGrid;
use fmmt::sim::{child_seed, draw_sample, find_scenario, run_study, StudySettings};
use fmmt::validation::{
    coefficients_on_grid, default_quad_points, global_test, limiting_cdf, limiting_p_value,
    LambdaRule, TestConfig,
};
use fmmt::Domain;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn settings(n: usize, reps: usize, seed: u64, baseline: bool) -> StudySettings {
    StudySettings {
        n,
        reps,
        alpha: 0.05,
        seed,
        threads: None,
        baseline,
    }
}

/// Matérn correlation from the modified Bessel function of half-integer
/// order, `K_{p+1/2}(z) = sqrt(π/2z) e^{-z} Σ_k (p+k)! / (k! (p−k)! (2z)^k)`.
fn matern_oracle(r: f64, p: u32, theta: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let nu = p as f64 + 0.5;
    let z = (2.0 * nu).sqrt() * r / theta;
    let fact = |m: u32| (1..=m).map(f64::from).product::<f64>();
    let series: f64 = (0..=p)
        .map(|k| fact(p + k) / (fact(k) * fact(p - k)) / (2.0 * z).powi(k as i32))
        .sum();
    let bessel = (PI / (2.0 * z)).sqrt() * (-z).exp() * series;
    let gamma = half_integer_gamma(nu);
    2f64.powf(1.0 - nu) / gamma * z.powf(nu) * bessel
}

/// `Γ(p + 1/2) = (2p)! √π / (4^p p!)`.
fn half_integer_gamma(nu: f64) -> f64 {
    let p = (nu - 0.5).round() as u32;
    let fact = |m: u32| (1..=m).map(f64::from).product::<f64>();
    fact(2 * p) * PI.sqrt() / (4f64.powi(p as i32) * fact(p))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let d = 1 + inst % 2;
        let n = rng.random_range(5..=50);
        let theta = rng.random_range(0.3..2.0);
        let params = MaternParams::new(3.5, theta).unwrap();
        let lambda = 10f64.powf(rng.random_range(-5.0..-1.0));
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random()).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|p| p.iter().sum::<f64>().sin() + rng.random::<f64>())
            .collect();
        let fit = fit_krr(&x, &y, params, lambda).unwrap();
        let dist = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let k = DMatrix::from_fn(n, n, |i, j| matern_oracle(dist(&x[i], &x[j]), 3, theta));
        let system = k + DMatrix::identity(n, n) * (n as f64 * lambda + fit.jitter);
        let inverse = system.try_inverse().expect("invertible system");
        let w = inverse * DVector::from_column_slice(&y);
        for _ in 0..20 {
            let probe: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let want: f64 = (0..n)
                .map(|i| w[i] * matern_oracle(dist(&probe, &x[i]), 3, theta))
                .sum();
            worst = worst.max((fit.predict(&probe).unwrap() - want).abs());
        }
    }
    outcome(
        worst < 1e-8,
        format!("max |prediction − oracle| = {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in 0..4u32 {
        let params = MaternParams::new(p as f64 + 0.5, 1.0).unwrap();
        for i in 0..1000 {
            let r = 10.0 * i as f64 / 999.0;
            worst = worst.max((matern_eval(r, &params).unwrap() - matern_oracle(r, p, 1.0)).abs());
        }
    }
    outcome(
        worst < 1e-10,
        format!("max |k − oracle| = {worst:.2e} over ν ∈ {{0.5,1.5,2.5,3.5}} (tol 1e-10)"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for bx in [
        Domain::unit(1),
        Domain::new(&[(0.0, 1.5), (0.0, 2.0)]).unwrap(),
    ] {
        let d = bx.dim();
        let basis = enumerate_basis(8, d, 0.7);
        let grid = TensorGrid::new(&bx, default_quad_points(8, d));
        for (j, bj) in basis.iter().enumerate() {
            let values = grid.evaluate(|x| basis_eval_extended(bj, x, &bx));
            let row = coefficients_on_grid(&values, &grid, &basis, &bx).unwrap();
            for (i, g) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - want).abs());
            }
        }
    }
    outcome(
        worst < 1e-8,
        format!("max |G − I| = {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_4() -> Outcome {
    let single = limiting_p_value(1.959964, &[1.0]).unwrap();
    let weights: Vec<f64> = enumerate_basis(7, 1, 0.7)
        .iter()
        .map(|b| b.decay_weight)
        .collect();
    let mut monotone = true;
    let mut in_range = true;
    let mut prev = 0.0;
    for i in 0..1000 {
        let t = 8.0 * i as f64 / 999.0;
        let f = limiting_cdf(t, &weights).unwrap();
        let p = limiting_p_value(t, &weights).unwrap();
        monotone &= f >= prev;
        in_range &= (0.0..=1.0).contains(&p);
        prev = f;
    }
    let ok = (single - 0.05).abs() < 1e-6 && monotone && in_range;
    outcome(
        ok,
        format!("p(1.959964) = {single:.8}; monotone = {monotone}; p in [0,1] = {in_range}"),
    )
}

fn criterion_5() -> Outcome {
    let cfg = TestConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, target) in [("const-linear", 0.038), ("exp-linear", 0.032)] {
        let s = find_scenario(name).unwrap();
        let t = run_study(&s, &[0.0], &settings(50, 1000, 2024, false), &cfg).unwrap();
        let r = &t.rows[0];
        let sub_max = r.subdomains.iter().copied().fold(0.0, f64::max);
        ok &= (r.global - target).abs() <= 0.02 && sub_max <= 0.06;
        parts.push(format!(
            "{name}: global {:.3} (target {target} ± 0.02), max subdomain {sub_max:.3} (≤ 0.06)",
            r.global
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let cfg = TestConfig::default();
    let run = |name: &str| {
        let s = find_scenario(name).unwrap().comparison_variant();
        run_study(&s, &[1.0], &settings(25, 1000, 77, true), &cfg)
            .unwrap()
            .rows[0]
            .clone()
    };
    let cl = run("const-linear");
    let es = run("exp-sin");
    let cs = run("const-sin");
    let eh_cl = cl.eh.unwrap_or(f64::NAN);
    let eh_cs = cs.eh.unwrap_or(f64::NAN);
    let checks = [
        cl.global >= 0.94,
        es.global >= 0.96,
        eh_cs >= 0.99,
        (eh_cl - 0.876).abs() <= 0.04,
    ];
    outcome(
        checks.iter().all(|&c| c),
        format!(
            "FMMT const-linear {:.3} (≥ 0.94), FMMT exp-sin {:.3} (≥ 0.96), EH const-sin {eh_cs:.3} (≥ 0.99), EH const-linear {eh_cl:.3} (0.876 ± 0.04)",
            cl.global, es.global
        ),
    )
}

fn criterion_7() -> Outcome {
    let c025 = eh_critical_value(0.025).unwrap();
    let c05 = eh_critical_value(0.05).unwrap();
    // limiting null: sup_m m⁻¹ Σ_{j≤m} Z_j²
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let paths = 100_000;
    let mut exceed = 0usize;
    for _ in 0..paths {
        let mut sum = 0.0;
        let mut best: f64 = 0.0;
        for m in 1..=400 {
            let z: f64 = rng.sample(StandardNormal);
            sum += z * z;
            best = best.max(sum / m as f64);
        }
        exceed += (best > c05) as usize;
    }
    let rate = exceed as f64 / paths as f64;
    let ok = (c025 - 5.24).abs() <= 0.02 && (rate - 0.05).abs() <= 0.005;
    outcome(ok, format!("c_0.025 = {c025:.4} (5.24 ± 0.02); simulated level at c_0.05 = {c05:.4}: {rate:.4} (0.05 ± 0.005)"))
}

fn criterion_8() -> Outcome {
    let cfg = TestConfig::default();
    let s = find_scenario("sub1-high-frequency").unwrap();
    let r = run_study(&s, &[2.0], &settings(50, 500, 88, false), &cfg)
        .unwrap()
        .rows[0]
        .clone();
    let first = r.global < r.subdomains[0] && r.global < r.bonferroni;
    let q = find_scenario("quad-1-modulation").unwrap();
    let rq = run_study(&q, &[0.5], &settings(200, 300, 89, false), &cfg)
        .unwrap()
        .rows[0]
        .clone();
    let second = rq.subdomains[0] >= 0.8 && rq.subdomains[1..].iter().all(|&v| v <= 0.1);
    outcome(
        first && second,
        format!(
            "sub1-high-frequency: global {:.3}, subdomain 1 {:.3}, Bonferroni {:.3}; quad-1: quadrants {:?}",
            r.global,
            r.subdomains[0],
            r.bonferroni,
            rq.subdomains.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_9() -> Outcome {
    let bundle = ShearLayerBundle::bundled().unwrap();
    let res = run_shear_layer(&bundle, &TestConfig::default()).unwrap();
    let p: Vec<f64> = res.subdomains.reports.iter().map(|r| r.p_value).collect();
    let ok = bundle.partition.len() == 6
        && bundle.domain.lower()[0] == 0.0
        && bundle.domain.upper()[0] == 1.5
        && res.global.p_value < 0.01
        && [2, 3, 4].iter().all(|&i| p[i] < 0.05);
    outcome(
        ok,
        format!(
            "global p = {:.2e}; subdomain p = [{}]",
            res.global.p_value,
            p.iter()
                .map(|v| format!("{v:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn criterion_10() -> Outcome {
    let s = find_scenario("exp-linear").unwrap();
    let reps = 2000;
    let mut z = Vec::with_capacity(reps);
    let mut rho = 0.0;
    for r in 0..reps as u64 {
        let seed = child_seed(1010, 0.0, r);
        let data = draw_sample(&s, 0.0, 200, seed).unwrap();
        let cfg = TestConfig {
            lambda: LambdaRule::CrossValidated {
                c_grid: fmmt::krr::default_c_grid(),
                folds: 5,
                seed,
            },
            ..TestConfig::default()
        };
        let rep = global_test(&data, &|x| (s.null_fn)(x), &s.domain, &cfg).unwrap();
        rho = rep.coefficients[0].basis.decay_weight;
        z.push(rep.coefficients[0].weighted_z);
    }
    let mean = z.iter().sum::<f64>() / reps as f64;
    let sd = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let ok = mean.abs() < 0.1 * rho && (0.8 * rho..=1.2 * rho).contains(&sd);
    outcome(
        ok,
        format!(
            "ρ₁ = {rho:.4}; mean = {mean:.4} (|·| < {:.4}); sd = {sd:.4} (in [{:.4}, {:.4}])",
            0.1 * rho,
            0.8 * rho,
            1.2 * rho
        ),
    )
}

fn criterion_11() -> Outcome {
    let cfg = TestConfig::default();
    let s = find_scenario("multi-subdomain").unwrap();
    let table = |threads: usize, grid: &[f64]| {
        let mut st = settings(50, 8, 4242, true);
        st.threads = Some(threads);
        let t = run_study(&s, grid, &st, &cfg).unwrap();
        (t.to_tsv(), serde_json::to_string(&t).unwrap())
    };
    let a = table(1, &[-1.0, 0.0, 1.0]);
    let b = table(4, &[1.0, 0.0, -1.0]);
    let c = table(2, &[-1.0, 0.0, 1.0]);
    let data = draw_sample(&s, 0.8, 50, 5).unwrap();
    let report = || {
        let r = global_test(&data, &|x| (s.null_fn)(x), &s.domain, &cfg).unwrap();
        serde_json::to_string(&r).unwrap()
    };
    let ok = a == b && a == c && report() == report();
    outcome(
        ok,
        format!(
            "power tables identical across 1/2/4 threads and grid order: {}",
            a == b && a == c
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("KRR matches dense-inverse oracle", criterion_1),
        ("Matérn closed forms match Bessel oracle", criterion_2),
        ("basis orthonormality", criterion_3),
        ("limiting CDF calibration", criterion_4),
        ("type-I error", criterion_5),
        ("power", criterion_6),
        ("order-selection critical value", criterion_7),
        ("subdomain localization", criterion_8),
        ("shear-layer case study", criterion_9),
        ("first-coefficient normality", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        failed += !o.pass as usize;
        println!(
            "criterion {:>2} {}: {} [{:.1}s] {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 && std::env::var("FMMT_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
