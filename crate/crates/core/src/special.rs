//! Special functions used across the crate: modified Bessel functions of the
//! second kind, Gauss–Legendre nodes, and thin wrappers over the normal and
//! chi-square distribution functions.

use std::f64::consts::PI;

/// Taylor coefficients of 1/Γ(z) = Σ c_k z^k, k = 1..26.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

const EPS: f64 = 1e-16;

/// Temme's auxiliary gamma quantities for |mu| <= 1/2:
/// (gam1, gam2, 1/Γ(1+mu), 1/Γ(1-mu)).
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut gampl = 0.0;
    let mut gammi = 0.0;
    let mut pw = 1.0; // mu^(k-1)
    for (idx, &c) in RECIP_GAMMA.iter().enumerate() {
        let k = idx + 1;
        gampl += c * pw;
        gammi += if k % 2 == 1 { c * pw } else { -c * pw };
        if k % 2 == 1 {
            gam2 += c * pw;
        }
        pw *= mu;
    }
    // gam1 = -Σ_{k even} c_k mu^(k-2)
    let mut pw = 1.0;
    for k in (2..=26).step_by(2) {
        gam1 -= RECIP_GAMMA[k - 1] * pw;
        pw *= mu * mu;
    }
    (gam1, gam2, gampl, gammi)
}

/// Returns `(K_mu(x), K_{mu+1}(x))` for |mu| <= 1/2, both multiplied by `exp(x)`
/// when `scaled` is set.
fn bessel_k_pair(mu: f64, x: f64, scaled: bool) -> (f64, f64) {
    let mu2 = mu * mu;
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS {
            1.0
        } else {
            pimu / pimu.sin()
        };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mut i = 1.0;
        loop {
            ff = (i * ff + p + q) / (i * i - mu2);
            c *= dd / i;
            p /= i - mu;
            q /= i + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if del.abs() < sum.abs() * EPS || i > 500.0 {
                break;
            }
            i += 1.0;
        }
        let scale = if scaled { x.exp() } else { 1.0 };
        (sum * scale, sum1 * 2.0 / x * scale)
    } else {
        // Steed's continued fraction (Thompson–Barnett form).
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut c = a1;
        let mut q = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut i = 2.0;
        while i < 10_000.0 {
            a -= 2.0 * (i - 1.0);
            c = -a * c / i;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
            i += 1.0;
        }
        h *= a1;
        let mut kmu = (PI / (2.0 * x)).sqrt() / s;
        if !scaled {
            kmu *= (-x).exp();
        }
        let k1 = kmu * (mu + x + 0.5 - h) / x;
        (kmu, k1)
    }
}

fn bessel_k_impl(nu: f64, x: f64, scaled: bool) -> f64 {
    debug_assert!(x > 0.0 && nu >= 0.0);
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (mut kmu, mut k1) = bessel_k_pair(mu, x, scaled);
    let xi2 = 2.0 / x;
    let mut i = 1.0;
    while i <= nl {
        let next = (mu + i) * xi2 * k1 + kmu;
        kmu = k1;
        k1 = next;
        i += 1.0;
    }
    kmu
}

/// Modified Bessel function of the second kind, `K_nu(x)`, for `nu >= 0`, `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_impl(nu.abs(), x, false)
}

/// Exponentially scaled `exp(x) K_nu(x)`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    bessel_k_impl(nu.abs(), x, true)
}

/// Error function. Power series with positive terms below 2.5, continued
/// fraction for the complement above; relative error near 1e-15.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 2.5 {
        erf_series(x)
    } else {
        1.0 - erfc_cf(x)
    }
}

/// Complementary error function with full relative accuracy in the tail.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

/// `erf(x) = 2/√π e^{-x²} Σ 2^n x^{2n+1} / (2n+1)!!`.
fn erf_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// `erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`, modified Lentz.
fn erfc_cf(x: f64) -> f64 {
    if x > 27.3 {
        return 0.0;
    }
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `2Φ(z) − 1 = erf(z/√2)` and its complement `2(1 − Φ(z)) = erfc(z/√2)`.
pub fn two_sided_normal(z: f64) -> (f64, f64) {
    let u = z / std::f64::consts::SQRT_2;
    (erf(u), erfc(u))
}

/// Upper tail `P(χ²_dof > x)`.
pub fn chi_square_sf(dof: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(0.5 * dof, 0.5 * x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// K_nu(x) = ∫_0^∞ exp(-x cosh t) cosh(nu t) dt by the trapezoid rule,
    /// which converges geometrically for this integrand.
    fn bessel_k_integral(nu: f64, x: f64) -> f64 {
        let h: f64 = 0.01;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let term = (-x * t.cosh() + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
            sum += term;
            if term < 1e-30 * sum {
                break;
            }
            t += h;
        }
        sum * h
    }

    #[test]
    fn bessel_matches_integral_representation() {
        for &nu in &[0.0, 0.2, 0.5, 1.0, 1.3, 2.5, 3.5, 4.0, 7.25, 10.0] {
            for &x in &[0.05, 0.3, 1.0, 1.99, 2.0, 3.7, 10.0, 40.0, 90.0] {
                let got = bessel_k(nu, x);
                let want = bessel_k_integral(nu, x);
                assert!(
                    ((got - want) / want).abs() < 1e-11,
                    "nu={nu} x={x}: {got} vs {want}"
                );
                let scaled = bessel_k_scaled(nu, x);
                assert!(((scaled * (-x).exp() - want) / want).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn bessel_half_order_closed_form() {
        for &x in &[0.1, 1.0, 5.0] {
            let closed = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!((bessel_k(0.5, x) - closed).abs() < 1e-14 * closed.max(1.0));
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 14 monomial: ∫ x^14 = 2/15
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        let (f, c) = two_sided_normal(1.959963984540054);
        assert!((f - 0.95).abs() < 1e-12 && (c - 0.05).abs() < 1e-12);
    }

    #[test]
    fn erf_reference_values() {
        // mpmath, 30 digits
        let cases = [
            (
                0.1,
                0.112462916018284898404712251014,
                0.887537083981715101595287748986,
            ),
            (
                1.0,
                0.842700792949714869341220635083,
                0.157299207050285130658779364917,
            ),
            (
                2.4,
                0.99931148610335492111445002519,
                6.88513896645078885549974809715e-4,
            ),
            (
                2.6,
                0.999763965583470650912187179398,
                2.36034416529349087812820602355e-4,
            ),
            (
                5.0,
                0.99999999999846254020557196515,
                1.53745979442803485018834348538e-12,
            ),
            (12.0, 1.0, 1.35626116920590421278030615659e-64),
        ];
        for (x, e, ec) in cases {
            assert!((erf(x) - e).abs() < 2e-16, "erf({x})");
            assert!(
                ((erfc(x) - ec) / ec).abs() < 1e-13,
                "erfc({x}) = {}",
                erfc(x)
            );
            assert!((erf(-x) + e).abs() < 2e-16);
        }
    }

    #[test]
    fn chi_square_tail_reference() {
        // P(χ²_1 > 3.841458820694124) = 0.05
        assert!((chi_square_sf(1.0, 3.841458820694124) - 0.05).abs() < 1e-12);
        // P(χ²_2 > x) = exp(-x/2)
        assert!((chi_square_sf(2.0, 7.0) - (-3.5f64).exp()).abs() < 1e-14);
    }
}
