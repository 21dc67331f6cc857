//! Special functions needed by the composite densities.
//!
//! Gamma-family functions come from `statrs`; the modified Bessel function of
//! the second kind (real order), the regularized Gauss hypergeometric series
//! and Tricomi's confluent function are implemented here because no
//! maintained crate offers them for real parameters.

use std::f64::consts::{LN_2, PI};

use crate::quad::{integrate_log_line, LineOptions};

pub use statrs::function::beta::{beta_reg, ln_beta};
pub use statrs::function::erf::erfc;
pub use statrs::function::gamma::{digamma, gamma_lr, gamma_ur, ln_gamma};

const EPS: f64 = 1e-16;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 100_000;

/// Taylor coefficients of 1/Γ(z) about z = 0, starting at z^1.
#[allow(clippy::excessive_precision)]
const RGAMMA_TAYLOR: [f64; 30] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_9,
    -0.042_002_635_034_095_236,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_34,
    -0.009_621_971_527_876_973,
    0.007_218_943_246_663_1,
    -0.001_165_167_591_859_065,
    -0.000_215_241_674_114_950_97,
    0.000_128_050_282_388_116_2,
    -2.013_485_478_078_824e-5,
    -1.250_493_482_142_670_7e-6,
    1.133_027_231_981_696e-6,
    -2.056_338_416_977_607e-7,
    6.116_095_104_481_416e-9,
    5.002_007_644_469_223e-9,
    -1.181_274_570_487_02e-9,
    1.043_426_711_691_100_5e-10,
    7.782_263_439_905_071e-12,
    -3.696_805_618_642_205_7e-12,
    5.100_370_287_454_476e-13,
    -2.058_326_053_566_506_8e-14,
    -5.348_122_539_423_018e-15,
    1.226_778_628_238_260_8e-15,
    -1.181_259_301_697_458_8e-16,
    1.186_692_254_751_600_3e-18,
    1.412_380_655_318_031_8e-18,
    -2.298_745_684_435_370_2e-19,
    1.714_406_321_927_337_4e-20,
];

/// Returns (gam1, gam2, 1/Γ(1+mu), 1/Γ(1-mu)) for |mu| <= 1/2 as used by
/// Temme's series. gam1 = (1/Γ(1-mu) - 1/Γ(1+mu)) / (2 mu), gam2 is the
/// mean of the two reciprocals.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mu2 = mu * mu;
    // 1/Γ(1+z) = Σ_k c_k z^{k-1}; split into even and odd powers of z.
    let mut even = 0.0; // Σ c_{odd index} mu^{2j}
    let mut odd = 0.0; // Σ c_{even index} mu^{2j}
    let mut p = 1.0;
    for pair in RGAMMA_TAYLOR.chunks(2) {
        even += pair[0] * p;
        if let Some(c) = pair.get(1) {
            odd += c * p;
        }
        p *= mu2;
    }
    let gam1 = -odd;
    let gam2 = even;
    let gampl = even + mu * odd;
    let gammi = even - mu * odd;
    (gam1, gam2, gampl, gammi)
}

/// Natural log of K_nu(x) for real nu and x > 0.
///
/// Temme's series for x < 2, Steed's continued fraction otherwise, then
/// forward recurrence in the order. The recurrence is rescaled so that very
/// small arguments with large orders do not overflow.
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    if !(x > 0.0) || !nu.is_finite() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let nu = nu.abs();
    if x < 1e-50 && nu > 0.0 {
        // Leading term Γ(ν)/2 (2/x)^ν; the next correction is O(x²).
        return ln_gamma(nu) - LN_2 + nu * (LN_2 - x.ln());
    }
    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    // (K_mu, K_{mu+1}) scaled by exp(-log_scale).
    let (mut rkmu, mut rk1, mut log_scale);
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= dd / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        rkmu = sum;
        rk1 = sum1 * xi2;
        log_scale = 0.0;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        // exp(-x) is carried in log_scale to avoid underflow.
        rkmu = (PI / (2.0 * x)).sqrt() / s;
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
        log_scale = -x;
    }
    for i in 1..=nl {
        let next = (xmu + i as f64) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = next;
        if rk1.abs() > 1e100 {
            rkmu *= 1e-100;
            rk1 *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    rkmu.ln() + log_scale
}

/// ln K_nu(e^{ln_x}), usable when x itself would underflow or overflow.
pub fn ln_bessel_k_at_log(nu: f64, ln_x: f64) -> f64 {
    if ln_x < -115.0 {
        let nu = nu.abs();
        if nu > 0.0 {
            return ln_gamma(nu) - LN_2 + nu * (LN_2 - ln_x);
        }
        // K_0(x) ~ -ln(x/2) - γ_E
        return (LN_2 - ln_x - EULER_GAMMA).ln();
    }
    if ln_x > 709.0 {
        return f64::NEG_INFINITY;
    }
    ln_bessel_k(nu, ln_x.exp())
}

/// K_nu(x).
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    ln_bessel_k(nu, x).exp()
}

/// Natural log of Γ(c)^{-1} 2F1(a, b; c; x) for a, b, c > 0 and
/// -0.8 <= x <= 0.8 (the region where the Gauss series converges quickly).
///
/// Negative arguments go through Pfaff's transformation so every series term
/// is positive. Returns `None` outside the supported region or if the series
/// fails to converge.
pub fn ln_hyp2f1_regularized(a: f64, b: f64, c: f64, x: f64) -> Option<f64> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !(x.abs() <= 0.8) {
        return None;
    }
    if x < 0.0 {
        // 2F1(a,b;c;x) = (1-x)^{-a} 2F1(a, c-b; c; x/(x-1)); c-b > 0 is
        // required for positivity of the transformed series.
        let cb = c - b;
        if cb > 0.0 {
            let z = x / (x - 1.0);
            let s = gauss_series_positive(a, cb, c, z)?;
            return Some(-a * (-x).ln_1p() + s.ln() - ln_gamma(c));
        }
        let s = gauss_series_signed(a, b, c, x)?;
        return if s > 0.0 { Some(s.ln() - ln_gamma(c)) } else { None };
    }
    let s = gauss_series_positive(a, b, c, x)?;
    Some(s.ln() - ln_gamma(c))
}

fn gauss_series_positive(a: f64, b: f64, c: f64, x: f64) -> Option<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_ITER {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if term <= sum * 1e-17 && (a + kf) * (b + kf) * x < (c + kf) * (kf + 1.0) {
            return Some(sum);
        }
        if !sum.is_finite() {
            return None;
        }
    }
    None
}

fn gauss_series_signed(a: f64, b: f64, c: f64, x: f64) -> Option<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_ITER {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if term.abs() <= sum.abs() * 1e-17
            && ((a + kf) * (b + kf) * x).abs() < (c + kf) * (kf + 1.0)
        {
            return Some(sum);
        }
        if !sum.is_finite() {
            return None;
        }
    }
    None
}

/// Natural log of Tricomi's confluent hypergeometric function U(a, b, z) for
/// a > 0, z > 0, from the Laplace-type integral
/// U = Γ(a)^{-1} ∫_0^∞ e^{-zt} t^{a-1} (1+t)^{b-a-1} dt.
pub fn ln_tricomi_u(a: f64, b: f64, z: f64) -> Option<f64> {
    if !(a > 0.0 && z > 0.0) || !b.is_finite() {
        return None;
    }
    // t = e^s; the peak sits near t ~ a/z for large z and t ~ O(1) otherwise.
    let log_integrand = |s: f64| {
        let t = s.exp();
        -z * t + a * s + (b - a - 1.0) * t.ln_1p()
    };
    let center = (a / z).ln().clamp(-700.0, 700.0);
    let opts = LineOptions {
        rel_tol: 1e-12,
        ..LineOptions::default()
    };
    let ln_int = integrate_log_line(log_integrand, center, &opts).ok()?;
    Some(ln_int - ln_gamma(a))
}

/// ln n!
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Binomial coefficient as f64 (exact for the small arguments used here).
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// log(exp(a) + exp(b)) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
