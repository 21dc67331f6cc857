//! Shadowing-based UAV selection.
//!
//! Among `L` links the receiver picks the one with the largest shadowing
//! factor and keeps that link's multipath factor, so the output SNR is
//! `γ_out = N·I_max` with `N` independent of the choice. For the DS model
//! `I_max` is the maximum of `L` double-inverse-gamma variates. Its CDF is
//! `F_I(y)^L`, and when `α₂ = α₁ + ½` with `2α₁` a positive integer the
//! duplication formula turns `F_I` into a finite incomplete-gamma sum
//!
//! ```text
//! F_I(y) = e^{-x} Σ_{k<2α₁} x^k / k!,   x = 2√(γ̄/y),
//! ```
//!
//! which is what the term expansion below is built from. For other shapes the
//! sum is not exact and only the quadrature and Monte Carlo routes apply.
//!
//! Expansion used by the series route (indices are zero-based throughout):
//!
//! ```text
//! F_I^{L-1} = Σ_{i₁=0}^{L-1} Σ_{i₂=0}^{i₁} C(L-1,i₁) C(i₁,i₂) (-1)^{i₁+i₂}
//!             e^{-i₂x} Σ_{n₀+…+n_{2α₁-1}=i₂} i₂!/Πn_j! Π_j (x^j/j!)^{n_j}
//! ```
//!
//! The SS model with integer `α` is handled the same way. There the product
//! `L f_I F_I^{L-1}` collapses to a positive mixture of inverse-gamma
//! densities with shapes `p` and scale `Lγ̄`, so the output is a mixture of
//! SS composites.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    ln_pdf_double_ig, ln_pdf_double_nakagami, ln_pdf_ig, mean_ln_multipath, mean_ln_shadow, pdf, CdfTable,
    EvalOptions, Evaluated, Method, MethodTag,
};
use crate::error::{domain, Error, Result};
use crate::model::{BatchSource, ChannelParams, DoubleShadowParams, LinkSampler, SampleBatch, SingleShadowParams};
use crate::quad::{integrate_log_line, LineOptions};
use crate::rng::{self, Seed};
use crate::special::{binomial, gamma_lr, gamma_ur, ln_factorial, ln_gamma};

/// Largest `2α₁` (DS) or `α` (SS) for which terms are enumerated.
pub const MAX_SERIES_SHAPE: u32 = 12;
/// Largest `L` for which terms are enumerated.
pub const MAX_SERIES_UAVS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub base: ChannelParams,
    pub uavs: usize,
}

impl SelectionParams {
    pub fn new(base: impl Into<ChannelParams>, uavs: usize) -> Result<Self> {
        if uavs == 0 {
            return Err(domain("the number of UAVs must be at least 1"));
        }
        Ok(Self {
            base: base.into(),
            uavs,
        })
    }

    pub fn with_uavs(&self, uavs: usize) -> Result<Self> {
        Self::new(self.base, uavs)
    }
}

/// One term of the expansion of `L·f_I·F_I^{L-1}`.
///
/// DS terms carry `(i1, i2, n_vec, a_coef, q)` and represent
/// `C(L-1,i1) C(i1,i2) a_coef · 2γ̄^{q/2} y^{-q/2-1} K_{1/2}(x) e^{-i2 x} / (Γ(α₁)Γ(α₂))`
/// where `a_coef` includes the sign and the `2^j/j!` factors.
/// SS terms carry `(n_vec, b_coef, p)`: the weight of the inverse-gamma
/// component with shape `p` and scale `Lγ̄` is `b_coef·Γ(p)/Γ(α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub i1: u32,
    pub i2: u32,
    pub n_vec: Vec<u32>,
    pub a_coef: f64,
    pub q: f64,
    pub b_coef: f64,
    pub p: f64,
}

/// All vectors of `parts` non-negative integers summing to `total`.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; parts];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
        cur[pos] = 0;
    }
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, total, &mut cur, &mut out);
    out
}

fn multinomial_ln(total: u32, n: &[u32]) -> f64 {
    ln_factorial(total as u64) - n.iter().map(|&k| ln_factorial(k as u64)).sum::<f64>()
}

/// `n` with `2α₁ = n` when the finite sum for the DIG CDF is exact.
pub fn dig_series_order(alpha1: f64, alpha2: f64) -> Option<u32> {
    let n = 2.0 * alpha1;
    let order = n.round();
    if (n - order).abs() > 1e-12 || order < 1.0 {
        return None;
    }
    if (alpha2 - alpha1 - 0.5).abs() > 1e-12 {
        return None;
    }
    Some(order as u32)
}

fn require_ds_series(p: &DoubleShadowParams, uavs: usize) -> Result<u32> {
    let n = dig_series_order(p.alpha1(), p.alpha2()).ok_or_else(|| {
        Error::SeriesInapplicable(format!(
            "the finite incomplete-gamma series for the shadowing CDF needs 2*alpha1 integer and alpha2 = alpha1 + 1/2, got alpha1 = {}, alpha2 = {}; use the quadrature method",
            p.alpha1(),
            p.alpha2()
        ))
    })?;
    if n > MAX_SERIES_SHAPE || uavs > MAX_SERIES_UAVS {
        return Err(Error::SeriesInapplicable(format!(
            "series enumeration is capped at 2*alpha1 <= {MAX_SERIES_SHAPE} and L <= {MAX_SERIES_UAVS}; use the quadrature method"
        )));
    }
    Ok(n)
}

fn ss_series_order(alpha: f64) -> Option<u32> {
    let r = alpha.round();
    ((alpha - r).abs() < 1e-12 && r >= 1.0).then_some(r as u32)
}

fn require_ss_series(p: &SingleShadowParams, uavs: usize) -> Result<u32> {
    let a = ss_series_order(p.alpha()).ok_or_else(|| {
        Error::SeriesInapplicable(format!(
            "the SS selection series needs an integer alpha, got {}; use the quadrature method",
            p.alpha()
        ))
    })?;
    if a > MAX_SERIES_SHAPE || uavs > MAX_SERIES_UAVS {
        return Err(Error::SeriesInapplicable(format!(
            "series enumeration is capped at alpha <= {MAX_SERIES_SHAPE} and L <= {MAX_SERIES_UAVS}; use the quadrature method"
        )));
    }
    Ok(a)
}

/// Enumerates the DS expansion terms for `L` UAVs.
pub fn ds_terms(p: &DoubleShadowParams, uavs: usize) -> Result<Vec<ExpansionTerm>> {
    let n = require_ds_series(p, uavs)? as usize;
    let lm1 = (uavs - 1) as u32;
    let mut out = Vec::new();
    for i1 in 0..=lm1 {
        for i2 in 0..=i1 {
            for n_vec in compositions(i2, n) {
                let sign = if (i1 + i2) % 2 == 0 { 1.0 } else { -1.0 };
                let ln_prod: f64 = n_vec
                    .iter()
                    .enumerate()
                    .map(|(j, &nj)| nj as f64 * (j as f64 * std::f64::consts::LN_2 - ln_factorial(j as u64)))
                    .sum();
                let a_coef = sign * (multinomial_ln(i2, &n_vec) + ln_prod).exp();
                let q = p.alpha1()
                    + p.alpha2()
                    + n_vec.iter().enumerate().map(|(j, &nj)| (j as u32 * nj) as f64).sum::<f64>();
                out.push(ExpansionTerm {
                    i1,
                    i2,
                    n_vec,
                    a_coef,
                    q,
                    b_coef: 0.0,
                    p: 0.0,
                });
            }
        }
    }
    Ok(out)
}

/// Sums the integer binomial factors of terms that share `(i2, n_vec)`
/// exactly, before any floating-point work, and returns the surviving terms
/// with their total coefficient `Σ_{i1} C(L-1,i1) C(i1,i2) · a_coef`.
/// Summing the alternating terms in floating point instead loses all
/// precision where `F_I` is small.
fn collapse_ds_terms(terms: &[ExpansionTerm], uavs: usize) -> Vec<(f64, &ExpansionTerm)> {
    let lm1 = (uavs - 1) as u64;
    let mut groups: BTreeMap<(u32, &[u32]), (i64, &ExpansionTerm)> = BTreeMap::new();
    for t in terms {
        let sign = if (t.i1 + t.i2) % 2 == 0 { 1 } else { -1 };
        let c = sign * binomial(lm1, t.i1 as u64) as i64 * binomial(t.i1 as u64, t.i2 as u64) as i64;
        groups.entry((t.i2, t.n_vec.as_slice())).or_insert((0, t)).0 += c;
    }
    groups
        .into_values()
        .filter(|(c, _)| *c != 0)
        .map(|(c, t)| (c as f64 * t.a_coef.abs(), t))
        .collect()
}

/// Enumerates the SS mixture terms for `L` UAVs (`n_vec = (n₁, …, n_α)`
/// summing to `L-1`).
pub fn ss_terms(p: &SingleShadowParams, uavs: usize) -> Result<Vec<ExpansionTerm>> {
    let a = require_ss_series(p, uavs)? as usize;
    let l = uavs as f64;
    let mut out = Vec::new();
    for n_vec in compositions((uavs - 1) as u32, a) {
        // n_vec[j-1] counts the power t^{j-1}/(j-1)!.
        let extra: u32 = n_vec.iter().enumerate().map(|(i, &nj)| i as u32 * nj).sum();
        let pp = p.alpha() + extra as f64;
        let ln_prod: f64 = n_vec
            .iter()
            .enumerate()
            .map(|(i, &nj)| -(nj as f64) * ln_factorial(i as u64))
            .sum();
        let b_coef = (-pp * l.ln() + ln_factorial(uavs as u64)
            - n_vec.iter().map(|&k| ln_factorial(k as u64)).sum::<f64>()
            + ln_prod)
            .exp();
        out.push(ExpansionTerm {
            i1: 0,
            i2: 0,
            n_vec,
            a_coef: 0.0,
            q: 0.0,
            b_coef,
            p: pp,
        });
    }
    Ok(out)
}

/// DIG CDF from the finite incomplete-gamma sum, exact when
/// `α₂ = α₁ + ½` and `2α₁ ∈ ℕ`.
pub fn dig_cdf_series(alpha1: f64, alpha2: f64, gamma_bar: f64, y: f64) -> Result<f64> {
    let n = dig_series_order(alpha1, alpha2).ok_or_else(|| {
        Error::SeriesInapplicable(format!(
            "no finite series for alpha1 = {alpha1}, alpha2 = {alpha2}"
        ))
    })?;
    if y <= 0.0 {
        return Ok(0.0);
    }
    let x = 2.0 * (gamma_bar / y).sqrt();
    let ln_x = x.ln();
    Ok((0..n)
        .map(|k| (k as f64 * ln_x - x - ln_factorial(k as u64)).exp())
        .sum())
}

fn upper_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

fn lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(a, x)
    }
}

/// `F_I(y)` and `1 - F_I(y)` for the shadowing factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowDistribution {
    pub cdf: f64,
    pub ccdf: f64,
}

/// Shadowing-factor CDF by quadrature. For DS, `F_I(y) = P(X₁X₂ ≥ γ̄/y)`
/// conditioned on `X₂`; for SS it is the regularized upper incomplete gamma.
pub fn shadow_distribution_quadrature(base: &ChannelParams, y: f64, line: &LineOptions) -> Result<ShadowDistribution> {
    if y.is_nan() || y < 0.0 {
        return Err(domain(format!("shadowing argument must be non-negative, got {y}")));
    }
    if y == 0.0 {
        return Ok(ShadowDistribution { cdf: 0.0, ccdf: 1.0 });
    }
    match base {
        ChannelParams::Single(p) => {
            let t = p.gamma_bar() / y;
            Ok(ShadowDistribution {
                cdf: upper_gamma(p.alpha(), t),
                ccdf: lower_gamma(p.alpha(), t),
            })
        }
        ChannelParams::Double(p) => dig_distribution_quadrature(p.alpha1(), p.alpha2(), p.gamma_bar(), y, line),
    }
}

/// DIG CDF and CCDF by quadrature for raw shapes `a1, a2 > 0`.
pub fn dig_distribution_quadrature(
    a1: f64,
    a2: f64,
    gamma_bar: f64,
    y: f64,
    line: &LineOptions,
) -> Result<ShadowDistribution> {
    if y == 0.0 {
        return Ok(ShadowDistribution { cdf: 0.0, ccdf: 1.0 });
    }
    let ln_t = gamma_bar.ln() - y.ln();
    let lg2 = ln_gamma(a2);
    let w = |s: f64| a2 * s - s.exp() - lg2;
    let lower = |s: f64| upper_gamma(a1, (ln_t - s).exp()).ln() + w(s);
    let upper = |s: f64| lower_gamma(a1, (ln_t - s).exp()).ln() + w(s);
    let center = crate::special::digamma(a2);
    let la = integrate_log_line(lower, center, line)?;
    let lb = integrate_log_line(upper, center, line)?;
    let m = la.max(lb);
    if m == f64::NEG_INFINITY {
        return Err(Error::Eval(format!("shadowing CDF integrals vanished at y = {y:e}")));
    }
    let (ea, eb) = ((la - m).exp(), (lb - m).exp());
    Ok(ShadowDistribution {
        cdf: ea / (ea + eb),
        ccdf: eb / (ea + eb),
    })
}

/// Shadowing-factor CDF, from the closed form when it is exact.
fn shadow_distribution(base: &ChannelParams, y: f64, opts: &EvalOptions) -> Result<(ShadowDistribution, MethodTag)> {
    let series_ok = match base {
        ChannelParams::Double(p) => dig_series_order(p.alpha1(), p.alpha2()).is_some(),
        ChannelParams::Single(_) => true,
    };
    match (opts.method, series_ok) {
        (Method::Series, false) => Err(Error::SeriesInapplicable(
            "the shadowing CDF has no finite series for these shapes; use the quadrature method".into(),
        )),
        (Method::Quadrature, _) | (Method::Auto, false) => Ok((
            shadow_distribution_quadrature(base, y, &opts.line(0.01))?,
            MethodTag::Quadrature,
        )),
        (_, true) => {
            let d = match base {
                ChannelParams::Double(p) => {
                    let x = 2.0 * (p.gamma_bar() / y).sqrt();
                    let n = 2.0 * p.alpha1();
                    ShadowDistribution {
                        cdf: upper_gamma(n, x),
                        ccdf: lower_gamma(n, x),
                    }
                }
                ChannelParams::Single(_) => shadow_distribution_quadrature(base, y, &opts.line(0.01))?,
            };
            Ok((d, MethodTag::ClosedForm))
        }
    }
}

/// Density of `I_max` from the expansion terms.
fn pdf_imax_ds_series(p: &DoubleShadowParams, uavs: usize, y: f64) -> Result<f64> {
    let terms = ds_terms(p, uavs)?;
    let gb = p.gamma_bar();
    let x = 2.0 * (gb / y).sqrt();
    // K_{1/2}(x) = √(π/(2x)) e^{-x}
    let ln_k_half = 0.5 * (PI / (2.0 * x)).ln() - x;
    let ln_norm = std::f64::consts::LN_2 - ln_gamma(p.alpha1()) - ln_gamma(p.alpha2()) + ln_k_half;
    let mut sum = 0.0;
    for (c, t) in collapse_ds_terms(&terms, uavs) {
        let ln_mag = ln_norm + 0.5 * t.q * gb.ln() - (0.5 * t.q + 1.0) * y.ln() - t.i2 as f64 * x;
        sum += c * ln_mag.exp();
    }
    Ok(uavs as f64 * sum)
}

/// ln density of the shadowing factor of either model.
fn ln_pdf_i(base: &ChannelParams, ln_y: f64) -> f64 {
    match base {
        ChannelParams::Double(p) => ln_pdf_double_ig(p.alpha1(), p.alpha2(), p.gamma_bar(), ln_y),
        ChannelParams::Single(p) => ln_pdf_ig(p.alpha(), p.gamma_bar(), ln_y),
    }
}

/// `ln(L f_I(y) F_I(y)^{L-1})`.
fn ln_pdf_imax_order_stat(sel: &SelectionParams, y: f64, opts: &EvalOptions) -> Result<(f64, MethodTag)> {
    let (d, tag) = shadow_distribution(&sel.base, y, opts)?;
    let l = sel.uavs as f64;
    let extra = if sel.uavs == 1 { 0.0 } else { (l - 1.0) * d.cdf.ln() };
    Ok((l.ln() + ln_pdf_i(&sel.base, y.ln()) + extra, tag))
}

/// Density of the largest of `L` shadowing factors (DS base).
///
/// `Series` uses the term expansion; `Quadrature` uses `L f_I F_I^{L-1}`
/// with `F_I` by quadrature; `Auto` takes the series when it is exact.
pub fn pdf_imax_ds(sel: &SelectionParams, y: f64, opts: &EvalOptions) -> Result<Evaluated> {
    let ChannelParams::Double(p) = sel.base else {
        return Err(domain("pdf_imax_ds needs a DS base"));
    };
    if !(y > 0.0 && y.is_finite()) {
        return Err(domain(format!("argument must be positive and finite, got {y}")));
    }
    let use_series = match opts.method {
        Method::Series => true,
        Method::Quadrature => false,
        Method::Auto => require_ds_series(&p, sel.uavs).is_ok(),
    };
    if use_series {
        return Ok(Evaluated {
            value: pdf_imax_ds_series(&p, sel.uavs, y)?,
            method: MethodTag::ClosedForm,
        });
    }
    let (v, _) = ln_pdf_imax_order_stat(sel, y, &opts.with_method(Method::Quadrature))?;
    Ok(Evaluated {
        value: v.exp(),
        method: MethodTag::Quadrature,
    })
}

/// Density of `I_max` for either base, always via the order-statistics
/// identity with the cheapest exact `F_I`.
pub fn pdf_imax(sel: &SelectionParams, y: f64, opts: &EvalOptions) -> Result<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(domain(format!("argument must be positive and finite, got {y}")));
    }
    Ok(ln_pdf_imax_order_stat(sel, y, &opts.with_method(Method::Auto))?.0.exp())
}

/// Output-SNR density `∫ f_N(n) f_Imax(γ/n) dn/n`.
pub fn pdf_out(sel: &SelectionParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain(format!("SNR argument must be positive and finite, got {gamma}")));
    }
    if let (ChannelParams::Single(p), true) = (&sel.base, opts.method != Method::Quadrature) {
        match ss_mixture(p, sel.uavs) {
            Ok(mix) => {
                let mut total = 0.0;
                for (w, comp) in &mix {
                    total += w * pdf(&ChannelParams::Single(*comp), gamma, &opts.with_method(Method::Auto))?.value;
                }
                return Ok(Evaluated {
                    value: total,
                    method: MethodTag::ClosedForm,
                });
            }
            Err(e) if opts.method == Method::Series => return Err(e),
            Err(_) => {}
        }
    }
    let base = sel.base;
    let (m1, m2, omega) = (base.m1(), base.m2(), base.omega());
    let ln_g = gamma.ln();
    let err = RefCell::new(None);
    let h = |s: f64| {
        let y = (ln_g - s).exp();
        let imax = match ln_pdf_imax_order_stat(sel, y, opts) {
            Ok((v, _)) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                return f64::NAN;
            }
        };
        ln_pdf_double_nakagami(m1, m2, omega, s) + imax
    };
    let center = 0.5 * (mean_ln_multipath(&base) + ln_g - mean_ln_shadow(&base));
    let l = integrate_log_line(h, center, &opts.line(0.1));
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(Evaluated {
        value: l?.exp(),
        method: MethodTag::Quadrature,
    })
}

pub fn pdf_out_ds(sel: &SelectionParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    require_kind(sel, true)?;
    pdf_out(sel, gamma, opts)
}

pub fn pdf_out_ss(sel: &SelectionParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    require_kind(sel, false)?;
    pdf_out(sel, gamma, opts)
}

fn require_kind(sel: &SelectionParams, double: bool) -> Result<()> {
    match (&sel.base, double) {
        (ChannelParams::Double(_), true) | (ChannelParams::Single(_), false) => Ok(()),
        _ => Err(domain("selection base does not match the requested model")),
    }
}

/// `F_out(γ)` and `1 - F_out(γ)` with `F_out = E_N[F_I(γ/N)^L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputDistribution {
    pub cdf: f64,
    pub ccdf: f64,
    pub method: MethodTag,
}

pub fn distribution_out(sel: &SelectionParams, gamma: f64, opts: &EvalOptions) -> Result<OutputDistribution> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(domain(format!("SNR argument must be non-negative, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(OutputDistribution {
            cdf: 0.0,
            ccdf: 1.0,
            method: MethodTag::Quadrature,
        });
    }
    let base = sel.base;
    let (m1, m2, omega) = (base.m1(), base.m2(), base.omega());
    let l = sel.uavs as f64;
    let ln_g = gamma.ln();
    let err = RefCell::new(None);
    let tag = RefCell::new(MethodTag::Quadrature);
    let eval = |s: f64| -> Option<(f64, f64)> {
        let y = (ln_g - s).exp();
        match shadow_distribution(&base, y, opts) {
            Ok((d, t)) => {
                *tag.borrow_mut() = t;
                // ln F^L and ln(1 - F^L), the latter via the complement.
                let ln_f = l * d.cdf.ln();
                let ln_c = if d.cdf < 0.5 {
                    (-(ln_f.exp())).ln_1p()
                } else {
                    (-(l * (-d.ccdf).ln_1p()).exp_m1()).ln()
                };
                Some((ln_f, ln_c))
            }
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                None
            }
        }
    };
    let ln_n = |s: f64| ln_pdf_double_nakagami(m1, m2, omega, s) + s;
    let lower = |s: f64| eval(s).map(|v| v.0 + ln_n(s)).unwrap_or(f64::NAN);
    let upper = |s: f64| eval(s).map(|v| v.1 + ln_n(s)).unwrap_or(f64::NAN);
    let center = mean_ln_multipath(&base);
    let line = opts.line(0.1);
    let la = integrate_log_line(lower, center, &line);
    let lb = integrate_log_line(upper, center, &line);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let (la, lb) = (la?, lb?);
    let m = la.max(lb);
    if m == f64::NEG_INFINITY {
        return Err(Error::Eval(format!("output CDF integrals vanished at gamma = {gamma:e}")));
    }
    let (ea, eb) = ((la - m).exp(), (lb - m).exp());
    let _ = tag.into_inner();
    Ok(OutputDistribution {
        cdf: ea / (ea + eb),
        ccdf: eb / (ea + eb),
        method: MethodTag::Quadrature,
    })
}

pub fn cdf_out(sel: &SelectionParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    let d = distribution_out(sel, gamma, opts)?;
    Ok(Evaluated {
        value: d.cdf,
        method: d.method,
    })
}

pub fn cdf_out_ds(sel: &SelectionParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    require_kind(sel, true)?;
    cdf_out(sel, gamma, opts)
}

pub fn cdf_out_ss(sel: &SelectionParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    require_kind(sel, false)?;
    cdf_out(sel, gamma, opts)
}

/// Tabulated output CDF for fast evaluation at many points.
pub fn cdf_out_table(sel: &SelectionParams, opts: &EvalOptions) -> Result<CdfTable> {
    CdfTable::from_fn(
        |g| {
            let d = distribution_out(sel, g, opts)?;
            let f = pdf_out(sel, g, opts)?.value;
            Ok((d.cdf, d.ccdf, f))
        },
        mean_ln_shadow(&sel.base) + mean_ln_multipath(&sel.base) + (sel.uavs as f64).ln(),
        1e-13,
        32,
    )
}

/// SS output as a mixture: weights and the component SS parameter sets
/// (shape `p`, scale `Lγ̄`). Weights sum to one.
pub fn ss_mixture(p: &SingleShadowParams, uavs: usize) -> Result<Vec<(f64, SingleShadowParams)>> {
    let terms = ss_terms(p, uavs)?;
    let l = uavs as f64;
    terms
        .iter()
        .map(|t| {
            let w = t.b_coef * (ln_gamma(t.p) - ln_gamma(p.alpha())).exp();
            let comp = SingleShadowParams::new(p.m1(), p.m2(), t.p, l * p.gamma_bar())?.with_omega(p.omega())?;
            Ok((w, comp))
        })
        .collect()
}

/// `E[I_max]` by quadrature of the survival function `∫ (1 - F_I^L) dy`.
fn mean_imax_quadrature(sel: &SelectionParams, opts: &EvalOptions) -> Result<f64> {
    let l = sel.uavs as f64;
    let err = RefCell::new(None);
    let q_opts = opts.with_method(Method::Quadrature);
    let h = |s: f64| {
        let y = s.exp();
        match shadow_distribution(&sel.base, y, &q_opts) {
            Ok((d, _)) => {
                let ln_c = if d.cdf < 0.5 {
                    (-(l * d.cdf.ln()).exp()).ln_1p()
                } else {
                    (-(l * (-d.ccdf).ln_1p()).exp_m1()).ln()
                };
                ln_c + s
            }
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let center = mean_ln_shadow(&sel.base) + l.ln();
    let v = integrate_log_line(h, center, &opts.line(1.0));
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(v?.exp())
}

fn asnr_ds_closed_form(p: &DoubleShadowParams, uavs: usize) -> Result<f64> {
    let terms = ds_terms(p, uavs)?;
    if let Some(t) = terms.iter().find(|t| t.q <= 2.5) {
        return Err(Error::ClosedFormPole { q: t.q });
    }
    let gb = p.gamma_bar();
    let mut sum = 0.0;
    for (c, t) in collapse_ds_terms(&terms, uavs) {
        // ∫ y · 2γ̄^{q/2} y^{-q/2-1} K_{1/2}(x) e^{-i₂x} dy
        //   = γ̄ √π 2^{7/2-q} Γ(q-5/2) / (1+i₂)^{q-5/2}
        let e = t.q - 2.5;
        let ln_mag = (3.5 - t.q) * std::f64::consts::LN_2 + ln_gamma(e) - e * (1.0 + t.i2 as f64).ln();
        sum += c * ln_mag.exp();
    }
    let ln_pref = ln_gamma(p.alpha1()) + ln_gamma(p.alpha2());
    Ok(p.omega().powi(2) * uavs as f64 * gb * PI.sqrt() * sum / ln_pref.exp())
}

/// Average output SNR `Ω² E[I_max]` for a DS base.
///
/// `Auto` uses the closed form where it is exact and falls back to
/// quadrature otherwise; `Series` refuses with `SeriesInapplicable` or
/// `ClosedFormPole`.
pub fn asnr_ds(sel: &SelectionParams, opts: &EvalOptions) -> Result<Evaluated> {
    let ChannelParams::Double(p) = sel.base else {
        return Err(domain("asnr_ds needs a DS base"));
    };
    let closed = match opts.method {
        Method::Quadrature => None,
        _ => Some(asnr_ds_closed_form(&p, sel.uavs)),
    };
    match closed {
        Some(Ok(v)) => Ok(Evaluated {
            value: v,
            method: MethodTag::ClosedForm,
        }),
        Some(Err(e)) if opts.method == Method::Series => Err(e),
        _ => Ok(Evaluated {
            value: p.omega().powi(2) * mean_imax_quadrature(sel, opts)?,
            method: MethodTag::Quadrature,
        }),
    }
}

/// Average output SNR for an SS base: `Ω² (Lγ̄/Γ(α)) Σ ℬ Γ(p-1)` when `α`
/// is an integer, quadrature otherwise.
pub fn asnr_ss(sel: &SelectionParams, opts: &EvalOptions) -> Result<Evaluated> {
    let ChannelParams::Single(p) = sel.base else {
        return Err(domain("asnr_ss needs an SS base"));
    };
    let closed = match opts.method {
        Method::Quadrature => None,
        _ => Some(ss_terms(&p, sel.uavs)),
    };
    match closed {
        Some(Ok(terms)) => {
            let s: f64 = terms.iter().map(|t| t.b_coef * ln_gamma(t.p - 1.0).exp()).sum();
            let v = p.omega().powi(2) * sel.uavs as f64 * p.gamma_bar() / ln_gamma(p.alpha()).exp() * s;
            Ok(Evaluated {
                value: v,
                method: MethodTag::ClosedForm,
            })
        }
        Some(Err(e)) if opts.method == Method::Series => Err(e),
        _ => Ok(Evaluated {
            value: p.omega().powi(2) * mean_imax_quadrature(sel, opts)?,
            method: MethodTag::Quadrature,
        }),
    }
}

pub fn asnr(sel: &SelectionParams, opts: &EvalOptions) -> Result<Evaluated> {
    match sel.base {
        ChannelParams::Double(_) => asnr_ds(sel, opts),
        ChannelParams::Single(_) => asnr_ss(sel, opts),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    ShadowMax,
    SnrMax,
    Random,
}

impl Policy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::ShadowMax => "shadow_max",
            Policy::SnrMax => "snr_max",
            Policy::Random => "random",
        }
    }
}

/// Monte Carlo selection: each trial draws `L` independent links and
/// reports the output SNR under `policy`.
pub fn simulate_selection(sel: &SelectionParams, n_trials: usize, seed: impl Into<Seed>, policy: Policy) -> Result<SampleBatch> {
    if n_trials == 0 {
        return Err(domain("n_trials must be at least 1"));
    }
    let seed = seed.into();
    let link = LinkSampler::new(&sel.base)?;
    let l = sel.uavs;
    let values = rng::fill(n_trials, seed, |r| {
        let mut best_key = f64::NEG_INFINITY;
        let mut out = 0.0;
        let mut links = [(0.0, 0.0); MAX_SERIES_UAVS];
        let mut spill = Vec::new();
        #[allow(clippy::needless_range_loop)]
        for k in 0..l {
            let (n, i) = link.draw(r);
            match policy {
                Policy::ShadowMax if i > best_key => {
                    best_key = i;
                    out = n * i;
                }
                Policy::SnrMax if n * i > best_key => {
                    best_key = n * i;
                    out = n * i;
                }
                Policy::Random => {
                    if k < MAX_SERIES_UAVS {
                        links[k] = (n, i);
                    } else {
                        spill.push((n, i));
                    }
                }
                _ => {}
            }
        }
        if policy == Policy::Random {
            let k = r.random_range(0..l);
            let (n, i) = if k < MAX_SERIES_UAVS {
                links[k]
            } else {
                spill[k - MAX_SERIES_UAVS]
            };
            out = n * i;
        }
        out
    });
    Ok(SampleBatch::new(
        BatchSource::Selection {
            channel: sel.base,
            uavs: l,
            policy: policy.as_str().to_string(),
        },
        seed,
        values,
    ))
}

/// Monte Carlo draws of `I_max` alone.
pub fn simulate_shadow_max(sel: &SelectionParams, n: usize, seed: impl Into<Seed>) -> Result<Vec<f64>> {
    let link = LinkSampler::new(&sel.base)?;
    let l = sel.uavs;
    Ok(rng::fill(n, seed.into(), |r| {
        (0..l).map(|_| link.draw(r).1).fold(f64::NEG_INFINITY, f64::max)
    }))
}

/// Outage of the selection output versus threshold (dB) for several `L`.
pub fn op_table(
    base: &ChannelParams,
    uavs: &[usize],
    thresholds_db: &[f64],
    opts: &EvalOptions,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let sels: Vec<SelectionParams> = uavs.iter().map(|&l| SelectionParams::new(*base, l)).collect::<Result<_>>()?;
    thresholds_db
        .par_iter()
        .map(|&db| {
            let g = crate::analytics::db_to_linear(db);
            let row = sels.iter().map(|s| Ok(cdf_out(s, g, opts)?.value)).collect::<Result<Vec<_>>>()?;
            Ok((db, row))
        })
        .collect()
}

/// Writes `threshold_db,op_L1,op_L2,...`.
pub fn write_op_table<W: Write>(mut w: W, uavs: &[usize], rows: &[(f64, Vec<f64>)]) -> Result<()> {
    write!(w, "threshold_db")?;
    for l in uavs {
        write!(w, ",op_L{l}")?;
    }
    writeln!(w)?;
    for (db, row) in rows {
        write!(w, "{db}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// ASNR in dB versus γ̄ in dB for several `L`.
pub fn asnr_table(
    base: &ChannelParams,
    uavs: &[usize],
    gamma_bar_db: &[f64],
    opts: &EvalOptions,
) -> Result<Vec<(f64, Vec<f64>)>> {
    gamma_bar_db
        .iter()
        .map(|&db| {
            let b = base.with_gamma_bar(crate::analytics::db_to_linear(db))?;
            let row = uavs
                .iter()
                .map(|&l| Ok(crate::analytics::linear_to_db(asnr(&SelectionParams::new(b, l)?, opts)?.value)))
                .collect::<Result<Vec<_>>>()?;
            Ok((db, row))
        })
        .collect()
}

/// Writes `gamma_bar_db,asnr_db` for one `L`, or one `asnr_db_L{L}` column
/// per `L`.
pub fn write_asnr_table<W: Write>(mut w: W, uavs: &[usize], rows: &[(f64, Vec<f64>)]) -> Result<()> {
    write!(w, "gamma_bar_db")?;
    if uavs.len() == 1 {
        write!(w, ",asnr_db")?;
    } else {
        for l in uavs {
            write!(w, ",asnr_db_L{l}")?;
        }
    }
    writeln!(w)?;
    for (db, row) in rows {
        write!(w, "{db}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{cdf, db_to_linear};

    fn ds(a1: f64, a2: f64) -> DoubleShadowParams {
        DoubleShadowParams::new(1.5, 1.8, a1, a2, 1.0).unwrap()
    }

    #[test]
    fn compositions_count() {
        // C(total + parts - 1, parts - 1)
        assert_eq!(compositions(3, 4).len(), 20);
        assert_eq!(compositions(0, 5).len(), 1);
        assert!(compositions(2, 3).iter().all(|v| v.iter().sum::<u32>() == 2));
    }

    #[test]
    fn series_order_gate() {
        assert_eq!(dig_series_order(2.0, 2.5), Some(4));
        assert_eq!(dig_series_order(2.5, 3.0), Some(5));
        assert_eq!(dig_series_order(2.5, 2.5), None);
        assert_eq!(dig_series_order(2.2, 2.7), None);
        let sel = SelectionParams::new(ds(2.5, 2.5), 2).unwrap();
        let e = pdf_imax_ds(&sel, 1.0, &EvalOptions::default().with_method(Method::Series));
        assert!(matches!(e, Err(Error::SeriesInapplicable(_))));
    }

    #[test]
    fn dig_series_cdf_matches_quadrature() {
        let line = LineOptions {
            rel_tol: 1e-13,
            ..LineOptions::default()
        };
        for n in 2..=10u32 {
            let a1 = n as f64 / 2.0;
            let a2 = a1 + 0.5;
            for y in [0.01, 0.1, 0.5, 1.0, 3.0, 20.0] {
                let s = dig_cdf_series(a1, a2, 1.3, y).unwrap();
                let q = dig_distribution_quadrature(a1, a2, 1.3, y, &line).unwrap();
                assert!((s - q.cdf).abs() < 1e-10, "n={n} y={y} {s} {}", q.cdf);
            }
        }
    }

    #[test]
    fn ds_series_matches_order_statistics() {
        for (a1, a2) in [(2.0, 2.5), (2.5, 3.0), (1.5, 2.0)] {
            for l in [1, 2, 3, 5] {
                let sel = SelectionParams::new(ds(a1, a2), l).unwrap();
                for y in [0.02, 0.1, 0.4, 1.0, 3.0, 30.0] {
                    let s = pdf_imax_ds(&sel, y, &EvalOptions::default().with_method(Method::Series)).unwrap();
                    let q = pdf_imax_ds(&sel, y, &EvalOptions::default().with_method(Method::Quadrature)).unwrap();
                    assert!(((s.value - q.value) / q.value).abs() < 1e-6, "{a1} {a2} L={l} y={y} {s:?} {q:?}");
                }
            }
        }
    }

    #[test]
    fn single_uav_reduces_to_shadow_density() {
        let p = ds(2.0, 2.5);
        let sel = SelectionParams::new(p, 1).unwrap();
        for y in [0.05, 0.3, 2.0] {
            let v = pdf_imax_ds(&sel, y, &EvalOptions::default()).unwrap().value;
            let want = ln_pdf_double_ig(2.0, 2.5, 1.0, f64::ln(y)).exp();
            assert!(((v - want) / want).abs() < 1e-12);
        }
    }

    #[test]
    fn imax_normalizes() {
        for (base, l) in [
            (ChannelParams::from(ds(2.0, 2.5)), 3),
            (ChannelParams::from(ds(2.2, 2.3)), 2),
            (SingleShadowParams::new(1.0, 2.0, 3.0, 1.0).unwrap().into(), 4),
        ] {
            let sel = SelectionParams::new(base, l).unwrap();
            let o = EvalOptions::default();
            let h = |s: f64| pdf_imax(&sel, s.exp(), &o).unwrap().ln() + s;
            let total = integrate_log_line(h, 0.0, &LineOptions::default()).unwrap().exp();
            assert!((total - 1.0).abs() < 1e-6, "{total}");
        }
    }

    #[test]
    fn single_uav_output_matches_channel() {
        let o = EvalOptions::default();
        for base in [
            ChannelParams::from(ds(2.0, 2.5)),
            ChannelParams::from(ds(2.3, 2.4)),
            SingleShadowParams::new(1.5, 1.8, 2.5, 1.0).unwrap().into(),
        ] {
            let sel = SelectionParams::new(base, 1).unwrap();
            for g in [0.01, 0.2, 1.0, 8.0] {
                let a = cdf_out(&sel, g, &o).unwrap().value;
                let b = cdf(&base, g, &o).unwrap().value;
                assert!((a - b).abs() < 1e-9 * b.max(1e-3), "{g} {a} {b}");
                let a = pdf_out(&sel, g, &o).unwrap().value;
                let b = pdf(&base, g, &o).unwrap().value;
                assert!(((a - b) / b).abs() < 1e-8, "{g} {a} {b}");
            }
        }
    }

    #[test]
    fn output_cdf_decreases_with_l() {
        let o = EvalOptions::default();
        let base: ChannelParams = ds(2.0, 2.5).into();
        for g in [0.05, 0.5, 2.0] {
            let mut prev = 1.0;
            for l in [1, 2, 3, 5] {
                let v = cdf_out(&SelectionParams::new(base, l).unwrap(), g, &o).unwrap().value;
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn output_density_integrates_to_cdf() {
        let o = EvalOptions::default();
        for base in [
            ChannelParams::from(ds(2.0, 2.5)),
            SingleShadowParams::new(1.5, 1.8, 3.0, 1.0).unwrap().into(),
        ] {
            let sel = SelectionParams::new(base, 3).unwrap();
            let g = 0.7;
            let h = g * 1e-4;
            let d = (cdf_out(&sel, g + h, &o).unwrap().value - cdf_out(&sel, g - h, &o).unwrap().value) / (2.0 * h);
            let f = pdf_out(&sel, g, &o).unwrap().value;
            assert!(((d - f) / f).abs() < 1e-5, "{d} {f}");
        }
    }

    #[test]
    fn ss_mixture_weights_sum_to_one_and_match_quadrature() {
        let p = SingleShadowParams::new(1.5, 1.8, 3.0, 1.0).unwrap();
        for l in 1..=5 {
            let mix = ss_mixture(&p, l).unwrap();
            let s: f64 = mix.iter().map(|m| m.0).sum();
            assert!((s - 1.0).abs() < 1e-12, "L={l} {s}");
            let sel = SelectionParams::new(p, l).unwrap();
            for g in [0.05, 1.0, 10.0] {
                let a = pdf_out(&sel, g, &EvalOptions::default()).unwrap();
                let b = pdf_out(&sel, g, &EvalOptions::default().with_method(Method::Quadrature)).unwrap();
                assert_eq!(a.method, MethodTag::ClosedForm);
                assert!(((a.value - b.value) / b.value).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn asnr_closed_forms_match_quadrature() {
        let o = EvalOptions::default();
        for (a1, a2) in [(2.0, 2.5), (1.5, 2.0), (3.0, 3.5)] {
            for l in [1, 2, 3, 5] {
                let sel = SelectionParams::new(ds(a1, a2), l).unwrap();
                let c = asnr_ds(&sel, &o).unwrap();
                let q = asnr_ds(&sel, &o.with_method(Method::Quadrature)).unwrap();
                assert_eq!(c.method, MethodTag::ClosedForm);
                assert!(((c.value - q.value) / q.value).abs() < 1e-7, "{a1} L={l} {c:?} {q:?}");
            }
        }
        for a in [2.0, 3.0, 5.0] {
            for l in [1, 2, 3, 5] {
                let sel = SelectionParams::new(SingleShadowParams::new(1.0, 2.0, a, 2.0).unwrap(), l).unwrap();
                let c = asnr_ss(&sel, &o).unwrap();
                let q = asnr_ss(&sel, &o.with_method(Method::Quadrature)).unwrap();
                assert!(((c.value - q.value) / q.value).abs() < 1e-7, "{a} L={l} {c:?} {q:?}");
            }
        }
    }

    #[test]
    fn asnr_single_uav_is_channel_mean() {
        let o = EvalOptions::default();
        let p = DoubleShadowParams::new(1.0, 1.0, 3.0, 3.5, 4.0).unwrap();
        let v = asnr_ds(&SelectionParams::new(p, 1).unwrap(), &o).unwrap().value;
        assert!((v - p.mean()).abs() < 1e-12 * v);
        let s = SingleShadowParams::new(1.0, 1.0, 3.0, 4.0).unwrap();
        let v = asnr_ss(&SelectionParams::new(s, 1).unwrap(), &o).unwrap().value;
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn asnr_ignores_multipath_shapes() {
        let o = EvalOptions::default();
        let base = asnr_ds(&SelectionParams::new(ds(2.0, 2.5), 3).unwrap(), &o).unwrap().value;
        for m1 in [0.5, 1.0, 4.0] {
            for m2 in [0.7, 2.0, 9.0] {
                let p = DoubleShadowParams::new(m1, m2, 2.0, 2.5, 1.0).unwrap();
                let v = asnr_ds(&SelectionParams::new(p, 3).unwrap(), &o).unwrap().value;
                assert_eq!(v, base);
            }
        }
    }

    #[test]
    fn asnr_falls_back_off_the_series_lattice() {
        let o = EvalOptions::default();
        let sel = SelectionParams::new(ds(2.2, 2.9), 2).unwrap();
        assert_eq!(asnr_ds(&sel, &o).unwrap().method, MethodTag::Quadrature);
        assert!(asnr_ds(&sel, &o.with_method(Method::Series)).is_err());
        let sel = SelectionParams::new(SingleShadowParams::new(1.0, 1.0, 2.5, 1.0).unwrap(), 2).unwrap();
        assert_eq!(asnr_ss(&sel, &o).unwrap().method, MethodTag::Quadrature);
    }

    #[test]
    fn simulate_policies_order_and_degenerate() {
        let sel = SelectionParams::new(ds(2.5, 3.0), 3).unwrap();
        let n = 200_000;
        let m = |p| simulate_selection(&sel, n, 11, p).unwrap().mean();
        let (sh, sn, rd) = (m(Policy::ShadowMax), m(Policy::SnrMax), m(Policy::Random));
        assert!(sh <= sn && sh >= rd, "{sh} {sn} {rd}");
        let one = SelectionParams::new(ds(2.5, 3.0), 1).unwrap();
        let a = simulate_selection(&one, 1000, 3, Policy::ShadowMax).unwrap();
        let b = simulate_selection(&one, 1000, 3, Policy::SnrMax).unwrap();
        assert_eq!(a.values, b.values);
        assert!(simulate_selection(&one, 0, 3, Policy::Random).is_err());
    }

    #[test]
    fn random_policy_handles_many_uavs() {
        let sel = SelectionParams::new(ds(2.5, 3.0), 12).unwrap();
        let b = simulate_selection(&sel, 100, 1, Policy::Random).unwrap();
        assert!(b.values.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn tables_have_expected_layout() {
        let base: ChannelParams = ds(2.0, 2.5).into();
        let o = EvalOptions::default();
        let rows = op_table(&base, &[1, 2], &[-5.0, 0.0], &o).unwrap();
        assert!(rows.iter().all(|(_, r)| r[1] < r[0]));
        let mut buf = Vec::new();
        write_op_table(&mut buf, &[1, 2], &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("threshold_db,op_L1,op_L2\n-5,"));
        let rows = asnr_table(&base, &[2], &[0.0, 10.0], &o).unwrap();
        assert!((rows[1].1[0] - rows[0].1[0] - 10.0).abs() < 1e-9);
        let mut buf = Vec::new();
        write_asnr_table(&mut buf, &[2], &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("gamma_bar_db,asnr_db\n"));
        let _ = db_to_linear(0.0);
    }

    #[test]
    fn zero_uavs_rejected() {
        assert!(SelectionParams::new(ds(2.0, 2.5), 0).is_err());
    }
}
