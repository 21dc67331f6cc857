//! Densities, distribution functions and link metrics for the DS and SS
//! composite channels.
//!
//! Each quantity has two independent numerical routes so that they can be
//! checked against each other:
//!
//! * PDF: a finite hypergeometric reduction (Gauss ₂F̃₁ for DS, Tricomi U for
//!   SS), or the mixing integral `∫ f_N(γ/x) f_I(x) dx/x` over the
//!   double-Nakagami and shadowing densities, both Bessel-K kernels.
//! * CDF: write `γ = c·U·V` with `U = G₁/X₁` beta-prime distributed, so that
//!   `F(γ) = E_V[I_{u/(1+u)}(m₁, α₁)]` with `u = γ/(cV)`. The same integral
//!   with the complementary incomplete beta gives the CCDF, and the two are
//!   normalised against each other so both tails keep full relative
//!   precision. [`cdf_from_pdf`] integrates the PDF instead.
//! * BEP and capacity: the CDF-weighted integrals, or the PDF-weighted ones.

use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ChannelParams, DoubleShadowParams, ModelKind, SingleShadowParams};
use crate::quad::{integrate_log_line, integrate_with_breaks, LineOptions, QuadOptions};
use crate::special::{
    beta_reg, digamma, erfc, ln_bessel_k_at_log, ln_beta, ln_gamma, ln_hyp2f1_regularized, ln_tricomi_u,
};

/// The Gauss series for the DS density is used only while the argument
/// `1 - 1/(γ̃γ)` stays within this radius.
pub const DS_SERIES_RADIUS: f64 = 0.8;

/// Kronrod nodes per adaptive interval.
const NODES_PER_INTERVAL: usize = 15;

/// Which numerical route to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Auto,
    Series,
    Quadrature,
}

/// Which route actually produced a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::ClosedForm => "closed-form",
            MethodTag::Quadrature => "quadrature",
            MethodTag::MonteCarlo => "monte-carlo",
        }
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub method: MethodTag,
}

/// A named scalar result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub method: MethodTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_quad_nodes: usize,
    pub method: Method,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_quad_nodes: 60_000,
            method: Method::Auto,
        }
    }
}

impl EvalOptions {
    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) || !(self.abs_tol >= 0.0) {
            return Err(domain(format!(
                "tolerances must satisfy 0 < rel_tol < 1 and abs_tol >= 0, got {} and {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_quad_nodes < 10 * NODES_PER_INTERVAL {
            return Err(domain(format!("max_quad_nodes {} is too small", self.max_quad_nodes)));
        }
        Ok(())
    }

    /// Options for an inner integral whose error must stay well below the
    /// outer tolerance.
    pub(crate) fn line(&self, tighten: f64) -> LineOptions {
        LineOptions {
            rel_tol: (self.rel_tol * tighten).max(1e-14),
            max_intervals: (self.max_quad_nodes / NODES_PER_INTERVAL).max(10),
            ..LineOptions::default()
        }
    }

    pub(crate) fn quad(&self, tighten: f64) -> QuadOptions {
        QuadOptions {
            rel_tol: (self.rel_tol * tighten).max(1e-14),
            abs_tol: self.abs_tol * tighten,
            max_intervals: (self.max_quad_nodes / NODES_PER_INTERVAL).max(10),
        }
    }
}

/// Normalisation constants of the reduced closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    pub kind: ModelKind,
    /// ln S₁ (DS) or ln S₂ (SS); kept in log form because the gamma
    /// functions overflow for large shapes.
    pub ln_s: f64,
    /// γ̃ = m₁m₂ / (Ω²γ̄).
    pub gamma_tilde: f64,
}

impl ModelConstants {
    pub fn new(params: &ChannelParams) -> Self {
        let ln_s = match params {
            ChannelParams::Double(p) => {
                -(ln_gamma(p.m1()) + ln_gamma(p.m2()) + ln_gamma(p.alpha1()) + ln_gamma(p.alpha2()))
            }
            ChannelParams::Single(p) => -(ln_gamma(p.m1()) + ln_gamma(p.m2()) + ln_gamma(p.alpha())),
        };
        Self {
            kind: params.kind(),
            ln_s,
            gamma_tilde: 1.0 / params.snr_scale(),
        }
    }

    /// S₁ = 1/(Γ(m₁)Γ(m₂)Γ(α₁)Γ(α₂)), DS only.
    pub fn s1(&self) -> Option<f64> {
        (self.kind == ModelKind::Double).then(|| self.ln_s.exp())
    }

    /// S₂ = 1/(Γ(m₁)Γ(m₂)Γ(α)), SS only.
    pub fn s2(&self) -> Option<f64> {
        (self.kind == ModelKind::Single).then(|| self.ln_s.exp())
    }
}

fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// 1/(1+e^{-w}) without overflow.
fn logistic(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

/// ln of the density of `N = N₁²N₂²` (product of two Nakagami powers) at
/// `y = e^{ln_y}`.
pub fn ln_pdf_double_nakagami(m1: f64, m2: f64, omega: f64, ln_y: f64) -> f64 {
    let ln_k = (m1 * m2).ln() - 2.0 * omega.ln();
    let ln_ky = ln_k + ln_y;
    LN_2 + ln_k + (0.5 * (m1 + m2) - 1.0) * ln_ky + ln_bessel_k_at_log(m2 - m1, LN_2 + 0.5 * ln_ky)
        - ln_gamma(m1)
        - ln_gamma(m2)
}

/// ln of the density of `I = γ̄/(X₁X₂)`, `X_j ~ Gamma(α_j, 1)`, at `e^{ln_y}`.
pub fn ln_pdf_double_ig(a1: f64, a2: f64, gamma_bar: f64, ln_y: f64) -> f64 {
    let ln_gb = gamma_bar.ln();
    let h = 0.5 * (a1 + a2);
    LN_2 + h * ln_gb - ln_gamma(a1) - ln_gamma(a2) - (h + 1.0) * ln_y
        + ln_bessel_k_at_log(a2 - a1, LN_2 + 0.5 * (ln_gb - ln_y))
}

/// ln of the inverse-gamma density with shape `a` and scale `γ̄` at `e^{ln_y}`.
pub fn ln_pdf_ig(a: f64, gamma_bar: f64, ln_y: f64) -> f64 {
    let ln_gb = gamma_bar.ln();
    a * ln_gb - ln_gamma(a) - (a + 1.0) * ln_y - (ln_gb - ln_y).exp()
}

/// ln of the shadowing-factor density of either model.
pub fn ln_pdf_shadow(params: &ChannelParams, ln_y: f64) -> f64 {
    match params {
        ChannelParams::Double(p) => ln_pdf_double_ig(p.alpha1(), p.alpha2(), p.gamma_bar(), ln_y),
        ChannelParams::Single(p) => ln_pdf_ig(p.alpha(), p.gamma_bar(), ln_y),
    }
}

/// E[ln I] for the shadowing factor.
pub fn mean_ln_shadow(params: &ChannelParams) -> f64 {
    match params {
        ChannelParams::Double(p) => p.gamma_bar().ln() - digamma(p.alpha1()) - digamma(p.alpha2()),
        ChannelParams::Single(p) => p.gamma_bar().ln() - digamma(p.alpha()),
    }
}

/// E[ln N] for the multipath factor.
pub fn mean_ln_multipath(params: &ChannelParams) -> f64 {
    let (m1, m2) = (params.m1(), params.m2());
    2.0 * params.omega().ln() - (m1 * m2).ln() + digamma(m1) + digamma(m2)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("SNR argument must be positive and finite, got {gamma}")))
    }
}

/// ln f(γ) for the DS model through the Gauss-series reduction, or `None`
/// when `|1 - 1/(γ̃γ)|` exceeds [`DS_SERIES_RADIUS`].
pub fn ln_pdf_ds_series(p: &DoubleShadowParams, gamma: f64) -> Option<f64> {
    let c = ModelConstants::new(&ChannelParams::Double(*p));
    let z = c.gamma_tilde * gamma;
    let arg = 1.0 - 1.0 / z;
    if !(arg.abs() <= DS_SERIES_RADIUS) {
        return None;
    }
    let (m1, m2, a1, a2) = (p.m1(), p.m2(), p.alpha1(), p.alpha2());
    let f = ln_hyp2f1_regularized(m1 + a2, m2 + a2, a1 + a2 + m1 + m2, arg)?;
    Some(
        ln_gamma(m1 + a2) + ln_gamma(m2 + a2) + ln_gamma(m1 + a1) + ln_gamma(m2 + a1) + c.ln_s + f
            - (a2 + 1.0) * gamma.ln()
            - a2 * c.gamma_tilde.ln(),
    )
}

/// ln f(γ) for the SS model through the Tricomi-U reduction.
pub fn ln_pdf_ss_series(p: &SingleShadowParams, gamma: f64) -> Option<f64> {
    let c = ModelConstants::new(&ChannelParams::Single(*p));
    let (m1, m2, a) = (p.m1(), p.m2(), p.alpha());
    let z = c.gamma_tilde * gamma;
    let u = ln_tricomi_u(a + m1, 1.0 + m1 - m2, z)?;
    Some(ln_gamma(a + m1) + ln_gamma(a + m2) + c.ln_s + m1 * c.gamma_tilde.ln() + (m1 - 1.0) * gamma.ln() + u)
}

/// ln f(γ) from the mixing integral over the shadowing factor.
pub fn ln_pdf_quadrature(params: &ChannelParams, gamma: f64, opts: &EvalOptions) -> Result<f64> {
    check_gamma(gamma)?;
    let (m1, m2, omega) = (params.m1(), params.m2(), params.omega());
    let ln_g = gamma.ln();
    // s = ln x where x is the shadowing value.
    let h = |s: f64| ln_pdf_double_nakagami(m1, m2, omega, ln_g - s) + ln_pdf_shadow(params, s);
    let center = 0.5 * (mean_ln_shadow(params) + ln_g - mean_ln_multipath(params));
    Ok(integrate_log_line(h, center, &opts.line(0.01))?)
}

/// ln f(γ), choosing the route per `opts.method`.
pub fn ln_pdf(params: &ChannelParams, gamma: f64, opts: &EvalOptions) -> Result<(f64, MethodTag)> {
    check_gamma(gamma)?;
    let series = |method: Method| -> Result<Option<f64>> {
        let v = match params {
            ChannelParams::Double(p) => ln_pdf_ds_series(p, gamma),
            ChannelParams::Single(p) => ln_pdf_ss_series(p, gamma),
        };
        if v.is_none() && method == Method::Series {
            return Err(Error::SeriesInapplicable(format!(
                "the {} density reduction does not converge at gamma = {gamma:e}; use the quadrature method",
                params.kind()
            )));
        }
        Ok(v)
    };
    match opts.method {
        Method::Quadrature => Ok((ln_pdf_quadrature(params, gamma, opts)?, MethodTag::Quadrature)),
        m => match series(m)? {
            Some(v) => Ok((v, MethodTag::ClosedForm)),
            None => Ok((ln_pdf_quadrature(params, gamma, opts)?, MethodTag::Quadrature)),
        },
    }
}

pub fn pdf(params: &ChannelParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    let (v, method) = ln_pdf(params, gamma, opts)?;
    Ok(Evaluated { value: v.exp(), method })
}

pub fn pdf_ds(params: &DoubleShadowParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    pdf(&ChannelParams::Double(*params), gamma, opts)
}

pub fn pdf_ss(params: &SingleShadowParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    pdf(&ChannelParams::Single(*params), gamma, opts)
}

/// `F(γ)` and `1 - F(γ)`, each to full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub cdf: f64,
    pub ccdf: f64,
}

/// The factorisation `γ = c·U·V` with `U ~ BP(m₁, α₁)` used by the CDF route.
struct Factored {
    ln_c: f64,
    m: f64,
    a: f64,
    second: Second,
}

enum Second {
    BetaPrime { m: f64, a: f64, ln_b: f64 },
    Gamma { m: f64, ln_g: f64 },
}

impl Factored {
    fn new(params: &ChannelParams) -> Self {
        let ln_c = params.snr_scale().ln();
        match params {
            ChannelParams::Double(p) => Self {
                ln_c,
                m: p.m1(),
                a: p.alpha1(),
                second: Second::BetaPrime {
                    m: p.m2(),
                    a: p.alpha2(),
                    ln_b: ln_beta(p.m2(), p.alpha2()),
                },
            },
            ChannelParams::Single(p) => Self {
                ln_c,
                m: p.m1(),
                a: p.alpha(),
                second: Second::Gamma {
                    m: p.m2(),
                    ln_g: ln_gamma(p.m2()),
                },
            },
        }
    }

    /// ln of the density of ln V at s.
    fn ln_weight(&self, s: f64) -> f64 {
        match self.second {
            Second::BetaPrime { m, a, ln_b } => m * s - (m + a) * softplus(s) - ln_b,
            Second::Gamma { m, ln_g } => m * s - s.exp() - ln_g,
        }
    }

    fn center(&self) -> f64 {
        match self.second {
            Second::BetaPrime { m, a, .. } => digamma(m) - digamma(a),
            Second::Gamma { m, .. } => digamma(m),
        }
    }

    fn distribution(&self, gamma: f64, line: &LineOptions) -> Result<Distribution> {
        let ln_t = gamma.ln() - self.ln_c;
        let lower = |s: f64| {
            let x = logistic(ln_t - s);
            beta_reg(self.m, self.a, x).ln() + self.ln_weight(s)
        };
        let upper = |s: f64| {
            let x = logistic(s - ln_t);
            beta_reg(self.a, self.m, x).ln() + self.ln_weight(s)
        };
        let center = self.center();
        let la = integrate_log_line(lower, center, line)?;
        let lb = integrate_log_line(upper, center, line)?;
        if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
            return Err(Error::Eval(format!("distribution integrals vanished at gamma = {gamma:e}")));
        }
        let m = la.max(lb);
        let (ea, eb) = ((la - m).exp(), (lb - m).exp());
        Ok(Distribution {
            cdf: ea / (ea + eb),
            ccdf: eb / (ea + eb),
        })
    }
}

/// `F(γ)` and `1 - F(γ)` by the conditional incomplete-beta route.
pub fn distribution(params: &ChannelParams, gamma: f64, opts: &EvalOptions) -> Result<Distribution> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(domain(format!("SNR argument must be non-negative, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(Distribution { cdf: 0.0, ccdf: 1.0 });
    }
    if gamma.is_infinite() {
        return Ok(Distribution { cdf: 1.0, ccdf: 0.0 });
    }
    if opts.method == Method::Series {
        return Err(Error::SeriesInapplicable(
            "the distribution function has no finite series; use the quadrature method".into(),
        ));
    }
    Factored::new(params).distribution(gamma, &opts.line(0.1))
}

pub fn cdf(params: &ChannelParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    Ok(Evaluated {
        value: distribution(params, gamma, opts)?.cdf,
        method: MethodTag::Quadrature,
    })
}

pub fn ccdf(params: &ChannelParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    Ok(Evaluated {
        value: distribution(params, gamma, opts)?.ccdf,
        method: MethodTag::Quadrature,
    })
}

pub fn cdf_ds(params: &DoubleShadowParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    cdf(&ChannelParams::Double(*params), gamma, opts)
}

pub fn cdf_ss(params: &SingleShadowParams, gamma: f64, opts: &EvalOptions) -> Result<Evaluated> {
    cdf(&ChannelParams::Single(*params), gamma, opts)
}

/// Outage probability `P(γ < γ_T)`.
pub fn outage(params: &ChannelParams, threshold: f64, opts: &EvalOptions) -> Result<Evaluated> {
    cdf(params, threshold, opts)
}

/// ln ∫_{-∞}^{upper} e^{h(s)} ds (or over [lower, ∞) when `upper_tail`).
fn integrate_log_half_line<H: Fn(f64) -> f64>(h: H, edge: f64, upper_tail: bool, line: &LineOptions) -> Result<f64> {
    let dir = if upper_tail { 1.0 } else { -1.0 };
    let mut max = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    let mut s = edge;
    let mut step = 0.25;
    let mut n = 0usize;
    loop {
        let v = h(s);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        max = max.max(v);
        if n > 0 && v < max - line.drop && v <= prev {
            break;
        }
        prev = v;
        n += 1;
        if n > 80 {
            step *= 1.15;
        }
        s += dir * step;
        if (s - edge).abs() > line.max_reach {
            break;
        }
    }
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let (lo, hi) = if upper_tail { (edge, s) } else { (s, edge) };
    let pieces = ((hi - lo) / 2.0).ceil().clamp(4.0, 400.0) as usize;
    let breaks: Vec<f64> = (1..pieces).map(|i| lo + (hi - lo) * i as f64 / pieces as f64).collect();
    let q = integrate_with_breaks(
        |s| {
            let v = h(s);
            if v.is_nan() {
                0.0
            } else {
                (v - max).exp()
            }
        },
        lo,
        hi,
        &breaks,
        &QuadOptions {
            rel_tol: line.rel_tol,
            abs_tol: 0.0,
            max_intervals: line.max_intervals.max(pieces + 1),
        },
    )?;
    Ok(q.value.ln() + max)
}

/// `F(γ)` by integrating the density (independent of [`distribution`]).
/// Integrates whichever tail is lighter and complements it.
pub fn cdf_from_pdf(params: &ChannelParams, gamma: f64, opts: &EvalOptions) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    check_gamma(gamma)?;
    let pdf_opts = opts.with_method(Method::Auto);
    let err = RefCell::new(None);
    let h = |s: f64| match ln_pdf(params, s.exp(), &pdf_opts) {
        Ok((v, _)) => v + s,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let ln_g = gamma.ln();
    let typical = mean_ln_shadow(params) + mean_ln_multipath(params);
    let upper = ln_g > typical;
    let l = integrate_log_half_line(h, ln_g, upper, &opts.line(0.1))?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let tail = l.exp();
    Ok(if upper { 1.0 - tail } else { tail })
}

fn first_error<T>(slot: &RefCell<Option<Error>>, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            slot.borrow_mut().get_or_insert(e);
            None
        }
    }
}

/// BPSK bit-error probability averaged over the channel, from the CDF:
/// `(1/(2√π)) ∫ F(γ) γ^{-1/2} e^{-γ} dγ = (1/√π) ∫ F(u²) e^{-u²} du`.
pub fn bep_bpsk(params: &ChannelParams, opts: &EvalOptions) -> Result<Evaluated> {
    opts.validate()?;
    let inner = EvalOptions {
        rel_tol: opts.rel_tol * 0.01,
        method: Method::Quadrature,
        ..*opts
    };
    let err = RefCell::new(None);
    let f = |u: f64| {
        first_error(&err, distribution(params, u * u, &inner))
            .map(|d| d.cdf * (-u * u).exp())
            .unwrap_or(f64::NAN)
    };
    let breaks = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
    let q = integrate_with_breaks(f, 0.0, 9.0, &breaks, &opts.quad(1.0));
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(Evaluated {
        value: q?.value / PI.sqrt(),
        method: MethodTag::Quadrature,
    })
}

/// BPSK bit-error probability from the density: `∫ ½ erfc(√γ) f(γ) dγ`.
pub fn bep_bpsk_from_pdf(params: &ChannelParams, opts: &EvalOptions) -> Result<f64> {
    opts.validate()?;
    let inner = opts.with_method(Method::Auto);
    let err = RefCell::new(None);
    let h = |s: f64| {
        let g = s.exp();
        let w = (0.5 * erfc(g.sqrt())).ln();
        if w == f64::NEG_INFINITY {
            return w;
        }
        first_error(&err, ln_pdf(params, g, &inner))
            .map(|(v, _)| v + s + w)
            .unwrap_or(f64::NAN)
    };
    let center = mean_ln_shadow(params) + mean_ln_multipath(params);
    let l = integrate_log_line(h, center.min(0.0), &opts.line(1.0));
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(l?.exp())
}

/// Ergodic capacity `BW ∫ log₂(1+γ) f(γ) dγ`, evaluated through the CCDF as
/// `(BW/ln 2) ∫ (1 - F(γ))/(1+γ) dγ`. With `bandwidth = 1` this is the
/// normalised capacity in bit/s/Hz.
pub fn capacity(params: &ChannelParams, bandwidth: f64, opts: &EvalOptions) -> Result<Evaluated> {
    opts.validate()?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let inner = EvalOptions {
        rel_tol: opts.rel_tol * 0.01,
        method: Method::Quadrature,
        ..*opts
    };
    let err = RefCell::new(None);
    let h = |s: f64| {
        first_error(&err, distribution(params, s.exp(), &inner))
            .map(|d| d.ccdf.ln() + s - softplus(s))
            .unwrap_or(f64::NAN)
    };
    let center = mean_ln_shadow(params) + mean_ln_multipath(params);
    let l = integrate_log_line(h, center, &opts.line(1.0));
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(Evaluated {
        value: bandwidth * l?.exp() / LN_2,
        method: MethodTag::Quadrature,
    })
}

/// Normalised capacity from the density: `∫ log₂(1+γ) f(γ) dγ`.
pub fn capacity_from_pdf(params: &ChannelParams, opts: &EvalOptions) -> Result<f64> {
    opts.validate()?;
    let inner = opts.with_method(Method::Auto);
    let err = RefCell::new(None);
    let h = |s: f64| {
        first_error(&err, ln_pdf(params, s.exp(), &inner))
            .map(|(v, _)| v + s + softplus(s).ln())
            .unwrap_or(f64::NAN)
    };
    let center = mean_ln_shadow(params) + mean_ln_multipath(params);
    let l = integrate_log_line(h, center, &opts.line(1.0));
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(l?.exp() / LN_2)
}

/// Tabulated CDF on a uniform grid in ln γ with cubic Hermite
/// interpolation, for evaluating the CDF at very many points (K-S
/// statistics, histogram bin masses). Interpolation error is far below
/// Monte Carlo resolution.
#[derive(Debug, Clone)]
pub struct CdfTable {
    s0: f64,
    h: f64,
    cdf: Vec<f64>,
    /// dF/ds = γ f(γ).
    slope: Vec<f64>,
}

impl CdfTable {
    /// Builds a table from a function returning `(F(γ), 1 - F(γ), f(γ))`.
    /// The grid spans from where `F < tail` to where `1 - F < tail`,
    /// searched outward from `ln_center`.
    pub fn from_fn<F>(eval: F, ln_center: f64, tail: f64, per_unit: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<(f64, f64, f64)> + Sync,
    {
        let mut lo = ln_center;
        let mut steps = 0;
        while eval(lo.exp())?.0 > tail {
            lo -= 2.0;
            steps += 1;
            if steps > 400 {
                return Err(Error::Eval("lower tail of the distribution not found".into()));
            }
        }
        let mut hi = ln_center;
        steps = 0;
        while eval(hi.exp())?.1 > tail {
            hi += 2.0;
            steps += 1;
            if steps > 400 {
                return Err(Error::Eval("upper tail of the distribution not found".into()));
            }
        }
        let n = (((hi - lo) * per_unit as f64).ceil() as usize).max(8);
        let h = (hi - lo) / n as f64;
        let nodes: Vec<(f64, f64)> = (0..=n)
            .into_par_iter()
            .map(|i| {
                let s = lo + h * i as f64;
                let g = s.exp();
                let (c, _, f) = eval(g)?;
                Ok((c, g * f))
            })
            .collect::<Result<_>>()?;
        let (cdf, slope) = nodes.into_iter().unzip();
        Ok(Self { s0: lo, h, cdf, slope })
    }

    /// Table for a channel with the default resolution (32 nodes per unit
    /// of ln γ, tails cut at 1e-13).
    pub fn for_channel(params: &ChannelParams, opts: &EvalOptions) -> Result<Self> {
        let pdf_opts = opts.with_method(Method::Auto);
        let cdf_opts = opts.with_method(Method::Quadrature);
        Self::from_fn(
            |g| {
                let d = distribution(params, g, &cdf_opts)?;
                let f = pdf(params, g, &pdf_opts)?.value;
                Ok((d.cdf, d.ccdf, f))
            },
            mean_ln_shadow(params) + mean_ln_multipath(params),
            1e-13,
            32,
        )
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        if gamma.is_nan() {
            return f64::NAN;
        }
        if gamma <= 0.0 {
            return 0.0;
        }
        let t = (gamma.ln() - self.s0) / self.h;
        let last = self.cdf.len() - 1;
        if t <= 0.0 {
            return self.cdf[0];
        }
        if t >= last as f64 {
            return self.cdf[last];
        }
        let i = (t.floor() as usize).min(last - 1);
        let u = t - i as f64;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.slope[i] * self.h, self.slope[i + 1] * self.h);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * d1;
        v.clamp(y0.min(y1), y0.max(y1))
    }
}

/// One row of a point sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub value: f64,
    pub method: MethodTag,
}

/// Which function a point sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointFunction {
    Pdf,
    Cdf,
}

/// Evaluates the PDF or CDF at each linear SNR in `xs`, in parallel.
pub fn point_sweep(
    params: &ChannelParams,
    function: PointFunction,
    xs: &[f64],
    opts: &EvalOptions,
) -> Result<Vec<SweepRow>> {
    xs.par_iter()
        .map(|&x| {
            let e = match function {
                PointFunction::Pdf => pdf(params, x, opts)?,
                PointFunction::Cdf => cdf(params, x, opts)?,
            };
            Ok(SweepRow {
                x,
                value: e.value,
                method: e.method,
            })
        })
        .collect()
}

/// Writes `x_header,value_header,method` rows; `x_of` maps the stored
/// linear abscissa to the printed one (e.g. to dB).
pub fn write_point_sweep<W: Write>(
    mut w: W,
    x_header: &str,
    value_header: &str,
    rows: &[SweepRow],
    x_of: impl Fn(f64) -> f64,
) -> Result<()> {
    writeln!(w, "{x_header},{value_header},method")?;
    for r in rows {
        writeln!(w, "{},{},{}", x_of(r.x), r.value, r.method)?;
    }
    Ok(())
}

/// Link metric evaluated over an average-SNR sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMetric {
    Bep,
    Capacity,
}

/// Evaluates a metric for each γ̄ (given in dB), replacing the γ̄ in
/// `params`.
pub fn metric_sweep(
    params: &ChannelParams,
    metric: LinkMetric,
    gamma_bar_db: &[f64],
    opts: &EvalOptions,
) -> Result<Vec<(f64, Evaluated)>> {
    gamma_bar_db
        .par_iter()
        .map(|&db| {
            let p = params.with_gamma_bar(db_to_linear(db))?;
            let v = match metric {
                LinkMetric::Bep => bep_bpsk(&p, opts)?,
                LinkMetric::Capacity => capacity(&p, 1.0, opts)?,
            };
            Ok((db, v))
        })
        .collect()
}

/// Writes `gamma_bar_db,value_header,method` rows.
pub fn write_metric_sweep<W: Write>(mut w: W, value_header: &str, rows: &[(f64, Evaluated)]) -> Result<()> {
    writeln!(w, "gamma_bar_db,{value_header},method")?;
    for (db, v) in rows {
        writeln!(w, "{db},{},{}", v.value, v.method)?;
    }
    Ok(())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
