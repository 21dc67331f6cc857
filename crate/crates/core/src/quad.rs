//! Adaptive Gauss-Kronrod quadrature.
//!
//! Two entry points: [`integrate`] for a finite interval, and
//! [`integrate_log_line`] for positive integrands over the whole real line
//! given in log form. The second is what the composite-density mixing
//! integrals use after the substitution x = e^s.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: estimate {estimate:e} with error {abs_err:e} after {intervals} intervals")]
    NotConverged {
        estimate: f64,
        abs_err: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One 15-point Kronrod panel with the embedded 7-point Gauss estimate.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite(center));
    }
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        if !f1.is_finite() {
            return Err(QuadError::NonFinite(center - x));
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite(center + x));
        }
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over [a, b] with the panel boundaries `breaks` (sorted,
/// strictly inside (a, b)) as the initial partition.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<Quad, QuadError> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut lo = a;
    for &x in breaks.iter().chain(std::iter::once(&b)) {
        if x <= lo {
            continue;
        }
        let (value, err) = gk15(&f, lo, x)?;
        total += value;
        total_err += err;
        heap.push(Panel { a: lo, b: x, value, err });
        lo = x;
    }
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            return Ok(Quad {
                value: total,
                abs_err: total_err,
                intervals: heap.len(),
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(QuadError::NotConverged {
                estimate: total,
                abs_err: total_err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            return Err(QuadError::NotConverged {
                estimate: total,
                abs_err: total_err,
                intervals: heap.len() + 1,
            });
        }
        let (v1, e1) = gk15(&f, worst.a, mid)?;
        let (v2, e2) = gk15(&f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
}

/// Integrates `f` over the finite interval [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Quad, QuadError> {
    integrate_with_breaks(f, a, b, &[], opts)
}

#[derive(Debug, Clone, Copy)]
pub struct LineOptions {
    pub rel_tol: f64,
    /// Support is truncated where the log-integrand is this far below its
    /// maximum.
    pub drop: f64,
    /// Initial scan step in s.
    pub step: f64,
    /// Hard limit on |s - center| during support discovery.
    pub max_reach: f64,
    pub max_intervals: usize,
}

impl Default for LineOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            drop: 46.0,
            step: 0.25,
            max_reach: 2500.0,
            max_intervals: 4000,
        }
    }
}

/// Located support of a positive integrand given by its logarithm.
#[derive(Debug, Clone, Copy)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
    pub argmax: f64,
    pub max: f64,
}

/// Scans outward from `center` until the log-integrand has dropped `drop`
/// below the running maximum on both sides. Returns `None` when the
/// integrand is zero everywhere the scan reached.
pub fn find_support<H: Fn(f64) -> f64>(h: &H, center: f64, opts: &LineOptions) -> Option<Support> {
    let mut max = f64::NEG_INFINITY;
    let mut argmax = center;
    let mut argmax_step = opts.step;
    let h0 = sanitize(h(center));
    if h0 > max {
        max = h0;
        argmax = center;
    }
    let mut ends = [center, center];
    for (dir_idx, dir) in [1.0f64, -1.0].into_iter().enumerate() {
        let mut s = center;
        let mut prev = h0;
        let mut step = opts.step;
        let mut n = 0usize;
        loop {
            n += 1;
            if n > 80 {
                step *= 1.15;
            }
            s += dir * step;
            if (s - center).abs() > opts.max_reach {
                break;
            }
            let v = sanitize(h(s));
            if v > max {
                max = v;
                argmax = s;
                argmax_step = step;
            }
            if v < max - opts.drop && v <= prev {
                break;
            }
            prev = v;
        }
        ends[dir_idx] = s;
    }
    if max == f64::NEG_INFINITY {
        return None;
    }
    // The scan only brackets the mode to within one step. Sharp peaks can
    // rise far above the sampled maximum, so refine by golden section.
    let (argmax, max) = refine_max(h, argmax - argmax_step, argmax + argmax_step, argmax, max);
    Some(Support {
        lo: ends[1],
        hi: ends[0],
        argmax,
        max,
    })
}

fn refine_max<H: Fn(f64) -> f64>(h: &H, mut a: f64, mut b: f64, best_s: f64, best: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut best_s, mut best) = (best_s, best);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sanitize(h(c));
    let mut fd = sanitize(h(d));
    for _ in 0..80 {
        if fc > best {
            best = fc;
            best_s = c;
        }
        if fd > best {
            best = fd;
            best_s = d;
        }
        if (b - a).abs() < 1e-12 * (1.0 + best_s.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sanitize(h(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sanitize(h(d));
        }
    }
    (best_s, best)
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// ln ∫_{-∞}^{∞} exp(h(s)) ds for a (roughly unimodal) log-integrand `h`.
/// `center` should sit near the bulk of the mass. Returns -∞ for an
/// identically zero integrand.
pub fn integrate_log_line<H: Fn(f64) -> f64>(h: H, center: f64, opts: &LineOptions) -> Result<f64, QuadError> {
    let Some(sup) = find_support(&h, center, opts) else {
        return Ok(f64::NEG_INFINITY);
    };
    let shifted = |s: f64| {
        let v = h(s);
        if v.is_nan() || v == f64::NEG_INFINITY {
            0.0
        } else {
            (v - sup.max).exp()
        }
    };
    // Initial panels of width <= 2 around the mode help the error estimator
    // see narrow peaks.
    let width = sup.hi - sup.lo;
    let pieces = (width / 2.0).ceil().clamp(4.0, 400.0) as usize;
    let mut breaks: Vec<f64> = (1..pieces)
        .map(|i| sup.lo + width * i as f64 / pieces as f64)
        .collect();
    if sup.argmax > sup.lo && sup.argmax < sup.hi {
        breaks.push(sup.argmax);
        breaks.sort_by(f64::total_cmp);
    }
    let q = integrate_with_breaks(
        shifted,
        sup.lo,
        sup.hi,
        &breaks,
        &QuadOptions {
            rel_tol: opts.rel_tol,
            abs_tol: 0.0,
            max_intervals: opts.max_intervals.max(pieces + 1),
        },
    )?;
    Ok(q.value.ln() + sup.max)
}
