//! Method-of-moments fitting and goodness-of-fit scoring.
//!
//! The fit matches log-moments of fractional order, both negative and
//! positive, inside the range where the sample moments have finite variance.
//! That range is read off Hill estimates of the two tail indices. Shapes are
//! parametrized as `bound + e^p` so every candidate has finite model moments
//! at every order used, and the scale enters as `ln γ̄`. The least-squares
//! problem is solved by Levenberg-Marquardt from several starts.

use std::io::Write;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{CdfTable, EvalOptions};
use crate::error::{domain, Error, Result};
use crate::model::{ChannelParams, DoubleShadowParams, SingleShadowParams};
use crate::special::{digamma, ln_gamma};

/// Positive samples of linear power or SNR, optionally weighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl EmpiricalSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(domain("empirical sample is empty"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(domain(format!("sample values must be finite and positive, got {v}")));
        }
        Ok(Self { values, weights: None })
    }

    pub fn with_weights(self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.values.len() {
            return Err(Error::LengthMismatch(format!(
                "{} weights for {} values",
                weights.len(),
                self.values.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(domain("weights must be finite, non-negative and not all zero"));
        }
        Ok(Self { weights: Some(weights), ..self })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    /// Kish effective sample size; equals `len()` when unweighted.
    pub fn effective_len(&self) -> f64 {
        match &self.weights {
            None => self.values.len() as f64,
            Some(w) => {
                let s: f64 = w.iter().sum();
                let s2: f64 = w.iter().map(|x| x * x).sum();
                s * s / s2
            }
        }
    }

    /// Hex SHA-256 over the little-endian bytes of values then weights.
    pub fn sha256(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        if let Some(w) = &self.weights {
            for v in w {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// (value, weight) pairs sorted by value, weights normalized to sum 1.
    fn sorted(&self) -> Vec<(f64, f64)> {
        let total: f64 = (0..self.len()).map(|i| self.weight(i)).sum();
        let mut v: Vec<(f64, f64)> = (0..self.len()).map(|i| (self.values[i], self.weight(i) / total)).collect();
        v.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    /// ln of the weighted mean of `x^k`, computed around the log-mean so
    /// heavy tails do not overflow.
    fn ln_moment(&self, k: f64, ln_center: f64) -> f64 {
        let total: f64 = (0..self.len()).map(|i| self.weight(i)).sum();
        let s: f64 = (0..self.len())
            .into_par_iter()
            .map(|i| self.weight(i) * (k * (self.values[i].ln() - ln_center)).exp())
            .sum();
        (s / total).ln() + k * ln_center
    }

    fn mean_ln(&self) -> f64 {
        let total: f64 = (0..self.len()).map(|i| self.weight(i)).sum();
        (0..self.len()).map(|i| self.weight(i) * self.values[i].ln()).sum::<f64>() / total
    }
}

/// Columns accepted as the value column of a sample CSV, in priority order.
const VALUE_COLUMNS: [&str; 3] = ["snr_linear", "power_linear", "value"];

/// Parses a sample CSV: `#` comment lines, a header with one of the value
/// columns `snr_linear`, `power_linear` or `value`, and an optional
/// `weight` column.
pub fn parse_sample_csv(text: &str) -> Result<EmpiricalSample> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse(format!("sample header: {e}")))?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let col = VALUE_COLUMNS.iter().find_map(|c| find(c)).ok_or_else(|| {
        Error::Parse(format!("sample header needs one of the columns {}", VALUE_COLUMNS.join(", ")))
    })?;
    let wcol = find("weight");
    let mut values = Vec::new();
    let mut weights = Vec::new();
    let number = |row: usize, field: Option<&str>| -> Result<f64> {
        let f = field.unwrap_or("");
        f.parse().map_err(|_| Error::Parse(format!("sample row {row}: `{f}` is not a number")))
    };
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("sample row {}: {e}", row + 1)))?;
        values.push(number(row + 1, rec.get(col))?);
        if let Some(w) = wcol {
            weights.push(number(row + 1, rec.get(w))?);
        }
    }
    let sample = EmpiricalSample::new(values).map_err(as_parse)?;
    match wcol {
        Some(_) => sample.with_weights(weights).map_err(as_parse),
        None => Ok(sample),
    }
}

fn as_parse(e: Error) -> Error {
    match e {
        Error::Domain(m) | Error::LengthMismatch(m) => Error::Parse(m),
        other => other,
    }
}

/// Which model a fit targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    /// Double inverse-gamma shadowing (DS model).
    #[serde(rename = "DIG")]
    Dig,
    /// Single inverse-gamma shadowing (SS model).
    #[serde(rename = "SIG")]
    Sig,
}

impl ModelTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Dig => "DIG",
            ModelTag::Sig => "SIG",
        }
    }

    fn shadow_count(&self) -> usize {
        match self {
            ModelTag::Dig => 2,
            ModelTag::Sig => 1,
        }
    }
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dig" | "ds" => Ok(ModelTag::Dig),
            "sig" | "ss" => Ok(ModelTag::Sig),
            _ => Err(domain(format!("unknown model `{s}` (expected DIG or SIG)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Explicit moment orders. When `None` they are chosen from the tail
    /// index estimates.
    pub orders: Option<Vec<f64>>,
    /// Fraction of each tail index spanned by the automatic orders.
    pub order_span: f64,
    pub tolerance: f64,
    pub patience: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { orders: None, order_span: 0.45, tolerance: 1e-12, patience: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ChannelParams,
    pub model_tag: ModelTag,
    pub converged: bool,
    /// Per-order mismatch `(ln M̂(k) - ln M(k)) / |k|` at the solution.
    pub residuals: Vec<f64>,
    pub orders: Vec<f64>,
    /// Residual evaluations summed over all starts.
    pub iterations: usize,
    pub sample_size: usize,
    pub sample_sha256: String,
}

impl FitResult {
    pub fn residual_norm(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Hill estimate of the tail index from the largest values of `sorted`
/// (ascending, weights summing to 1), using the top `fraction` of mass.
fn hill(sorted: &[(f64, f64)], fraction: f64) -> Option<f64> {
    let mut mass = 0.0;
    let mut acc = 0.0;
    let mut idx = sorted.len();
    while idx > 1 && mass < fraction {
        idx -= 1;
        mass += sorted[idx].1;
        acc += sorted[idx].1 * sorted[idx].0.ln();
    }
    let threshold = sorted[idx - 1].0.ln();
    let mean_excess = acc / mass - threshold;
    (mean_excess > 0.0).then(|| 1.0 / mean_excess)
}

/// Tail-index estimates `(lower, upper)`: the density behaves like
/// `γ^{lower-1}` near zero and `γ^{-upper-1}` at infinity.
pub fn tail_indices(sample: &EmpiricalSample) -> Result<(f64, f64)> {
    let sorted = sample.sorted();
    let n = sample.effective_len();
    if n < 100.0 {
        return Err(Error::MomentOutOfRange(format!(
            "tail indices need at least 100 effective samples, got {n:.0}"
        )));
    }
    let fraction = (n.powf(0.6) / n).min(0.1);
    let upper = hill(&sorted, fraction);
    let inverted: Vec<(f64, f64)> = sorted.iter().rev().map(|&(v, w)| (1.0 / v, w)).collect();
    let lower = hill(&inverted, fraction);
    match (lower, upper) {
        (Some(l), Some(u)) => Ok((l, u)),
        _ => Err(Error::MomentOutOfRange("sample tails are degenerate".into())),
    }
}

/// Default moment orders: four negative and four positive, evenly spaced
/// up to `span` times the estimated lower and upper tail indices.
pub fn default_orders(lower: f64, upper: f64, span: f64) -> Vec<f64> {
    let mut k: Vec<f64> = (1..=4).rev().map(|j| -span * lower * j as f64 / 4.0).collect();
    k.extend((1..=4).map(|j| span * upper * j as f64 / 4.0));
    k
}

struct MomentProblem {
    tag: ModelTag,
    orders: Vec<f64>,
    target: Vec<f64>,
    /// Lower bounds for m (shared) and α (shared) that keep every model
    /// moment finite.
    m_floor: f64,
    a_floor: f64,
    p: DVector<f64>,
}

impl MomentProblem {
    /// Parameter layout: [ln γ̄, p_m1, p_m2, p_α1, (p_α2)].
    fn shapes(&self, p: &DVector<f64>) -> (f64, [f64; 2], Vec<f64>) {
        let m = [self.m_floor + p[1].exp(), self.m_floor + p[2].exp()];
        let a = (0..self.tag.shadow_count()).map(|j| self.a_floor + p[3 + j].exp()).collect();
        (p[0], m, a)
    }

    fn model_ln_moment(ln_gbar: f64, m: &[f64; 2], a: &[f64], k: f64) -> f64 {
        let mut v = k * (ln_gbar - m[0].ln() - m[1].ln());
        for mi in m {
            v += ln_gamma(mi + k) - ln_gamma(*mi);
        }
        for ai in a {
            v += ln_gamma(ai - k) - ln_gamma(*ai);
        }
        v
    }

    fn residual_vec(&self, p: &DVector<f64>) -> DVector<f64> {
        let (g, m, a) = self.shapes(p);
        DVector::from_iterator(
            self.orders.len(),
            self.orders
                .iter()
                .zip(&self.target)
                .map(|(&k, &t)| (t - Self::model_ln_moment(g, &m, &a, k)) / k.abs()),
        )
    }

    fn to_params(&self) -> Result<ChannelParams> {
        let (g, m, a) = self.shapes(&self.p);
        let gbar = g.exp();
        match self.tag {
            ModelTag::Dig => Ok(DoubleShadowParams::new(m[0], m[1], a[0], a[1], gbar)?.into()),
            ModelTag::Sig => Ok(SingleShadowParams::new(m[0], m[1], a[0], gbar)?.into()),
        }
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for MomentProblem {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.residual_vec(&self.p);
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let (_, m, a) = self.shapes(&self.p);
        let cols = self.p.len();
        let mut j = DMatrix::zeros(self.orders.len(), cols);
        for (row, &k) in self.orders.iter().enumerate() {
            let s = -1.0 / k.abs();
            j[(row, 0)] = s * k;
            for i in 0..2 {
                let d = -k / m[i] + digamma(m[i] + k) - digamma(m[i]);
                j[(row, 1 + i)] = s * d * (m[i] - self.m_floor);
            }
            for (i, ai) in a.iter().enumerate() {
                let d = digamma(ai - k) - digamma(*ai);
                j[(row, 3 + i)] = s * d * (ai - self.a_floor);
            }
        }
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

/// Starting shapes `(m1, m2, α1, α2)`; asymmetric so the solver does not
/// start on the swap-symmetric ridge.
const STARTS: [(f64, f64, f64, f64); 9] = [
    (0.8, 1.3, 2.0, 3.0),
    (0.8, 1.3, 4.0, 6.0),
    (0.8, 1.3, 8.0, 12.0),
    (1.6, 2.6, 2.0, 3.0),
    (1.6, 2.6, 4.0, 6.0),
    (1.6, 2.6, 8.0, 12.0),
    (3.2, 5.2, 2.0, 3.0),
    (3.2, 5.2, 4.0, 6.0),
    (3.2, 5.2, 8.0, 12.0),
];

/// Fits the DIG or SIG model by matching fractional log-moments.
pub fn fit_moments(sample: &EmpiricalSample, tag: ModelTag, opts: &FitOptions) -> Result<FitResult> {
    let orders = match &opts.orders {
        Some(k) => k.clone(),
        None => {
            let (lower, upper) = tail_indices(sample)?;
            if upper <= 1.0 {
                return Err(Error::MomentOutOfRange(format!(
                    "upper tail index {upper:.3} implies an infinite mean; shadowing shapes must exceed 1"
                )));
            }
            default_orders(lower, upper, opts.order_span)
        }
    };
    let free = 2 + tag.shadow_count() + 1;
    if orders.len() < free {
        return Err(domain(format!("{} moment orders cannot determine {free} parameters", orders.len())));
    }
    if orders.iter().any(|k| *k == 0.0 || !k.is_finite()) {
        return Err(domain("moment orders must be finite and nonzero"));
    }
    let mean_ln = sample.mean_ln();
    let target: Vec<f64> = orders.iter().map(|&k| sample.ln_moment(k, mean_ln)).collect();
    if target.iter().any(|t| !t.is_finite()) {
        return Err(Error::MomentOutOfRange("an empirical moment is not finite".into()));
    }
    let k_min = orders.iter().cloned().fold(0.0, f64::min);
    let k_max = orders.iter().cloned().fold(0.0, f64::max);
    let m_floor = (-k_min).max(0.0) + 1e-9;
    let a_floor = k_max.max(1.0) + 1e-9;

    let lm = LevenbergMarquardt::new()
        .with_ftol(opts.tolerance)
        .with_xtol(opts.tolerance)
        .with_gtol(opts.tolerance)
        .with_patience(opts.patience);

    let runs: Vec<(MomentProblem, f64, bool, usize)> = STARTS
        .par_iter()
        .filter_map(|&(m1, m2, a1, a2)| {
            let m = [m1.max(m_floor * 1.5), m2.max(m_floor * 1.5 + 0.5)];
            let a = [a1.max(a_floor * 1.5), a2.max(a_floor * 1.5 + 0.5)];
            let shapes = &a[..tag.shadow_count()];
            // Match E[ln γ] to place the start's scale; this makes the fit
            // equivariant under rescaling of the sample.
            let mut ln_gbar = mean_ln + m[0].ln() + m[1].ln() - digamma(m[0]) - digamma(m[1]);
            for ai in shapes {
                ln_gbar += digamma(*ai);
            }
            let mut p = vec![ln_gbar, (m[0] - m_floor).ln(), (m[1] - m_floor).ln()];
            p.extend(shapes.iter().map(|ai| (ai - a_floor).ln()));
            let problem = MomentProblem {
                tag,
                orders: orders.clone(),
                target: target.clone(),
                m_floor,
                a_floor,
                p: DVector::from_vec(p),
            };
            let (problem, report) = lm.minimize(problem);
            let obj = report.objective_function;
            obj.is_finite()
                .then_some((problem, obj, report.termination.was_successful(), report.number_of_evaluations))
        })
        .collect();
    let iterations: usize = runs.iter().map(|r| r.3).sum();
    let (best, _, converged, _) = runs
        .into_iter()
        .filter(|r| r.0.to_params().is_ok())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::FitDiverged("no starting point produced finite moments".into()))?;
    let residuals = best.residual_vec(&best.p).iter().cloned().collect();
    Ok(FitResult {
        params: best.to_params()?,
        model_tag: tag,
        converged,
        residuals,
        orders,
        iterations,
        sample_size: sample.len(),
        sample_sha256: sample.sha256(),
    })
}

/// Histogram specification for the K-L divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    /// Number of equal-probability bins, placed at sample quantiles.
    pub count: usize,
    /// Floor applied to every bin probability.
    pub floor: f64,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self { count: 100, floor: 1e-12 }
    }
}

/// Symmetrized K-L divergence `½(Σ p ln(p/q) + Σ q ln(q/p))` between two
/// binned distributions, each entry floored at `floor`.
pub fn symmetric_kl(p: &[f64], q: &[f64], floor: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(format!("{} vs {} bins", p.len(), q.len())));
    }
    if p.is_empty() {
        return Err(Error::Binning("empty histogram".into()));
    }
    let d: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let (a, b) = (a.max(floor), b.max(floor));
            (a - b) * (a / b).ln()
        })
        .sum();
    Ok(0.5 * d)
}

/// Interior bin edges at weighted sample quantiles, deduplicated. Returns
/// the edges together with the empirical mass of each of the
/// `edges.len() + 1` bins.
fn quantile_bins(sorted: &[(f64, f64)], count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if count < 2 {
        return Err(Error::Binning(format!("need at least 2 bins, got {count}")));
    }
    let mut edges = Vec::with_capacity(count - 1);
    let mut cum = 0.0;
    let mut j = 1;
    for &(v, w) in sorted {
        cum += w;
        while j < count && cum >= j as f64 / count as f64 - 1e-12 {
            if edges.last() != Some(&v) {
                edges.push(v);
            }
            j += 1;
        }
    }
    // Drop a terminal edge equal to the sample maximum so the last bin is
    // not empty by construction.
    if edges.last() == sorted.last().map(|s| &s.0) {
        edges.pop();
    }
    if edges.is_empty() {
        return Err(Error::Binning("sample has no spread; every bin edge coincides".into()));
    }
    let mut mass = vec![0.0; edges.len() + 1];
    let mut b = 0;
    for &(v, w) in sorted {
        while b < edges.len() && v > edges[b] {
            b += 1;
        }
        mass[b] += w;
    }
    Ok((edges, mass))
}

/// d_KL between the binned sample and a model CDF. Bins are
/// `(0, e₁], (e₁, e₂], …, (e_{B-1}, ∞)`.
pub fn kl_divergence_with<F: Fn(f64) -> f64>(sample: &EmpiricalSample, cdf: F, bins: &BinSpec) -> Result<f64> {
    let sorted = sample.sorted();
    let (edges, p) = quantile_bins(&sorted, bins.count)?;
    let f: Vec<f64> = edges.iter().map(|&e| cdf(e)).collect();
    let mut q = Vec::with_capacity(p.len());
    let mut prev = 0.0;
    for fe in &f {
        q.push((fe - prev).max(0.0));
        prev = *fe;
    }
    q.push((1.0 - prev).max(0.0));
    symmetric_kl(&p, &q, bins.floor)
}

pub fn kl_divergence(
    sample: &EmpiricalSample,
    params: &ChannelParams,
    bins: &BinSpec,
    opts: &EvalOptions,
) -> Result<f64> {
    let table = CdfTable::for_channel(params, opts)?;
    kl_divergence_with(sample, |g| table.eval(g), bins)
}

/// K-S critical coefficient `c(conf) = sqrt(-½ ln((1-conf)/2))`;
/// 1.358 at 95%.
pub fn ks_critical(confidence: f64) -> f64 {
    (-0.5 * ((1.0 - confidence) / 2.0).ln()).sqrt()
}

/// `sup |F_e - F|` over the sample points, checking both sides of every
/// ECDF jump.
pub fn ks_statistic_with<F: Fn(f64) -> f64>(sample: &EmpiricalSample, cdf: F) -> f64 {
    ks_sorted(&sample.sorted(), &cdf)
}

fn ks_sorted<F: Fn(f64) -> f64>(sorted: &[(f64, f64)], cdf: &F) -> f64 {
    let mut d: f64 = 0.0;
    let mut below = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        let mut at = below;
        while i < sorted.len() && sorted[i].0 == v {
            at += sorted[i].1;
            i += 1;
        }
        let f = cdf(v);
        d = d.max((f - below).abs()).max((at.min(1.0) - f).abs());
        below = at;
    }
    d.min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// One-sample K-S test. With fitted parameters the naive critical value
/// is conservative; it is reported as is.
pub fn ks_test_with<F: Fn(f64) -> f64>(sample: &EmpiricalSample, cdf: F, confidence: f64) -> Result<KsOutcome> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(domain(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let n = sample.effective_len();
    if n < 30.0 {
        return Err(domain(format!("K-S test needs at least 30 samples, got {n:.0}")));
    }
    let statistic = ks_statistic_with(sample, cdf);
    let threshold = ks_critical(confidence) / n.sqrt();
    Ok(KsOutcome { statistic, threshold, pass: statistic < threshold })
}

pub fn ks_test(
    sample: &EmpiricalSample,
    params: &ChannelParams,
    confidence: f64,
    opts: &EvalOptions,
) -> Result<KsOutcome> {
    let table = CdfTable::for_channel(params, opts)?;
    ks_test_with(sample, |g| table.eval(g), confidence)
}

/// A model competing in the goodness-of-fit table.
pub struct Candidate {
    pub name: String,
    pub params: Option<ChannelParams>,
    cdf: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Candidate {
    pub fn from_params(name: impl Into<String>, params: &ChannelParams, opts: &EvalOptions) -> Result<Self> {
        let table = CdfTable::for_channel(params, opts)?;
        Ok(Self { name: name.into(), params: Some(*params), cdf: Box::new(move |g| table.eval(g)) })
    }

    pub fn from_fit(fit: &FitResult, opts: &EvalOptions) -> Result<Self> {
        Self::from_params(fit.model_tag.as_str(), &fit.params, opts)
    }

    /// An externally supplied CDF, e.g. a competing model fitted elsewhere.
    pub fn external(name: impl Into<String>, cdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), params: None, cdf: Box::new(cdf) }
    }

    pub fn cdf(&self, gamma: f64) -> f64 {
        (self.cdf)(gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofOptions {
    pub bins: BinSpec,
    pub confidence: f64,
    /// Chunk length for the K-S pass rate. `None` picks 1000 when the
    /// sample has at least 2000 points and tests the whole sample once
    /// otherwise.
    pub chunk: Option<usize>,
}

impl Default for GofOptions {
    fn default() -> Self {
        Self { bins: BinSpec::default(), confidence: 0.95, chunk: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ChannelParams>,
    /// Symmetrized K-L divergence (fraction, not percent).
    pub kl: f64,
    /// K-S statistic over the whole sample.
    pub ks: f64,
    /// Whole-sample K-S verdict.
    pub ks_pass: bool,
    /// Fraction of disjoint chunks passing the K-S test.
    pub ks_pass_rate: f64,
    pub chunk: usize,
    pub bins: BinSpec,
    pub n: usize,
}

/// Scores each candidate against the sample and ranks by K-L ascending.
pub fn gof_table(sample: &EmpiricalSample, candidates: &[Candidate], opts: &GofOptions) -> Result<Vec<GofReport>> {
    if candidates.is_empty() {
        return Err(domain("goodness-of-fit table needs at least one candidate"));
    }
    let n = sample.len();
    let chunk = opts.chunk.unwrap_or(if n >= 2000 { 1000 } else { n });
    if chunk < 30 {
        return Err(domain(format!("K-S chunk of {chunk} samples is below the 30-sample minimum")));
    }
    let mut rows = Vec::with_capacity(candidates.len());
    for c in candidates {
        let kl = kl_divergence_with(sample, |g| c.cdf(g), &opts.bins)?;
        let whole = ks_test_with(sample, |g| c.cdf(g), opts.confidence)?;
        let chunks: Vec<EmpiricalSample> = sample
            .values
            .chunks(chunk)
            .enumerate()
            .filter(|(_, v)| v.len() == chunk)
            .map(|(i, v)| {
                let s = EmpiricalSample { values: v.to_vec(), weights: None };
                match &sample.weights {
                    Some(w) => s.with_weights(w[i * chunk..(i + 1) * chunk].to_vec()),
                    None => Ok(s),
                }
            })
            .collect::<Result<_>>()?;
        let passed = chunks
            .par_iter()
            .map(|s| ks_test_with(s, |g| c.cdf(g), opts.confidence).map(|o| o.pass as usize))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        rows.push(GofReport {
            model: c.name.clone(),
            params: c.params,
            kl,
            ks: whole.statistic,
            ks_pass: whole.pass,
            ks_pass_rate: passed as f64 / chunks.len().max(1) as f64,
            chunk,
            bins: opts.bins,
            n,
        });
    }
    rows.sort_by(|a, b| a.kl.total_cmp(&b.kl));
    Ok(rows)
}

/// Writes the table with percent columns: `model,kl_percent,ks_pass_percent,ks_statistic`.
pub fn write_gof_csv<W: Write>(mut w: W, rows: &[GofReport]) -> Result<()> {
    writeln!(w, "model,kl_percent,ks_pass_percent,ks_statistic")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.model, 100.0 * r.kl, 100.0 * r.ks_pass_rate, r.ks)?;
    }
    Ok(())
}

pub fn gof_json(rows: &[GofReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}
