//! Channel parameter sets, exact samplers and analytic moments.
//!
//! The double-shadowing (DS) SNR is `γ = N₁² I₁ · N₂² I₂` with `N_j²` gamma
//! distributed (Nakagami-m power, shape `m_j`, mean `Ω`) and `I_j` inverse
//! gamma (shape `α_j`). The two inverse-gamma scales only enter through their
//! product, which is the single average-SNR scale `γ̄`. The single-shadowing
//! (SS) variant keeps one inverse-gamma factor.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{self, Seed};
use crate::special::ln_gamma;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be a positive finite number, got {v}")))
    }
}

fn check_shadow_shape(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 1.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "{name} must exceed 1 (the inverse-gamma mean diverges otherwise), got {v}"
        )))
    }
}

/// Unvalidated DS parameters as they arrive from users or files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawDoubleShadow {
    pub m1: f64,
    pub m2: f64,
    #[serde(default = "unit")]
    pub omega: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub gamma_bar: f64,
}

/// Unvalidated SS parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawSingleShadow {
    pub m1: f64,
    pub m2: f64,
    #[serde(default = "unit")]
    pub omega: f64,
    pub alpha: f64,
    pub gamma_bar: f64,
}

fn unit() -> f64 {
    1.0
}

/// Validated double-shadowing parameters in canonical order
/// (`m1 <= m2`, `alpha1 <= alpha2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDoubleShadow", into = "RawDoubleShadow")]
pub struct DoubleShadowParams {
    m1: f64,
    m2: f64,
    omega: f64,
    alpha1: f64,
    alpha2: f64,
    gamma_bar: f64,
}

impl DoubleShadowParams {
    /// Builds and validates a parameter set with `Ω = 1`.
    pub fn new(m1: f64, m2: f64, alpha1: f64, alpha2: f64, gamma_bar: f64) -> Result<Self> {
        RawDoubleShadow {
            m1,
            m2,
            omega: 1.0,
            alpha1,
            alpha2,
            gamma_bar,
        }
        .validate()
    }

    pub fn with_omega(self, omega: f64) -> Result<Self> {
        RawDoubleShadow { omega, ..self.into() }.validate()
    }

    pub fn with_gamma_bar(self, gamma_bar: f64) -> Result<Self> {
        RawDoubleShadow { gamma_bar, ..self.into() }.validate()
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }
    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }
    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }

    /// Multiplier turning a product of unit-scale gamma / inverse-gamma
    /// variates into the SNR: `Ω² γ̄ / (m₁ m₂)`.
    pub fn snr_scale(&self) -> f64 {
        self.omega * self.omega * self.gamma_bar / (self.m1 * self.m2)
    }

    /// `E[γ] = Ω² γ̄ / ((α₁-1)(α₂-1))`.
    pub fn mean(&self) -> f64 {
        self.omega * self.omega * self.gamma_bar / ((self.alpha1 - 1.0) * (self.alpha2 - 1.0))
    }
}

impl RawDoubleShadow {
    pub fn validate(self) -> Result<DoubleShadowParams> {
        check_positive("m1", self.m1)?;
        check_positive("m2", self.m2)?;
        check_positive("omega", self.omega)?;
        check_shadow_shape("alpha1", self.alpha1)?;
        check_shadow_shape("alpha2", self.alpha2)?;
        check_positive("gamma_bar", self.gamma_bar)?;
        Ok(DoubleShadowParams {
            m1: self.m1.min(self.m2),
            m2: self.m1.max(self.m2),
            omega: self.omega,
            alpha1: self.alpha1.min(self.alpha2),
            alpha2: self.alpha1.max(self.alpha2),
            gamma_bar: self.gamma_bar,
        })
    }
}

impl TryFrom<RawDoubleShadow> for DoubleShadowParams {
    type Error = Error;
    fn try_from(raw: RawDoubleShadow) -> Result<Self> {
        raw.validate()
    }
}

impl From<DoubleShadowParams> for RawDoubleShadow {
    fn from(p: DoubleShadowParams) -> Self {
        RawDoubleShadow {
            m1: p.m1,
            m2: p.m2,
            omega: p.omega,
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            gamma_bar: p.gamma_bar,
        }
    }
}

/// Validated single-shadowing parameters (`m1 <= m2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSingleShadow", into = "RawSingleShadow")]
pub struct SingleShadowParams {
    m1: f64,
    m2: f64,
    omega: f64,
    alpha: f64,
    gamma_bar: f64,
}

impl SingleShadowParams {
    pub fn new(m1: f64, m2: f64, alpha: f64, gamma_bar: f64) -> Result<Self> {
        RawSingleShadow {
            m1,
            m2,
            omega: 1.0,
            alpha,
            gamma_bar,
        }
        .validate()
    }

    pub fn with_omega(self, omega: f64) -> Result<Self> {
        RawSingleShadow { omega, ..self.into() }.validate()
    }

    pub fn with_gamma_bar(self, gamma_bar: f64) -> Result<Self> {
        RawSingleShadow { gamma_bar, ..self.into() }.validate()
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn gamma_bar(&self) -> f64 {
        self.gamma_bar
    }

    pub fn snr_scale(&self) -> f64 {
        self.omega * self.omega * self.gamma_bar / (self.m1 * self.m2)
    }

    /// `E[γ] = Ω² γ̄ / (α-1)`.
    pub fn mean(&self) -> f64 {
        self.omega * self.omega * self.gamma_bar / (self.alpha - 1.0)
    }
}

impl RawSingleShadow {
    pub fn validate(self) -> Result<SingleShadowParams> {
        check_positive("m1", self.m1)?;
        check_positive("m2", self.m2)?;
        check_positive("omega", self.omega)?;
        check_shadow_shape("alpha", self.alpha)?;
        check_positive("gamma_bar", self.gamma_bar)?;
        Ok(SingleShadowParams {
            m1: self.m1.min(self.m2),
            m2: self.m1.max(self.m2),
            omega: self.omega,
            alpha: self.alpha,
            gamma_bar: self.gamma_bar,
        })
    }
}

impl TryFrom<RawSingleShadow> for SingleShadowParams {
    type Error = Error;
    fn try_from(raw: RawSingleShadow) -> Result<Self> {
        raw.validate()
    }
}

impl From<SingleShadowParams> for RawSingleShadow {
    fn from(p: SingleShadowParams) -> Self {
        RawSingleShadow {
            m1: p.m1,
            m2: p.m2,
            omega: p.omega,
            alpha: p.alpha,
            gamma_bar: p.gamma_bar,
        }
    }
}

/// Either channel model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ChannelParams {
    #[serde(rename = "ds")]
    Double(DoubleShadowParams),
    #[serde(rename = "ss")]
    Single(SingleShadowParams),
}

impl ChannelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ChannelParams::Double(_) => ModelKind::Double,
            ChannelParams::Single(_) => ModelKind::Single,
        }
    }

    pub fn m1(&self) -> f64 {
        match self {
            ChannelParams::Double(p) => p.m1,
            ChannelParams::Single(p) => p.m1,
        }
    }

    pub fn m2(&self) -> f64 {
        match self {
            ChannelParams::Double(p) => p.m2,
            ChannelParams::Single(p) => p.m2,
        }
    }

    pub fn omega(&self) -> f64 {
        match self {
            ChannelParams::Double(p) => p.omega,
            ChannelParams::Single(p) => p.omega,
        }
    }

    pub fn gamma_bar(&self) -> f64 {
        match self {
            ChannelParams::Double(p) => p.gamma_bar,
            ChannelParams::Single(p) => p.gamma_bar,
        }
    }

    pub fn snr_scale(&self) -> f64 {
        match self {
            ChannelParams::Double(p) => p.snr_scale(),
            ChannelParams::Single(p) => p.snr_scale(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ChannelParams::Double(p) => p.mean(),
            ChannelParams::Single(p) => p.mean(),
        }
    }

    pub fn with_gamma_bar(&self, gamma_bar: f64) -> Result<Self> {
        Ok(match self {
            ChannelParams::Double(p) => ChannelParams::Double(p.with_gamma_bar(gamma_bar)?),
            ChannelParams::Single(p) => ChannelParams::Single(p.with_gamma_bar(gamma_bar)?),
        })
    }

    /// ln E[γ^k] for real k; `None` when the moment does not exist
    /// (`k <= -m_min` or `k >= α_min`).
    pub fn ln_moment(&self, k: f64) -> Option<f64> {
        match self {
            ChannelParams::Double(p) => ln_moment_ds(p, k).ok(),
            ChannelParams::Single(p) => ln_moment_ss(p, k).ok(),
        }
    }
}

impl From<DoubleShadowParams> for ChannelParams {
    fn from(p: DoubleShadowParams) -> Self {
        ChannelParams::Double(p)
    }
}

impl From<SingleShadowParams> for ChannelParams {
    fn from(p: SingleShadowParams) -> Self {
        ChannelParams::Single(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[serde(rename = "ds")]
    Double,
    #[serde(rename = "ss")]
    Single,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Double => "ds",
            ModelKind::Single => "ss",
        })
    }
}

/// What produced a [`SampleBatch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchSource {
    NakagamiPower { m: f64, omega: f64 },
    InverseGamma { alpha: f64, gamma_bar: f64 },
    Channel { channel: ChannelParams },
    Selection {
        channel: ChannelParams,
        uavs: usize,
        policy: String,
    },
}

/// Linear-SNR draws plus the generator coordinates that reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub params: BatchSource,
    pub seed: u64,
    pub stream: u64,
    pub count: usize,
    pub values: Vec<f64>,
}

impl SampleBatch {
    pub fn new(params: BatchSource, seed: Seed, values: Vec<f64>) -> Self {
        Self {
            params,
            seed: seed.seed,
            stream: seed.stream,
            count: values.len(),
            values,
        }
    }

    /// Parses the JSON envelope and checks its invariants.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let batch: SampleBatch = serde_json::from_slice(bytes)?;
        if batch.count != batch.values.len() {
            return Err(Error::Parse(format!(
                "count {} does not match {} values",
                batch.count,
                batch.values.len()
            )));
        }
        if let Some(v) = batch.values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Parse(format!("invalid SNR value {v}")));
        }
        Ok(batch)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// One value per line under the header `snr_linear`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "snr_linear")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

fn gamma_unit(shape: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0).map_err(|e| domain(format!("gamma shape {shape}: {e}")))
}

/// Draws of `N²` for Nakagami-m fading: gamma with shape `m` and mean `Ω`.
pub fn sample_nakagami_sq(m: f64, omega: f64, n: usize, seed: impl Into<Seed>) -> Result<SampleBatch> {
    check_positive("m", m)?;
    check_positive("omega", omega)?;
    let seed = seed.into();
    let g = gamma_unit(m)?;
    let scale = omega / m;
    let values = rng::fill(n, seed, |r| scale * g.sample(r));
    Ok(SampleBatch::new(BatchSource::NakagamiPower { m, omega }, seed, values))
}

/// Inverse-gamma draws: `γ̄ / X` with `X ~ Gamma(α, 1)`, i.e. the
/// reciprocal of a gamma variate with shape `α` and rate `γ̄`.
pub fn sample_inverse_gamma(alpha: f64, gamma_bar: f64, n: usize, seed: impl Into<Seed>) -> Result<SampleBatch> {
    check_shadow_shape("alpha", alpha)?;
    check_positive("gamma_bar", gamma_bar)?;
    let seed = seed.into();
    let g = gamma_unit(alpha)?;
    let values = rng::fill(n, seed, |r| gamma_bar / g.sample(r));
    Ok(SampleBatch::new(
        BatchSource::InverseGamma { alpha, gamma_bar },
        seed,
        values,
    ))
}

/// Per-link sampler reused by the selection simulator: returns the
/// multipath factor `N` (double-Nakagami power, mean `Ω²`) and the shadowing
/// factor `I` (mean `γ̄ / Π(α-1)`), so that `γ = N · I`.
#[derive(Debug, Clone)]
pub struct LinkSampler {
    m: [Gamma<f64>; 2],
    m_scale: f64,
    shadow: ShadowDraw,
}

#[derive(Debug, Clone)]
enum ShadowDraw {
    Double(Gamma<f64>, Gamma<f64>, f64),
    Single(Gamma<f64>, f64),
}

impl LinkSampler {
    pub fn new(params: &ChannelParams) -> Result<Self> {
        let m = [gamma_unit(params.m1())?, gamma_unit(params.m2())?];
        let omega = params.omega();
        let m_scale = omega * omega / (params.m1() * params.m2());
        let shadow = match params {
            ChannelParams::Double(p) => {
                ShadowDraw::Double(gamma_unit(p.alpha1)?, gamma_unit(p.alpha2)?, p.gamma_bar)
            }
            ChannelParams::Single(p) => ShadowDraw::Single(gamma_unit(p.alpha)?, p.gamma_bar),
        };
        Ok(Self { m, m_scale, shadow })
    }

    /// Draws `(N, I)`. The draw order is fixed: G₁, G₂, then the shadowing
    /// gammas.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let g1 = self.m[0].sample(rng);
        let g2 = self.m[1].sample(rng);
        let n = self.m_scale * g1 * g2;
        let i = match &self.shadow {
            ShadowDraw::Double(x1, x2, gb) => {
                let a = x1.sample(rng);
                let b = x2.sample(rng);
                gb / (a * b)
            }
            ShadowDraw::Single(x, gb) => gb / x.sample(rng),
        };
        (n, i)
    }

    pub fn draw_snr<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (n, i) = self.draw(rng);
        n * i
    }
}

/// Composite DS draws `N₁² I₁ N₂² I₂` from four independent variates.
pub fn sample_ds(params: &DoubleShadowParams, n: usize, seed: impl Into<Seed>) -> Result<SampleBatch> {
    sample_channel(&ChannelParams::Double(*params), n, seed)
}

/// Composite SS draws `N₁² N₂² I`.
pub fn sample_ss(params: &SingleShadowParams, n: usize, seed: impl Into<Seed>) -> Result<SampleBatch> {
    sample_channel(&ChannelParams::Single(*params), n, seed)
}

pub fn sample_channel(params: &ChannelParams, n: usize, seed: impl Into<Seed>) -> Result<SampleBatch> {
    let seed = seed.into();
    let link = LinkSampler::new(params)?;
    let values = rng::fill(n, seed, |r| link.draw_snr(r));
    Ok(SampleBatch::new(BatchSource::Channel { channel: *params }, seed, values))
}

/// ln E[γ^k] for the DS model and real order k.
pub fn ln_moment_ds(p: &DoubleShadowParams, k: f64) -> Result<f64> {
    for alpha in [p.alpha1, p.alpha2] {
        if alpha <= k {
            return Err(Error::MomentDivergence { order: k, shape: alpha });
        }
    }
    for m in [p.m1, p.m2] {
        if m + k <= 0.0 {
            return Err(Error::MomentDivergence { order: k, shape: m });
        }
    }
    Ok(k * p.snr_scale().ln() + ln_gamma(p.m1 + k) - ln_gamma(p.m1) + ln_gamma(p.m2 + k) - ln_gamma(p.m2)
        + ln_gamma(p.alpha1 - k)
        - ln_gamma(p.alpha1)
        + ln_gamma(p.alpha2 - k)
        - ln_gamma(p.alpha2))
}

/// ln E[γ^k] for the SS model and real order k.
pub fn ln_moment_ss(p: &SingleShadowParams, k: f64) -> Result<f64> {
    if p.alpha <= k {
        return Err(Error::MomentDivergence { order: k, shape: p.alpha });
    }
    for m in [p.m1, p.m2] {
        if m + k <= 0.0 {
            return Err(Error::MomentDivergence { order: k, shape: m });
        }
    }
    Ok(k * p.snr_scale().ln() + ln_gamma(p.m1 + k) - ln_gamma(p.m1) + ln_gamma(p.m2 + k) - ln_gamma(p.m2)
        + ln_gamma(p.alpha - k)
        - ln_gamma(p.alpha))
}

/// k-th raw moment of the DS SNR. Exists only while both `α_j > k`.
pub fn moment_ds(p: &DoubleShadowParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(domain("moment order must be positive"));
    }
    Ok(ln_moment_ds(p, k as f64)?.exp())
}

/// k-th raw moment of the SS SNR.
pub fn moment_ss(p: &SingleShadowParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(domain("moment order must be positive"));
    }
    Ok(ln_moment_ss(p, k as f64)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> DoubleShadowParams {
        DoubleShadowParams::new(1.5, 1.8, 2.0, 2.5, 1.0).unwrap()
    }

    #[test]
    fn validate_canonicalizes_order() {
        let p = DoubleShadowParams::new(1.8, 1.5, 2.5, 2.0, 1.0).unwrap();
        assert_eq!((p.m1(), p.m2(), p.alpha1(), p.alpha2()), (1.5, 1.8, 2.0, 2.5));
        let s = SingleShadowParams::new(3.0, 0.7, 2.0, 1.0).unwrap();
        assert_eq!((s.m1(), s.m2()), (0.7, 3.0));
    }

    #[test]
    fn validate_accepts_reference_unchanged() {
        let p = reference();
        assert_eq!(
            (p.m1(), p.m2(), p.alpha1(), p.alpha2(), p.omega(), p.gamma_bar()),
            (1.5, 1.8, 2.0, 2.5, 1.0, 1.0)
        );
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        assert!(matches!(DoubleShadowParams::new(1.5, 1.8, 1.0, 2.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(DoubleShadowParams::new(0.0, 1.8, 2.0, 2.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(DoubleShadowParams::new(1.0, 1.8, 2.0, 2.0, -1.0), Err(Error::Domain(_))));
        assert!(matches!(DoubleShadowParams::new(1.0, f64::NAN, 2.0, 2.0, 1.0), Err(Error::Domain(_))));
        assert!(reference().with_omega(0.0).is_err());
        assert!(SingleShadowParams::new(1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn serde_goes_through_validation() {
        let json = r#"{"model":"ds","m1":1.8,"m2":1.5,"alpha1":2.5,"alpha2":2.0,"gamma_bar":1.0}"#;
        let p: ChannelParams = serde_json::from_str(json).unwrap();
        assert_eq!(p, ChannelParams::Double(reference()));
        let bad = r#"{"model":"ss","m1":1.0,"m2":1.0,"alpha":0.9,"gamma_bar":1.0}"#;
        assert!(serde_json::from_str::<ChannelParams>(bad).is_err());
    }

    #[test]
    fn moment_reduces_to_mean_identity() {
        let p = DoubleShadowParams::new(1.5, 1.8, 3.0, 2.0, 6.0).unwrap();
        assert!((moment_ds(&p, 1).unwrap() - 3.0).abs() < 1e-12);
        assert!((p.mean() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn second_moment_diverges_at_alpha_two() {
        let p = DoubleShadowParams::new(1.5, 1.8, 2.0, 3.0, 1.0).unwrap();
        assert!(matches!(moment_ds(&p, 2), Err(Error::MomentDivergence { .. })));
    }

    #[test]
    fn moments_scale_with_gamma_bar() {
        let p = reference().with_gamma_bar(1.0).unwrap();
        let q = p.with_gamma_bar(7.0).unwrap();
        let k = 1;
        assert!((moment_ds(&q, k).unwrap() / moment_ds(&p, k).unwrap() - 7.0).abs() < 1e-12);
        let p = DoubleShadowParams::new(1.0, 2.0, 4.0, 5.0, 1.0).unwrap();
        let q = p.with_gamma_bar(0.3).unwrap();
        assert!((moment_ds(&q, 3).unwrap() / moment_ds(&p, 3).unwrap() - 0.027).abs() < 1e-12);
    }

    #[test]
    fn empty_and_single_batches() {
        let b = sample_nakagami_sq(1.0, 1.0, 0, 1).unwrap();
        assert_eq!(b.count, 0);
        assert!(b.values.is_empty());
        let s = SingleShadowParams::new(1.5, 1.8, 2.0, 1.0).unwrap();
        let b = sample_ss(&s, 1, 5).unwrap();
        assert_eq!(b.values.len(), 1);
        assert!(b.values[0] >= 0.0);
    }

    #[test]
    fn sampler_rejects_invalid_inputs() {
        assert!(sample_nakagami_sq(0.0, 1.0, 10, 1).is_err());
        assert!(sample_nakagami_sq(1.0, -2.0, 10, 1).is_err());
        assert!(sample_inverse_gamma(1.0, 1.0, 10, 1).is_err());
    }

    #[test]
    fn csv_and_json_envelopes() {
        let b = sample_ds(&reference(), 3, Seed::new(7, 2)).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "snr_linear");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].parse::<f64>().unwrap(), b.values[0]);

        let json = b.to_json().unwrap();
        let back = SampleBatch::from_json(json.as_bytes()).unwrap();
        assert_eq!(back, b);
        assert_eq!((back.seed, back.stream, back.count), (7, 2, 3));
    }

    #[test]
    fn json_envelope_rejects_inconsistent_count() {
        let json = r#"{"params":{"kind":"inverse_gamma","alpha":2.0,"gamma_bar":1.0},"seed":1,"stream":0,"count":2,"values":[1.0]}"#;
        assert!(matches!(SampleBatch::from_json(json.as_bytes()), Err(Error::Parse(_))));
        let json = r#"{"params":{"kind":"inverse_gamma","alpha":2.0,"gamma_bar":1.0},"seed":1,"stream":0,"count":1,"values":[-1.0]}"#;
        assert!(SampleBatch::from_json(json.as_bytes()).is_err());
    }
}
