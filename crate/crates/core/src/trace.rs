//! Received-power traces and replay of UAV selection strategies.
//!
//! A trace is one power series sampled at a fixed spatial spacing. Splitting
//! it into `L` contiguous segments emulates `L` simultaneous links, and
//! [`replay`] runs a selection policy over them while counting the channel
//! comparisons it needs.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytics::{db_to_linear, linear_to_db};
use crate::error::{domain, Error, Result};
use crate::model::{ChannelParams, LinkSampler};
use crate::rng::{self, Seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerUnit {
    #[serde(rename = "dB")]
    Db,
    #[serde(rename = "linear")]
    Linear,
}

impl PowerUnit {
    pub fn as_str(&self) -> &'static str {
        match self {
            PowerUnit::Db => "dB",
            PowerUnit::Linear => "linear",
        }
    }
}

impl fmt::Display for PowerUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PowerUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "db" | "dbm" | "dbw" => Ok(PowerUnit::Db),
            "linear" | "lin" | "mw" | "w" => Ok(PowerUnit::Linear),
            other => Err(Error::Unit(format!("unknown power unit `{other}`"))),
        }
    }
}

/// Trace metadata, read from `#` header lines or a JSON sidecar.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    #[serde(default)]
    pub unit: Option<String>,
    #[serde(default)]
    pub sample_spacing_m: Option<f64>,
    #[serde(default)]
    pub wavelength_m: Option<f64>,
}

impl TraceMeta {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::Parse(format!("trace sidecar: {e}")))
    }

    /// Fills fields missing from `self` with those of `other`; fields set in
    /// both must agree.
    fn merge(self, other: TraceMeta) -> Result<Self> {
        fn pick<T: PartialEq + fmt::Debug>(name: &str, a: Option<T>, b: Option<T>) -> Result<Option<T>> {
            match (a, b) {
                (Some(a), Some(b)) if a != b => {
                    Err(Error::Parse(format!("conflicting `{name}` in header ({a:?}) and sidecar ({b:?})")))
                }
                (a, b) => Ok(a.or(b)),
            }
        }
        Ok(TraceMeta {
            unit: pick(
                "unit",
                self.unit.map(|u| u.trim().to_ascii_lowercase()),
                other.unit.map(|u| u.trim().to_ascii_lowercase()),
            )?,
            sample_spacing_m: pick("sample_spacing_m", self.sample_spacing_m, other.sample_spacing_m)?,
            wavelength_m: pick("wavelength_m", self.wavelength_m, other.wavelength_m)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    samples: Vec<f64>,
    unit: PowerUnit,
    sample_spacing_m: f64,
    wavelength_m: f64,
}

impl PowerTrace {
    pub fn new(samples: Vec<f64>, unit: PowerUnit, sample_spacing_m: f64, wavelength_m: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain("power trace is empty"));
        }
        if !(sample_spacing_m.is_finite() && sample_spacing_m > 0.0) {
            return Err(domain(format!("sample spacing must be positive, got {sample_spacing_m}")));
        }
        if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
            return Err(domain(format!("wavelength must be positive, got {wavelength_m}")));
        }
        let bad = match unit {
            PowerUnit::Db => samples.iter().position(|v| !v.is_finite()),
            PowerUnit::Linear => samples.iter().position(|v| !(v.is_finite() && *v > 0.0)),
        };
        if let Some(i) = bad {
            return Err(domain(format!("sample {i} is not a valid {unit} power: {}", samples[i])));
        }
        Ok(Self { samples, unit, sample_spacing_m, wavelength_m })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn unit(&self) -> PowerUnit {
        self.unit
    }

    pub fn sample_spacing_m(&self) -> f64 {
        self.sample_spacing_m
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples_per_wavelength(&self) -> f64 {
        self.wavelength_m / self.sample_spacing_m
    }

    pub fn linear_values(&self) -> Vec<f64> {
        match self.unit {
            PowerUnit::Linear => self.samples.clone(),
            PowerUnit::Db => self.samples.iter().map(|&v| db_to_linear(v)).collect(),
        }
    }

    pub fn db_values(&self) -> Vec<f64> {
        match self.unit {
            PowerUnit::Db => self.samples.clone(),
            PowerUnit::Linear => self.samples.iter().map(|&v| linear_to_db(v)).collect(),
        }
    }

    pub fn to_unit(&self, unit: PowerUnit) -> PowerTrace {
        let samples = match unit {
            PowerUnit::Db => self.db_values(),
            PowerUnit::Linear => self.linear_values(),
        };
        PowerTrace { samples, unit, ..*self }
    }

    fn with_samples(&self, samples: Vec<f64>) -> PowerTrace {
        PowerTrace { samples, unit: self.unit, ..*self }
    }

    /// CSV with `#` metadata lines and a single `power` column.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# unit: {}", self.unit)?;
        writeln!(w, "# sample_spacing_m: {}", self.sample_spacing_m)?;
        writeln!(w, "# wavelength_m: {}", self.wavelength_m)?;
        writeln!(w, "power")?;
        for v in &self.samples {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta {
            unit: Some(self.unit.to_string()),
            sample_spacing_m: Some(self.sample_spacing_m),
            wavelength_m: Some(self.wavelength_m),
        }
    }
}

/// Splits a `# key: value` or `# key=value` line.
fn meta_line(line: &str) -> Option<(String, String)> {
    let body = line.trim_start_matches('#').trim();
    let cut = body.find([':', '='])?;
    let (k, v) = body.split_at(cut);
    Some((k.trim().to_ascii_lowercase(), v[1..].trim().to_string()))
}

fn parse_number(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| Error::Parse(format!("metadata `{key}`: `{v}` is not a number")))
}

/// Parses a trace CSV. Lines starting with `#` may carry `key: value`
/// metadata (`unit`, `sample_spacing_m`, `wavelength_m`); unknown keys are
/// ignored. The first non-comment row is the header and must contain a
/// `power` column. `sidecar` supplies or confirms metadata.
pub fn parse_trace_csv(text: &str, sidecar: Option<&TraceMeta>) -> Result<PowerTrace> {
    let mut meta = TraceMeta::default();
    for line in text.lines().filter(|l| l.trim_start().starts_with('#')) {
        let Some((key, value)) = meta_line(line.trim_start()) else { continue };
        match key.as_str() {
            "unit" => meta.unit = Some(value),
            "sample_spacing_m" | "spacing_m" | "spacing" => {
                meta.sample_spacing_m = Some(parse_number(&key, &value)?)
            }
            "wavelength_m" | "wavelength" => meta.wavelength_m = Some(parse_number(&key, &value)?),
            _ => {}
        }
    }
    if let Some(s) = sidecar {
        meta = meta.merge(s.clone())?;
    }
    let unit: PowerUnit = meta
        .unit
        .as_deref()
        .ok_or_else(|| Error::Unit("trace does not declare a power unit".into()))?
        .parse()?;
    let spacing = meta.sample_spacing_m.ok_or_else(|| Error::Parse("missing `sample_spacing_m`".into()))?;
    let wavelength = meta.wavelength_m.ok_or_else(|| Error::Parse("missing `wavelength_m`".into()))?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse(format!("trace header: {e}")))?.clone();
    let col = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case("power"))
        .ok_or_else(|| Error::Parse("trace header has no `power` column".into()))?;
    let mut samples = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("trace row {}: {e}", row + 1)))?;
        let field = rec.get(col).unwrap_or("");
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Parse(format!("trace row {}: `{field}` is not a number", row + 1)))?;
        samples.push(v);
    }
    PowerTrace::new(samples, unit, spacing, wavelength).map_err(|e| match e {
        Error::Domain(m) => Error::Parse(m),
        other => other,
    })
}

/// Loads a trace CSV, with an optional JSON sidecar for the metadata.
pub fn load_trace(path: &Path, sidecar: Option<&Path>) -> Result<PowerTrace> {
    let text = std::fs::read_to_string(path)?;
    let meta = match sidecar {
        Some(p) => Some(TraceMeta::from_json(&std::fs::read(p)?)?),
        None => None,
    };
    parse_trace_csv(&text, meta.as_ref())
}

/// `L` contiguous equal-length segments, dropping the remainder.
pub fn split_virtual_uavs(trace: &PowerTrace, uavs: usize) -> Result<Vec<PowerTrace>> {
    if uavs == 0 || trace.len() < uavs {
        return Err(Error::InsufficientLength { len: trace.len(), parts: uavs });
    }
    let seg = trace.len() / uavs;
    Ok(trace.samples.chunks_exact(seg).take(uavs).map(|c| trace.with_samples(c.to_vec())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Select by linear mean over each stationarity window.
    ShadowWindow,
    /// Select once per coherence time.
    CoherenceTime,
    /// Select at every sample.
    PerSample,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::ShadowWindow => "shadow_window",
            Strategy::CoherenceTime => "coherence_time",
            Strategy::PerSample => "per_sample",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shadow_window" | "shadow-window" => Ok(Strategy::ShadowWindow),
            "coherence_time" | "coherence-time" | "ct" => Ok(Strategy::CoherenceTime),
            "per_sample" | "per-sample" => Ok(Strategy::PerSample),
            _ => Err(domain(format!("unknown strategy `{s}`"))),
        }
    }
}

/// How the coherence-time policy scores a link at each decision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CtEstimator {
    /// Linear mean over the coherence-time block.
    #[default]
    BlockMean,
    /// The sample at the start of the block.
    Instantaneous,
}

pub const DEFAULT_WINDOW_SAMPLES: usize = 242;
pub const DEFAULT_CT_SAMPLES: usize = 170;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub window_samples: usize,
    pub ct_samples: usize,
    pub uavs: usize,
    #[serde(default)]
    pub ct_estimator: CtEstimator,
}

impl StrategyConfig {
    pub fn new(strategy: Strategy, uavs: usize) -> Self {
        Self {
            strategy,
            window_samples: DEFAULT_WINDOW_SAMPLES,
            ct_samples: DEFAULT_CT_SAMPLES,
            uavs,
            ct_estimator: CtEstimator::BlockMean,
        }
    }

    /// Cadences given in wavelengths, converted with the trace's sampling
    /// density and rounded to the nearest sample (at least one).
    pub fn from_wavelengths(
        strategy: Strategy,
        uavs: usize,
        window_lambda: f64,
        ct_lambda: f64,
        samples_per_wavelength: f64,
    ) -> Result<Self> {
        let to_samples = |x: f64| -> Result<usize> {
            let s = (x * samples_per_wavelength).round();
            if !(s.is_finite() && s >= 1.0) {
                return Err(domain(format!("{x} wavelengths is below one sample")));
            }
            Ok(s as usize)
        };
        Ok(Self {
            window_samples: to_samples(window_lambda)?,
            ct_samples: to_samples(ct_lambda)?,
            ..Self::new(strategy, uavs)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_samples == 0 || self.ct_samples == 0 {
            return Err(domain("window and coherence-time cadences must be at least one sample"));
        }
        if self.uavs == 0 {
            return Err(domain("at least one UAV is required"));
        }
        Ok(())
    }

    /// Samples between selection decisions.
    pub fn cadence(&self) -> usize {
        match self.strategy {
            Strategy::ShadowWindow => self.window_samples,
            Strategy::CoherenceTime => self.ct_samples,
            Strategy::PerSample => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub strategy: Strategy,
    pub unit: PowerUnit,
    pub selected_power: Vec<f64>,
    pub selected_index: Vec<usize>,
    pub decisions: usize,
    pub comparisons: usize,
    pub switches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub strategy: Strategy,
    pub comparisons: usize,
    pub switches: usize,
    #[serde(rename = "mean_dB")]
    pub mean_db: f64,
    #[serde(rename = "p10_dB")]
    pub p10_db: f64,
}

impl ReplayResult {
    pub fn power_db(&self) -> Vec<f64> {
        match self.unit {
            PowerUnit::Db => self.selected_power.clone(),
            PowerUnit::Linear => self.selected_power.iter().map(|&v| linear_to_db(v)).collect(),
        }
    }

    /// Mean power (averaged in linear terms) in dB.
    pub fn mean_db(&self) -> f64 {
        let lin: f64 = self.power_db().iter().map(|&v| db_to_linear(v)).sum();
        linear_to_db(lin / self.selected_power.len() as f64)
    }

    /// 10th percentile of the output power in dB.
    pub fn p10_db(&self) -> f64 {
        let mut v = self.power_db();
        v.sort_by(f64::total_cmp);
        quantile_sorted(&v, 0.1)
    }

    pub fn summary(&self) -> ReplaySummary {
        ReplaySummary {
            strategy: self.strategy,
            comparisons: self.comparisons,
            switches: self.switches,
            mean_db: self.mean_db(),
            p10_db: self.p10_db(),
        }
    }
}

/// Linear-interpolated quantile of ascending data.
fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < v.len() {
        v[i] + f * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in scores.enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}

/// Replays a selection strategy over simultaneous links. Every decision
/// picks one link for the next `cadence` samples (the last block may be
/// shorter). Ties go to the lowest index.
pub fn replay(traces: &[PowerTrace], cfg: &StrategyConfig) -> Result<ReplayResult> {
    cfg.validate()?;
    if traces.len() != cfg.uavs {
        return Err(Error::LengthMismatch(format!("{} traces for L = {}", traces.len(), cfg.uavs)));
    }
    let n = traces[0].len();
    if let Some(t) = traces.iter().find(|t| t.len() != n) {
        return Err(Error::LengthMismatch(format!("trace lengths {n} and {} differ", t.len())));
    }
    let unit = traces[0].unit;
    if traces.iter().any(|t| t.unit != unit) {
        return Err(Error::Unit("traces mix dB and linear units".into()));
    }
    let linear: Vec<Vec<f64>> = traces.iter().map(|t| t.linear_values()).collect();
    let cadence = cfg.cadence();
    let instantaneous = cfg.strategy == Strategy::CoherenceTime && cfg.ct_estimator == CtEstimator::Instantaneous;

    let mut selected_index = Vec::with_capacity(n);
    let mut decisions = 0;
    for start in (0..n).step_by(cadence) {
        let end = (start + cadence).min(n);
        let pick = if instantaneous {
            argmax(linear.iter().map(|l| l[start]))
        } else {
            // Means share a denominator, so the block sum ranks the same.
            argmax(linear.iter().map(|l| l[start..end].iter().sum::<f64>()))
        };
        selected_index.extend(std::iter::repeat_n(pick, end - start));
        decisions += 1;
    }
    let selected_power = selected_index.iter().enumerate().map(|(i, &k)| traces[k].samples[i]).collect();
    let switches = selected_index.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(ReplayResult {
        strategy: cfg.strategy,
        unit,
        selected_power,
        selected_index,
        decisions,
        comparisons: decisions * (cfg.uavs - 1),
        switches,
    })
}

/// Aligned ECDF curves on a common dB grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfTable {
    pub grid_db: Vec<f64>,
    pub labels: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub mean_db: Vec<f64>,
    pub p10_db: Vec<f64>,
}

/// Empirical CDF of `sorted` (ascending) at `x`: the fraction `<= x`.
fn ecdf_at(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// ECDFs of the output power of each result on `points` evenly spaced dB
/// values spanning all results.
pub fn ecdf_compare(results: &[ReplayResult], labels: &[&str], points: usize) -> Result<EcdfTable> {
    if results.is_empty() {
        return Err(domain("nothing to compare"));
    }
    if labels.len() != results.len() {
        return Err(Error::LengthMismatch(format!("{} labels for {} results", labels.len(), results.len())));
    }
    if points < 2 {
        return Err(domain("an ECDF grid needs at least 2 points"));
    }
    let sorted: Vec<Vec<f64>> = results
        .iter()
        .map(|r| {
            let mut v = r.power_db();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let lo = sorted.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let hi = sorted.iter().map(|v| v[v.len() - 1]).fold(f64::NEG_INFINITY, f64::max);
    let grid_db: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let columns = sorted.iter().map(|v| grid_db.iter().map(|&x| ecdf_at(v, x)).collect()).collect();
    Ok(EcdfTable {
        grid_db,
        labels: labels.iter().map(|s| s.to_string()).collect(),
        columns,
        mean_db: results.iter().map(|r| r.mean_db()).collect(),
        p10_db: results.iter().map(|r| r.p10_db()).collect(),
    })
}

impl EcdfTable {
    /// `power_db` then one `ecdf_<label>` column per result, preceded by
    /// `#` lines with each result's mean and 10th-percentile power.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(w, "# {l}: mean_dB={} p10_dB={}", self.mean_db[i], self.p10_db[i])?;
        }
        write!(w, "power_db")?;
        for l in &self.labels {
            write!(w, ",ecdf_{l}")?;
        }
        writeln!(w)?;
        for (j, x) in self.grid_db.iter().enumerate() {
            write!(w, "{x}")?;
            for c in &self.columns {
                write!(w, ",{}", c[j])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Two-sample sup distance between the ECDFs of `a` and `b`.
pub fn ecdf_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Synthetic trace layout. Shadowing is held constant over blocks of
/// `stationarity_samples`, multipath over blocks of `coherence_samples`;
/// blocks are independent draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTrace {
    pub len: usize,
    pub stationarity_samples: usize,
    pub coherence_samples: usize,
    pub sample_spacing_m: f64,
    pub wavelength_m: f64,
}

impl SyntheticTrace {
    /// Samples every λ/6.05 at λ = 15 cm, so a 40λ window spans 242
    /// samples; shadowing stationary over one such window, multipath
    /// decorrelated every sample.
    pub fn new(len: usize) -> Self {
        let wavelength_m = 0.15;
        Self {
            len,
            stationarity_samples: DEFAULT_WINDOW_SAMPLES,
            coherence_samples: 1,
            sample_spacing_m: wavelength_m * 40.0 / DEFAULT_WINDOW_SAMPLES as f64,
            wavelength_m,
        }
    }

    /// Power trace in dB drawn from the channel model.
    pub fn generate(&self, params: &ChannelParams, seed: impl Into<Seed>) -> Result<PowerTrace> {
        if self.stationarity_samples == 0 || self.coherence_samples == 0 || self.len == 0 {
            return Err(domain("synthetic trace lengths must be positive"));
        }
        let link = LinkSampler::new(params)?;
        let seed = seed.into();
        // One sequential stream: block boundaries depend on the position in
        // the trace, so the draws cannot be split into fixed-size chunks.
        let mut r = rng::block_rng(seed, 0);
        let (mut n, mut i) = link.draw(&mut r);
        let mut samples = Vec::with_capacity(self.len);
        for t in 0..self.len {
            if t > 0 && t % self.stationarity_samples == 0 {
                i = link.draw(&mut r).1;
            }
            if t > 0 && t % self.coherence_samples == 0 {
                n = link.draw(&mut r).0;
            }
            samples.push(linear_to_db(n * i));
        }
        PowerTrace::new(samples, PowerUnit::Db, self.sample_spacing_m, self.wavelength_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DoubleShadowParams;

    fn lin(v: &[f64]) -> PowerTrace {
        PowerTrace::new(v.to_vec(), PowerUnit::Linear, 0.025, 0.15).unwrap()
    }

    #[test]
    fn parses_embedded_metadata() {
        let text = "# unit: linear\n# sample_spacing_m: 0.025\n# wavelength_m = 0.15\npower\n1.0\n2.5\n0.5\n";
        let t = parse_trace_csv(text, None).unwrap();
        assert_eq!(t.samples(), &[1.0, 2.5, 0.5]);
        assert_eq!(t.unit(), PowerUnit::Linear);
        assert!((t.samples_per_wavelength() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn sidecar_supplies_and_checks_metadata() {
        let text = "time,power\n0,-3\n1,-4\n";
        let meta = TraceMeta::from_json(br#"{"unit":"dB","sample_spacing_m":0.02,"wavelength_m":0.15}"#).unwrap();
        let t = parse_trace_csv(text, Some(&meta)).unwrap();
        assert_eq!(t.samples(), &[-3.0, -4.0]);
        let clash = "# unit: linear\npower\n1\n";
        assert!(matches!(parse_trace_csv(clash, Some(&meta)), Err(Error::Parse(_))));
    }

    #[test]
    fn parse_errors_are_classified() {
        let body = "# sample_spacing_m: 0.02\n# wavelength_m: 0.15\npower\n1\n";
        assert!(matches!(parse_trace_csv(body, None), Err(Error::Unit(_))));
        let bad_unit = format!("# unit: furlongs\n{body}");
        assert!(matches!(parse_trace_csv(&bad_unit, None), Err(Error::Unit(_))));
        let meta = "# unit: dB\n# sample_spacing_m: 0.02\n# wavelength_m: 0.15\n";
        for tail in ["level\n1\n", "power\nabc\n", "power\n", "power\n1,2\n"] {
            let r = parse_trace_csv(&format!("{meta}{tail}"), None);
            assert!(matches!(r, Err(Error::Parse(_))), "{tail:?}: {r:?}");
        }
        assert!(matches!(TraceMeta::from_json(b"{\"unit\": 3}"), Err(Error::Parse(_))));
    }

    #[test]
    fn db_round_trip() {
        let t = PowerTrace::new(vec![-12.5, 0.0, 3.25, 40.0], PowerUnit::Db, 0.02, 0.15).unwrap();
        let back = t.to_unit(PowerUnit::Linear).to_unit(PowerUnit::Db);
        for (a, b) in t.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = lin(&[1.0, 0.25, 7.5]);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(parse_trace_csv(std::str::from_utf8(&out).unwrap(), None).unwrap(), t);
    }

    #[test]
    fn split_truncates_remainder() {
        let t = lin(&(1..=10).map(|v| v as f64).collect::<Vec<_>>());
        let parts = split_virtual_uavs(&t, 3).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[2].samples(), &[7.0, 8.0, 9.0]);
        assert_eq!(split_virtual_uavs(&t, 1).unwrap()[0], t);
        assert!(matches!(split_virtual_uavs(&lin(&[1.0, 2.0]), 3), Err(Error::InsufficientLength { .. })));
    }

    #[test]
    fn replay_single_link_is_identity() {
        let t = lin(&[1.0, 3.0, 2.0, 5.0, 4.0]);
        for s in [Strategy::ShadowWindow, Strategy::CoherenceTime, Strategy::PerSample] {
            let r = replay(std::slice::from_ref(&t), &StrategyConfig::new(s, 1)).unwrap();
            assert_eq!(r.selected_power, t.samples());
            assert_eq!(r.comparisons, 0);
            assert_eq!(r.switches, 0);
        }
    }

    #[test]
    fn replay_counts_decisions_and_applies_partial_window() {
        let a = lin(&[1.0, 1.0, 1.0, 9.0, 9.0, 9.0, 1.0]);
        let b = lin(&[2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 5.0]);
        let cfg = StrategyConfig { window_samples: 3, ..StrategyConfig::new(Strategy::ShadowWindow, 2) };
        let r = replay(&[a.clone(), b.clone()], &cfg).unwrap();
        assert_eq!(r.selected_index, vec![1, 1, 1, 0, 0, 0, 1]);
        assert_eq!(r.decisions, 3);
        assert_eq!(r.comparisons, 3);
        assert_eq!(r.switches, 2);
        let ps = replay(&[a, b], &StrategyConfig::new(Strategy::PerSample, 2)).unwrap();
        assert_eq!(ps.selected_power, vec![2.0, 2.0, 2.0, 9.0, 9.0, 9.0, 5.0]);
        assert_eq!(ps.comparisons, 7);
    }

    #[test]
    fn ct_estimators_differ() {
        let a = lin(&[2.5, 0.1, 0.1]);
        let b = lin(&[1.0, 1.0, 1.0]);
        let mut cfg = StrategyConfig { ct_samples: 3, ..StrategyConfig::new(Strategy::CoherenceTime, 2) };
        assert_eq!(replay(&[a.clone(), b.clone()], &cfg).unwrap().selected_index[0], 1);
        cfg.ct_estimator = CtEstimator::Instantaneous;
        assert_eq!(replay(&[a, b], &cfg).unwrap().selected_index[0], 0);
    }

    #[test]
    fn replay_rejects_mismatch() {
        let cfg = StrategyConfig::new(Strategy::PerSample, 2);
        assert!(matches!(replay(&[lin(&[1.0]), lin(&[1.0, 2.0])], &cfg), Err(Error::LengthMismatch(_))));
        assert!(matches!(replay(&[lin(&[1.0])], &cfg), Err(Error::LengthMismatch(_))));
    }

    #[test]
    fn identical_links_never_switch() {
        let t = lin(&[1.0, 4.0, 2.0, 8.0]);
        let r = replay(&[t.clone(), t.clone(), t], &StrategyConfig::new(Strategy::PerSample, 3)).unwrap();
        assert_eq!(r.switches, 0);
    }

    #[test]
    fn wavelength_cadences() {
        let cfg = StrategyConfig::from_wavelengths(Strategy::ShadowWindow, 3, 40.0, 0.7, 6.05).unwrap();
        assert_eq!((cfg.window_samples, cfg.ct_samples), (242, 4));
        assert!(StrategyConfig::from_wavelengths(Strategy::ShadowWindow, 3, 40.0, 0.01, 6.05).is_err());
    }

    #[test]
    fn ecdf_table_shape() {
        let r = replay(&[lin(&[1.0, 10.0, 100.0])], &StrategyConfig::new(Strategy::PerSample, 1)).unwrap();
        let tab = ecdf_compare(std::slice::from_ref(&r), &["only"], 3).unwrap();
        assert_eq!(tab.grid_db, vec![0.0, 10.0, 20.0]);
        assert_eq!(tab.columns[0], vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let mut out = Vec::new();
        tab.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "power_db,ecdf_only");
        assert!((r.p10_db() - 2.0).abs() < 1e-12);
        assert!((r.mean_db() - linear_to_db(37.0)).abs() < 1e-12);
    }

    #[test]
    fn ecdf_distance_basics() {
        assert_eq!(ecdf_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ecdf_distance(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ecdf_distance(&[1.0, 2.0, 3.0, 4.0], &[2.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn synthetic_trace_is_deterministic_and_blocky() {
        let p: ChannelParams = DoubleShadowParams::new(1.5, 1.8, 2.0, 2.5, 1.0).unwrap().into();
        let cfg = SyntheticTrace { coherence_samples: 4, stationarity_samples: 8, ..SyntheticTrace::new(64) };
        let a = cfg.generate(&p, 3).unwrap();
        assert_eq!(a, cfg.generate(&p, 3).unwrap());
        assert_ne!(a, cfg.generate(&p, 4).unwrap());
        let s = a.samples();
        assert_eq!(s[0], s[3]);
        assert_ne!(s[3], s[4]);
        assert!((SyntheticTrace::new(1).sample_spacing_m * 242.0 / 0.15 - 40.0).abs() < 1e-12);
    }
}
