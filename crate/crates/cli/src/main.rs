//! `shadowscatter`: sample, evaluate, select, fit, score and replay.
//!
//! Every subcommand is deterministic given its flags and seed. CSV output
//! starts with `#` metadata lines; numeric column headers carry their unit.
//! Exit codes are stable per error class (see [`exit_code`]).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shadowscatter::analytics::{
    self, db_to_linear, linear_to_db, EvalOptions, LinkMetric, Method, PointFunction,
};
use shadowscatter::fitgof::{
    self, BinSpec, Candidate, EmpiricalSample, FitOptions, GofOptions, ModelTag,
};
use shadowscatter::selection::{self, Policy, SelectionParams};
use shadowscatter::trace::{
    self, CtEstimator, PowerTrace, Strategy, StrategyConfig, SyntheticTrace,
};
use shadowscatter::{
    ChannelParams, DoubleShadowParams, Error, SampleBatch, Seed, SingleShadowParams,
};

const DEFAULT_SEED: u64 = 20_170_914;
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "shadowscatter", version, about = "Shadowed double-scattering UAV channel toolkit")]
struct Cli {
    /// Worker threads for Monte Carlo and sweeps (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw SNR samples from the DS or SS model.
    Sample(SampleArgs),
    /// Sweep a link metric (pdf, cdf, op, bep, capacity).
    Eval(EvalArgs),
    /// Outage or average SNR of shadowing-based UAV selection.
    Select(SelectArgs),
    /// Method-of-moments fit of a sample.
    Fit(FitArgs),
    /// Goodness-of-fit table (K-L and K-S) for fitted or given models.
    Gof(GofArgs),
    /// Power traces: synthesize or replay selection strategies.
    #[command(subcommand)]
    Trace(TraceCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ds,
    Ss,
}

#[derive(Args, Clone)]
struct ChannelArgs {
    #[arg(long, value_enum, default_value = "ds")]
    model: ModelArg,
    #[arg(long)]
    m1: f64,
    #[arg(long)]
    m2: f64,
    /// First shadowing shape (the only one for `ss` if `--alpha` is absent).
    #[arg(long)]
    a1: Option<f64>,
    /// Second shadowing shape (`ds` only).
    #[arg(long)]
    a2: Option<f64>,
    /// Shadowing shape of the `ss` model.
    #[arg(long, conflicts_with = "a1")]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Average SNR in dB.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gbar: f64,
    /// Average SNR in linear units; overrides `--gbar`.
    #[arg(long, conflicts_with = "gbar")]
    gbar_linear: Option<f64>,
}

impl ChannelArgs {
    fn params(&self) -> Result<ChannelParams, Error> {
        let gbar = self.gbar_linear.unwrap_or_else(|| db_to_linear(self.gbar));
        let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Error::Domain(format!("missing `--{flag}`")));
        Ok(match self.model {
            ModelArg::Ds => {
                DoubleShadowParams::new(self.m1, self.m2, need(self.a1, "a1")?, need(self.a2, "a2")?, gbar)?
                    .with_omega(self.omega)?
                    .into()
            }
            ModelArg::Ss => {
                if self.a2.is_some() {
                    return Err(Error::Domain("`--a2` applies to the ds model only".into()));
                }
                let a = need(self.alpha.or(self.a1), "alpha")?;
                SingleShadowParams::new(self.m1, self.m2, a, gbar)?.with_omega(self.omega)?.into()
            }
        })
    }
}

#[derive(Args, Clone)]
struct SeedArgs {
    /// Generator seed; `SHADOWSCATTER_SEED` overrides the built-in default.
    #[arg(long, env = "SHADOWSCATTER_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

impl SeedArgs {
    fn seed(&self) -> Seed {
        Seed::new(self.seed, self.stream)
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output file; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SampleArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// Inclusive dB grid `START:STOP:STEP`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "linear")]
    db: Option<String>,
    /// Comma-separated linear values.
    #[arg(long, value_delimiter = ',')]
    linear: Option<Vec<f64>>,
}

enum Axis {
    Db(Vec<f64>),
    Linear(Vec<f64>),
}

impl Axis {
    fn linear_values(&self) -> Vec<f64> {
        match self {
            Axis::Db(v) => v.iter().map(|&d| db_to_linear(d)).collect(),
            Axis::Linear(v) => v.clone(),
        }
    }

    fn db_values(&self) -> Vec<f64> {
        match self {
            Axis::Db(v) => v.clone(),
            Axis::Linear(v) => v.iter().map(|&x| linear_to_db(x)).collect(),
        }
    }

    fn header(&self, name: &str) -> String {
        match self {
            Axis::Db(_) => format!("{name}_db"),
            Axis::Linear(_) => format!("{name}_linear"),
        }
    }

    fn printed(&self) -> &[f64] {
        match self {
            Axis::Db(v) | Axis::Linear(v) => v,
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Domain(format!("grid `{spec}` is not START:STOP:STEP"));
    let parts: Vec<f64> = spec.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if step.is_nan() || step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return Err(Error::Domain(format!("grid `{spec}` has more than a million points")));
    }
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

impl SweepArgs {
    fn axis(&self, default_db: &str) -> Result<Axis, Error> {
        match (&self.db, &self.linear) {
            (_, Some(v)) => {
                if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::Domain("linear values must be finite and non-negative".into()));
                }
                Ok(Axis::Linear(v.clone()))
            }
            (Some(g), None) => Ok(Axis::Db(parse_grid(g)?)),
            (None, None) => Ok(Axis::Db(parse_grid(default_db)?)),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Series,
    Quadrature,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Series => Method::Series,
            MethodArg::Quadrature => Method::Quadrature,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum MetricArg {
    Pdf,
    Cdf,
    Op,
    Bep,
    Capacity,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EvalArgs {
    #[arg(long, value_enum)]
    metric: MetricArg,
    #[command(flatten)]
    channel: ChannelArgs,
    /// SNR (pdf, cdf), threshold (op) or average SNR (bep, capacity) axis.
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum SelectMode {
    Analytic,
    Simulate,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum SelectTable {
    Op,
    Asnr,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    ShadowMax,
    SnrMax,
    Random,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::ShadowMax => Policy::ShadowMax,
            PolicyArg::SnrMax => Policy::SnrMax,
            PolicyArg::Random => Policy::Random,
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SelectArgs {
    #[arg(long, value_enum, default_value = "analytic")]
    mode: SelectMode,
    #[arg(long, value_enum, default_value = "op")]
    table: SelectTable,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Numbers of UAVs, one column each.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5")]
    uavs: Vec<usize>,
    /// Threshold (op) or average-SNR (asnr) axis.
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    /// Trials per `L` in simulate mode.
    #[arg(long, default_value_t = 1_000_000)]
    trials: usize,
    #[arg(long, value_enum, default_value = "shadow-max")]
    policy: PolicyArg,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Sample CSV (`snr_linear` column) or SampleBatch JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_tag)]
    model: ModelTag,
    /// Explicit moment orders; chosen from tail estimates by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    orders: Option<Vec<f64>>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

fn parse_tag(s: &str) -> Result<ModelTag, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct GofArgs {
    #[arg(long)]
    input: PathBuf,
    /// Models to fit by moments and score.
    #[arg(long, value_delimiter = ',', value_parser = parse_tag)]
    fit: Vec<ModelTag>,
    /// JSON channel parameter files to score as given; named by file stem.
    #[arg(long, num_args = 1..)]
    params: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Chunk length for the K-S pass rate.
    #[arg(long)]
    chunk: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Synthetic power trace (dB) with block-stationary shadowing.
    Synth(SynthArgs),
    /// Replay selection strategies over a trace split into virtual UAVs.
    Replay(ReplayArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SynthArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    len: usize,
    /// Samples per shadowing block.
    #[arg(long, default_value_t = trace::DEFAULT_WINDOW_SAMPLES)]
    stationarity: usize,
    /// Samples per multipath block.
    #[arg(long, default_value_t = 1)]
    coherence: usize,
    #[arg(long, default_value_t = 0.15)]
    wavelength_m: f64,
    /// Defaults to 40 wavelengths per stationarity block.
    #[arg(long)]
    spacing_m: Option<f64>,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum StrategyArg {
    ShadowWindow,
    CoherenceTime,
    PerSample,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum CtEstimatorArg {
    BlockMean,
    Instantaneous,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    /// JSON sidecar with `unit`, `sample_spacing_m`, `wavelength_m`.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    uavs: usize,
    #[arg(long, value_enum, default_value = "all")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = trace::DEFAULT_WINDOW_SAMPLES)]
    window: usize,
    #[arg(long, default_value_t = trace::DEFAULT_CT_SAMPLES)]
    ct: usize,
    /// Window length in wavelengths; overrides `--window`.
    #[arg(long)]
    window_lambda: Option<f64>,
    /// Coherence time in wavelengths; overrides `--ct`.
    #[arg(long)]
    ct_lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "block-mean")]
    ct_estimator: CtEstimatorArg,
    /// Summary JSON; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    json: PathBuf,
    /// ECDF CSV of every strategy and every virtual UAV.
    #[arg(long)]
    ecdf: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    ecdf_points: usize,
    /// Selected power series as a trace CSV (single strategy only).
    #[arg(long)]
    series: Option<PathBuf>,
}

fn open_out(path: &Path) -> Result<Box<dyn Write>, Error> {
    if path == Path::new("-") {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

/// `#` provenance lines for CSV outputs.
fn write_meta(w: &mut dyn Write, command: &str, entries: &[(&str, String)]) -> Result<(), Error> {
    writeln!(w, "# shadowscatter {VERSION}")?;
    writeln!(w, "# command: {command}")?;
    for (k, v) in entries {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

fn json(p: &ChannelParams) -> Result<String, Error> {
    Ok(serde_json::to_string(p)?)
}

fn cmd_sample(a: &SampleArgs) -> Result<(), Error> {
    let params = a.channel.params()?;
    let batch = shadowscatter::model::sample_channel(&params, a.n, a.seed.seed())?;
    let mut w = open_out(&a.out.out)?;
    match a.out.format {
        Format::Csv => {
            write_meta(
                &mut w,
                "sample",
                &[("params", json(&params)?), ("seed", a.seed.seed.to_string()), ("stream", a.seed.stream.to_string())],
            )?;
            batch.write_csv(&mut w)?;
        }
        Format::Json => writeln!(w, "{}", batch.to_json()?)?,
    }
    w.flush()?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<(), Error> {
    let params = a.channel.params()?;
    let opts = EvalOptions::default().with_method(a.method.into());
    let mut w = open_out(&a.out)?;
    let metric = match a.metric {
        MetricArg::Pdf => "pdf",
        MetricArg::Cdf => "cdf",
        MetricArg::Op => "op",
        MetricArg::Bep => "bep",
        MetricArg::Capacity => "capacity",
    };
    write_meta(&mut w, &format!("eval --metric {metric}"), &[("params", json(&params)?)])?;
    match a.metric {
        MetricArg::Pdf | MetricArg::Cdf | MetricArg::Op => {
            let axis = a.sweep.axis("-10:30:1")?;
            let (function, x_name, value_header) = match a.metric {
                MetricArg::Pdf => (PointFunction::Pdf, "gamma", "pdf_per_linear_snr"),
                MetricArg::Cdf => (PointFunction::Cdf, "gamma", "cdf"),
                _ => (PointFunction::Cdf, "threshold", "outage_probability"),
            };
            let rows = analytics::point_sweep(&params, function, &axis.linear_values(), &opts)?;
            let printed = axis.printed().to_vec();
            let rows: Vec<_> = rows.into_iter().zip(&printed).map(|(r, &x)| analytics::SweepRow { x, ..r }).collect();
            analytics::write_point_sweep(&mut w, &axis.header(x_name), value_header, &rows, |x| x)?;
        }
        MetricArg::Bep | MetricArg::Capacity => {
            let axis = a.sweep.axis("0:30:5")?;
            if let Axis::Linear(v) = &axis {
                if v.iter().any(|x| *x <= 0.0) {
                    return Err(Error::Domain("average SNR must be positive".into()));
                }
            }
            let (metric, header) = match a.metric {
                MetricArg::Bep => (LinkMetric::Bep, "bep"),
                _ => (LinkMetric::Capacity, "capacity_bps_per_hz"),
            };
            let rows = analytics::metric_sweep(&params, metric, &axis.db_values(), &opts)?;
            analytics::write_metric_sweep(&mut w, header, &rows)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn with_method_hint(e: Error) -> Error {
    match e {
        Error::SeriesInapplicable(m) => {
            let m = m.replace("use the quadrature method", "rerun with `--method quadrature`");
            if m.contains("--method quadrature") {
                Error::SeriesInapplicable(m)
            } else {
                Error::SeriesInapplicable(format!("{m}; rerun with `--method quadrature`"))
            }
        }
        other => other,
    }
}

fn cmd_select(a: &SelectArgs) -> Result<(), Error> {
    let base = a.channel.params()?;
    let opts = EvalOptions::default().with_method(a.method.into());
    if a.uavs.is_empty() {
        return Err(Error::Domain("`--uavs` needs at least one value".into()));
    }
    let rows = match (a.table, a.mode) {
        (SelectTable::Op, SelectMode::Analytic) => {
            let axis = Axis::Db(a.sweep.axis("-10:20:1")?.db_values());
            selection::op_table(&base, &a.uavs, axis.printed(), &opts).map_err(with_method_hint)?
        }
        (SelectTable::Asnr, SelectMode::Analytic) => {
            let axis = Axis::Db(a.sweep.axis("0:30:5")?.db_values());
            selection::asnr_table(&base, &a.uavs, axis.printed(), &opts).map_err(with_method_hint)?
        }
        (table, SelectMode::Simulate) => {
            let default = if table == SelectTable::Op { "-10:20:1" } else { "0:30:5" };
            let axis = Axis::Db(a.sweep.axis(default)?.db_values());
            // Simulate at the base γ̄ (op) or at γ̄ = 1 (asnr, which scales
            // linearly in γ̄); stream `L` keeps the columns independent.
            let sim_base = if table == SelectTable::Op { base } else { base.with_gamma_bar(1.0)? };
            let sims: Vec<Vec<f64>> = a
                .uavs
                .iter()
                .map(|&l| {
                    let sel = SelectionParams::new(sim_base, l)?;
                    let seed = Seed::new(a.seed.seed, a.seed.stream.wrapping_add(l as u64));
                    let mut v = selection::simulate_selection(&sel, a.trials, seed, a.policy.into())?.values;
                    v.sort_by(f64::total_cmp);
                    Ok(v)
                })
                .collect::<Result<_, Error>>()?;
            axis.printed()
                .iter()
                .map(|&db| {
                    let row = sims
                        .iter()
                        .map(|v| match table {
                            SelectTable::Op => v.partition_point(|&x| x < db_to_linear(db)) as f64 / v.len() as f64,
                            SelectTable::Asnr => linear_to_db(db_to_linear(db) * v.iter().sum::<f64>() / v.len() as f64),
                        })
                        .collect();
                    (db, row)
                })
                .collect()
        }
    };
    let mut w = open_out(&a.out)?;
    let mode = if a.mode == SelectMode::Analytic { "analytic" } else { "simulate" };
    let mut meta = vec![("params", json(&base)?), ("mode", mode.to_string())];
    if a.mode == SelectMode::Simulate {
        meta.push(("seed", a.seed.seed.to_string()));
        meta.push(("trials", a.trials.to_string()));
        meta.push(("policy", Policy::from(a.policy).as_str().to_string()));
    }
    write_meta(&mut w, "select", &meta)?;
    match a.table {
        SelectTable::Op => selection::write_op_table(&mut w, &a.uavs, &rows)?,
        SelectTable::Asnr => selection::write_asnr_table(&mut w, &a.uavs, &rows)?,
    }
    w.flush()?;
    Ok(())
}

fn read_sample(path: &Path) -> Result<EmpiricalSample, Error> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let batch = SampleBatch::from_json(text.as_bytes())?;
        EmpiricalSample::new(batch.values).map_err(|e| Error::Parse(e.to_string()))
    } else {
        fitgof::parse_sample_csv(&text)
    }
}

fn cmd_fit(a: &FitArgs) -> Result<(), Error> {
    let sample = read_sample(&a.input)?;
    let opts = FitOptions { orders: a.orders.clone(), ..Default::default() };
    let fit = fitgof::fit_moments(&sample, a.model, &opts)?;
    let mut w = open_out(&a.out)?;
    writeln!(w, "{}", fit.to_json()?)?;
    w.flush()?;
    Ok(())
}

fn cmd_gof(a: &GofArgs) -> Result<(), Error> {
    let sample = read_sample(&a.input)?;
    let eval = EvalOptions::default();
    if a.fit.is_empty() && a.params.is_empty() {
        return Err(Error::Domain("give `--fit` models and/or `--params` files to score".into()));
    }
    let mut candidates = Vec::new();
    for tag in &a.fit {
        let fit = fitgof::fit_moments(&sample, *tag, &FitOptions::default())?;
        candidates.push(Candidate::from_fit(&fit, &eval)?);
    }
    for path in &a.params {
        let params: ChannelParams = serde_json::from_slice(&std::fs::read(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().map_or_else(|| "params".into(), |s| s.to_string_lossy().into_owned());
        candidates.push(Candidate::from_params(name, &params, &eval)?);
    }
    let opts = GofOptions {
        bins: BinSpec { count: a.bins, ..Default::default() },
        confidence: a.confidence,
        chunk: a.chunk,
    };
    let rows = fitgof::gof_table(&sample, &candidates, &opts)?;
    let mut w = open_out(&a.out.out)?;
    match a.out.format {
        Format::Csv => {
            write_meta(
                &mut w,
                "gof",
                &[
                    ("sample_sha256", sample.sha256()),
                    ("n", sample.len().to_string()),
                    ("bins", a.bins.to_string()),
                    ("confidence", a.confidence.to_string()),
                    ("ks_chunk", rows[0].chunk.to_string()),
                ],
            )?;
            fitgof::write_gof_csv(&mut w, &rows)?;
        }
        Format::Json => writeln!(w, "{}", fitgof::gof_json(&rows)?)?,
    }
    w.flush()?;
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<(), Error> {
    let params = a.channel.params()?;
    let spacing = a.spacing_m.unwrap_or(a.wavelength_m * 40.0 / a.stationarity.max(1) as f64);
    let cfg = SyntheticTrace {
        len: a.len,
        stationarity_samples: a.stationarity,
        coherence_samples: a.coherence,
        sample_spacing_m: spacing,
        wavelength_m: a.wavelength_m,
    };
    let t = cfg.generate(&params, a.seed.seed())?;
    let mut w = open_out(&a.out)?;
    writeln!(w, "# shadowscatter {VERSION}")?;
    writeln!(w, "# command: trace synth")?;
    writeln!(w, "# params: {}", json(&params)?)?;
    writeln!(w, "# seed: {}", a.seed.seed)?;
    t.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> Result<(), Error> {
    let t: PowerTrace = trace::load_trace(&a.trace, a.sidecar.as_deref())?;
    let parts = trace::split_virtual_uavs(&t, a.uavs)?;
    let mut cfg = StrategyConfig::new(Strategy::ShadowWindow, a.uavs);
    cfg.window_samples = a.window;
    cfg.ct_samples = a.ct;
    let spw = t.samples_per_wavelength();
    if let Some(l) = a.window_lambda {
        cfg.window_samples = StrategyConfig::from_wavelengths(cfg.strategy, a.uavs, l, 1e9, spw)?.window_samples;
    }
    if let Some(l) = a.ct_lambda {
        cfg.ct_samples = StrategyConfig::from_wavelengths(cfg.strategy, a.uavs, 1e9, l, spw)?.ct_samples;
    }
    cfg.ct_estimator = match a.ct_estimator {
        CtEstimatorArg::BlockMean => CtEstimator::BlockMean,
        CtEstimatorArg::Instantaneous => CtEstimator::Instantaneous,
    };
    let strategies = match a.strategy {
        StrategyArg::ShadowWindow => vec![Strategy::ShadowWindow],
        StrategyArg::CoherenceTime => vec![Strategy::CoherenceTime],
        StrategyArg::PerSample => vec![Strategy::PerSample],
        StrategyArg::All => vec![Strategy::ShadowWindow, Strategy::CoherenceTime, Strategy::PerSample],
    };
    if a.series.is_some() && strategies.len() != 1 {
        return Err(Error::Domain("`--series` needs a single `--strategy`".into()));
    }
    let results = strategies
        .iter()
        .map(|&s| trace::replay(&parts, &StrategyConfig { strategy: s, ..cfg }))
        .collect::<Result<Vec<_>, _>>()?;

    let summaries: Vec<_> = results.iter().map(|r| r.summary()).collect();
    let mut w = open_out(&a.json)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&summaries)?)?;
    w.flush()?;

    if let Some(path) = &a.ecdf {
        let mut all = results.clone();
        let mut labels: Vec<String> = strategies.iter().map(|s| s.as_str().to_string()).collect();
        for (i, p) in parts.iter().enumerate() {
            all.push(trace::replay(std::slice::from_ref(p), &StrategyConfig::new(Strategy::PerSample, 1))?);
            labels.push(format!("uav{}", i + 1));
        }
        let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let table = trace::ecdf_compare(&all, &label_refs, a.ecdf_points)?;
        let mut w = open_out(path)?;
        write_meta(
            &mut w,
            "trace replay",
            &[
                ("uavs", a.uavs.to_string()),
                ("window_samples", cfg.window_samples.to_string()),
                ("ct_samples", cfg.ct_samples.to_string()),
            ],
        )?;
        table.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &a.series {
        let r = &results[0];
        let out = PowerTrace::new(r.selected_power.clone(), r.unit, t.sample_spacing_m(), t.wavelength_m())?;
        let mut w = open_out(path)?;
        out.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Stable exit code per error class.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) => 3,
        Error::Parse(_) | Error::Json(_) => 4,
        Error::Unit(_) => 5,
        Error::Io(_) => 6,
        Error::Eval(_) => 7,
        Error::SeriesInapplicable(_) | Error::ClosedFormPole { .. } => 8,
        Error::MomentDivergence { .. } | Error::FitDiverged(_) | Error::MomentOutOfRange(_) => 9,
        Error::Binning(_) | Error::InsufficientLength { .. } | Error::LengthMismatch(_) => 10,
    }
}

fn error_class(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "DomainError",
        Error::Parse(_) | Error::Json(_) => "ParseError",
        Error::Unit(_) => "UnitError",
        Error::Io(_) => "IOError",
        Error::Eval(_) => "EvalError",
        Error::SeriesInapplicable(_) => "SeriesInapplicable",
        Error::ClosedFormPole { .. } => "ClosedFormPole",
        Error::MomentDivergence { .. } => "MomentDivergence",
        Error::FitDiverged(_) => "FitDiverged",
        Error::MomentOutOfRange(_) => "MomentOutOfRange",
        Error::Binning(_) => "BinningError",
        Error::InsufficientLength { .. } => "InsufficientLength",
        Error::LengthMismatch(_) => "LengthMismatch",
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Domain("`--threads` must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Domain(e.to_string()))?;
    }
    match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Select(a) => cmd_select(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Gof(a) => cmd_gof(a),
        Command::Trace(TraceCommand::Synth(a)) => cmd_synth(a),
        Command::Trace(TraceCommand::Replay(a)) => cmd_replay(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", error_class(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
