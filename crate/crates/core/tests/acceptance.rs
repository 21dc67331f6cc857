//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset: `cargo test --test acceptance -- 3 7`.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use shadowscatter::analytics::{self, db_to_linear, linear_to_db, CdfTable, EvalOptions, Method};
use shadowscatter::fitgof::{self, EmpiricalSample, FitOptions, ModelTag};
use shadowscatter::model::{sample_channel, LinkSampler};
use shadowscatter::rng::{self, Seed};
use shadowscatter::selection::{self, Policy, SelectionParams};
use shadowscatter::trace::{self, Strategy, StrategyConfig, SyntheticTrace};
use shadowscatter::{ChannelParams, DoubleShadowParams, SingleShadowParams};

const SEED: u64 = 0xACCE_5500;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ds(m1: f64, m2: f64, a1: f64, a2: f64, gbar: f64) -> ChannelParams {
    DoubleShadowParams::new(m1, m2, a1, a2, gbar).unwrap().into()
}

fn ss(m1: f64, m2: f64, a: f64, gbar: f64) -> ChannelParams {
    SingleShadowParams::new(m1, m2, a, gbar).unwrap().into()
}

fn reference() -> ChannelParams {
    ds(1.5, 1.8, 2.0, 2.5, 1.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Monte Carlo mean of `f(γ)` over `n` channel draws.
fn mc_mean(params: &ChannelParams, n: usize, seed: Seed, f: impl Fn(f64) -> f64 + Sync) -> f64 {
    let link = LinkSampler::new(params).unwrap();
    let sum = rng::reduce_blocks(
        n,
        seed,
        |r, len| (0..len).map(|_| f(link.draw_snr(r))).sum::<f64>(),
        |a, b| a + b,
        0.0,
    );
    sum / n as f64
}

/// `sup |F_e - F|` over a sample, written out directly.
fn sup_distance(values: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let n = 10_000_000;
    let sets = [(2.5, 2.5), (2.5, 3.0), (2.5, 4.0), (3.0, 3.0), (3.0, 4.0), (4.0, 4.0)];
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for (k, &(a1, a2)) in sets.iter().enumerate() {
        let t = Instant::now();
        let p = ds(1.5, 1.8, a1, a2, 1.0);
        let mc = mc_mean(&p, n, Seed::new(SEED, k as u64), |g| g);
        let want = 1.0 / ((a1 - 1.0) * (a2 - 1.0));
        worst = worst.max(rel(mc, want));
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    let msg = format!("max rel err {:.3}% (< 1%), slowest set {slowest:.1}s (< 60s)", 100.0 * worst);
    if worst < 0.01 && slowest < 60.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let opts = EvalOptions::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, p) in [("DS", reference()), ("SS", ss(1.5, 1.8, 2.5, 1.0))] {
        let table = CdfTable::for_channel(&p, &opts).unwrap();
        let mut v = sample_channel(&p, 1_000_000, Seed::new(SEED, 2)).unwrap().values;
        let d = sup_distance(&mut v, |g| table.eval(g));
        ok &= d < 0.005;
        parts.push(format!("{name} sup {d:.5}"));
    }
    let secs = t.elapsed().as_secs_f64();
    let msg = format!("{} (< 0.005), {secs:.1}s (< 120s)", parts.join(", "));
    if ok && secs < 120.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_3() -> Outcome {
    let bits = 10_000_000;
    let opts = EvalOptions::default();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut ds_above_ss = true;
    for (c, &(m1, a1)) in [(1.0, 2.0), (2.0, 3.0)].iter().enumerate() {
        for (j, db) in [0.0, 5.0, 10.0, 15.0].into_iter().enumerate() {
            let g = db_to_linear(db);
            let p = ds(m1, m1 + 0.3, a1, a1 + 0.3, g);
            let bep = analytics::bep_bpsk(&p, &opts).unwrap().value;
            // BPSK bit with unit energy per bit: error iff sqrt(2γ) + n < 0.
            let link = LinkSampler::new(&p).unwrap();
            let errors = rng::reduce_blocks(
                bits,
                Seed::new(SEED, (10 * c + j) as u64),
                |r, len| {
                    (0..len)
                        .filter(|_| {
                            let gamma = link.draw_snr(r);
                            let noise: f64 = r.sample(StandardNormal);
                            (2.0 * gamma).sqrt() + noise < 0.0
                        })
                        .count()
                },
                |a, b| a + b,
                0,
            );
            let mc = errors as f64 / bits as f64;
            if bep >= 1e-3 {
                worst = worst.max(rel(bep, mc));
                checked += 1;
            }
            let s = ss(m1, m1 + 0.3, a1, g);
            ds_above_ss &= bep > analytics::bep_bpsk(&s, &opts).unwrap().value;
        }
    }
    let msg = format!(
        "max rel err {:.2}% over {checked} points with BEP >= 1e-3 (< 2%); DS > SS pointwise: {ds_above_ss}",
        100.0 * worst
    );
    if worst < 0.02 && ds_above_ss {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Outcome {
    let n = 10_000_000;
    let opts = EvalOptions::default();
    let mut worst: f64 = 0.0;
    let mut shape_ok = true;
    for (j, db) in [0.0, 10.0, 20.0].into_iter().enumerate() {
        let mut c = Vec::new();
        for (k, a1) in [2.0, 3.0, 4.0].into_iter().enumerate() {
            let p = ds(1.5, 1.8, a1, a1 + 0.1, db_to_linear(db));
            let cap = analytics::capacity(&p, 1.0, &opts).unwrap().value;
            let mc = mc_mean(&p, n, Seed::new(SEED, (10 * j + k) as u64), |g| g.ln_1p() / std::f64::consts::LN_2);
            worst = worst.max(rel(cap, mc));
            c.push(cap);
        }
        shape_ok &= c[0] > c[1] && c[1] > c[2] && c[0] - c[1] > c[1] - c[2];
    }
    let msg = format!(
        "max rel err {:.3}% (< 1%); strictly decreasing in alpha1 with shrinking steps: {shape_ok}",
        100.0 * worst
    );
    if worst < 0.01 && shape_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_5() -> Outcome {
    let series = EvalOptions::default().with_method(Method::Series);
    let quad = EvalOptions::default().with_method(Method::Quadrature);
    let grid: Vec<f64> = (0..50).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0)).collect();
    let mut parts = Vec::new();
    let mut ok = true;
    for (c, a1) in [2.0, 2.5].into_iter().enumerate() {
        for l in [2, 3] {
            let sel = SelectionParams::new(ds(1.5, 1.8, a1, 2.5, 1.0), l).unwrap();
            // Series versus the order-statistics quadrature on the grid.
            let mut series_err: Result<f64, String> = Ok(0.0);
            for &y in &grid {
                let q = selection::pdf_imax_ds(&sel, y, &quad).unwrap().value;
                match selection::pdf_imax_ds(&sel, y, &series) {
                    Ok(s) => series_err = series_err.map(|e| e.max(rel(s.value, q))),
                    Err(e) => {
                        series_err = Err(e.to_string());
                        break;
                    }
                }
            }
            // Difference quotient of the max-of-L ECDF in ln y.
            let mut draws = selection::simulate_shadow_max(&sel, 10_000_000, Seed::new(SEED, (10 * c + l) as u64))
                .unwrap();
            draws.sort_by(f64::total_cmp);
            let n = draws.len() as f64;
            let h: f64 = 0.1;
            let mut mc_err: f64 = 0.0;
            for qt in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
                let y = draws[(qt * n) as usize];
                let (lo, hi) = (y * (-h / 2.0).exp(), y * (h / 2.0).exp());
                let count = draws.partition_point(|&v| v <= hi) - draws.partition_point(|&v| v <= lo);
                let density = count as f64 / n / (hi - lo);
                let route = match &series_err {
                    Ok(_) => selection::pdf_imax_ds(&sel, y, &series).unwrap().value,
                    Err(_) => selection::pdf_imax_ds(&sel, y, &quad).unwrap().value,
                };
                mc_err = mc_err.max(rel(route, density));
            }
            let tag = format!("a1={a1} L={l}");
            match series_err {
                Ok(e) => {
                    ok &= e < 1e-6 && mc_err < 0.02;
                    parts.push(format!("{tag}: series/quad {e:.1e}, vs MC {:.2}%", 100.0 * mc_err));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("{tag}: series unavailable ({e}); quad vs MC {:.2}%", 100.0 * mc_err));
                }
            }
        }
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6() -> Outcome {
    let opts = EvalOptions::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for l in [1, 2, 3, 5] {
        let sel = SelectionParams::new(reference(), l).unwrap();
        let table = selection::cdf_out_table(&sel, &opts).unwrap();
        let mut v = selection::simulate_selection(&sel, 1_000_000, Seed::new(SEED, 60 + l as u64), Policy::ShadowMax)
            .unwrap()
            .values;
        let d = sup_distance(&mut v, |g| table.eval(g));
        ok &= d < 0.005;
        parts.push(format!("L={l} sup {d:.4}"));
    }
    let mut shape_ok = true;
    for db in [-10.0, -5.0, 0.0, 5.0, 10.0] {
        let op: Vec<f64> = [1, 2, 3, 5]
            .iter()
            .map(|&l| selection::cdf_out(&SelectionParams::new(reference(), l).unwrap(), db_to_linear(db), &opts).unwrap().value)
            .collect();
        let gains = [op[0] - op[1], op[1] - op[2], (op[2] - op[3]) / 2.0];
        shape_ok &= op.windows(2).all(|w| w[0] > w[1]) && gains[0] > gains[1] && gains[1] > gains[2];
    }
    ok &= shape_ok;
    let msg = format!("{} (< 0.005); OP decreasing in L with diminishing per-UAV gains: {shape_ok}", parts.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn asnr_db_row(base: &ChannelParams, opts: &EvalOptions) -> Vec<f64> {
    [1, 2, 3, 5]
        .iter()
        .map(|&l| linear_to_db(selection::asnr(&SelectionParams::new(*base, l).unwrap(), opts).unwrap().value))
        .collect()
}

fn criterion_7() -> Outcome {
    let opts = EvalOptions::default();
    let n = 10_000_000;
    let mut worst: f64 = 0.0;
    for (k, base) in [ds(1.5, 1.8, 3.0, 3.5, 1.0), ss(1.5, 1.8, 3.0, 1.0)].iter().enumerate() {
        for l in [1, 2, 3, 5] {
            let sel = SelectionParams::new(*base, l).unwrap();
            let closed = match base {
                ChannelParams::Double(_) => selection::asnr_ds(&sel, &opts),
                ChannelParams::Single(_) => selection::asnr_ss(&sel, &opts),
            }
            .unwrap();
            assert_eq!(closed.method, analytics::MethodTag::ClosedForm);
            let mc = selection::simulate_selection(&sel, n, Seed::new(SEED, (70 + 10 * k + l) as u64), Policy::ShadowMax)
                .unwrap()
                .mean();
            worst = worst.max(rel(closed.value, mc));
        }
    }

    let mut m_independent = true;
    for base in [ds(1.0, 1.0, 1.5, 2.0, 1.0), ds(1.0, 1.0, 3.0, 3.5, 1.0), ss(1.0, 1.0, 3.0, 1.0)] {
        let mut seen = None;
        for m1 in [0.8, 1.5, 3.0] {
            for m2 in [0.8, 1.5, 3.0] {
                let p = match base {
                    ChannelParams::Double(p) => ds(m1, m2, p.alpha1(), p.alpha2(), 1.0),
                    ChannelParams::Single(p) => ss(m1, m2, p.alpha(), 1.0),
                };
                let v = selection::asnr(&SelectionParams::new(p, 3).unwrap(), &opts).unwrap().value;
                m_independent &= *seen.get_or_insert(v) == v;
            }
        }
    }

    // Gaps between consecutive L curves, in dB (the γ̄ axis only shifts them).
    let gaps = |row: Vec<f64>| row.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    let mild = gaps(asnr_db_row(&ds(1.5, 1.8, 1.5, 2.0, 1.0), &opts));
    let severe = gaps(asnr_db_row(&ds(1.5, 1.8, 3.0, 3.5, 1.0), &opts));
    let gaps_larger = severe.iter().zip(&mild).all(|(s, m)| s > m);
    let fmt = |g: &[f64]| g.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join("/");
    let ds_ss = |a1: f64| {
        let d = linear_to_db(selection::asnr(&SelectionParams::new(ds(1.5, 1.8, a1, a1 + 0.5, 1.0), 3).unwrap(), &opts).unwrap().value);
        let s = linear_to_db(selection::asnr(&SelectionParams::new(ss(1.5, 1.8, a1, 1.0), 3).unwrap(), &opts).unwrap().value);
        s - d
    };
    let msg = format!(
        "closed forms vs MC max rel err {:.3}% (< 1%); m-independent (exact): {m_independent}; \
         inter-L gaps dB at alpha1=3 {} vs alpha1=1.5 {}, larger at alpha1=3: {gaps_larger} \
         [info: SS-DS gap at L=3 is {:.2} dB at alpha1=1.5 vs {:.2} dB at alpha1=3]",
        100.0 * worst,
        fmt(&severe),
        fmt(&mild),
        ds_ss(1.5),
        ds_ss(3.0),
    );
    if worst < 0.01 && m_independent && gaps_larger {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8() -> Outcome {
    let grid = [
        (1.5, 1.8, 2.0, 2.5, 1.0),
        (1.0, 2.0, 3.0, 4.0, 2.0),
        (2.0, 3.0, 2.5, 5.0, 0.5),
        (0.8, 1.2, 4.0, 6.0, 1.0),
    ];
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for (k, &(m1, m2, a1, a2, g)) in grid.iter().enumerate() {
        let truth = ds(m1, m2, a1, a2, g);
        let s = EmpiricalSample::new(sample_channel(&truth, 1_000_000, Seed::new(SEED, 80 + k as u64)).unwrap().values)
            .unwrap();
        let fit = fitgof::fit_moments(&s, ModelTag::Dig, &FitOptions::default()).unwrap();
        let ChannelParams::Double(f) = fit.params else { unreachable!() };
        let errs = [
            rel(f.m1(), m1),
            rel(f.m2(), m2),
            rel(f.alpha1(), a1),
            rel(f.alpha2(), a2),
            rel(f.gamma_bar(), g),
        ];
        let e = errs.iter().cloned().fold(0.0, f64::max);
        if e > worst {
            worst = e;
            worst_at = format!("({m1}, {m2}, {a1}, {a2}, {g})");
        }
    }

    let truth = reference();
    let table = CdfTable::for_channel(&truth, &EvalOptions::default()).unwrap();
    let n = 10_000;
    let threshold = fitgof::ks_critical(0.95) / (n as f64).sqrt();
    let trial = |t: u64| {
        let mut v = sample_channel(&truth, n, Seed::new(SEED ^ 0x8B, t)).unwrap().values;
        sup_distance(&mut v, |g| table.eval(g)) < threshold
    };
    let passes = (0..200u64).filter(|&t| trial(t)).count();
    // The first 200 trials are the criterion; the rest only estimate the true rate.
    let long_run = passes + (200..2000u64).filter(|&t| trial(t)).count();
    let msg = format!(
        "DIG moment fit worst param rel err {:.1}% at {worst_at} (< 10%); K-S self-test passed {passes}/200 (>= 190) \
         [info: {long_run}/2000 = {:.1}% over a longer run]",
        100.0 * worst,
        long_run as f64 / 20.0
    );
    if worst < 0.1 && passes >= 190 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_9() -> Outcome {
    let p = reference();
    // 20570 is a common multiple of 242 and 170.
    let per_uav = 20_570 * 10;
    let t = SyntheticTrace::new(3 * per_uav).generate(&p, Seed::new(SEED, 90)).unwrap();
    let parts = trace::split_virtual_uavs(&t, 3).unwrap();
    let sw = trace::replay(&parts, &StrategyConfig::new(Strategy::ShadowWindow, 3)).unwrap();
    let ct = trace::replay(&parts, &StrategyConfig::new(Strategy::CoherenceTime, 3)).unwrap();
    let d = trace::ecdf_distance(&sw.power_db(), &ct.power_db());
    let exact = ct.comparisons * 170 == sw.comparisons * 242;
    let dominates = parts.iter().all(|u| {
        let own = trace::replay(std::slice::from_ref(u), &StrategyConfig::new(Strategy::PerSample, 1)).unwrap();
        sw.mean_db() > own.mean_db() && sw.p10_db() > own.p10_db()
    });

    // Cadences in wavelengths on a trace sampled so that 0.7λ spans 170 samples.
    let spw = 170.0 / 0.7;
    let cfg = StrategyConfig::from_wavelengths(Strategy::ShadowWindow, 3, 40.0, 0.7, spw).unwrap();
    let len = cfg.window_samples * cfg.ct_samples;
    let fine = SyntheticTrace {
        stationarity_samples: cfg.window_samples,
        sample_spacing_m: 0.15 / spw,
        ..SyntheticTrace::new(3 * len)
    }
    .generate(&p, Seed::new(SEED, 91))
    .unwrap();
    let fine_parts = trace::split_virtual_uavs(&fine, 3).unwrap();
    let sw_l = trace::replay(&fine_parts, &cfg).unwrap();
    let ct_l = trace::replay(&fine_parts, &StrategyConfig { strategy: Strategy::CoherenceTime, ..cfg }).unwrap();
    let ratio = ct_l.comparisons as f64 / sw_l.comparisons as f64;

    let msg = format!(
        "SW vs CT ECDF sup {d:.4} (< 0.05); comparisons {}/{} = 242/170 exactly: {exact}; \
         40λ vs 0.7λ ({} vs {} samples) comparison ratio {ratio:.2} (~57); SW beats every UAV in mean and p10: {dominates}",
        ct.comparisons, sw.comparisons, cfg.window_samples, cfg.ct_samples
    );
    if d < 0.05 && exact && (ratio - 57.0).abs() < 0.5 && dominates {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// ∫ f(γ) dγ by the trapezoid rule in ln γ over ±60 around the log-mode.
fn total_mass(params: &ChannelParams, opts: &EvalOptions) -> f64 {
    let center = analytics::mean_ln_shadow(params) + analytics::mean_ln_multipath(params);
    let h = 0.05;
    let n = (120.0 / h) as usize;
    (0..=n)
        .map(|i| {
            let s = center - 60.0 + h * i as f64;
            let g = s.exp();
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * h * g * analytics::pdf(params, g, opts).unwrap().value
        })
        .sum()
}

fn criterion_10() -> Outcome {
    let opts = EvalOptions::default();
    let m_pairs = [(0.7, 1.2), (1.5, 1.8), (3.0, 4.0)];
    let mut grid = Vec::new();
    for &(m1, m2) in &m_pairs {
        for (a1, a2) in [(1.5, 2.0), (2.0, 2.5), (3.5, 5.0)] {
            grid.push(ds(m1, m2, a1, a2, 1.0));
        }
        for a in [1.5, 2.5, 4.0] {
            grid.push(ss(m1, m2, a, 1.0));
        }
    }
    let probes: Vec<f64> = (0..200).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 199.0)).collect();
    let mut norm_err: f64 = 0.0;
    let mut swap_err: f64 = 0.0;
    let mut scale_err: f64 = 0.0;
    let mut monotone = true;
    let mut degen_err: f64 = 0.0;
    for p in &grid {
        norm_err = norm_err.max((total_mass(p, &opts) - 1.0).abs());

        // Swapping the two hops must not change anything.
        let swapped = match p {
            ChannelParams::Double(d) => ds(d.m2(), d.m1(), d.alpha2(), d.alpha1(), 1.0),
            ChannelParams::Single(s) => ss(s.m2(), s.m1(), s.alpha(), 1.0),
        };
        for &g in probes.iter().step_by(20) {
            let a = analytics::pdf(p, g, &opts).unwrap().value;
            let b = analytics::pdf(&swapped, g, &opts).unwrap().value;
            swap_err = swap_err.max(rel(b, a));
        }
        for ln_y in [-3.0, 0.0, 2.0] {
            if let ChannelParams::Double(d) = p {
                let k1 = analytics::ln_pdf_double_nakagami(d.m1(), d.m2(), 1.0, ln_y);
                let k2 = analytics::ln_pdf_double_nakagami(d.m2(), d.m1(), 1.0, ln_y);
                let i1 = analytics::ln_pdf_double_ig(d.alpha1(), d.alpha2(), 1.0, ln_y);
                let i2 = analytics::ln_pdf_double_ig(d.alpha2(), d.alpha1(), 1.0, ln_y);
                swap_err = swap_err.max((k1 - k2).abs()).max((i1 - i2).abs());
            }
        }

        // Scaling γ̄ by c scales the SNR by c.
        let c = 10.0;
        let scaled = p.with_gamma_bar(c).unwrap();
        for &g in probes.iter().step_by(20) {
            let f = analytics::pdf(p, g, &opts).unwrap().value;
            let fs = analytics::pdf(&scaled, c * g, &opts).unwrap().value;
            let cd = analytics::cdf(p, g, &opts).unwrap().value;
            let cds = analytics::cdf(&scaled, c * g, &opts).unwrap().value;
            scale_err = scale_err.max(rel(c * fs, f)).max((cds - cd).abs());
        }

        let cdfs: Vec<f64> = probes.iter().map(|&g| analytics::cdf(p, g, &opts).unwrap().value).collect();
        monotone &= cdfs.windows(2).all(|w| w[1] >= w[0]) && cdfs.iter().all(|v| (0.0..=1.0).contains(v));

        // One UAV: selection output is the plain link.
        let one = SelectionParams::new(*p, 1).unwrap();
        for &g in probes.iter().step_by(40) {
            let a = selection::cdf_out(&one, g, &opts).unwrap().value;
            let b = analytics::cdf(p, g, &opts).unwrap().value;
            let fa = selection::pdf_out(&one, g, &opts).unwrap().value;
            let fb = analytics::pdf(p, g, &opts).unwrap().value;
            degen_err = degen_err.max((a - b).abs()).max(rel(fa, fb));
        }
        degen_err = degen_err.max(rel(selection::asnr(&one, &opts).unwrap().value, p.mean()));
    }
    let msg = format!(
        "{} parameter sets: |mass-1| {norm_err:.1e} (<= 1e-6), swap {swap_err:.1e}, scale {scale_err:.1e}, \
         CDF monotone {monotone}, L=1 degeneracy {degen_err:.1e}",
        grid.len()
    );
    if norm_err <= 1e-6 && swap_err < 1e-8 && scale_err < 1e-8 && monotone && degen_err < 1e-7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("mean identity", criterion_1),
        ("distributional agreement", criterion_2),
        ("BEP oracle", criterion_3),
        ("capacity oracle", criterion_4),
        ("selection series resolution", criterion_5),
        ("selection statistics", criterion_6),
        ("ASNR closed forms", criterion_7),
        ("fitting round-trip and K-S calibration", criterion_8),
        ("trace replay", criterion_9),
        ("invariant suite", criterion_10),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (i, (title, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(m) => println!("criterion {id:>2} PASS  {title}: {m} [{secs:.1}s]"),
            Err(m) => {
                println!("criterion {id:>2} FAIL  {title}: {m} [{secs:.1}s]");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria pass");
}
