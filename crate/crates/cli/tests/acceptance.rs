//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use anyhow::Result;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;
use wiretap::bccm::{bccm_point_bec, bccm_point_errorfree, bccm_region, optimize_bccm_split, BccmMode, BccmModel, PowerSplit};
use wiretap::mc::{scaling_law_experiment, ScalingConfig, SimConfig};
use wiretap::optimizer::{
    bounds_ladder, cm_bounds, im_bounds, optimize_bounds, optimize_high_snr_thresholds, optimize_policy,
    optimize_power_function, optimize_powers_given_thresholds, OptimizerSpec,
};
use wiretap::quantizer::uniform_mass_thresholds;
use wiretap::rates::{Evaluator, Message, Side};
use wiretap::{GainDistribution, QuantizerPolicy, Scenario};
use wiretap_cli::commands::oracle_checks;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<Outcome>)> = vec![
        ("bound ordering on random scenarios", bound_ordering),
        ("lower bounds grow with feedback bits", feedback_monotonicity),
        ("fine quantization approaches perfect CSIT", perfect_csit_limit),
        ("high-SNR saturation", high_snr_saturation),
        ("analytic evaluators agree with simulation", oracle_equivalence),
        ("BCCM reductions are exact", bccm_reductions),
        ("BCCM erasure and eavesdropper trends", bccm_trends),
        ("redundant feedback bits under erasures", redundant_bits),
        ("scaling gap shrinks with K", scaling_gap),
        ("optimizers match grid and waterfilling oracles", optimizer_oracles),
        ("CLI output is deterministic", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match res {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e:#}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail} ({secs:.1} s)", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn bound_ordering() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut combos = Vec::new();
    for k in [1usize, 3, 10] {
        for b in [1u32, 2, 4] {
            for p in [0.0, 5.0, 20.0] {
                combos.push((k, b, p));
            }
        }
    }
    combos.shuffle(&mut rng);
    let spec = OptimizerSpec::default();
    let mut worst = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    for &(k, b, p) in combos.iter().take(20) {
        let s = rng.gen_range(0.5..2.0);
        let scn = Scenario::rayleigh(k, b, db(p), s)?;
        for (name, r) in [("cm", cm_bounds(&scn, &spec)?), ("im", im_bounds(&scn, &spec)?)] {
            worst = worst.max(r.lower - r.upper);
            if !r.is_ordered(1e-6) {
                bad.push(format!("{name} K={k} b={b} P={p} dB"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && secs < 600.0,
        format!("40 pairs, max lower-upper {worst:.3e}, unordered {bad:?}, {secs:.0} s of 600"),
    )
}

fn feedback_monotonicity() -> Result<Outcome> {
    let spec = OptimizerSpec::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [5.0, 20.0] {
        let scn = Scenario::rayleigh(3, 4, db(p), 1.0)?;
        for (name, message) in [("cm", Message::Common), ("im", Message::Independent)] {
            let ladder = bounds_ladder(&Evaluator::new(&scn, message), 4, &spec)?;
            let lower: Vec<f64> = ladder.iter().map(|r| r.lower).collect();
            ok &= lower.windows(2).all(|w| w[1] >= w[0] - 1e-4);
            notes.push(format!("{name}@{p}dB {:.4}..{:.4}", lower[0], lower[3]));
        }
    }
    outcome(ok, notes.join(", "))
}

fn perfect_csit_limit() -> Result<Outcome> {
    let spec = OptimizerSpec::default();
    let scn = Scenario::rayleigh(3, 10, 10.0, 1.0)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, message) in [("cm", Message::Common), ("im", Message::Independent)] {
        let eval = Evaluator::new(&scn, message);
        let t = uniform_mass_thresholds(eval.gate(), scn.q())?;
        let lo = optimize_powers_given_thresholds(&eval, Side::Lower, &t, &spec)?.value;
        let up = optimize_powers_given_thresholds(&eval, Side::Upper, &t, &spec)?.value;
        let (_, cap) = optimize_power_function(&eval, &spec)?;
        ok &= up - lo <= 0.05 && (cap - lo).abs() <= 0.05 && (cap - up).abs() <= 0.05;
        notes.push(format!("{name} lower {lo:.4} upper {up:.4} csit {cap:.4}"));
    }
    outcome(ok, notes.join(", "))
}

fn high_snr_saturation() -> Result<Outcome> {
    let spec = OptimizerSpec::default();
    let scn = Scenario::rayleigh(3, 2, db(40.0), 1.0)?;
    let mut worst = 0.0f64;
    for message in [Message::Common, Message::Independent] {
        let eval = Evaluator::new(&scn, message);
        let hu = eval.high_snr_upper();
        for b in [1u32, 2] {
            let r = optimize_bounds(&eval, b, &spec, None)?;
            let (_, hl) = optimize_high_snr_thresholds(&eval, 1 << b, &spec)?;
            worst = worst.max((r.lower - hl).abs()).max((r.upper - hu).abs());
        }
    }
    outcome(worst <= 1e-2, format!("K=3 at 40 dB, b=1,2, max gap {worst:.2e}"))
}

fn oracle_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let rayleigh = |m: f64| GainDistribution::rayleigh(m);
    let suite = vec![
        Scenario::rayleigh(1, 1, 1.0, 1.0)?,
        Scenario::rayleigh(3, 2, db(5.0), 1.0)?,
        Scenario::rayleigh(10, 1, 100.0, 0.5)?.with_epsilon(0.2)?,
        Scenario::new(
            vec![rayleigh(1.0)?, rayleigh(2.0)?, GainDistribution::erlang(2, 1.0)?],
            GainDistribution::exponential(0.7)?,
            2,
            db(5.0),
        )?
        .with_epsilon(0.3)?,
        Scenario::rayleigh(3, 4, 10.0, 2.0)?.with_epsilon(0.1)?,
    ];
    let sim = SimConfig::default();
    let mut per: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut misses = Vec::new();
    for (i, scn) in suite.iter().enumerate() {
        for c in oracle_checks(scn, &sim)? {
            let family = c.quantity.trim_end_matches(|ch: char| ch.is_ascii_digit() || ch == '_').to_string();
            let family = family.trim_end_matches("_R").to_string();
            let entry = per.entry(family).or_default();
            entry.1 += 1;
            if c.estimate.agrees_with(c.analytic, 3.0) {
                entry.0 += 1;
            } else {
                misses.push(format!("#{} {} {:.2} SE", i + 1, c.quantity, (c.estimate.mean - c.analytic) / c.estimate.stderr));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let summary: Vec<String> = per.iter().map(|(k, (p, n))| format!("{k} {p}/{n}")).collect();
    outcome(
        misses.is_empty() && secs < 900.0,
        format!("L=1e6, {}; outside 3 SE: {misses:?}, {secs:.0} s of 900", summary.join(" ")),
    )
}

fn bccm_reductions() -> Result<Outcome> {
    let mut ok = true;
    let mut checked = 0;
    // budget shares of (p01, p02, p1), turned into powers with the weights of each mode
    let shares = [(0.2, 0.5, 0.3), (0.0, 1.0, 0.0), (0.6, 0.1, 0.3)];
    let split = |scn: &Scenario, mode: BccmMode, (a, b, c): (f64, f64, f64)| {
        let w = BccmModel::new(scn).weights(mode);
        let over = |x: f64, wt: f64| if wt > 0.0 { x * scn.p_avg / wt } else { 0.0 };
        PowerSplit { p01: over(a, w.a), p02: over(b, w.ac), p1: over(c, w.a) }
    };
    for scn in [Scenario::rayleigh(1, 1, db(5.0), 1.0)?, Scenario::rayleigh(3, 1, 10.0, 0.5)?] {
        let model = BccmModel::new(&scn);
        let clean = scn.clone().with_epsilon(0.0)?;
        let lost = scn.clone().with_epsilon(1.0)?;
        let bec1 = BccmMode::Bec { bits: 1 };
        for &sh in &shares {
            let s = split(&scn, BccmMode::ErrorFree, sh);
            ok &= bccm_point_errorfree(&scn, &s)? == bccm_point_bec(&clean, &split(&clean, bec1, sh), 1)?;
            ok &= model.cell_point(&[0.0], std::slice::from_ref(&s))? == bccm_point_errorfree(&scn, &s)?;
            ok &= bccm_point_bec(&lost, &split(&lost, bec1, sh), 1)?.r1 == 0.0;
            for (eps, b) in [(0.3, 2u32), (0.7, 3)] {
                let multi_scn = scn.clone().with_epsilon(eps)?;
                let single_scn = scn.clone().with_epsilon(f64::powi(eps, b as i32))?;
                let multi = bccm_point_bec(&multi_scn, &split(&multi_scn, BccmMode::Bec { bits: b }, sh), b)?;
                let single = bccm_point_bec(&single_scn, &split(&single_scn, bec1, sh), 1)?;
                ok &= multi == single;
            }
            checked += 1;
        }
        ok &= bccm_region(&scn, BccmMode::ErrorFree, 6)? == bccm_region(&clean, bec1, 6)?;
        ok &= bccm_region(&lost, bec1, 6)?.max_r1() == 0.0;
        let multi = bccm_region(&scn.clone().with_epsilon(0.6)?, BccmMode::Bec { bits: 2 }, 6)?;
        let single = bccm_region(&scn.clone().with_epsilon(0.6f64.powi(2))?, bec1, 6)?;
        ok &= multi == single;
    }
    outcome(ok, format!("{checked} splits and 6 regions compared bit for bit"))
}

fn bccm_trends() -> Result<Outcome> {
    let scn = Scenario::rayleigh(1, 1, db(5.0), 1.0)?;
    let mut max_r1 = Vec::new();
    let mut ends = Vec::new();
    for eps in [0.0, 0.2, 0.5, 0.8] {
        let curve = bccm_region(&scn.clone().with_epsilon(eps)?, BccmMode::Bec { bits: 1 }, 11)?;
        max_r1.push(curve.max_r1());
        ends.push(curve.r0_endpoint());
    }
    let decreasing = max_r1.windows(2).all(|w| w[1] < w[0]);
    let spread = ends.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - ends.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let strong = bccm_region(&scn, BccmMode::ErrorFree, 11)?;
    let weak = bccm_region(&Scenario::rayleigh(1, 1, db(5.0), 0.5)?, BccmMode::ErrorFree, 11)?;
    let trade = weak.max_r1() > strong.max_r1() && weak.max_r0() < strong.max_r0();
    outcome(
        decreasing && spread <= 1e-6 && trade,
        format!(
            "max R1 over eps {max_r1:.4?}, R0 endpoint spread {spread:.1e}, sigma_e2 0.5 vs 1: R1 {:.4} > {:.4}, R0 {:.4} < {:.4}",
            weak.max_r1(),
            strong.max_r1(),
            weak.max_r0(),
            strong.max_r0()
        ),
    )
}

fn redundant_bits() -> Result<Outcome> {
    let scn = Scenario::rayleigh(1, 1, db(5.0), 1.0)?.with_epsilon(0.8)?;
    let mut max = Vec::new();
    for bits in 1..=3 {
        max.push(bccm_region(&scn, BccmMode::Bec { bits }, 6)?.max_r1());
    }
    outcome(max.windows(2).all(|w| w[1] >= w[0]), format!("eps=0.8, max R1 for b=1,2,3: {max:.4?}"))
}

fn scaling_gap() -> Result<Outcome> {
    let start = Instant::now();
    let eve = GainDistribution::rayleigh(1.0)?;
    let rows = scaling_law_experiment(&eve, &[100, 1_000, 10_000, 100_000, 1_000_000], &ScalingConfig::default(), None)?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap_plus).collect();
    let secs = start.elapsed().as_secs_f64();
    outcome(gaps.windows(2).all(|w| w[1] < w[0]) && secs < 120.0, format!("gap_plus {gaps:.4?}, {secs:.1} s of 120"))
}

/// Exponential integral E1 for x > 0.
fn e1(x: f64) -> f64 {
    if x < 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            term *= -x / k as f64;
            sum -= term / k as f64;
        }
        -0.577_215_664_901_532_9 - x.ln() + sum
    } else {
        // modified Lentz on the continued fraction e^{-x} / (x + 1 / (1 + 1 / (x + 2 / (1 + ...))))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..300 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Rate of one fixed-power interval [tau, inf) for a unit Rayleigh receiver, eve mean `s`.
fn fixed_rate_term(tau: f64, p: f64, s: f64) -> f64 {
    let a = 1.0 / (s * p);
    let tail = if a < 700.0 { a.exp() * (e1(a) - e1(a + tau / s)) } else { tau * p / (1.0 + tau * p) };
    ((tau * p).ln_1p() - tail) / LN_2
}

fn rayleigh_lower(t: &[f64], p: &[f64], s: f64) -> f64 {
    (0..t.len())
        .map(|i| {
            let hi = t.get(i + 1).map_or(0.0, |h| (-h).exp());
            ((-t[i]).exp() - hi) * fixed_rate_term(t[i], p[i], s)
        })
        .sum()
}

/// Grid maximum of `f` over a box, zoomed around the best cell `rounds` times.
fn zoom_grid(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], n: usize, rounds: usize) -> f64 {
    let d = lo.len();
    let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
    let mut best = f64::NEG_INFINITY;
    for _ in 0..rounds {
        let mut arg = lo.clone();
        let mut idx = vec![0usize; d];
        loop {
            let x: Vec<f64> = (0..d).map(|j| lo[j] + (hi[j] - lo[j]) * idx[j] as f64 / n as f64).collect();
            let v = f(&x);
            if v > best {
                best = v;
                arg = x;
            }
            let mut j = 0;
            while j < d {
                idx[j] += 1;
                if idx[j] <= n {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == d {
                break;
            }
        }
        for j in 0..d {
            let h = 2.0 * (hi[j] - lo[j]) / n as f64;
            let (a, b) = ((arg[j] - h).max(lo[j]), (arg[j] + h).min(hi[j]));
            lo[j] = a;
            hi[j] = b;
        }
    }
    best
}

/// Rayleigh waterfilling with a silent eavesdropper.
fn waterfilling(p_avg: f64) -> f64 {
    let used = |g: f64| (-g).exp() / g - e1(g);
    let (mut lo, mut hi) = (1e-6, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(mid) > p_avg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    e1(0.5 * (lo + hi)) / LN_2
}

fn optimizer_oracles() -> Result<Outcome> {
    let spec = OptimizerSpec::default();
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    let mut track = |name: String, opt: f64, oracle: f64| {
        worst = worst.max((opt - oracle).abs());
        notes.push(format!("{name} {:+.1e}", opt - oracle));
    };
    for (p_db, s) in [(5.0, 1.0), (0.0, 0.5), (20.0, 1.0)] {
        let p_avg = db(p_db);
        let scn = Scenario::rayleigh(1, 0, p_avg, s)?;
        let eval = Evaluator::new(&scn, Message::Common);
        let opt = optimize_policy(&eval, Side::Lower, 1, &spec, &[])?.value;
        // the budget binds, so the power is P e^{tau}
        let f = |x: &[f64]| rayleigh_lower(&[x[0]], &[p_avg * x[0].exp()], s);
        track(format!("Q=1@{p_db}dB"), opt, zoom_grid(&f, &[0.0], &[8.0], 4000, 4));
    }
    {
        let p_avg = db(5.0);
        let scn = Scenario::rayleigh(1, 1, p_avg, 1.0)?;
        let eval = Evaluator::new(&scn, Message::Common);
        let opt = optimize_policy(&eval, Side::Lower, 2, &spec, &[])?.value;
        let f = |x: &[f64]| {
            let (t1, t2, share) = (x[0], x[0] + x[1], x[2]);
            let (m1, m2) = ((-t1).exp() - (-t2).exp(), (-t2).exp());
            if m1 <= 0.0 {
                return f64::NEG_INFINITY;
            }
            rayleigh_lower(&[t1, t2], &[p_avg * share / m1, p_avg * (1.0 - share) / m2], 1.0)
        };
        track("Q=2@5dB".into(), opt, zoom_grid(&f, &[0.0, 0.0, 0.0], &[3.0, 5.0, 1.0], 60, 4));
    }
    {
        let scn = Scenario::rayleigh(1, 0, db(5.0), 1.0)?;
        let eval = Evaluator::new(&scn, Message::Common);
        let opt = optimize_policy(&eval, Side::Upper, 1, &spec, &[])?.value;
        let f = |x: &[f64]| {
            let (tau, share) = (x[0], x[1]);
            let (m0, m1) = (1.0 - (-tau).exp(), (-tau).exp());
            let p0 = if m0 > 0.0 { scn.p_avg * (1.0 - share) / m0 } else { 0.0 };
            let pol = QuantizerPolicy::new(vec![tau], vec![scn.p_avg * share / m1]).unwrap().with_p0(p0);
            eval.upper_unchecked(&pol)
        };
        track("upper Q=1@5dB".into(), opt, zoom_grid(&f, &[0.0, 0.0], &[3.0, 1.0], 40, 3));
    }
    for p_db in [0.0, 10.0] {
        let p_avg = db(p_db);
        let scn = Scenario::new(vec![GainDistribution::exponential(1.0)?], GainDistribution::point_mass(0.0)?, 1, p_avg)?;
        let (_, v) = optimize_power_function(&Evaluator::new(&scn, Message::Common), &spec)?;
        track(format!("waterfilling@{p_db}dB"), v, waterfilling(p_avg));
    }
    {
        let scn = Scenario::rayleigh(1, 1, db(5.0), 1.0)?;
        let model = BccmModel::new(&scn);
        let w = model.weights(BccmMode::ErrorFree);
        let (top, _) = wiretap::bccm::max_r1(&model, BccmMode::ErrorFree);
        for frac in [0.0, 0.5] {
            let target = frac * top;
            let (_, point) = optimize_bccm_split(&scn, BccmMode::ErrorFree, target)?;
            // p01 and p1 shares of the budget; p02 takes the rest
            let f = |x: &[f64]| {
                let (a, c) = (x[0], x[1]);
                if a + c > 1.0 {
                    return f64::NEG_INFINITY;
                }
                let s = PowerSplit { p01: a * scn.p_avg / w.a, p02: (1.0 - a - c) * scn.p_avg / w.ac, p1: c * scn.p_avg / w.a };
                let pt = model.point(&s, 0.0);
                if pt.r1 >= target {
                    pt.r0
                } else {
                    f64::NEG_INFINITY
                }
            };
            track(format!("bccm@{frac}max"), point.r0, zoom_grid(&f, &[0.0, 0.0], &[1.0, 1.0], 200, 3));
        }
    }
    outcome(worst <= 1e-3, format!("max |optimizer - oracle| {worst:.1e}: {}", notes.join(", ")))
}

fn cli(args: &[String]) -> Result<Vec<u8>> {
    let out = Command::new(env!("CARGO_BIN_EXE_wiretap")).args(args).output()?;
    anyhow::ensure!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Result<(Vec<u8>, Vec<u8>)> {
    let csv = dir.join(format!("{name}.csv"));
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    full.extend(["--out".into(), csv.display().to_string(), "--json".into()]);
    cli(&full)?;
    Ok((std::fs::read(&csv)?, std::fs::read(csv.with_extension("json"))?))
}

fn determinism() -> Result<Outcome> {
    let fast = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fast.toml");
    let fast = fast.to_str().unwrap();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("cm", vec!["cm-bounds", "--scenario", fast, "--sweep", "P=0,10;b=1,2"]),
        ("im", vec!["im-bounds", "--scenario", fast, "--sweep", "P=10;K=1,3;b=1"]),
        ("bccm", vec!["bccm-region", "--mode", "bec", "--sweep", "eps=0.2,0.5", "--frontier-samples", "5"]),
        ("hsnr", vec!["bccm-region", "--high-snr", "--frontier-samples", "5"]),
        ("scaling", vec!["scaling", "--mc-check"]),
        ("validate", vec!["validate", "--seed", "7"]),
    ];
    let base = std::env::temp_dir().join(format!("wiretap-acceptance-{}", std::process::id()));
    let mut differ = Vec::new();
    for (name, args) in &runs {
        let mut outs = Vec::new();
        for rep in 0..2 {
            let dir = base.join(format!("run{rep}"));
            std::fs::create_dir_all(&dir)?;
            outs.push(run_to(&dir, name, args)?);
        }
        if outs[0] != outs[1] {
            differ.push(*name);
        }
    }
    std::fs::remove_dir_all(&base).ok();
    outcome(differ.is_empty(), format!("{} commands run twice, CSV and JSON differing: {differ:?}", runs.len()))
}
