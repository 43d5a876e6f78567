//! The five commands. Sweep points run concurrently; rows are assembled
//! in sweep order so outputs are byte-identical for a fixed seed.

use crate::output::{Cell, CurveOutput, Metadata, Table};
use crate::scenario::{db_to_linear, linear_to_db, ScenarioFile};
use crate::sweep::Sweep;
use anyhow::{bail, Result};
use rayon::prelude::*;
use wiretap::bccm::{
    bccm_point_bbit_errorfree, bccm_point_bec, bccm_point_errorfree, bccm_region, bccm_region_high_snr, BccmMode,
    BccmModel, PowerSplit, RegionCurve,
};
use wiretap::mc::{self, Estimate, ScalingConfig, SimConfig};
use wiretap::optimizer::{bounds_ladder, optimize_high_snr_thresholds, optimize_power_function};
use wiretap::quantizer::{average_power, uniform_mass_thresholds};
use wiretap::rates::{
    capacity_perfect_csit, high_snr_bounds, per_user_rate_share, statistics_only_rate, win_probabilities, Evaluator,
    Message, PowerFunction,
};
use wiretap::{QuantizerPolicy, Scenario};

fn meta(file: &ScenarioFile, command: &str) -> Metadata {
    Metadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        seed: file.sim.seed,
        scenario_hash: file.hash(),
    }
}

fn finish(file: &ScenarioFile, command: &str, table: Table, passed: bool) -> Result<CurveOutput> {
    for row in &table.rows {
        if row.iter().any(|c| matches!(c, Cell::Num(x) if !x.is_finite())) {
            bail!("{command} produced a non-finite value; row {row:?}");
        }
    }
    Ok(CurveOutput { meta: meta(file, command), table, passed })
}

fn b_list(file: &ScenarioFile, sweep: &Sweep) -> Result<Vec<u32>> {
    let mut b = sweep.b.clone().unwrap_or_else(|| vec![file.feedback.b]);
    b.sort_unstable();
    b.dedup();
    if b.first() == Some(&0) {
        bail!("bound sweeps need b >= 1");
    }
    Ok(b)
}

fn p_list(file: &ScenarioFile, sweep: &Sweep) -> Vec<f64> {
    let mut p = sweep.p_db.clone().unwrap_or_else(|| vec![linear_to_db(file.power.p_avg)]);
    p.sort_by(f64::total_cmp);
    p
}

/// One row of a bounds table: lower/upper per b, then the b-independent columns.
struct BoundsRow {
    p_db: f64,
    k: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    capacity: f64,
    shares: Vec<f64>,
}

fn bounds_rows(
    file: &ScenarioFile,
    message: Message,
    points: &[(f64, u64)],
    bs: &[u32],
) -> Result<Vec<BoundsRow>> {
    let b_max = *bs.last().expect("nonempty b list");
    points
        .par_iter()
        .map(|&(p_db, k)| {
            let mut f = file.clone();
            f.channel.k = k as usize;
            f.channel.mains = None;
            f.power.p_avg = db_to_linear(p_db);
            let scn = f.scenario()?;
            let eval = Evaluator::new(&scn, message);
            let ladder = bounds_ladder(&eval, b_max, &f.optimizer)?;
            let pick = |b: u32| &ladder[b as usize - 1];
            let (_, capacity) = optimize_power_function(&eval, &f.optimizer)?;
            let top = pick(b_max).lower;
            let shares = match message {
                Message::Independent => {
                    (0..scn.k()).map(|i| per_user_rate_share(&scn, top, i)).collect::<wiretap::Result<_>>()?
                }
                Message::Common => Vec::new(),
            };
            Ok(BoundsRow {
                p_db,
                k,
                lower: bs.iter().map(|&b| pick(b).lower).collect(),
                upper: bs.iter().map(|&b| pick(b).upper).collect(),
                capacity,
                shares,
            })
        })
        .collect()
}

/// High-SNR lower limit per b (optimized thresholds) and the upper limit, per K.
fn hsnr_columns(file: &ScenarioFile, message: Message, k: u64, bs: &[u32]) -> Result<(Vec<f64>, f64)> {
    let mut f = file.clone();
    f.channel.k = k as usize;
    f.channel.mains = None;
    let scn = f.scenario()?;
    let eval = Evaluator::new(&scn, message);
    let lows = bs
        .iter()
        .map(|&b| Ok(optimize_high_snr_thresholds(&eval, 1usize << b, &f.optimizer)?.1))
        .collect::<Result<Vec<f64>>>()?;
    Ok((lows, eval.high_snr_upper()))
}

fn bounds_table(file: &ScenarioFile, sweep: &Sweep, message: Message, command: &str) -> Result<CurveOutput> {
    let bs = b_list(file, sweep)?;
    let ps = p_list(file, sweep);
    let ks: Vec<u64> = match (&sweep.k, message) {
        (Some(k), Message::Independent) => k.clone(),
        (Some(_), Message::Common) => bail!("cm-bounds sweeps P and b only"),
        (None, _) => vec![file.channel.k as u64],
    };
    if ks.iter().any(|&k| k == 0) {
        bail!("K must be at least 1");
    }
    if sweep.k.is_some() && file.channel.mains.is_some() {
        bail!("a K sweep needs a shared [channel] main law");
    }
    let points: Vec<(f64, u64)> = ks.iter().flat_map(|&k| ps.iter().map(move |&p| (p, k))).collect();
    let rows = bounds_rows(file, message, &points, &bs)?;
    let hsnr: Vec<(Vec<f64>, f64)> = ks.iter().map(|&k| hsnr_columns(file, message, k, &bs)).collect::<Result<_>>()?;
    let k_max = *ks.iter().max().expect("nonempty K list");

    let mut columns = vec!["P_avg_dB".to_string()];
    if message == Message::Independent {
        columns.push("K".into());
    }
    for b in &bs {
        columns.push(format!("lower_b{b}"));
        columns.push(format!("upper_b{b}"));
    }
    columns.push("capacity_perfect_csit".into());
    for b in &bs {
        columns.push(format!("hsnr_lower_b{b}"));
    }
    columns.push("hsnr_upper".into());
    if message == Message::Independent {
        columns.extend((1..=k_max).map(|i| format!("share_{i}")));
    }
    let mut table = Table::new(columns);
    for row in rows {
        let (lows, up) = &hsnr[ks.iter().position(|&k| k == row.k).expect("row K is in the list")];
        let mut cells: Vec<Cell> = vec![row.p_db.into()];
        if message == Message::Independent {
            cells.push(row.k.into());
        }
        for (l, u) in row.lower.iter().zip(&row.upper) {
            cells.push((*l).into());
            cells.push((*u).into());
        }
        cells.push(row.capacity.into());
        cells.extend(lows.iter().map(|&v| Cell::from(v)));
        cells.push((*up).into());
        if message == Message::Independent {
            for i in 0..k_max as usize {
                cells.push(row.shares.get(i).map_or(Cell::Empty, |&s| Cell::Num(s)));
            }
        }
        table.push(cells);
    }
    finish(file, command, table, true)
}

pub fn cm_bounds(file: &ScenarioFile, sweep: &Sweep) -> Result<CurveOutput> {
    bounds_table(file, sweep, Message::Common, "cm-bounds")
}

pub fn im_bounds(file: &ScenarioFile, sweep: &Sweep) -> Result<CurveOutput> {
    bounds_table(file, sweep, Message::Independent, "im-bounds")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RegionMode {
    Errorfree,
    Bec,
}

pub fn bccm_region_cmd(
    file: &ScenarioFile,
    sweep: &Sweep,
    mode: RegionMode,
    samples: usize,
    high_snr: bool,
) -> Result<CurveOutput> {
    let eps = match mode {
        RegionMode::Errorfree => vec![0.0],
        RegionMode::Bec => sweep.eps.clone().unwrap_or_else(|| vec![file.feedback.epsilon]),
    };
    let bs: Vec<u32> = match mode {
        RegionMode::Errorfree => vec![1],
        RegionMode::Bec => sweep.b.clone().unwrap_or_else(|| vec![1]),
    };
    if bs.contains(&0) {
        bail!("redundant bits must be at least 1");
    }
    let ps = p_list(file, sweep);
    let mut jobs: Vec<(f64, f64, u32)> = Vec::new();
    for &p in &ps {
        for &e in &eps {
            jobs.extend(bs.iter().map(|&b| (p, e, b)));
        }
    }
    let curves: Vec<RegionCurve> = jobs
        .par_iter()
        .map(|&(p_db, e, b)| {
            let mut f = file.clone();
            f.power.p_avg = db_to_linear(p_db);
            f.feedback.epsilon = e;
            let scn = f.scenario()?;
            let m = match mode {
                RegionMode::Errorfree => BccmMode::ErrorFree,
                RegionMode::Bec => BccmMode::Bec { bits: b },
            };
            Ok(if high_snr { bccm_region_high_snr(&scn, m, samples)? } else { bccm_region(&scn, m, samples)? })
        })
        .collect::<Result<_>>()?;
    let columns = ["P_avg_dB", "epsilon", "b_redundant", "R1_target", "R0", "R1", "p01", "p02", "p1", "status"];
    let mut table = Table::new(columns.iter().map(|s| s.to_string()).collect());
    for (&(p_db, e, b), curve) in jobs.iter().zip(&curves) {
        for pt in &curve.points {
            table.push(vec![
                p_db.into(),
                e.into(),
                u64::from(b).into(),
                pt.r1_target.into(),
                pt.r0.into(),
                pt.r1.into(),
                pt.split.p01.into(),
                pt.split.p02.into(),
                pt.split.p1.into(),
                pt.status.as_str().into(),
            ]);
        }
    }
    finish(file, "bccm-region", table, true)
}

pub fn scaling(file: &ScenarioFile, sweep: &Sweep, mc_check: bool) -> Result<CurveOutput> {
    let ks = sweep.k.clone().unwrap_or_else(|| vec![100, 1_000, 10_000, 100_000, 1_000_000]);
    let scn = file.scenario()?;
    let sim = mc_check.then_some(&file.sim);
    let rows = mc::scaling_law_experiment(&scn.eve, &ks, &ScalingConfig::default(), sim)?;
    let mut columns: Vec<String> =
        ["K", "C_minus_hsnr", "C_plus_hsnr", "loglogK", "gap_minus", "gap_plus", "mean_log_ratio"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    if mc_check {
        columns.extend(["mc_C_plus".to_string(), "mc_stderr".to_string()]);
    }
    let mut table = Table::new(columns);
    for r in rows {
        // K = 1 has no log log K reference
        let opt = |x: f64| if x.is_finite() { Cell::Num(x) } else { Cell::Empty };
        let mut cells = vec![
            r.k.into(),
            r.c_minus_hsnr.into(),
            r.c_plus_hsnr.into(),
            opt(r.log_log_k),
            opt(r.gap_minus),
            opt(r.gap_plus),
            opt(r.mean_log_ratio),
        ];
        if let Some(e) = r.mc_c_plus {
            cells.push(e.mean.into());
            cells.push(e.stderr.into());
        }
        table.push(cells);
    }
    finish(file, "scaling", table, true)
}

/// One oracle comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub quantity: String,
    pub analytic: f64,
    pub estimate: Estimate,
}

fn increasing_policy(gate: &wiretap::GainDistribution, q: usize, p_avg: f64, p0: f64) -> Result<QuantizerPolicy> {
    let t = uniform_mass_thresholds(gate, q)?;
    let mut p = QuantizerPolicy::new(t.clone(), (1..=t.len()).map(|i| i as f64).collect())?;
    p.p0 = p0;
    let used = average_power(&p, gate);
    Ok(p.scaled(p_avg / used))
}

/// A feasible split spending a quarter of the budget on each of p01 and p1
/// and half on p02.
pub fn mid_split(model: &BccmModel, mode: BccmMode) -> PowerSplit {
    let w = model.weights(mode);
    let p = model.p_avg;
    if w.a > 0.0 && w.ac > 0.0 {
        PowerSplit { p01: 0.25 * p / w.a, p02: 0.5 * p / w.ac, p1: 0.25 * p / w.a }
    } else if w.a > 0.0 {
        PowerSplit { p01: 0.5 * p / w.a, p02: 0.0, p1: 0.5 * p / w.a }
    } else {
        PowerSplit { p01: 0.0, p02: p / w.ac, p1: 0.0 }
    }
}

/// Every analytic evaluator against its simulated counterpart on `scn`.
pub fn oracle_checks(scn: &Scenario, sim: &SimConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut add = |quantity: &str, analytic: f64, estimate: Estimate| {
        checks.push(Check { quantity: quantity.to_string(), analytic, estimate });
    };
    for (name, message) in [("cm", Message::Common), ("im", Message::Independent)] {
        let eval = Evaluator::new(scn, message);
        let q = scn.q();
        let lower = increasing_policy(eval.gate(), q, scn.p_avg, 0.0)?;
        add(&format!("{name}_lower"), eval.lower(&lower)?, mc::mc_lower(scn, message, &lower, sim)?);
        let upper = increasing_policy(eval.gate(), q, scn.p_avg, 0.5)?;
        add(&format!("{name}_upper"), eval.upper(&upper)?, mc::mc_upper(scn, message, &upper, sim)?);
        let mut pf = PowerFunction::quantile_grid(eval.gate(), 16, 1.0)?;
        pf.powers.iter_mut().enumerate().for_each(|(i, p)| *p = (i + 1) as f64);
        let scale = scn.p_avg / pf.average_power(eval.gate())?;
        pf.powers.iter_mut().for_each(|p| *p *= scale);
        add(
            &format!("{name}_capacity_perfect_csit"),
            capacity_perfect_csit(&eval, &pf)?,
            mc::mc_capacity_perfect_csit(scn, message, &pf, sim)?,
        );
        let t = uniform_mass_thresholds(eval.gate(), q)?;
        let h = high_snr_bounds(&eval, &t)?;
        if h.lower.is_finite() && h.upper.is_finite() {
            let (lo, hi) = mc::mc_high_snr_bounds(scn, message, &t, sim)?;
            add(&format!("{name}_hsnr_lower"), h.lower, lo);
            add(&format!("{name}_hsnr_upper"), h.upper, hi);
        }
    }
    for (i, (w, e)) in win_probabilities(scn).iter().zip(mc::mc_win_probabilities(scn, sim)?).enumerate() {
        add(&format!("win_probability_{}", i + 1), *w, e);
    }
    add("statistics_only_rate", statistics_only_rate(scn, scn.p_avg), mc::mc_statistics_only_rate(scn, scn.p_avg, sim)?);

    let model = BccmModel::new(scn);
    let split = mid_split(&model, BccmMode::ErrorFree);
    let exact = bccm_point_errorfree(scn, &split)?;
    let est = mc::mc_bccm_point(scn, &split, BccmMode::ErrorFree, sim)?;
    add("bccm_errorfree_R0", exact.r0, est.r0);
    add("bccm_errorfree_R1", exact.r1, est.r1);
    let lossy = if scn.epsilon > 0.0 { scn.clone() } else { scn.clone().with_epsilon(0.5)? };
    let mode = BccmMode::Bec { bits: 1 };
    let split = mid_split(&BccmModel::new(&lossy), mode);
    let exact = bccm_point_bec(&lossy, &split, 1)?;
    let est = mc::mc_bccm_point(&lossy, &split, mode, sim)?;
    add("bccm_bec_R0", exact.r0, est.r0);
    add("bccm_bec_R1", exact.r1, est.r1);
    if model.event.prob_a > 0.0 {
        let edges = model.quantile_cells(2);
        let base = mid_split(&model, BccmMode::ErrorFree);
        let splits = [PowerSplit { p1: 1.5 * base.p1, p01: 0.5 * base.p01, ..base }, PowerSplit { p1: 0.5 * base.p1, p01: 1.5 * base.p01, ..base }];
        let exact = bccm_point_bbit_errorfree(scn, &edges, &splits)?;
        let est = mc::mc_bccm_cells(scn, mc::eve_cell_index(&edges), &splits, sim)?;
        add("bccm_cells_R0", exact.r0, est.r0);
        add("bccm_cells_R1", exact.r1, est.r1);
    }
    Ok(checks)
}

pub fn validate(file: &ScenarioFile, sigmas: f64) -> Result<CurveOutput> {
    let scn = file.scenario()?;
    let checks = oracle_checks(&scn, &file.sim)?;
    let id = file.hash()[..12].to_string();
    let columns = ["scenario_id", "quantity", "estimate", "stderr", "L", "seed", "analytic", "diff", "pass"];
    let mut table = Table::new(columns.iter().map(|s| s.to_string()).collect());
    let mut passed = true;
    for c in &checks {
        let ok = (c.estimate.mean - c.analytic).abs() <= sigmas * c.estimate.stderr + 1e-12 * c.analytic.abs().max(1.0);
        passed &= ok;
        table.push(vec![
            id.as_str().into(),
            c.quantity.as_str().into(),
            c.estimate.mean.into(),
            c.estimate.stderr.into(),
            c.estimate.blocks.into(),
            file.sim.seed.into(),
            c.analytic.into(),
            (c.estimate.mean - c.analytic).into(),
            if ok { "true" } else { "false" }.into(),
        ]);
    }
    finish(file, "validate", table, passed)
}
