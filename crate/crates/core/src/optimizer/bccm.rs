//! Frontier tracing for BCCM regions by R1-target scalarization.

use super::search::{golden_max, nelder_mead};
use super::OptimizerSpec;
use crate::bccm::{BccmMode, BccmModel, BccmPoint, PointStatus, PowerSplit, RegionCurve, RegionPoint, Weights};
use crate::{invalid, Error, Result, Scenario};
use rayon::prelude::*;

const GOLDEN_TOL: f64 = 1e-11;
const SCAN_POINTS: usize = 64;
/// Reported targets may be missed by at most this much.
pub const TARGET_TOL: f64 = 1e-9;

fn r1_at(model: &BccmModel, erasure: f64, p1: f64) -> f64 {
    model.point(&PowerSplit { p01: 0.0, p02: 0.0, p1 }, erasure).r1
}

/// Largest achievable R1 and the confidential power attaining it.
pub fn max_r1(model: &BccmModel, mode: BccmMode) -> (f64, f64) {
    let w = model.weights(mode);
    if w.a <= 0.0 {
        return (0.0, 0.0);
    }
    let e = mode.erasure(model.epsilon);
    let top = model.p_avg / w.a;
    let grid: Vec<f64> = (0..=SCAN_POINTS).map(|i| top * 1e-6f64.powf(1.0 - i as f64 / SCAN_POINTS as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&p| r1_at(model, e, p)).collect();
    let best = (0..vals.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    if best == SCAN_POINTS {
        return (vals[best], top);
    }
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let (p, v) = golden_max(|p| r1_at(model, e, p), lo, grid[best + 1], GOLDEN_TOL);
    if v > vals[best] {
        (v, p)
    } else {
        (vals[best], grid[best])
    }
}

/// Smallest confidential power in `[0, p_star]` reaching `target`.
fn min_p1_for(model: &BccmModel, erasure: f64, target: f64, p_star: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, p_star);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if r1_at(model, erasure, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Best common-rate split spending the remaining budget, for fixed `p1`.
fn best_common(model: &BccmModel, mode: BccmMode, p1: f64) -> (PowerSplit, BccmPoint) {
    let w: Weights = model.weights(mode);
    let e = mode.erasure(model.epsilon);
    let budget = model.p_avg;
    let split_at = |s: f64| {
        let p02 = if w.ac > 0.0 { ((budget - s * w.a) / w.ac).max(0.0) } else { 0.0 };
        PowerSplit { p01: (s - p1).max(0.0), p02, p1 }
    };
    let s_max = if w.a > 0.0 { (budget / w.a).max(p1) } else { p1 };
    let eval = |s: f64| model.point(&split_at(s), e);
    let mut candidates = vec![p1, s_max];
    if w.ac > 0.0 && w.a > 0.0 {
        let (s, _) = golden_max(|s| eval(s).r0, p1, s_max, GOLDEN_TOL);
        candidates.push(s);
        // equal total power in and out of A
        if budget >= p1 && budget <= s_max {
            candidates.push(budget);
        }
    }
    let mut best: Option<(PowerSplit, BccmPoint)> = None;
    for s in candidates {
        let split = split_at(s);
        let pt = model.point(&split, e);
        if best.as_ref().map_or(true, |(_, b)| pt.r0 > b.r0) {
            best = Some((split, pt));
        }
    }
    best.expect("at least one candidate")
}

/// Maximizes R0 subject to R1 >= `r1_target` over the one-bit split set.
pub fn optimize_bccm_split(scn: &Scenario, mode: BccmMode, r1_target: f64) -> Result<(PowerSplit, BccmPoint)> {
    let model = BccmModel::new(scn);
    optimize_split_with(&model, mode, r1_target, max_r1(&model, mode))
}

fn optimize_split_with(
    model: &BccmModel,
    mode: BccmMode,
    r1_target: f64,
    (r1_max, p_star): (f64, f64),
) -> Result<(PowerSplit, BccmPoint)> {
    if !r1_target.is_finite() || r1_target < 0.0 {
        return invalid("R1 target must be finite and nonnegative");
    }
    if r1_target > r1_max + TARGET_TOL {
        return Err(Error::InfeasibleTarget { target: r1_target, max_r1: r1_max });
    }
    let e = mode.erasure(model.epsilon);
    let p1 = if r1_target >= r1_max { p_star } else { min_p1_for(model, e, r1_target, p_star) };
    let (split, mut pt) = best_common(model, mode, p1);
    if pt.r1 < r1_target - TARGET_TOL && pt.status == PointStatus::Ok {
        pt.status = PointStatus::NotConverged;
    }
    Ok((split, pt))
}

/// Traces the frontier over `samples` evenly spaced R1 targets from the
/// maximum down to zero.
pub fn bccm_region(scn: &Scenario, mode: BccmMode, samples: usize) -> Result<RegionCurve> {
    if samples < 2 {
        return invalid("frontier_samples must be at least 2");
    }
    let model = BccmModel::new(scn);
    let top = max_r1(&model, mode);
    let points: Vec<RegionPoint> = (0..samples)
        .into_par_iter()
        .map(|j| {
            let target = if j + 1 == samples { 0.0 } else { top.0 * (1.0 - j as f64 / (samples - 1) as f64) };
            match optimize_split_with(&model, mode, target, top) {
                Ok((split, pt)) => RegionPoint { r1_target: target, r0: pt.r0, r1: pt.r1, split, status: pt.status },
                Err(_) => RegionPoint {
                    r1_target: target,
                    r0: 0.0,
                    r1: 0.0,
                    split: PowerSplit { p01: 0.0, p02: 0.0, p1: 0.0 },
                    status: PointStatus::NotConverged,
                },
            }
        })
        .collect();
    Ok(RegionCurve { points })
}

/// Per-cell splits for error-free partitioned feedback over eavesdropper
/// cells `edges`, seeded with the replicated one-bit optimum at the same target.
/// The result never has a smaller R0 than the seed.
pub fn optimize_cell_splits(
    scn: &Scenario,
    edges: &[f64],
    r1_target: f64,
    spec: &OptimizerSpec,
) -> Result<(Vec<PowerSplit>, BccmPoint)> {
    let model = BccmModel::new(scn);
    let (seed, _) = optimize_bccm_split(scn, BccmMode::ErrorFree, r1_target)?;
    cell_search(&model, edges, r1_target, &vec![seed; edges.len()], spec)
}

fn cell_search(
    model: &BccmModel,
    edges: &[f64],
    r1_target: f64,
    seed: &[PowerSplit],
    spec: &OptimizerSpec,
) -> Result<(Vec<PowerSplit>, BccmPoint)> {
    let masses = model.cell_masses(edges);
    let budget = model.p_avg;
    let decode = |x: &[f64]| -> Vec<PowerSplit> {
        let mut splits: Vec<PowerSplit> = x
            .chunks(3)
            .map(|c| PowerSplit { p01: c[0] * c[0], p02: c[1] * c[1], p1: c[2] * c[2] })
            .collect();
        let used: f64 = splits.iter().zip(&masses).map(|(s, (ma, mc))| (s.p01 + s.p1) * ma + s.p02 * mc).sum();
        if used > 0.0 {
            let f = budget / used;
            for s in &mut splits {
                s.p01 *= f;
                s.p02 *= f;
                s.p1 *= f;
            }
        }
        splits
    };
    let x0: Vec<f64> = seed.iter().flat_map(|s| [s.p01.sqrt(), s.p02.sqrt(), s.p1.sqrt()]).collect();
    let seed = decode(&x0);
    let seed_point = model.cell_point(edges, &seed)?;
    let target = r1_target.min(seed_point.r1);
    let objective = |x: &[f64]| {
        let pt = model.cell_point(edges, &decode(x)).expect("edges validated by the seed evaluation");
        -(pt.r0 - 1e3 * (target - pt.r1).max(0.0))
    };
    let step = 0.1 * x0.iter().copied().fold(0.0, f64::max).max(1e-3);
    let res = nelder_mead(objective, &x0, step, spec.evaluations_per_dim * x0.len() + 100, 1e-10);
    let splits = decode(&res.x);
    let pt = model.cell_point(edges, &splits)?;
    if pt.r1 >= target - TARGET_TOL && pt.r0 > seed_point.r0 {
        Ok((splits, pt))
    } else {
        Ok((seed, seed_point))
    }
}

/// Coordinate descent over the quantile levels of the cell edges (a
/// heuristic; the partition is not claimed optimal). Starts from
/// equal-probability cells of `γe` within A.
pub fn optimize_partition(
    scn: &Scenario,
    cells: usize,
    r1_target: f64,
    spec: &OptimizerSpec,
) -> Result<(Vec<f64>, Vec<PowerSplit>, BccmPoint)> {
    if cells == 0 {
        return invalid("at least one cell is required");
    }
    let model = BccmModel::new(scn);
    let (seed, _) = optimize_bccm_split(scn, BccmMode::ErrorFree, r1_target)?;
    let pa = model.event.prob_a;
    let edges_of = |levels: &[f64]| -> Vec<f64> {
        std::iter::once(0.0).chain(levels.iter().map(|&u| model.eve().quantile(u))).collect()
    };
    let mut levels: Vec<f64> = (1..cells).map(|q| pa * q as f64 / cells as f64).collect();
    let run = |levels: &[f64], start: &[PowerSplit]| -> Option<(Vec<PowerSplit>, BccmPoint)> {
        let edges = edges_of(levels);
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return None;
        }
        cell_search(&model, &edges, r1_target, start, spec).ok()
    };
    let mut best = run(&levels, &vec![seed; cells]).ok_or_else(|| Error::OptimizationFailure("degenerate cells".into()))?;
    for _sweep in 0..2 {
        for j in 0..levels.len() {
            let lo = if j == 0 { 0.0 } else { levels[j - 1] };
            let hi = levels.get(j + 1).copied().unwrap_or(1.0);
            for f in [0.2, 0.35, 0.65, 0.8] {
                let mut trial = levels.clone();
                trial[j] = lo + f * (hi - lo);
                if let Some(cand) = run(&trial, &best.0) {
                    if cand.1.r0 > best.1.r0 && cand.1.r1 >= best.1.r1.min(r1_target) - TARGET_TOL {
                        levels = trial;
                        best = cand;
                    }
                }
            }
        }
    }
    Ok((edges_of(&levels), best.0, best.1))
}
