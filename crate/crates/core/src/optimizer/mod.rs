//! Maximization over thresholds, powers, power functions and BCCM splits.

pub mod bccm;
pub mod power;
pub mod search;

pub use power::{allocate_powers, PowerAllocation};

use crate::channel::GainDistribution;
use crate::quantizer::{check_feasible, uniform_mass_thresholds, QuantizerPolicy};
use crate::rates::{capacity_perfect_csit, lower_curves, upper_curves, BoundResult, Evaluator, PowerFunction, Side};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Local search used for the thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Nelder-Mead over log threshold increments, Lagrangian powers inside.
    #[default]
    NelderMead,
    /// Coordinate search on a shrinking grid.
    GridRefine,
    /// (1+1) evolution strategy.
    Evolution,
}

/// How each interval's power subproblem is solved for a given multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PowerSearch {
    /// Safeguarded Newton; exact because every interval objective is concave.
    #[default]
    Newton,
    /// Log-spaced scan with golden-section refinement; no concavity assumed.
    Scan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub method: Method,
    pub restarts: usize,
    /// Random restarts used instead of `restarts` when warm starts are given.
    pub warm_restarts: usize,
    pub power_line_search_points: usize,
    pub lambda_bisect_tol: f64,
    pub seed: u64,
    pub power_search: PowerSearch,
    /// Objective evaluations per restart and dimension.
    pub evaluations_per_dim: usize,
    /// Knots of perfect-CSIT power functions.
    pub knots: usize,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            method: Method::NelderMead,
            restarts: 8,
            warm_restarts: 2,
            power_line_search_points: 64,
            lambda_bisect_tol: 1e-8,
            seed: 0,
            power_search: PowerSearch::Newton,
            evaluations_per_dim: 100,
            knots: 256,
        }
    }
}

impl OptimizerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return crate::invalid("restarts must be at least 1");
        }
        if !(self.lambda_bisect_tol > 0.0) {
            return crate::invalid("lambda_bisect_tol must be positive");
        }
        if self.knots == 0 || self.power_line_search_points < 2 {
            return crate::invalid("knots must be >= 1 and power_line_search_points >= 2");
        }
        Ok(())
    }
}

/// A policy together with its exactly evaluated rate.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOptimum {
    pub policy: QuantizerPolicy,
    pub value: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

fn thresholds_from(z: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    z.iter()
        .map(|v| {
            acc += v.clamp(-60.0, 8.0).exp();
            acc
        })
        .collect()
}

fn increments_of(t: &[f64], floor: f64) -> Vec<f64> {
    let mut prev = 0.0;
    t.iter()
        .map(|&x| {
            let d = (x - prev).max(floor);
            prev = prev.max(x);
            d.ln()
        })
        .collect()
}

/// Interval masses `Pr[gate ∈ interval q]` in curve order for `side`.
fn costs(gate: &GainDistribution, thresholds: &[f64], side: Side) -> Vec<f64> {
    let p = QuantizerPolicy { thresholds: thresholds.to_vec(), powers: vec![0.0; thresholds.len()], p0: 0.0 };
    let m = p.masses(gate);
    match side {
        Side::Lower => m[1..].to_vec(),
        Side::Upper => m,
    }
}

fn policy_from(thresholds: Vec<f64>, alloc: &PowerAllocation, side: Side) -> QuantizerPolicy {
    match side {
        Side::Lower => QuantizerPolicy { thresholds, powers: alloc.powers.clone(), p0: 0.0 },
        Side::Upper => QuantizerPolicy { thresholds, powers: alloc.powers[1..].to_vec(), p0: alloc.powers[0] },
    }
}

/// Largest power any single interval can receive, used to size the curve grids.
fn power_ceiling(eval: &Evaluator, costs: &[f64]) -> f64 {
    let m = costs.iter().copied().filter(|&c| c > 0.0).fold(1.0, f64::min);
    eval.p_avg() / m.max(1e-15)
}

fn ensure_feasible(eval: &Evaluator, mut policy: QuantizerPolicy, side: Side) -> QuantizerPolicy {
    if side == Side::Lower {
        policy.p0 = 0.0;
    }
    if check_feasible(&policy, eval.gate(), eval.p_avg()).is_err() {
        let used = crate::quantizer::average_power(&policy, eval.gate());
        policy = policy.scaled(eval.p_avg() / used * (1.0 - 1e-12));
    }
    policy
}

/// Lagrangian powers for fixed thresholds, evaluated on the rate curves.
pub fn powers_on_curves(eval: &Evaluator, side: Side, thresholds: &[f64], spec: &OptimizerSpec) -> (QuantizerPolicy, PowerAllocation) {
    let c = costs(eval.gate(), thresholds, side);
    let p_max = power_ceiling(eval, &c);
    let curves = match side {
        Side::Lower => lower_curves(eval, thresholds, p_max),
        Side::Upper => upper_curves(eval, thresholds, p_max),
    };
    let alloc = allocate_powers(&curves, &c, eval.p_avg(), spec);
    let policy = ensure_feasible(eval, policy_from(thresholds.to_vec(), &alloc, side), side);
    (policy, alloc)
}

/// Optimal powers for given thresholds and the exact rate they achieve.
pub fn optimize_powers_given_thresholds(
    eval: &Evaluator,
    side: Side,
    thresholds: &[f64],
    spec: &OptimizerSpec,
) -> Result<PolicyOptimum> {
    QuantizerPolicy::equal_power(thresholds.to_vec(), 0.0)?;
    let (policy, alloc) = powers_on_curves(eval, side, thresholds, spec);
    let value = eval.evaluate(side, &policy)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("lambda".into(), alloc.lambda);
    diagnostics.insert("binding".into(), alloc.binding as u8 as f64);
    diagnostics.insert("lambda_iterations".into(), alloc.iterations as f64);
    Ok(PolicyOptimum { policy, value, diagnostics })
}

/// Starting threshold vectors: uniform-mass with a small first threshold,
/// mid-mass quantiles, warm starts, then seeded random quantile draws.
fn starting_points(gate: &GainDistribution, q: usize, spec: &OptimizerSpec, warm: &[QuantizerPolicy]) -> Vec<Vec<f64>> {
    let qf = q as f64;
    let mut starts = Vec::new();
    let mut uniform: Vec<f64> = (0..q).map(|i| gate.quantile(i as f64 / qf)).collect();
    uniform[0] = gate.quantile(0.25 / qf);
    starts.push(uniform);
    starts.push((0..q).map(|i| gate.quantile((i as f64 + 0.5) / qf)).collect());
    let fixed = starts.len();
    starts.extend(warm.iter().filter(|p| p.q() == q).map(|p| p.thresholds.clone()));
    let random = if warm.is_empty() { spec.restarts.saturating_sub(fixed) } else { spec.warm_restarts };
    let target = starts.len() + random;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut k = 0;
    while starts.len() < target {
        let mut u: Vec<f64> = (0..q).map(|_| rng.gen::<f64>()).collect();
        u.sort_by(f64::total_cmp);
        starts.push(u.iter().map(|&p| gate.quantile(p)).collect());
        k += 1;
        if k > 10_000 {
            break;
        }
    }
    starts
        .into_iter()
        .map(|mut t| {
            for i in 0..t.len() {
                let floor = if i == 0 { 1e-9 } else { t[i - 1] * (1.0 + 1e-9) + 1e-12 };
                if !(t[i] >= floor) {
                    t[i] = floor;
                }
            }
            t
        })
        .collect()
}

fn local_search(f: impl FnMut(&[f64]) -> f64, x0: &[f64], spec: &OptimizerSpec, stream: u64) -> search::SearchResult {
    let budget = spec.evaluations_per_dim * x0.len().max(1) + 100;
    match spec.method {
        Method::NelderMead => search::nelder_mead(f, x0, 0.5, budget, 1e-9),
        Method::GridRefine => search::grid_refine(f, x0, 0.5, budget, 1e-10),
        Method::Evolution => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(stream);
            search::one_plus_one(f, x0, 0.5, budget, &mut rng)
        }
    }
}

/// Maximizes the `side` bound of `eval` over Q thresholds and their powers.
///
/// Each restart runs a local search on the curve approximation; every
/// restart result and every seed candidate (uniform thresholds with equal
/// power and with optimized powers, and the warm-start policies themselves)
/// is then evaluated exactly, and the best exact value is returned.
pub fn optimize_policy(
    eval: &Evaluator,
    side: Side,
    q: usize,
    spec: &OptimizerSpec,
    warm: &[QuantizerPolicy],
) -> Result<PolicyOptimum> {
    spec.validate()?;
    if q == 0 {
        return crate::invalid("Q must be at least 1");
    }
    let gate = eval.gate();
    let starts = starting_points(gate, q, spec, warm);
    let runs: Vec<(Vec<f64>, f64, usize)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, t0)| {
            let f = |z: &[f64]| -> f64 {
                let t = thresholds_from(z);
                -powers_on_curves(eval, side, &t, spec).1.value
            };
            let r = local_search(f, &increments_of(t0, 1e-9), spec, i as u64);
            (thresholds_from(&r.x), -r.f, r.evaluations)
        })
        .collect();

    let uniform = uniform_mass_thresholds(gate, q)?;
    let mut candidates: Vec<(String, QuantizerPolicy)> = Vec::new();
    candidates.push(("uniform_equal".into(), QuantizerPolicy::equal_power(uniform.clone(), eval.p_avg())?));
    candidates.push(("uniform_lagrangian".into(), powers_on_curves(eval, side, &uniform, spec).0));
    for (i, w) in warm.iter().enumerate() {
        let mut w = w.clone();
        if side == Side::Lower {
            w.p0 = 0.0;
        }
        if check_feasible(&w, gate, eval.p_avg()).is_ok() {
            candidates.push((format!("warm_{i}"), w));
        }
    }
    for (i, (t, _, _)) in runs.iter().enumerate() {
        candidates.push((format!("restart_{i}"), powers_on_curves(eval, side, t, spec).0));
    }
    let scored: Vec<(String, QuantizerPolicy, Result<f64>)> = candidates
        .into_par_iter()
        .map(|(name, p)| {
            let v = eval.evaluate(side, &p);
            (name, p, v)
        })
        .collect();

    let mut diagnostics = BTreeMap::new();
    let mut best: Option<(QuantizerPolicy, f64)> = None;
    for (name, p, v) in scored {
        if let Ok(v) = v {
            diagnostics.insert(name, v);
            if best.as_ref().map_or(true, |b| v > b.1) {
                best = Some((p, v));
            }
        }
    }
    diagnostics.insert("evaluations".into(), runs.iter().map(|r| r.2).sum::<usize>() as f64);
    let (policy, value) = best.ok_or_else(|| Error::OptimizationFailure("no feasible candidate".into()))?;
    let used = crate::quantizer::average_power(&policy, gate);
    diagnostics.insert("average_power".into(), used);
    diagnostics.insert("binding".into(), (used >= eval.p_avg() * (1.0 - 1e-6)) as u8 as f64);
    Ok(PolicyOptimum { policy, value, diagnostics })
}

/// Splits every interval at the conditional median of `gate`, keeping powers.
/// The refined policy uses exactly the same average power and never has a
/// smaller lower bound, so it seeds the next feedback resolution.
pub fn refine_policy(policy: &QuantizerPolicy, gate: &GainDistribution) -> QuantizerPolicy {
    let mut thresholds = Vec::with_capacity(2 * policy.q());
    let mut powers = Vec::with_capacity(2 * policy.q());
    for q in 1..=policy.q() {
        let (lo, hi) = policy.interval(q);
        let a = gate.cdf(lo);
        let b = if hi.is_finite() { gate.prob_below(hi) } else { 1.0 };
        let mut mid = gate.quantile(0.5 * (a + b));
        if !(mid > lo && mid < hi) {
            mid = if hi.is_finite() { 0.5 * (lo + hi) } else { lo * 2.0 + 1.0 };
        }
        thresholds.extend([lo, mid]);
        powers.extend([policy.power(q); 2]);
    }
    QuantizerPolicy { thresholds, powers, p0: policy.p0 }
}

/// Lower and upper bounds at `b` bits. The upper search is seeded with the
/// lower optimum, so `upper >= lower` holds at matched policies.
pub fn optimize_bounds(eval: &Evaluator, b: u32, spec: &OptimizerSpec, warm: Option<&BoundResult>) -> Result<BoundResult> {
    let q = 1usize << b;
    let mut warm_lower = Vec::new();
    let mut warm_upper = Vec::new();
    if let Some(w) = warm {
        for (src, dst) in [(&w.policy_lower, &mut warm_lower), (&w.policy_upper, &mut warm_upper)] {
            if let Some(p) = src {
                let mut p = p.clone();
                while p.q() < q {
                    p = refine_policy(&p, eval.gate());
                }
                if p.q() == q {
                    dst.push(p);
                }
            }
        }
    }
    let lower = optimize_policy(eval, Side::Lower, q, spec, &warm_lower)?;
    warm_upper.push(lower.policy.clone());
    let upper = optimize_policy(eval, Side::Upper, q, spec, &warm_upper)?;
    let mut diagnostics = BTreeMap::new();
    for (prefix, d) in [("lower", &lower.diagnostics), ("upper", &upper.diagnostics)] {
        for (k, v) in d {
            diagnostics.insert(format!("{prefix}.{k}"), *v);
        }
    }
    Ok(BoundResult {
        lower: lower.value,
        upper: upper.value,
        policy_lower: Some(lower.policy),
        policy_upper: Some(upper.policy),
        diagnostics,
    })
}

/// Optimized bounds for b = 1..=b_max, each seeded with the refined
/// optimum of the previous resolution.
pub fn bounds_ladder(eval: &Evaluator, b_max: u32, spec: &OptimizerSpec) -> Result<Vec<BoundResult>> {
    let mut out: Vec<BoundResult> = Vec::new();
    for b in 1..=b_max {
        let r = optimize_bounds(eval, b, spec, out.last())?;
        out.push(r);
    }
    Ok(out)
}

pub fn cm_bounds(scn: &crate::Scenario, spec: &OptimizerSpec) -> Result<BoundResult> {
    let eval = Evaluator::new(scn, crate::rates::Message::Common);
    ladder_top(&eval, scn.b, spec)
}

pub fn im_bounds(scn: &crate::Scenario, spec: &OptimizerSpec) -> Result<BoundResult> {
    let eval = Evaluator::new(scn, crate::rates::Message::Independent);
    ladder_top(&eval, scn.b, spec)
}

fn ladder_top(eval: &Evaluator, b: u32, spec: &OptimizerSpec) -> Result<BoundResult> {
    if b == 0 {
        return optimize_bounds(eval, 0, spec, None);
    }
    Ok(bounds_ladder(eval, b, spec)?.pop().expect("b >= 1"))
}

/// Uniform-mass knots plus upper-tail knots whose masses halve down to
/// about 1e-4 min(P, 1). At low SNR the optimum spends everything on a thin
/// tail, which uniform masses cannot resolve.
fn power_function_knots(eval: &Evaluator, knots: usize) -> Result<Vec<f64>> {
    let gate = eval.gate();
    let mut t = uniform_mass_thresholds(gate, knots)?;
    let floor = (1e-4 * eval.p_avg().min(1.0)).max(10.0 * eval.quad().tail_truncation_mass);
    let mut s = 0.5 / knots as f64;
    while s >= floor {
        let x = gate.isf(s);
        if !(x.is_finite() && x > *t.last().unwrap()) {
            break;
        }
        t.push(x);
        s *= 0.5;
    }
    Ok(t)
}

/// Piecewise-constant power function on `spec.knots` gate quantiles and a
/// thinning upper tail, optimized by the Lagrangian scheme; never worse than
/// constant power.
pub fn optimize_power_function(eval: &Evaluator, spec: &OptimizerSpec) -> Result<(PowerFunction, f64)> {
    spec.validate()?;
    let knots = power_function_knots(eval, spec.knots)?;
    let (policy, _) = powers_on_curves(eval, Side::Upper, &knots, spec);
    let pf = PowerFunction { knots: policy.thresholds.clone(), powers: policy.powers.clone() };
    let value = capacity_perfect_csit(eval, &pf)?;
    let constant = PowerFunction::constant(eval.p_avg());
    let base = capacity_perfect_csit(eval, &constant)?;
    Ok(if value >= base { (pf, value) } else { (constant, base) })
}

/// Thresholds maximizing the high-SNR lower limit, with that limit.
pub fn optimize_high_snr_thresholds(eval: &Evaluator, q: usize, spec: &OptimizerSpec) -> Result<(Vec<f64>, f64)> {
    spec.validate()?;
    let starts = starting_points(eval.gate(), q, spec, &[]);
    let runs: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, t0)| {
            let f = |z: &[f64]| -eval.high_snr_lower(&thresholds_from(z));
            let r = local_search(f, &increments_of(t0, 1e-9), spec, i as u64);
            (thresholds_from(&r.x), -r.f)
        })
        .collect();
    let mut best = runs[0].clone();
    for r in runs.into_iter().skip(1) {
        if r.1 > best.1 {
            best = r;
        }
    }
    Ok(best)
}
