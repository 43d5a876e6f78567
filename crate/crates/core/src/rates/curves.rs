//! Per-interval rate curves used inside the optimizers.
//!
//! Every interval objective has the form `g(P) = Σ_i c_i P / (1 + x_i P)`
//! with `c_i >= 0` and `x_i > 0`, obtained by fixing the quadrature nodes of
//! the CDF-form integrals once. Such a `g` is increasing and concave in `P`,
//! and costs one pass over the nodes per evaluation.

use super::Evaluator;
use crate::channel::{mass_between, GainDistribution};
use crate::quadrature::panel_nodes;
use rayon::prelude::*;
use std::f64::consts::LN_2;

/// Panels are graded geometrically by this ratio away from zero.
const GRADING: f64 = 4.0;
/// Atom counts above this are not used as panel edges.
const MAX_ATOM_EDGES: usize = 64;
const MIN_GAP: f64 = 0.3;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RateCurve {
    x: Vec<f64>,
    c: Vec<f64>,
}

impl RateCurve {
    pub fn value(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        self.x.iter().zip(&self.c).map(|(x, c)| c * p / (1.0 + x * p)).sum()
    }

    /// First and second derivatives in `P`.
    pub fn derivatives(&self, p: f64) -> (f64, f64) {
        let (mut d1, mut d2) = (0.0, 0.0);
        for (x, c) in self.x.iter().zip(&self.c) {
            let u = 1.0 / (1.0 + x * p);
            d1 += c * u * u;
            d2 -= 2.0 * c * x * u * u * u;
        }
        (d1, d2)
    }

    pub fn slope_at_zero(&self) -> f64 {
        self.c.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&c| c == 0.0)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn add_segment(&mut self, weight: impl Fn(f64) -> f64, edges: &[f64]) {
        let (xs, ws) = panel_nodes(edges);
        for (x, w) in xs.into_iter().zip(ws) {
            let c = w * weight(x) / LN_2;
            if c > 0.0 {
                self.x.push(x);
                self.c.push(c);
            }
        }
    }
}

/// Panel edges on `[lo, hi]`: a geometric grid from `cut` plus law-specific
/// points. Reference points closer than `MIN_GAP` (relative) to an edge
/// already taken are dropped; atoms are always kept.
fn edges(lo: f64, hi: f64, cut: f64, laws: &[&GainDistribution]) -> Vec<f64> {
    let mut v = vec![lo, hi];
    let mut g = cut;
    while g < hi {
        if g > lo {
            v.push(g);
        }
        g *= GRADING;
    }
    let mut refs: Vec<f64> = laws
        .iter()
        .flat_map(|l| l.reference_points())
        .filter(|&x| x > lo && x < hi)
        .collect();
    refs.sort_by(f64::total_cmp);
    v.sort_by(f64::total_cmp);
    for r in refs {
        let i = v.partition_point(|&e| e < r);
        let near = |e: f64| (e - r).abs() < MIN_GAP * r.max(e);
        if !(i > 0 && near(v[i - 1])) && !(i < v.len() && near(v[i])) {
            v.insert(i, r);
        }
    }
    for law in laws {
        let atoms = law.atoms_in(lo, hi);
        if atoms.len() <= MAX_ATOM_EDGES {
            v.extend(atoms);
        }
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn cutoff(p_max: f64, top: f64) -> f64 {
    (1e-3 / p_max.max(1e-300)).max(1e-12 * top.max(1.0)).min(top.max(f64::MIN_POSITIVE))
}

/// Curves `Pr[γ ∈ [τ_q, τ_{q+1})] · A(τ_q, P)` for q = 1..Q, gate-law masses.
///
/// `p_max` is the largest power the curves need to resolve accurately.
pub fn lower_curves(eval: &Evaluator, thresholds: &[f64], p_max: f64) -> Vec<RateCurve> {
    let gate = eval.gate();
    let eve = eval.eve();
    (0..thresholds.len())
        .into_par_iter()
        .map(|i| {
            let tau = thresholds[i];
            let hi = thresholds.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let mass = mass_between(gate, tau, hi);
            let mut curve = RateCurve::default();
            if mass > 0.0 && tau > 0.0 {
                let e = edges(0.0, tau, cutoff(p_max, tau), &[eve]);
                curve.add_segment(|x| mass * eve.cdf(x), &e);
            }
            curve
        })
        .collect()
}

/// Curves `E[{log2((1+γP)/(1+γe P))}^+ ; γ ∈ interval q]` for q = 0..=Q.
pub fn upper_curves(eval: &Evaluator, thresholds: &[f64], p_max: f64) -> Vec<RateCurve> {
    let gate = eval.gate();
    let eve = eval.eve();
    let tail = eval.quad().tail_truncation_mass;
    let lower = lower_curves(eval, thresholds, p_max);
    (0..=thresholds.len())
        .into_par_iter()
        .map(|q| {
            let lo = if q == 0 { 0.0 } else { thresholds[q - 1] };
            let hi = thresholds.get(q).copied().unwrap_or(f64::INFINITY);
            let mut curve = if q == 0 { RateCurve::default() } else { lower[q - 1].clone() };
            if mass_between(gate, lo, hi) > 0.0 {
                let top = if hi.is_finite() { hi } else { gate.upper_truncation(tail).max(lo) };
                if top > lo {
                    let e = edges(lo, top, cutoff(p_max, top), &[eve, gate]);
                    curve.add_segment(|x| eve.cdf(x) * mass_between(gate, x, hi), &e);
                }
            }
            curve
        })
        .collect()
}
