//! Lagrangian allocation of an average power budget across intervals.

use super::{OptimizerSpec, PowerSearch};
use super::search::golden_max;
use crate::rates::RateCurve;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<f64>,
    /// Σ_q g_q(P_q) on the curves.
    pub value: f64,
    pub lambda: f64,
    pub binding: bool,
    pub iterations: usize,
}

/// Maximizer of `g(P) - mu P` over `P >= 0`.
///
/// `g` is concave (see `RateCurve`), so the stationary point is found by
/// Newton's method from `guess` inside a bracket that is bisected whenever a
/// step leaves it.
fn argmax_newton(g: &RateCurve, mu: f64, scale: f64, guess: f64) -> f64 {
    if g.slope_at_zero() <= mu {
        return 0.0;
    }
    let mut p = if guess > 0.0 && guess.is_finite() { guess } else { scale.max(1e-300) };
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..300 {
        let (d1, d2) = g.derivatives(p);
        let h = d1 - mu;
        if h > 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let mut next = if d2 < 0.0 { p - h / d2 } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 4.0 * p };
        }
        if (next - p).abs() <= 1e-14 * p || (hi.is_finite() && hi - lo <= 1e-15 * hi) {
            return next;
        }
        if next > 1e300 {
            return next;
        }
        p = next;
    }
    p
}

/// Same maximization without assuming concavity: a log-spaced scan over
/// `(0, cap]` followed by golden-section refinement around the best point.
fn argmax_scan(g: &RateCurve, mu: f64, cap: f64, points: usize) -> f64 {
    let obj = |p: f64| g.value(p) - mu * p;
    let n = points.max(2);
    let lo = cap * 1e-8;
    let grid: Vec<f64> = (0..n).map(|i| lo * (cap / lo).powf(i as f64 / (n - 1) as f64)).collect();
    let mut best = (0.0, 0.0);
    let mut best_i = None;
    for (i, &p) in grid.iter().enumerate() {
        let v = obj(p);
        if v > best.1 {
            best = (p, v);
            best_i = Some(i);
        }
    }
    match best_i {
        None => 0.0,
        Some(i) => {
            let a = if i == 0 { 0.0 } else { grid[i - 1] };
            let b = grid[(i + 1).min(n - 1)];
            let (p, v) = golden_max(obj, a, b, 1e-12);
            if v >= best.1 {
                p
            } else {
                best.0
            }
        }
    }
}

/// Maximizes Σ_q g_q(P_q) subject to Σ_q cost_q P_q <= budget.
///
/// For a multiplier λ every interval solves its own problem. The used power
/// is decreasing in λ; its root is found by safeguarded Newton steps in
/// log λ (slope from dP_q/dλ = cost_q / g_q''), falling back to bisection.
/// The result is then rescaled so that the constraint binds exactly.
pub fn allocate_powers(curves: &[RateCurve], costs: &[f64], budget: f64, spec: &OptimizerSpec) -> PowerAllocation {
    assert_eq!(curves.len(), costs.len());
    let n = curves.len();
    let active: Vec<bool> = (0..n).map(|q| costs[q] > 0.0 && !curves[q].is_zero()).collect();
    // Returns powers, used power and d(used)/d(log λ).
    let solve = |lambda: f64, guess: &[f64]| -> (Vec<f64>, f64, f64) {
        let mut used = 0.0;
        let mut slope = 0.0;
        let powers: Vec<f64> = (0..n)
            .map(|q| {
                if !active[q] {
                    return 0.0;
                }
                let cap = budget / costs[q];
                let mu = lambda * costs[q];
                let p = match spec.power_search {
                    PowerSearch::Newton => argmax_newton(&curves[q], mu, cap, guess[q]),
                    PowerSearch::Scan => argmax_scan(&curves[q], mu, cap, spec.power_line_search_points),
                };
                used += p * costs[q];
                if p > 0.0 {
                    let d2 = curves[q].derivatives(p).1;
                    if d2 < 0.0 {
                        slope += lambda * costs[q] * costs[q] / d2;
                    }
                }
                p
            })
            .collect();
        (powers, used, slope)
    };
    let lambda_max = (0..n)
        .filter(|&q| active[q])
        .map(|q| curves[q].slope_at_zero() / costs[q])
        .fold(0.0, f64::max);
    if !(lambda_max > 0.0) || !(budget > 0.0) {
        return PowerAllocation { powers: vec![0.0; n], value: 0.0, lambda: 0.0, binding: false, iterations: 0 };
    }
    let mut iterations = 0;
    let mut s_hi = lambda_max.ln();
    let mut s = s_hi - 0.7;
    let mut guess = vec![0.0; n];
    let (mut powers, mut used, mut slope) = solve(s.exp(), &guess);
    while used < budget && iterations < 200 {
        s_hi = s;
        s -= 2.0;
        guess = powers.clone();
        (powers, used, slope) = solve(s.exp(), &guess);
        iterations += 1;
    }
    let mut s_lo = s;
    let tol = spec.lambda_bisect_tol;
    while iterations < 400 {
        if (used - budget).abs() <= 1e-12 * budget || s_hi - s_lo <= tol {
            break;
        }
        if used > budget {
            s_lo = s;
        } else {
            s_hi = s;
        }
        let mut next = if slope < 0.0 { s - (used - budget) / slope } else { f64::NAN };
        if !(next > s_lo && next < s_hi) {
            next = 0.5 * (s_lo + s_hi);
        }
        s = next;
        guess = powers.clone();
        (powers, used, slope) = solve(s.exp(), &guess);
        iterations += 1;
    }
    if used > 0.0 {
        let f = budget / used * (1.0 - 1e-14);
        powers.iter_mut().for_each(|p| *p *= f);
    }
    let total: f64 = powers.iter().zip(costs).map(|(p, c)| p * c).sum();
    let value = curves.iter().zip(&powers).map(|(g, p)| g.value(*p)).sum();
    PowerAllocation { powers, value, lambda: s.exp(), binding: total >= budget * (1.0 - 1e-6), iterations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::Scenario;
    use crate::rates::{lower_curves, upper_curves, Evaluator, Message};

    fn curves() -> (Vec<RateCurve>, Vec<f64>) {
        let scn = Scenario::rayleigh(1, 1, 10f64.powf(0.5), 1.0).unwrap();
        let eval = Evaluator::new(&scn, Message::Common);
        let t = [0.4, 1.3];
        let costs = vec![(-0.4f64).exp() - (-1.3f64).exp(), (-1.3f64).exp()];
        (lower_curves(&eval, &t, 1e3), costs)
    }

    #[test]
    fn constraint_binds() {
        let (c, costs) = curves();
        let a = allocate_powers(&c, &costs, 3.16, &OptimizerSpec::default());
        let used: f64 = a.powers.iter().zip(&costs).map(|(p, c)| p * c).sum();
        assert!(a.binding);
        assert!((used - 3.16).abs() <= 1e-6 * 3.16 && used <= 3.16);
    }

    #[test]
    fn beats_perturbations() {
        let (c, costs) = curves();
        let a = allocate_powers(&c, &costs, 3.16, &OptimizerSpec::default());
        for d in [-0.3, -0.01, 0.01, 0.3] {
            // move power between intervals at constant total cost
            let p0 = a.powers[0] + d;
            let p1 = a.powers[1] - d * costs[0] / costs[1];
            if p0 < 0.0 || p1 < 0.0 {
                continue;
            }
            assert!(c[0].value(p0) + c[1].value(p1) <= a.value + 1e-12);
        }
    }

    #[test]
    fn scan_agrees_with_newton() {
        let (c, costs) = curves();
        let newton = allocate_powers(&c, &costs, 3.16, &OptimizerSpec::default());
        let spec = OptimizerSpec { power_search: PowerSearch::Scan, ..Default::default() };
        let scan = allocate_powers(&c, &costs, 3.16, &spec);
        assert!((newton.value - scan.value).abs() < 1e-9, "{} {}", newton.value, scan.value);
    }

    #[test]
    fn symmetric_intervals_get_equal_power() {
        let scn = Scenario::rayleigh(1, 1, 2.0, 1.0).unwrap();
        let eval = Evaluator::new(&scn, Message::Common);
        let c = upper_curves(&eval, &[0.0, 1.0], 100.0);
        let curves = vec![c[2].clone(), c[2].clone()];
        let a = allocate_powers(&curves, &[0.5, 0.5], 2.0, &OptimizerSpec::default());
        assert!((a.powers[0] - a.powers[1]).abs() < 1e-9 * a.powers[0]);
        assert!((a.powers[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_curves_get_nothing() {
        let a = allocate_powers(&[RateCurve::default()], &[1.0], 1.0, &OptimizerSpec::default());
        assert_eq!(a.powers, vec![0.0]);
        assert_eq!(a.value, 0.0);
    }
}
