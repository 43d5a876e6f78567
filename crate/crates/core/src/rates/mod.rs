//! Common-message and independent-message secrecy-rate bounds, their
//! perfect-CSIT and high-SNR limits, and the erased-feedback fallback.

mod curves;

pub use curves::{lower_curves, upper_curves, RateCurve};

use crate::channel::{
    high_snr_ratio_partial, high_snr_threshold_expectation, log1p_expectation, mass_between,
    pos_part_log_ratio_expectation, pos_part_log_ratio_partial, GainDistribution,
};
use crate::quadrature::{gauss_legendre_unit, integrate, QuadratureSpec};
use crate::quantizer::{average_power, check_feasible, QuantizerPolicy, Scenario};
use crate::{invalid, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A (lower, upper) pair of rates in bits per channel use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub lower: f64,
    pub upper: f64,
    /// Policy attaining `lower`; `None` for power-free limits.
    pub policy_lower: Option<QuantizerPolicy>,
    pub policy_upper: Option<QuantizerPolicy>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl BoundResult {
    pub fn is_ordered(&self, slack: f64) -> bool {
        self.lower <= self.upper + slack && self.lower >= 0.0 && self.upper >= 0.0
    }
}

/// Which message structure a bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Message {
    /// One message decoded by every receiver; rates are min over receivers.
    Common,
    /// Independent messages; the strongest receiver is served (sum rate).
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Lower,
    Upper,
}

/// Binds a scenario to the laws one message structure needs.
///
/// Building the maximum law once and reusing it keeps its breakpoint cache warm.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub message: Message,
    laws: Vec<GainDistribution>,
    gate: GainDistribution,
    eve: GainDistribution,
    p_avg: f64,
    quad: QuadratureSpec,
}

impl Evaluator {
    pub fn new(scn: &Scenario, message: Message) -> Self {
        let (laws, gate) = match message {
            Message::Common => (
                scn.distinct_main_laws().into_iter().map(|(_, l)| l.clone()).collect(),
                scn.cm_gate_law().clone(),
            ),
            Message::Independent => {
                let m = scn.max_law();
                (vec![m.clone()], m)
            }
        };
        Evaluator { message, laws, gate, eve: scn.eve.clone(), p_avg: scn.p_avg, quad: scn.quad }
    }

    /// Laws the bound is minimized over (one per distinct receiver law).
    pub fn laws(&self) -> &[GainDistribution] {
        &self.laws
    }

    /// Law whose interval masses enter the power constraint.
    pub fn gate(&self) -> &GainDistribution {
        &self.gate
    }

    pub fn eve(&self) -> &GainDistribution {
        &self.eve
    }

    pub fn p_avg(&self) -> f64 {
        self.p_avg
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn with_p_avg(mut self, p_avg: f64) -> Self {
        self.p_avg = p_avg;
        self
    }

    /// Lower bound at `policy`; `p0` is ignored.
    pub fn lower(&self, policy: &QuantizerPolicy) -> Result<f64> {
        let policy = policy.clone().with_p0(0.0);
        check_feasible(&policy, &self.gate, self.p_avg)?;
        Ok(self.lower_unchecked(&policy))
    }

    /// Upper bound at `policy`, including the `[0, τ_1)` interval at power `p0`.
    pub fn upper(&self, policy: &QuantizerPolicy) -> Result<f64> {
        check_feasible(policy, &self.gate, self.p_avg)?;
        Ok(self.upper_unchecked(policy))
    }

    pub fn evaluate(&self, side: Side, policy: &QuantizerPolicy) -> Result<f64> {
        match side {
            Side::Lower => self.lower(policy),
            Side::Upper => self.upper(policy),
        }
    }

    /// Σ_q Pr[γ_k ∈ [τ_q, τ_{q+1})] E[{log2((1+τ_q P_q)/(1+γe P_q))}^+], minimized over k.
    pub fn lower_unchecked(&self, policy: &QuantizerPolicy) -> f64 {
        let rates: Vec<f64> = (1..=policy.q())
            .into_par_iter()
            .map(|q| pos_part_log_ratio_expectation(&self.eve, policy.interval(q).0, policy.power(q), &self.quad))
            .collect();
        self.laws
            .iter()
            .map(|law| {
                let mut acc = 0.0;
                for (i, r) in rates.iter().enumerate() {
                    let (lo, hi) = policy.interval(i + 1);
                    if *r > 0.0 {
                        acc += mass_between(law, lo, hi) * r;
                    }
                }
                acc
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Σ_{q>=0} E[{log2((1+γ_k P_q)/(1+γe P_q))}^+ ; γ_k ∈ interval q], minimized over k.
    pub fn upper_unchecked(&self, policy: &QuantizerPolicy) -> f64 {
        self.laws
            .iter()
            .map(|law| {
                let terms: Vec<f64> = (0..=policy.q())
                    .into_par_iter()
                    .map(|q| {
                        let (lo, hi) = policy.interval(q);
                        pos_part_log_ratio_partial(law, &self.eve, lo, hi, policy.power(q), &self.quad)
                    })
                    .collect();
                // q = 0 last so every lower-bound summand is matched in the same order.
                terms[1..].iter().sum::<f64>() + terms[0]
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// High-SNR lower limit Σ_q Pr[interval q] E[{log2(τ_q/γe)}^+], minimized over k.
    pub fn high_snr_lower(&self, thresholds: &[f64]) -> f64 {
        let h: Vec<f64> = thresholds
            .par_iter()
            .map(|&t| high_snr_threshold_expectation(&self.eve, t, &self.quad))
            .collect();
        self.laws
            .iter()
            .map(|law| {
                let mut acc = 0.0;
                for (i, v) in h.iter().enumerate() {
                    let hi = thresholds.get(i + 1).copied().unwrap_or(f64::INFINITY);
                    if *v > 0.0 {
                        acc += mass_between(law, thresholds[i], hi) * v;
                    }
                }
                acc
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// High-SNR upper limit E[{log2(γ_k/γe)}^+], minimized over k.
    pub fn high_snr_upper(&self) -> f64 {
        self.laws
            .iter()
            .map(|law| high_snr_ratio_partial(law, &self.eve, 0.0, f64::INFINITY, &self.quad))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn cm_lower(scn: &Scenario, policy: &QuantizerPolicy) -> Result<f64> {
    Evaluator::new(scn, Message::Common).lower(policy)
}

pub fn cm_upper(scn: &Scenario, policy: &QuantizerPolicy) -> Result<f64> {
    Evaluator::new(scn, Message::Common).upper(policy)
}

pub fn im_lower(scn: &Scenario, policy: &QuantizerPolicy) -> Result<f64> {
    Evaluator::new(scn, Message::Independent).lower(policy)
}

pub fn im_upper(scn: &Scenario, policy: &QuantizerPolicy) -> Result<f64> {
    Evaluator::new(scn, Message::Independent).upper(policy)
}

/// Piecewise-constant power function: `powers[i]` applies on `[knots[i], knots[i+1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFunction {
    pub knots: Vec<f64>,
    pub powers: Vec<f64>,
}

impl PowerFunction {
    /// Knots at equal-probability quantiles of `gate`, starting at 0.
    pub fn quantile_grid(gate: &GainDistribution, knots: usize, power: f64) -> Result<Self> {
        let knots = crate::quantizer::uniform_mass_thresholds(gate, knots)?;
        let n = knots.len();
        Ok(PowerFunction { knots, powers: vec![power; n] })
    }

    pub fn constant(power: f64) -> Self {
        PowerFunction { knots: vec![0.0], powers: vec![power] }
    }

    pub fn at(&self, gamma: f64) -> f64 {
        let i = self.knots.partition_point(|&t| t <= gamma);
        if i == 0 {
            0.0
        } else {
            self.powers[i - 1]
        }
    }

    pub fn to_policy(&self) -> Result<QuantizerPolicy> {
        if self.knots.first() != Some(&0.0) {
            return invalid("power function knots must start at 0");
        }
        QuantizerPolicy::new(self.knots.clone(), self.powers.clone())
    }

    pub fn average_power(&self, gate: &GainDistribution) -> Result<f64> {
        Ok(average_power(&self.to_policy()?, gate))
    }
}

/// E[{log2((1+γ P(γ))/(1+γe P(γ)))}^+] with full CSI at the transmitter.
/// A step power function is exactly an upper-bound policy with `τ_1 = 0`.
pub fn capacity_perfect_csit(eval: &Evaluator, power: &PowerFunction) -> Result<f64> {
    eval.upper(&power.to_policy()?)
}

pub fn cm_capacity_perfect_csit(scn: &Scenario, power: &PowerFunction) -> Result<f64> {
    capacity_perfect_csit(&Evaluator::new(scn, Message::Common), power)
}

pub fn im_capacity_perfect_csit(scn: &Scenario, power: &PowerFunction) -> Result<f64> {
    capacity_perfect_csit(&Evaluator::new(scn, Message::Independent), power)
}

/// Probability that each receiver holds the largest gain, ties split uniformly.
pub fn win_probabilities(scn: &Scenario) -> Vec<f64> {
    let laws = &scn.main_laws;
    let k = laws.len();
    if laws.iter().all(|l| *l == laws[0]) {
        return vec![1.0 / k as f64; k];
    }
    let (ts, tw) = gauss_legendre_unit(k.max(2));
    (0..k)
        .map(|i| {
            let law = &laws[i];
            if law.is_discrete() {
                // Each atom x of law i wins against j with weight F_j(x-) + t p_j(x),
                // integrated over the uniform tie-break variable t.
                let atoms = law.atoms_in(0.0, f64::INFINITY);
                atoms
                    .iter()
                    .map(|&x| {
                        let pi = law.cdf(x) - law.prob_below(x);
                        let tie: f64 = ts
                            .iter()
                            .zip(&tw)
                            .map(|(t, w)| {
                                w * (0..k)
                                    .filter(|&j| j != i)
                                    .map(|j| {
                                        let below = laws[j].prob_below(x);
                                        below + t * (laws[j].cdf(x) - below)
                                    })
                                    .product::<f64>()
                            })
                            .sum();
                        pi * tie
                    })
                    .sum()
            } else {
                let top = law.upper_truncation(scn.quad.tail_truncation_mass);
                let mut breaks: Vec<f64> = laws.iter().flat_map(|l| l.breakpoints(0.0, top)).collect();
                breaks.sort_by(f64::total_cmp);
                let others = |x: f64| (0..k).filter(|&j| j != i).map(|j| laws[j].cdf(x)).product::<f64>();
                match law.pdf(0.0) {
                    Some(_) => {
                        integrate(|x| law.pdf(x).unwrap_or(0.0) * others(x), 0.0, top, &breaks, &scn.quad).value
                    }
                    None => 0.0,
                }
            }
        })
        .collect()
}

/// Share of the independent-message sum rate obtained by receiver `k`.
pub fn per_user_rate_share(scn: &Scenario, sum_rate: f64, k: usize) -> Result<f64> {
    if k >= scn.k() {
        return invalid(format!("receiver index {k} out of range for K = {}", scn.k()));
    }
    Ok(sum_rate * win_probabilities(scn)[k])
}

/// Power-free limits of the common-message bounds at the given thresholds.
pub fn cm_high_snr_bounds(scn: &Scenario, thresholds: &[f64]) -> Result<BoundResult> {
    high_snr_bounds(&Evaluator::new(scn, Message::Common), thresholds)
}

pub fn im_high_snr_bounds(scn: &Scenario, thresholds: &[f64]) -> Result<BoundResult> {
    high_snr_bounds(&Evaluator::new(scn, Message::Independent), thresholds)
}

pub fn high_snr_bounds(eval: &Evaluator, thresholds: &[f64]) -> Result<BoundResult> {
    if thresholds.is_empty() || thresholds[0] < 0.0 || thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("thresholds must be nonnegative and strictly increasing");
    }
    Ok(BoundResult {
        lower: eval.high_snr_lower(thresholds),
        upper: eval.high_snr_upper(),
        policy_lower: None,
        policy_upper: None,
        diagnostics: BTreeMap::new(),
    })
}

/// Statistics-only rate max_k {E[log2((1+γ_k P)/(1+γe P))]}^+ with the
/// positive part outside the expectation.
pub fn statistics_only_rate(scn: &Scenario, power: f64) -> f64 {
    let eve = log1p_expectation(&scn.eve, power, None, &scn.quad).unwrap_or(0.0);
    scn.distinct_main_laws()
        .iter()
        .map(|(_, l)| log1p_expectation(l, power, None, &scn.quad).unwrap_or(0.0) - eve)
        .fold(0.0, f64::max)
}

/// max(R̄_s, pr_usable · cs_minus): the better of ignoring feedback and
/// scaling the feedback-based rate by the probability the feedback is usable.
pub fn erased_feedback_fallback(scn: &Scenario, pr_usable: f64, fixed_power: f64, cs_minus: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pr_usable) {
        return invalid(format!("probability must lie in [0, 1], got {pr_usable}"));
    }
    if !(fixed_power >= 0.0 && fixed_power <= scn.p_avg * (1.0 + crate::quantizer::POWER_SLACK)) {
        return invalid(format!("fixed power {fixed_power} outside [0, P_avg]"));
    }
    Ok(statistics_only_rate(scn, fixed_power).max(pr_usable * cs_minus))
}
