//! Reconstruction points, per-interval powers and the average power constraint.

use crate::channel::{mass_between, GainDistribution};
use crate::quadrature::QuadratureSpec;
use crate::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Relative and absolute slack accepted by [`feasible`].
pub const POWER_SLACK: f64 = 1e-12;

/// Quantizer thresholds `τ_1 < ... < τ_Q` with powers `P_1..P_Q`.
///
/// Interval `q >= 1` is `[τ_q, τ_{q+1})` with `τ_{Q+1} = ∞`. The extra
/// interval `[0, τ_1)` carries `p0`, which only the upper bounds use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizerPolicy {
    pub thresholds: Vec<f64>,
    pub powers: Vec<f64>,
    #[serde(default)]
    pub p0: f64,
}

impl QuantizerPolicy {
    pub fn new(thresholds: Vec<f64>, powers: Vec<f64>) -> Result<Self> {
        let p = QuantizerPolicy { thresholds, powers, p0: 0.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_p0(mut self, p0: f64) -> Self {
        self.p0 = p0;
        self
    }

    /// Same thresholds, constant power on every interval (and zero on `[0, τ_1)`).
    pub fn equal_power(thresholds: Vec<f64>, power: f64) -> Result<Self> {
        let n = thresholds.len();
        Self::new(thresholds, vec![power; n])
    }

    pub fn q(&self) -> usize {
        self.thresholds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return invalid("policy needs at least one threshold");
        }
        if self.thresholds.len() != self.powers.len() {
            return invalid("thresholds and powers differ in length");
        }
        if self.thresholds[0] < 0.0 || self.thresholds.iter().any(|t| !t.is_finite()) {
            return invalid("thresholds must be finite and nonnegative");
        }
        if self.thresholds.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("thresholds must be strictly increasing");
        }
        if self.powers.iter().chain(std::iter::once(&self.p0)).any(|p| !(p.is_finite() && *p >= 0.0)) {
            return invalid("powers must be finite and nonnegative");
        }
        Ok(())
    }

    /// Bounds of interval `q` (0 is the no-feedback interval `[0, τ_1)`).
    pub fn interval(&self, q: usize) -> (f64, f64) {
        let lo = if q == 0 { 0.0 } else { self.thresholds[q - 1] };
        let hi = self.thresholds.get(q).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    /// Power used on interval `q`.
    pub fn power(&self, q: usize) -> f64 {
        if q == 0 {
            self.p0
        } else {
            self.powers[q - 1]
        }
    }

    /// Index of the interval containing `gamma`.
    pub fn index_of(&self, gamma: f64) -> usize {
        self.thresholds.partition_point(|&t| t <= gamma)
    }

    /// Interval masses for q = 0..=Q under `gate`.
    pub fn masses(&self, gate: &GainDistribution) -> Vec<f64> {
        (0..=self.q())
            .map(|q| {
                let (lo, hi) = self.interval(q);
                mass_between(gate, lo, hi)
            })
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        QuantizerPolicy {
            thresholds: self.thresholds.clone(),
            powers: self.powers.iter().map(|p| p * factor).collect(),
            p0: self.p0 * factor,
        }
    }
}

/// Long-run average power Σ_q Pr[γ ∈ interval q] · P_q.
pub fn average_power(policy: &QuantizerPolicy, gate: &GainDistribution) -> f64 {
    policy
        .masses(gate)
        .iter()
        .enumerate()
        .map(|(q, m)| m * policy.power(q))
        .sum()
}

pub fn feasible(policy: &QuantizerPolicy, gate: &GainDistribution, p_avg: f64) -> bool {
    average_power(policy, gate) <= p_avg * (1.0 + POWER_SLACK) + POWER_SLACK
}

pub(crate) fn check_feasible(policy: &QuantizerPolicy, gate: &GainDistribution, p_avg: f64) -> Result<()> {
    policy.validate()?;
    let used = average_power(policy, gate);
    if used <= p_avg * (1.0 + POWER_SLACK) + POWER_SLACK {
        Ok(())
    } else {
        Err(Error::ConstraintViolation { used, budget: p_avg })
    }
}

/// `τ_q = F^{-1}((q-1)/Q)` for q = 1..Q, so the Q intervals carry equal mass.
/// The first threshold is 0.
pub fn uniform_mass_thresholds(dist: &GainDistribution, q: usize) -> Result<Vec<f64>> {
    if q == 0 {
        return invalid("Q must be at least 1");
    }
    let mut t: Vec<f64> = (0..q)
        .map(|i| if i == 0 { 0.0 } else { dist.quantile(i as f64 / q as f64) })
        .collect();
    for i in 1..t.len() {
        if !(t[i] > t[i - 1]) {
            t[i] = next_up(t[i - 1]);
        }
    }
    Ok(t)
}

pub(crate) fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// How the receivers reach the transmitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackTopology {
    #[default]
    PerReceiver,
    Shared,
}

/// A complete problem instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Feedback bits; `Q = 2^b` intervals.
    pub b: u32,
    /// Average power budget (linear).
    pub p_avg: f64,
    pub main_laws: Vec<GainDistribution>,
    /// Effective eavesdropper law (after any collusion transform).
    pub eve: GainDistribution,
    /// Erasure probability of each feedback bit (BCCM only).
    pub epsilon: f64,
    pub topology: FeedbackTopology,
    pub quad: QuadratureSpec,
}

impl Scenario {
    pub fn new(main_laws: Vec<GainDistribution>, eve: GainDistribution, b: u32, p_avg: f64) -> Result<Self> {
        let s = Scenario {
            b,
            p_avg,
            main_laws,
            eve,
            epsilon: 0.0,
            topology: FeedbackTopology::PerReceiver,
            quad: QuadratureSpec::default(),
        };
        s.validate()?;
        Ok(s)
    }

    /// `k` iid unit-mean Rayleigh receivers against an eavesdropper of mean `sigma_e2`.
    pub fn rayleigh(k: usize, b: u32, p_avg: f64, sigma_e2: f64) -> Result<Self> {
        let main = GainDistribution::rayleigh(1.0)?;
        Self::new(vec![main; k], GainDistribution::rayleigh(sigma_e2)?, b, p_avg)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_p_avg(mut self, p_avg: f64) -> Result<Self> {
        self.p_avg = p_avg;
        self.validate()?;
        Ok(self)
    }

    pub fn with_bits(mut self, b: u32) -> Result<Self> {
        self.b = b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_topology(mut self, topology: FeedbackTopology) -> Self {
        self.topology = topology;
        self
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.main_laws.is_empty() {
            return invalid("K must be at least 1");
        }
        if self.b > 20 {
            return invalid(format!("b = {} is too large", self.b));
        }
        if !(self.p_avg > 0.0 && self.p_avg.is_finite()) {
            return invalid(format!("P_avg must be positive, got {}", self.p_avg));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return invalid(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.main_laws.len()
    }

    /// Number of quantization intervals `2^b`.
    pub fn q(&self) -> usize {
        1usize << self.b
    }

    /// Index of the receiver with the smallest mean gain (first on ties).
    pub fn weakest_receiver(&self) -> usize {
        let mut best = 0;
        for (i, l) in self.main_laws.iter().enumerate() {
            if l.mean() < self.main_laws[best].mean() {
                best = i;
            }
        }
        best
    }

    /// Law whose feedback drives power in the common-message scheme.
    pub fn cm_gate_law(&self) -> &GainDistribution {
        &self.main_laws[self.weakest_receiver()]
    }

    /// Law of the strongest receiver gain.
    pub fn max_law(&self) -> GainDistribution {
        let first = &self.main_laws[0];
        if self.k() == 1 {
            first.clone()
        } else if self.main_laws.iter().all(|l| l == first) {
            GainDistribution::iid_max(first.clone(), self.k() as u64).expect("count >= 1")
        } else {
            GainDistribution::independent_max(self.main_laws.clone()).expect("nonempty")
        }
    }

    /// Distinct receiver laws with the index of their first receiver.
    pub fn distinct_main_laws(&self) -> Vec<(usize, &GainDistribution)> {
        let mut out: Vec<(usize, &GainDistribution)> = Vec::new();
        for (i, l) in self.main_laws.iter().enumerate() {
            if !out.iter().any(|(_, o)| *o == l) {
                out.push((i, l));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp1() -> GainDistribution {
        GainDistribution::exponential(1.0).unwrap()
    }

    #[test]
    fn average_power_examples() {
        let g = exp1();
        let p = QuantizerPolicy::equal_power(vec![0.0, 0.4, 1.1], 2.5).unwrap();
        assert!((average_power(&p, &g) - 2.5).abs() < 1e-15);
        let z = QuantizerPolicy::equal_power(vec![0.0, 0.4], 0.0).unwrap();
        assert_eq!(average_power(&z, &g), 0.0);
        let p = QuantizerPolicy::new(vec![0.0, 2f64.ln()], vec![2.0, 4.0]).unwrap();
        assert!((average_power(&p, &g) - 3.0).abs() < 1e-15);
        assert!(feasible(&p, &g, 3.0));
        assert!(!feasible(&p, &g, 2.99));
        assert!(feasible(&p.scaled(0.5), &g, 3.0));
        let shifted = QuantizerPolicy::equal_power(vec![1.0], 2.0).unwrap();
        assert!((average_power(&shifted, &g) - 2.0 * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn uniform_thresholds() {
        let t = uniform_mass_thresholds(&exp1(), 2).unwrap();
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(uniform_mass_thresholds(&exp1(), 1).unwrap(), vec![0.0]);
        let g = GainDistribution::exponential(2.0).unwrap();
        let t = uniform_mass_thresholds(&g, 4).unwrap();
        for (q, x) in t.iter().enumerate() {
            let closed = -2.0 * (1.0 - q as f64 / 4.0).ln();
            assert!((x - closed).abs() < 1e-14);
        }
        let p = QuantizerPolicy::equal_power(t, 1.0).unwrap();
        for m in &p.masses(&g)[1..] {
            assert!((m - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn policy_validation() {
        assert!(QuantizerPolicy::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(QuantizerPolicy::new(vec![1.0], vec![-1.0]).is_err());
        assert!(QuantizerPolicy::new(vec![1.0], vec![1.0, 2.0]).is_err());
        let p = QuantizerPolicy::new(vec![0.5, 1.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(p.index_of(0.1), 0);
        assert_eq!(p.index_of(0.5), 1);
        assert_eq!(p.index_of(7.0), 2);
        assert_eq!(p.interval(2), (1.0, f64::INFINITY));
    }

    #[test]
    fn scenario_gates() {
        let s = Scenario::new(
            vec![GainDistribution::exponential(2.0).unwrap(), exp1(), exp1()],
            exp1(),
            2,
            10.0,
        )
        .unwrap();
        assert_eq!(s.weakest_receiver(), 1);
        assert_eq!(s.distinct_main_laws().len(), 2);
        assert!(matches!(s.max_law(), GainDistribution::IndependentMax(_)));
        assert_eq!(Scenario::rayleigh(1, 1, 1.0, 1.0).unwrap().max_law(), exp1());
        assert!(Scenario::rayleigh(3, 1, 0.0, 1.0).is_err());
        assert!(Scenario::rayleigh(3, 1, 1.0, 1.0).unwrap().with_epsilon(1.5).is_err());
    }

    proptest! {
        #[test]
        fn feasibility_survives_scaling_down(ps in proptest::collection::vec(0.0f64..50.0, 4), f in 0.0f64..1.0, budget in 0.1f64..40.0) {
            let g = exp1();
            let t = uniform_mass_thresholds(&g, 4).unwrap();
            let pol = QuantizerPolicy::new(t, ps).unwrap();
            if feasible(&pol, &g, budget) {
                prop_assert!(feasible(&pol.scaled(f), &g, budget));
            }
        }

        #[test]
        fn uniform_masses_are_equal(m in 0.2f64..5.0, b in 0u32..6) {
            let g = GainDistribution::exponential(m).unwrap();
            let q = 1usize << b;
            let pol = QuantizerPolicy::equal_power(uniform_mass_thresholds(&g, q).unwrap(), 1.0).unwrap();
            for mass in &pol.masses(&g)[1..] {
                prop_assert!((mass - 1.0 / q as f64).abs() < 1e-9);
            }
        }
    }
}
