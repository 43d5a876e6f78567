use crate::quadrature::{integrate, QuadratureSpec};
use crate::{invalid, Result};
use rand::Rng;
use std::fmt;
use std::sync::{Arc, OnceLock};

pub type Callback = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Probability levels used as integration breakpoints for every law.
const BREAK_PROBS: [f64; 17] = [
    1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99,
];
const BREAK_TAILS: [f64; 6] = [1e-3, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];

/// A nonnegative channel-gain law.
#[derive(Clone, Debug, PartialEq)]
pub enum GainDistribution {
    Exponential { mean: f64 },
    /// Sum of `shape` iid exponentials with mean `scale`.
    Erlang { shape: u32, scale: f64 },
    PointMass { value: f64 },
    Empirical(Arc<EmpiricalLaw>),
    IidMax(Arc<MaxOrderStatistic>),
    IndependentMax(Arc<IndependentMaxLaw>),
    Custom(Arc<CustomLaw>),
}

pub struct EmpiricalLaw {
    samples: Vec<f64>,
    atoms: Vec<f64>,
    mean: f64,
}

/// Law of the maximum of `count` iid draws from `base`.
pub struct MaxOrderStatistic {
    pub base: GainDistribution,
    pub count: u64,
    mean: f64,
    breaks: OnceLock<Vec<f64>>,
}

pub struct IndependentMaxLaw {
    laws: Vec<GainDistribution>,
    mean: f64,
    breaks: OnceLock<Vec<f64>>,
}

pub struct CustomLaw {
    pub name: String,
    density: Callback,
    cdf: Callback,
    mean: f64,
    breaks: OnceLock<Vec<f64>>,
}

impl fmt::Debug for EmpiricalLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Empirical(n={}, mean={})", self.samples.len(), self.mean)
    }
}
impl PartialEq for EmpiricalLaw {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples
    }
}
impl fmt::Debug for MaxOrderStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Max({:?}, {})", self.base, self.count)
    }
}
impl PartialEq for MaxOrderStatistic {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.count == other.count
    }
}
impl fmt::Debug for IndependentMaxLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndependentMax({:?})", self.laws)
    }
}
impl PartialEq for IndependentMaxLaw {
    fn eq(&self, other: &Self) -> bool {
        self.laws == other.laws
    }
}
impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.name)
    }
}
impl PartialEq for CustomLaw {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.density, &other.density) && Arc::ptr_eq(&self.cdf, &other.cdf)
    }
}

/// Smallest `x >= 0` with `g(x) >= target` for nondecreasing `g`.
fn bisect_increasing(g: impl Fn(f64) -> f64, target: f64, scale: f64) -> f64 {
    if g(0.0) >= target {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let mut grow = 0;
    while g(hi) < target {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn erlang_sf(shape: u32, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let y = x / scale;
    if y < shape as f64 {
        return 1.0 - erlang_cdf(shape, scale, x);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..shape {
        term *= y / i as f64;
        sum += term;
    }
    (-y + sum.ln()).exp()
}

fn erlang_cdf(shape: u32, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let y = x / scale;
    if y >= shape as f64 {
        return 1.0 - erlang_sf(shape, scale, x);
    }
    // e^{-y} y^n / n! * sum_j y^j / ((n+1)...(n+j))
    let lead = (-y + shape as f64 * y.ln() - ln_factorial(shape)).exp();
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..10_000 {
        term *= y / (shape + j) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    (lead * sum).min(1.0)
}

impl GainDistribution {
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return invalid(format!("exponential mean must be positive, got {mean}"));
        }
        Ok(GainDistribution::Exponential { mean })
    }

    /// Gain of a zero-mean circular Gaussian coefficient with variance `sigma2`.
    pub fn rayleigh(sigma2: f64) -> Result<Self> {
        Self::exponential(sigma2)
    }

    pub fn erlang(shape: u32, scale: f64) -> Result<Self> {
        if shape == 0 || !(scale > 0.0 && scale.is_finite()) {
            return invalid("erlang needs shape >= 1 and positive scale");
        }
        if shape == 1 {
            return Ok(GainDistribution::Exponential { mean: scale });
        }
        Ok(GainDistribution::Erlang { shape, scale })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return invalid(format!("point mass must be a finite nonnegative value, got {value}"));
        }
        Ok(GainDistribution::PointMass { value })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return invalid("empirical law needs at least one sample");
        }
        if samples.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return invalid("empirical samples must be finite and nonnegative");
        }
        samples.sort_by(f64::total_cmp);
        let mut atoms = samples.clone();
        atoms.dedup();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        Ok(GainDistribution::Empirical(Arc::new(EmpiricalLaw { samples, atoms, mean })))
    }

    /// Law of the largest of `count` iid draws; `count = 1` keeps the order-statistic wrapper.
    pub fn iid_max(base: GainDistribution, count: u64) -> Result<Self> {
        Ok(GainDistribution::IidMax(Arc::new(MaxOrderStatistic::new(base, count)?)))
    }

    /// Law of the largest of independent draws from `laws`.
    pub fn independent_max(laws: Vec<GainDistribution>) -> Result<Self> {
        if laws.is_empty() {
            return invalid("independent max of an empty family");
        }
        let mut law = IndependentMaxLaw { laws, mean: 0.0, breaks: OnceLock::new() };
        let tmp = GainDistribution::IndependentMax(Arc::new(IndependentMaxLaw {
            laws: law.laws.clone(),
            mean: 0.0,
            breaks: OnceLock::new(),
        }));
        law.mean = tmp.mean_by_quadrature();
        Ok(GainDistribution::IndependentMax(Arc::new(law)))
    }

    /// User-supplied law given by its density and CDF on [0, inf).
    pub fn custom(
        name: impl Into<String>,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let mut law = CustomLaw {
            name: name.into(),
            density: Arc::new(density),
            cdf: Arc::new(cdf),
            mean: 0.0,
            breaks: OnceLock::new(),
        };
        let c0 = (law.cdf)(0.0);
        if !(0.0..=1e-12).contains(&c0) {
            return invalid(format!("custom law {}: cdf(0) = {c0}", law.name));
        }
        let tmp = GainDistribution::Custom(Arc::new(CustomLaw {
            name: law.name.clone(),
            density: law.density.clone(),
            cdf: law.cdf.clone(),
            mean: 0.0,
            breaks: OnceLock::new(),
        }));
        law.mean = tmp.mean_by_quadrature();
        if !law.mean.is_finite() {
            return invalid(format!("custom law {}: mean is not finite", law.name));
        }
        Ok(GainDistribution::Custom(Arc::new(law)))
    }

    /// P[γ <= x].
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            GainDistribution::Exponential { mean } => -(-x / mean).exp_m1(),
            GainDistribution::Erlang { shape, scale } => erlang_cdf(*shape, *scale, x),
            GainDistribution::PointMass { value } => (x >= *value) as u8 as f64,
            GainDistribution::Empirical(e) => e.count_le(x) as f64 / e.samples.len() as f64,
            GainDistribution::IidMax(m) => m.cdf(x),
            GainDistribution::IndependentMax(m) => m.log_cdf(x, false).exp(),
            GainDistribution::Custom(c) => (c.cdf)(x).clamp(0.0, 1.0),
        }
    }

    /// P[γ > x].
    pub fn sf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            GainDistribution::Exponential { mean } => (-x / mean).exp(),
            GainDistribution::Erlang { shape, scale } => erlang_sf(*shape, *scale, x),
            GainDistribution::PointMass { value } => (*value > x) as u8 as f64,
            GainDistribution::Empirical(e) => {
                (e.samples.len() - e.count_le(x)) as f64 / e.samples.len() as f64
            }
            GainDistribution::IidMax(m) => m.sf(x),
            GainDistribution::IndependentMax(m) => -m.log_cdf(x, false).exp_m1(),
            GainDistribution::Custom(c) => (1.0 - (c.cdf)(x)).clamp(0.0, 1.0),
        }
    }

    /// P[γ < x] (left limit of the CDF).
    pub fn prob_below(&self, x: f64) -> f64 {
        match self {
            GainDistribution::PointMass { value } => (*value < x) as u8 as f64,
            GainDistribution::Empirical(e) => e.count_lt(x) as f64 / e.samples.len() as f64,
            GainDistribution::IidMax(m) if m.base.is_discrete() => m.prob_below(x),
            GainDistribution::IndependentMax(m) if self.is_discrete() => m.log_cdf(x, true).exp(),
            _ => self.cdf(x),
        }
    }

    /// P[γ >= x].
    pub fn prob_at_least(&self, x: f64) -> f64 {
        match self {
            GainDistribution::PointMass { value } => (*value >= x) as u8 as f64,
            GainDistribution::Empirical(e) => {
                (e.samples.len() - e.count_lt(x)) as f64 / e.samples.len() as f64
            }
            GainDistribution::IidMax(m) if m.base.is_discrete() => m.prob_at_least(x),
            GainDistribution::IndependentMax(m) if self.is_discrete() => -m.log_cdf(x, true).exp_m1(),
            _ => self.sf(x),
        }
    }

    /// Density, when the law has one.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        if x < 0.0 {
            return if self.is_discrete() { None } else { Some(0.0) };
        }
        match self {
            GainDistribution::Exponential { mean } => Some((-x / mean).exp() / mean),
            GainDistribution::Erlang { shape, scale } => {
                if x == 0.0 {
                    return Some(0.0);
                }
                let y = x / scale;
                let n = *shape as f64;
                Some((-y + (n - 1.0) * y.ln() - ln_factorial(shape - 1)).exp() / scale)
            }
            GainDistribution::PointMass { .. } | GainDistribution::Empirical(_) => None,
            GainDistribution::IidMax(m) => m.pdf(x),
            GainDistribution::IndependentMax(m) => {
                let mut total = 0.0;
                for (i, law) in m.laws.iter().enumerate() {
                    let mut term = law.pdf(x)?;
                    for (j, other) in m.laws.iter().enumerate() {
                        if i != j {
                            term *= other.cdf(x);
                        }
                    }
                    total += term;
                }
                Some(total)
            }
            GainDistribution::Custom(c) => Some((c.density)(x)),
        }
    }

    /// Smallest x with cdf(x) >= p.
    pub fn quantile(&self, p: f64) -> f64 {
        if p >= 1.0 {
            return match self {
                GainDistribution::PointMass { value } => *value,
                GainDistribution::Empirical(e) => *e.samples.last().unwrap(),
                _ => f64::INFINITY,
            };
        }
        let p = p.max(0.0);
        match self {
            GainDistribution::Exponential { mean } => -mean * (-p).ln_1p(),
            GainDistribution::PointMass { value } => {
                if p > 0.0 {
                    *value
                } else {
                    0.0
                }
            }
            GainDistribution::Empirical(e) => {
                let n = e.samples.len();
                let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
                e.samples[idx]
            }
            GainDistribution::IidMax(m) => m.quantile(p),
            _ => {
                if p > 0.5 {
                    self.isf(1.0 - p)
                } else {
                    bisect_increasing(|x| self.cdf(x), p, self.mean())
                }
            }
        }
    }

    /// Smallest x with sf(x) <= s; accurate for tiny `s`.
    pub fn isf(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        if s <= 0.0 {
            return self.quantile(1.0);
        }
        match self {
            GainDistribution::Exponential { mean } => -mean * s.ln(),
            GainDistribution::PointMass { value } => *value,
            GainDistribution::Empirical(e) => {
                let n = e.samples.len();
                let drop = (s * n as f64).floor() as usize;
                if drop >= n {
                    0.0
                } else {
                    e.samples[n - drop - 1]
                }
            }
            GainDistribution::IidMax(m) => m.isf(s),
            _ => bisect_increasing(|x| -self.sf(x), -s, self.mean()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            GainDistribution::Exponential { mean } => *mean,
            GainDistribution::Erlang { shape, scale } => *shape as f64 * scale,
            GainDistribution::PointMass { value } => *value,
            GainDistribution::Empirical(e) => e.mean,
            GainDistribution::IidMax(m) => m.mean,
            GainDistribution::IndependentMax(m) => m.mean,
            GainDistribution::Custom(c) => c.mean,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            GainDistribution::Exponential { mean } => -mean * (-rng.gen::<f64>()).ln_1p(),
            GainDistribution::Erlang { shape, scale } => {
                (0..*shape).map(|_| -scale * (-rng.gen::<f64>()).ln_1p()).sum()
            }
            GainDistribution::PointMass { value } => *value,
            GainDistribution::Empirical(e) => e.samples[rng.gen_range(0..e.samples.len())],
            GainDistribution::IidMax(m) => m.sample(rng),
            GainDistribution::IndependentMax(m) => {
                m.laws.iter().map(|l| l.sample(rng)).fold(0.0, f64::max)
            }
            GainDistribution::Custom(_) => self.quantile(rng.gen::<f64>()),
        }
    }

    /// True when the law has no density (purely atomic).
    pub fn is_discrete(&self) -> bool {
        match self {
            GainDistribution::PointMass { .. } | GainDistribution::Empirical(_) => true,
            GainDistribution::IidMax(m) => m.base.is_discrete(),
            GainDistribution::IndependentMax(m) => m.laws.iter().all(|l| l.is_discrete()),
            _ => false,
        }
    }

    /// True when the law has atoms (jumps in the CDF).
    pub fn has_atoms(&self) -> bool {
        match self {
            GainDistribution::PointMass { .. } | GainDistribution::Empirical(_) => true,
            GainDistribution::IidMax(m) => m.base.has_atoms(),
            GainDistribution::IndependentMax(m) => m.laws.iter().any(|l| l.has_atoms()),
            _ => false,
        }
    }

    /// Jump locations of the CDF inside `[lo, hi]`.
    pub fn atoms_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            GainDistribution::PointMass { value } => {
                if *value >= lo && *value <= hi {
                    vec![*value]
                } else {
                    vec![]
                }
            }
            GainDistribution::Empirical(e) => {
                let a = e.atoms.partition_point(|&v| v < lo);
                let b = e.atoms.partition_point(|&v| v <= hi);
                e.atoms[a..b].to_vec()
            }
            GainDistribution::IidMax(m) => m.base.atoms_in(lo, hi),
            GainDistribution::IndependentMax(m) => {
                let mut v: Vec<f64> = m.laws.iter().flat_map(|l| l.atoms_in(lo, hi)).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
            _ => vec![],
        }
    }

    /// Quantiles at fixed probability levels plus far-tail points.
    pub fn reference_points(&self) -> Vec<f64> {
        let compute = || {
            let mut v: Vec<f64> = BREAK_PROBS.iter().map(|&p| self.quantile(p)).collect();
            v.extend(BREAK_TAILS.iter().map(|&s| self.isf(s)));
            v.retain(|x| x.is_finite() && *x > 0.0);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        match self {
            GainDistribution::IidMax(m) => m.breaks.get_or_init(compute).clone(),
            GainDistribution::IndependentMax(m) => m.breaks.get_or_init(compute).clone(),
            GainDistribution::Custom(c) => c.breaks.get_or_init(compute).clone(),
            _ => compute(),
        }
    }

    /// Breakpoints inside `(lo, hi)` for integrals against this law.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .reference_points()
            .into_iter()
            .filter(|&x| x > lo && x < hi)
            .collect();
        v.extend(self.atoms_in(lo, hi));
        v
    }

    /// Point beyond which at most `tail` probability mass remains.
    pub fn upper_truncation(&self, tail: f64) -> f64 {
        self.isf(tail)
    }

    fn mean_by_quadrature(&self) -> f64 {
        let spec = QuadratureSpec { abs_tol: 1e-12, rel_tol: 1e-11, ..Default::default() };
        let top = self.isf(1e-16);
        if !top.is_finite() {
            return f64::INFINITY;
        }
        let breaks: Vec<f64> = (1..16).map(|i| top * 0.5f64.powi(i)).collect();
        integrate(|x| self.sf(x), 0.0, top, &breaks, &spec).value
    }

    /// Checks that the law integrates to one and that its mean matches the
    /// first moment. Atomic laws are checked by averaging over their atoms.
    pub fn self_test(&self, spec: &QuadratureSpec) -> SelfTest {
        if self.is_discrete() {
            let mut mass = 0.0;
            let mut first = 0.0;
            for x in self.atoms_in(0.0, f64::INFINITY) {
                let w = self.prob_at_least(x) - self.sf(x);
                mass += w;
                first += w * x;
            }
            return SelfTest { mass, first_moment: first, mean: self.mean() };
        }
        let top = self.upper_truncation(spec.tail_truncation_mass);
        let breaks = self.breakpoints(0.0, top);
        let fine = QuadratureSpec { abs_tol: spec.abs_tol * 1e-2, ..*spec };
        let mass = integrate(|x| self.pdf(x).unwrap_or(0.0), 0.0, top, &breaks, &fine).value
            + self.sf(top);
        let first = integrate(|x| x * self.pdf(x).unwrap_or(0.0), 0.0, top, &breaks, &fine).value;
        SelfTest { mass, first_moment: first, mean: self.mean() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfTest {
    pub mass: f64,
    pub first_moment: f64,
    pub mean: f64,
}

impl SelfTest {
    pub fn passes(&self, tol: f64) -> bool {
        (self.mass - 1.0).abs() <= tol && (self.first_moment - self.mean).abs() <= tol * self.mean.max(1.0)
    }
}

impl EmpiricalLaw {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
    fn count_le(&self, x: f64) -> usize {
        self.samples.partition_point(|&v| v <= x)
    }
    fn count_lt(&self, x: f64) -> usize {
        self.samples.partition_point(|&v| v < x)
    }
}

impl IndependentMaxLaw {
    pub fn laws(&self) -> &[GainDistribution] {
        &self.laws
    }

    /// ln P[max <= x] (or ln P[max < x] when `strict`).
    fn log_cdf(&self, x: f64, strict: bool) -> f64 {
        let mut acc = 0.0;
        for law in &self.laws {
            let (below, above) = if strict {
                (law.prob_below(x), law.prob_at_least(x))
            } else {
                (law.cdf(x), law.sf(x))
            };
            acc += if above < 0.5 { (-above).ln_1p() } else { below.ln() };
        }
        acc
    }
}

impl MaxOrderStatistic {
    pub fn new(base: GainDistribution, count: u64) -> Result<Self> {
        if count == 0 {
            return invalid("order statistic needs at least one draw");
        }
        let mut m = MaxOrderStatistic { base, count, mean: 0.0, breaks: OnceLock::new() };
        m.mean = match &m.base {
            GainDistribution::Exponential { mean } => mean * harmonic(count),
            _ => GainDistribution::IidMax(Arc::new(MaxOrderStatistic {
                base: m.base.clone(),
                count,
                mean: 0.0,
                breaks: OnceLock::new(),
            }))
            .mean_by_quadrature(),
        };
        Ok(m)
    }

    fn k(&self) -> f64 {
        self.count as f64
    }

    fn log_of(below: f64, above: f64) -> f64 {
        if above < 0.5 {
            (-above).ln_1p()
        } else {
            below.ln()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (self.k() * Self::log_of(self.base.cdf(x), self.base.sf(x))).exp()
    }

    pub fn sf(&self, x: f64) -> f64 {
        -(self.k() * Self::log_of(self.base.cdf(x), self.base.sf(x))).exp_m1()
    }

    pub fn prob_below(&self, x: f64) -> f64 {
        (self.k() * Self::log_of(self.base.prob_below(x), self.base.prob_at_least(x))).exp()
    }

    pub fn prob_at_least(&self, x: f64) -> f64 {
        -(self.k() * Self::log_of(self.base.prob_below(x), self.base.prob_at_least(x))).exp_m1()
    }

    pub fn pdf(&self, x: f64) -> Option<f64> {
        let f = self.base.pdf(x)?;
        if self.count == 1 {
            return Some(f);
        }
        let lf = Self::log_of(self.base.cdf(x), self.base.sf(x));
        Some(self.k() * ((self.k() - 1.0) * lf).exp() * f)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.base.quantile(0.0);
        }
        if p >= 1.0 {
            return self.base.quantile(1.0);
        }
        self.base.isf(-(p.ln() / self.k()).exp_m1())
    }

    pub fn isf(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        if s <= 0.0 {
            return self.base.quantile(1.0);
        }
        self.base.isf(-((-s).ln_1p() / self.k()).exp_m1())
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        self.base.isf(-(u.ln() / self.k()).exp_m1())
    }
}

fn harmonic(n: u64) -> f64 {
    if n <= 100_000 {
        // Summed from the small end for accuracy.
        (1..=n).rev().map(|i| 1.0 / i as f64).sum()
    } else {
        let x = n as f64;
        x.ln() + 0.577_215_664_901_532_9 + 0.5 / x - 1.0 / (12.0 * x * x) + 1.0 / (120.0 * x.powi(4))
    }
}
