//! Common/confidential (BCCM) rate regions with one-bit indication
//! feedback, over error-free and erasure feedback links.
//!
//! The indication event is `A = {γe < min_k E[γ_k]}`. It depends on the
//! eavesdropper gain only, so expectations over a legitimate gain factor
//! out of any event built from `γe`.

use crate::channel::{log1p_partial, log2_partial_moment, mass_between, GainDistribution};
use crate::quadrature::QuadratureSpec;
use crate::quantizer::{Scenario, POWER_SLACK};
use crate::{invalid, Result};
use serde::{Deserialize, Serialize};

pub use crate::optimizer::bccm::{bccm_region, max_r1, optimize_bccm_split, optimize_cell_splits, optimize_partition};

/// Powers used when `γ ∈ A` (common `p01`, confidential `p1`) and otherwise (`p02`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub p01: f64,
    pub p02: f64,
    pub p1: f64,
}

impl PowerSplit {
    pub fn new(p01: f64, p02: f64, p1: f64) -> Result<Self> {
        let s = PowerSplit { p01, p02, p1 };
        if [p01, p02, p1].iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return invalid("split powers must be finite and nonnegative");
        }
        Ok(s)
    }

    pub fn average_power(&self, w: &Weights) -> f64 {
        (self.p01 + self.p1) * w.a + self.p02 * w.ac
    }

    pub fn is_feasible(&self, w: &Weights, p_avg: f64) -> bool {
        self.average_power(w) <= p_avg * (1.0 + POWER_SLACK) + POWER_SLACK
    }
}

/// Power-splitting fractions of the high-SNR region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub alpha01: f64,
    pub alpha02: f64,
    pub alpha1: f64,
}

impl SplitFractions {
    pub fn is_feasible(&self, w: &Weights) -> bool {
        let ok = [self.alpha01, self.alpha02, self.alpha1].iter().all(|a| a.is_finite() && *a >= 0.0);
        ok && (self.alpha01 + self.alpha1) * w.a + self.alpha02 * w.ac <= 1.0 + POWER_SLACK
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventA {
    /// `min_k E[γ_k]`.
    pub threshold: f64,
    /// `Pr[γe < threshold]`.
    pub prob_a: f64,
    /// `Pr[γe >= threshold]`, computed directly rather than as `1 - prob_a`.
    pub prob_ac: f64,
}

impl EventA {
    pub fn of(scn: &Scenario) -> Self {
        let threshold = scn.main_laws.iter().map(|l| l.mean()).fold(f64::INFINITY, f64::min);
        EventA {
            threshold,
            prob_a: mass_between(&scn.eve, 0.0, threshold),
            prob_ac: mass_between(&scn.eve, threshold, f64::INFINITY),
        }
    }
}

/// How the indication bit reaches the transmitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum BccmMode {
    ErrorFree,
    /// Erasure link with the scenario's ε; `bits` redundant copies of the
    /// indication bit, so the effective erasure probability is ε^bits.
    Bec { bits: u32 },
}

/// Effective weights of the feedback states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    /// Probability the indication bit is received (not erased).
    pub received: f64,
    /// Weight of "confidential transmission": received and `γ ∈ A`.
    pub a: f64,
    /// Weight of the remaining blocks: erased, or received with `γ ∉ A`.
    pub ac: f64,
}

impl Weights {
    pub fn new(event: &EventA, erasure: f64) -> Self {
        let received = 1.0 - erasure;
        Weights { received, a: received * event.prob_a, ac: erasure + received * event.prob_ac }
    }
}

impl BccmMode {
    /// Effective erasure probability.
    pub fn erasure(&self, epsilon: f64) -> f64 {
        match self {
            BccmMode::ErrorFree => 0.0,
            BccmMode::Bec { bits } => epsilon.powi(*bits as i32),
        }
    }
}

/// Outcome flags attached to region points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    Ok,
    /// `Pr[A] = 0`: no confidential rate is possible.
    DegenerateEvent,
    /// High-SNR point whose power ratio was capped by feasibility.
    Capped,
    /// The split optimizer did not meet its tolerance.
    NotConverged,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::DegenerateEvent => "degenerate-event",
            PointStatus::Capped => "capped",
            PointStatus::NotConverged => "not-converged",
        }
    }
}

/// Rates at one split, with the per-user terms the minima are taken over.
#[derive(Clone, Debug, PartialEq)]
pub struct BccmPoint {
    pub r0: f64,
    pub r1: f64,
    /// One entry per distinct receiver law, then the eavesdropper.
    pub r0_terms: Vec<f64>,
    pub r1_terms: Vec<f64>,
    pub status: PointStatus,
    /// Partition cells skipped because they carry no probability.
    pub skipped_cells: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub r1_target: f64,
    pub r0: f64,
    pub r1: f64,
    pub split: PowerSplit,
    pub status: PointStatus,
}

/// Frontier polyline, sorted by R1 descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct RegionCurve {
    pub points: Vec<RegionPoint>,
}

impl RegionCurve {
    pub fn max_r1(&self) -> f64 {
        self.points.iter().map(|p| p.r1).fold(0.0, f64::max)
    }

    pub fn max_r0(&self) -> f64 {
        self.points.iter().map(|p| p.r0).fold(0.0, f64::max)
    }

    /// R0 at the common-only end of the frontier.
    pub fn r0_endpoint(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.r0)
    }

    /// True when R0 never decreases as R1 decreases along the curve.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].r1 <= w[0].r1 + slack && w[1].r0 >= w[0].r0 - slack)
    }
}

/// Expectations shared by every region evaluation of one scenario.
#[derive(Clone, Debug)]
pub struct BccmModel {
    laws: Vec<GainDistribution>,
    eve: GainDistribution,
    pub event: EventA,
    pub p_avg: f64,
    pub epsilon: f64,
    quad: QuadratureSpec,
}

impl BccmModel {
    pub fn new(scn: &Scenario) -> Self {
        BccmModel {
            laws: scn.distinct_main_laws().into_iter().map(|(_, l)| l.clone()).collect(),
            eve: scn.eve.clone(),
            event: EventA::of(scn),
            p_avg: scn.p_avg,
            epsilon: scn.epsilon,
            quad: scn.quad,
        }
    }

    pub fn weights(&self, mode: BccmMode) -> Weights {
        Weights::new(&self.event, mode.erasure(self.epsilon))
    }

    pub fn laws(&self) -> &[GainDistribution] {
        &self.laws
    }

    pub fn eve(&self) -> &GainDistribution {
        &self.eve
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    /// E[log2(1 + p γ_k)].
    pub fn legit(&self, k: usize, p: f64) -> f64 {
        log1p_partial(&self.laws[k], p, 0.0, f64::INFINITY, &self.quad)
    }

    /// E[log2(1 + p γe) ; lo <= γe < hi].
    pub fn eve_partial(&self, p: f64, lo: f64, hi: f64) -> f64 {
        log1p_partial(&self.eve, p, lo, hi, &self.quad)
    }

    /// Rates of the one-bit scheme with erasure probability `erasure`.
    pub fn point(&self, split: &PowerSplit, erasure: f64) -> BccmPoint {
        let t = self.event.threshold;
        let w = Weights::new(&self.event, erasure);
        let s = split.p01 + split.p1;
        let mut r0_terms = Vec::with_capacity(self.laws.len() + 1);
        let mut r1_terms = Vec::with_capacity(self.laws.len());
        let n_a_p1 = self.eve_partial(split.p1, 0.0, t);
        for k in 0..self.laws.len() {
            let l_p1 = self.legit(k, split.p1);
            r0_terms.push(w.a * (self.legit(k, s) - l_p1) + w.ac * self.legit(k, split.p02));
            r1_terms.push((w.a * l_p1 - w.received * n_a_p1).max(0.0));
        }
        let mut eve = w.received * (self.eve_partial(s, 0.0, t) - n_a_p1 + self.eve_partial(split.p02, t, f64::INFINITY));
        if erasure > 0.0 {
            eve += erasure * self.eve_partial(split.p02, 0.0, f64::INFINITY);
        }
        r0_terms.push(eve);
        finish(r0_terms, r1_terms, self.event.prob_a)
    }

    /// Rates with `b - 1` extra error-free bits that index eavesdropper cells
    /// `[edges[q], edges[q+1])` (last cell unbounded), one split per cell.
    pub fn cell_point(&self, edges: &[f64], splits: &[PowerSplit]) -> Result<BccmPoint> {
        check_edges(edges, splits.len())?;
        let t = self.event.threshold;
        let n = self.laws.len();
        let mut r0_terms = vec![0.0; n + 1];
        let mut r1_terms = vec![0.0; n];
        let mut skipped = Vec::new();
        for (q, split) in splits.iter().enumerate() {
            let lo = edges[q];
            let hi = edges.get(q + 1).copied().unwrap_or(f64::INFINITY);
            let (a_lo, a_hi) = (lo, hi.min(t));
            let (c_lo, c_hi) = (lo.max(t), hi);
            let m_a = mass_between(&self.eve, a_lo, a_hi);
            let m_c = mass_between(&self.eve, c_lo, c_hi);
            if m_a == 0.0 && m_c == 0.0 {
                skipped.push(q);
                continue;
            }
            let s = split.p01 + split.p1;
            let n_a_p1 = self.eve_partial(split.p1, a_lo, a_hi);
            for k in 0..n {
                let l_p1 = self.legit(k, split.p1);
                if m_a > 0.0 {
                    r0_terms[k] += m_a * (self.legit(k, s) - l_p1);
                    r1_terms[k] += m_a * l_p1 - n_a_p1;
                }
                if m_c > 0.0 {
                    r0_terms[k] += m_c * self.legit(k, split.p02);
                }
            }
            r0_terms[n] += self.eve_partial(s, a_lo, a_hi) - n_a_p1 + self.eve_partial(split.p02, c_lo, c_hi);
        }
        r1_terms.iter_mut().for_each(|r| *r = r.max(0.0));
        let mut point = finish(r0_terms, r1_terms, self.event.prob_a);
        point.skipped_cells = skipped;
        Ok(point)
    }

    /// Cell probabilities `(Pr[A ∩ H_q], Pr[A^c ∩ H_q])`.
    pub fn cell_masses(&self, edges: &[f64]) -> Vec<(f64, f64)> {
        let t = self.event.threshold;
        (0..edges.len())
            .map(|q| {
                let lo = edges[q];
                let hi = edges.get(q + 1).copied().unwrap_or(f64::INFINITY);
                (mass_between(&self.eve, lo, hi.min(t)), mass_between(&self.eve, lo.max(t), hi))
            })
            .collect()
    }

    /// Default cells: equal-probability quantiles of `γe` within `A`; the
    /// last cell also holds all of `A^c`.
    pub fn quantile_cells(&self, cells: usize) -> Vec<f64> {
        let pa = self.event.prob_a;
        (0..cells).map(|q| if q == 0 { 0.0 } else { self.eve.quantile(pa * q as f64 / cells as f64) }).collect()
    }
}

fn check_edges(edges: &[f64], cells: usize) -> Result<()> {
    if edges.is_empty() || edges.len() != cells || edges[0] != 0.0 {
        return invalid("cell edges must start at 0 and match the number of splits");
    }
    if edges.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("cell edges must be strictly increasing");
    }
    Ok(())
}

fn finish(r0_terms: Vec<f64>, r1_terms: Vec<f64>, prob_a: f64) -> BccmPoint {
    let r0 = r0_terms.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let r1 = r1_terms.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let status = if prob_a > 0.0 { PointStatus::Ok } else { PointStatus::DegenerateEvent };
    BccmPoint { r0, r1, r0_terms, r1_terms, status, skipped_cells: Vec::new() }
}

/// One-bit error-free feedback.
pub fn bccm_point_errorfree(scn: &Scenario, split: &PowerSplit) -> Result<BccmPoint> {
    bccm_point(scn, split, BccmMode::ErrorFree)
}

/// Indication bit repeated `bits` times over an erasure link with the scenario's ε.
pub fn bccm_point_bec(scn: &Scenario, split: &PowerSplit, bits: u32) -> Result<BccmPoint> {
    bccm_point(scn, split, BccmMode::Bec { bits })
}

pub fn bccm_point(scn: &Scenario, split: &PowerSplit, mode: BccmMode) -> Result<BccmPoint> {
    let model = BccmModel::new(scn);
    check_split(&model, split, mode)?;
    Ok(model.point(split, mode.erasure(scn.epsilon)))
}

fn check_split(model: &BccmModel, split: &PowerSplit, mode: BccmMode) -> Result<()> {
    PowerSplit::new(split.p01, split.p02, split.p1)?;
    let w = model.weights(mode);
    if !split.is_feasible(&w, model.p_avg) {
        return Err(crate::Error::ConstraintViolation { used: split.average_power(&w), budget: model.p_avg });
    }
    Ok(())
}

/// Per-cell splits over eavesdropper cells starting at `edges` (error-free bits).
pub fn bccm_point_bbit_errorfree(scn: &Scenario, edges: &[f64], splits: &[PowerSplit]) -> Result<BccmPoint> {
    let model = BccmModel::new(scn);
    check_edges(edges, splits.len())?;
    let used: f64 = model
        .cell_masses(edges)
        .iter()
        .zip(splits)
        .map(|((ma, mc), s)| (s.p01 + s.p1) * ma + s.p02 * mc)
        .sum();
    if used > scn.p_avg * (1.0 + POWER_SLACK) + POWER_SLACK {
        return Err(crate::Error::ConstraintViolation { used, budget: scn.p_avg });
    }
    model.cell_point(edges, splits)
}

/// Confidential-rate cap of the high-SNR region:
/// received · min_k (Pr[A] E[log2 γ_k] − E[log2 γe ; A]).
pub fn high_snr_r1_cap(model: &BccmModel, mode: BccmMode) -> f64 {
    let w = model.weights(mode);
    if w.a == 0.0 {
        return 0.0;
    }
    let t = model.event.threshold;
    let eve_part = log2_partial_moment(model.eve(), 0.0, t, model.quad());
    model
        .laws()
        .iter()
        .map(|l| {
            let m = log2_partial_moment(l, 0.0, f64::INFINITY, model.quad());
            w.received * (model.event.prob_a * m - eve_part)
        })
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

/// High-SNR rates at fractions `alpha`. With `alpha1 = 0` and `alpha01 > 0`
/// the unbounded ratio is replaced by its feasibility cap `P_avg / w_A`.
pub fn high_snr_point(scn: &Scenario, mode: BccmMode, alpha: &SplitFractions) -> Result<(f64, f64, PointStatus)> {
    let model = BccmModel::new(scn);
    let w = model.weights(mode);
    if !alpha.is_feasible(&w) {
        return invalid("split fractions violate the power constraint");
    }
    let cap = if w.a > 0.0 { scn.p_avg / w.a } else { 0.0 };
    let (ratio, status) = if alpha.alpha1 > 0.0 {
        ((alpha.alpha01 / alpha.alpha1).min(cap), PointStatus::Ok)
    } else if alpha.alpha01 > 0.0 {
        (cap, PointStatus::Capped)
    } else {
        (0.0, PointStatus::Ok)
    };
    let r0 = ratio.ln_1p() / std::f64::consts::LN_2 * w.a + scn.p_avg.log2() * w.ac;
    let r1 = if alpha.alpha1 > 0.0 { high_snr_r1_cap(&model, mode) } else { 0.0 };
    let status = if w.a == 0.0 { PointStatus::DegenerateEvent } else { status };
    Ok((r0.max(0.0), r1, status))
}

/// High-SNR frontier: a horizontal R1 cap swept over `alpha01 / alpha1`,
/// ending at the capped common-only point.
pub fn bccm_region_high_snr(scn: &Scenario, mode: BccmMode, samples: usize) -> Result<RegionCurve> {
    if samples < 2 {
        return invalid("frontier_samples must be at least 2");
    }
    let model = BccmModel::new(scn);
    let w = model.weights(mode);
    let r1_cap = high_snr_r1_cap(&model, mode);
    let cap = if w.a > 0.0 { scn.p_avg / w.a } else { 0.0 };
    let mut points = Vec::with_capacity(samples);
    for i in 0..samples - 1 {
        // evenly spaced in log2(1 + ratio), from 0 up to the cap
        let ratio = (1.0 + cap).powf(i as f64 / (samples - 2).max(1) as f64) - 1.0;
        let alpha1 = if w.a > 0.0 { 1.0 / ((1.0 + ratio) * w.a) } else { 0.0 };
        let alpha = SplitFractions { alpha01: ratio * alpha1, alpha02: 0.0, alpha1 };
        let (r0, r1, status) = high_snr_point(scn, mode, &alpha)?;
        points.push(RegionPoint {
            r1_target: r1_cap,
            r0,
            r1,
            split: PowerSplit { p01: alpha.alpha01 * scn.p_avg, p02: 0.0, p1: alpha.alpha1 * scn.p_avg },
            status,
        });
    }
    let end = SplitFractions { alpha01: if w.a > 0.0 { 1.0 / w.a } else { 0.0 }, alpha02: 0.0, alpha1: 0.0 };
    let (r0, r1, status) = high_snr_point(scn, mode, &end)?;
    points.push(RegionPoint {
        r1_target: 0.0,
        r0,
        r1,
        split: PowerSplit { p01: end.alpha01 * scn.p_avg, p02: 0.0, p1: 0.0 },
        status,
    });
    points.sort_by(|a, b| b.r1.total_cmp(&a.r1).then(a.r0.total_cmp(&b.r0)));
    Ok(RegionCurve { points })
}
