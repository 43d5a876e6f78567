//! Seeded Monte Carlo counterparts of the analytic evaluators, block-level
//! simulation of the feedback schemes, and the large-K scaling experiment.
//!
//! Each batch draws from its own ChaCha stream and batches are merged in
//! index order, so estimates are bit-reproducible for a given seed.
//! Standard errors come from batch means.

use crate::bccm::{BccmMode, BccmModel, PowerSplit, Weights};
use crate::channel::{
    high_snr_ratio_partial, high_snr_threshold_expectation, log2_partial_moment, mass_between, GainDistribution,
};
use crate::quantizer::{check_feasible, QuantizerPolicy, Scenario};
use crate::rates::{Message, PowerFunction};
use crate::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Number of fading blocks L.
    pub num_blocks: u64,
    pub seed: u64,
    /// Blocks per batch; must divide `num_blocks`.
    pub batch_size: u64,
    pub report_stderr: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { num_blocks: 1_000_000, seed: 0, batch_size: 10_000, report_stderr: true }
    }
}

impl SimConfig {
    pub fn with_blocks(num_blocks: u64, seed: u64) -> Self {
        SimConfig { num_blocks, seed, batch_size: (num_blocks / 100).max(1), report_stderr: true }
    }

    pub fn batches(&self) -> u64 {
        self.num_blocks / self.batch_size.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.num_blocks == 0 || self.num_blocks % self.batch_size != 0 {
            return invalid("batch_size must be positive and divide num_blocks");
        }
        if self.batches() < 2 {
            return invalid("at least two batches are needed for a standard error");
        }
        Ok(())
    }
}

/// Sample mean with its batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub blocks: u64,
}

impl Estimate {
    /// |mean - value| <= k · stderr (with a rounding allowance for exact zeros).
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr + 1e-12 * value.abs().max(1.0)
    }

    fn positive_part(self) -> Self {
        Estimate { mean: self.mean.max(0.0), ..self }
    }
}

fn min_of(est: &[Estimate]) -> Estimate {
    *est.iter().min_by(|a, b| a.mean.total_cmp(&b.mean)).expect("at least one estimate")
}

fn max_of(est: &[Estimate]) -> Estimate {
    *est.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)).expect("at least one estimate")
}

/// Runs `block` once per fading block. It receives the gain stream, an
/// auxiliary stream (erasures, tie breaks) and the slots to fill with this
/// block's integrands.
fn simulate<F>(sim: &SimConfig, terms: usize, block: F) -> Result<Vec<Estimate>>
where
    F: Fn(&mut ChaCha8Rng, &mut ChaCha8Rng, &mut [f64]) + Sync,
{
    sim.validate()?;
    let batches = sim.batches();
    let means: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut gains = ChaCha8Rng::seed_from_u64(sim.seed);
            gains.set_stream(2 * b);
            let mut aux = ChaCha8Rng::seed_from_u64(sim.seed);
            aux.set_stream(2 * b + 1);
            let mut sums = vec![0.0; terms];
            let mut out = vec![0.0; terms];
            for _ in 0..sim.batch_size {
                block(&mut gains, &mut aux, &mut out);
                for (s, v) in sums.iter_mut().zip(&out) {
                    *s += v;
                }
            }
            sums.iter().map(|s| s / sim.batch_size as f64).collect()
        })
        .collect();
    let n = batches as f64;
    Ok((0..terms)
        .map(|t| {
            let mean = means.iter().map(|m| m[t]).sum::<f64>() / n;
            let var = means.iter().map(|m| (m[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let stderr = if sim.report_stderr { (var / n).sqrt() } else { f64::NAN };
            Estimate { mean, stderr, blocks: sim.num_blocks }
        })
        .collect())
}

fn log2_ratio_pos(a: f64, b: f64, p: f64) -> f64 {
    (((a * p).ln_1p() - (b * p).ln_1p()) / LN_2).max(0.0)
}

fn distinct_laws(scn: &Scenario) -> Vec<GainDistribution> {
    scn.distinct_main_laws().into_iter().map(|(_, l)| l.clone()).collect()
}

/// Fixed-rate scheme for the common message: each receiver's reported
/// interval fixes the rate `log2(1 + τ_q P_q)`; the minimum over receivers
/// is taken on the means.
pub fn mc_cm_lower(scn: &Scenario, policy: &QuantizerPolicy, sim: &SimConfig) -> Result<Estimate> {
    check_feasible(policy, scn.cm_gate_law(), scn.p_avg)?;
    let laws = distinct_laws(scn);
    let est = simulate(sim, laws.len(), |rng, _, out| {
        let ge = scn.eve.sample(rng);
        for (k, law) in laws.iter().enumerate() {
            let q = policy.index_of(law.sample(rng));
            out[k] = if q == 0 { 0.0 } else { log2_ratio_pos(policy.thresholds[q - 1], ge, policy.powers[q - 1]) };
        }
    })?;
    Ok(min_of(&est))
}

/// Upper-bound integrand `{log2((1 + γ_k P_q)/(1 + γe P_q))}^+`, interval 0 using `p0`.
pub fn mc_cm_upper(scn: &Scenario, policy: &QuantizerPolicy, sim: &SimConfig) -> Result<Estimate> {
    policy.validate()?;
    let laws = distinct_laws(scn);
    let est = simulate(sim, laws.len(), |rng, _, out| {
        let ge = scn.eve.sample(rng);
        for (k, law) in laws.iter().enumerate() {
            let g = law.sample(rng);
            out[k] = log2_ratio_pos(g, ge, policy.power(policy.index_of(g)));
        }
    })?;
    Ok(min_of(&est))
}

/// Serves the receiver with the highest reported interval, ties broken
/// uniformly at random, at the fixed rate of that interval.
pub fn mc_im_lower(scn: &Scenario, policy: &QuantizerPolicy, sim: &SimConfig) -> Result<Estimate> {
    check_feasible(policy, &scn.max_law(), scn.p_avg)?;
    let est = simulate(sim, 1, |rng, aux, out| {
        let ge = scn.eve.sample(rng);
        let idx: Vec<usize> = scn.main_laws.iter().map(|l| policy.index_of(l.sample(rng))).collect();
        let best = *idx.iter().max().expect("K >= 1");
        let ties = idx.iter().filter(|&&q| q == best).count();
        if ties > 1 {
            // Any tied receiver can decode the fixed rate, so the choice only consumes the stream.
            let _served = aux.gen_range(0..ties);
        }
        out[0] = if best == 0 { 0.0 } else { log2_ratio_pos(policy.thresholds[best - 1], ge, policy.powers[best - 1]) };
    })?;
    Ok(est[0])
}

/// Upper-bound integrand on the strongest receiver's gain.
pub fn mc_im_upper(scn: &Scenario, policy: &QuantizerPolicy, sim: &SimConfig) -> Result<Estimate> {
    policy.validate()?;
    let est = simulate(sim, 1, |rng, _, out| {
        let ge = scn.eve.sample(rng);
        let g = scn.main_laws.iter().map(|l| l.sample(rng)).fold(0.0, f64::max);
        out[0] = log2_ratio_pos(g, ge, policy.power(policy.index_of(g)));
    })?;
    Ok(est[0])
}

pub fn mc_lower(scn: &Scenario, message: Message, policy: &QuantizerPolicy, sim: &SimConfig) -> Result<Estimate> {
    match message {
        Message::Common => mc_cm_lower(scn, policy, sim),
        Message::Independent => mc_im_lower(scn, policy, sim),
    }
}

pub fn mc_upper(scn: &Scenario, message: Message, policy: &QuantizerPolicy, sim: &SimConfig) -> Result<Estimate> {
    match message {
        Message::Common => mc_cm_upper(scn, policy, sim),
        Message::Independent => mc_im_upper(scn, policy, sim),
    }
}

/// Perfect-CSIT rate with power function `power`.
pub fn mc_capacity_perfect_csit(
    scn: &Scenario,
    message: Message,
    power: &PowerFunction,
    sim: &SimConfig,
) -> Result<Estimate> {
    mc_upper(scn, message, &power.to_policy()?, sim)
}

/// High-SNR limits `(lower, upper)` for the given thresholds.
pub fn mc_high_snr_bounds(
    scn: &Scenario,
    message: Message,
    thresholds: &[f64],
    sim: &SimConfig,
) -> Result<(Estimate, Estimate)> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("thresholds must be strictly increasing");
    }
    let laws = match message {
        Message::Common => distinct_laws(scn),
        Message::Independent => vec![],
    };
    let users = laws.len().max(1);
    let est = simulate(sim, 2 * users, |rng, _, out| {
        let ge = scn.eve.sample(rng);
        let gains: Vec<f64> = match message {
            Message::Common => laws.iter().map(|l| l.sample(rng)).collect(),
            Message::Independent => vec![scn.main_laws.iter().map(|l| l.sample(rng)).fold(0.0, f64::max)],
        };
        for (k, g) in gains.into_iter().enumerate() {
            let q = thresholds.partition_point(|&t| t <= g);
            out[k] = if q == 0 { 0.0 } else { (thresholds[q - 1] / ge).log2().max(0.0) };
            out[users + k] = (g / ge).log2().max(0.0);
        }
    })?;
    Ok((min_of(&est[..users]), min_of(&est[users..])))
}

/// Probability that each receiver is served by the independent-message scheme
/// with perfect CSI (largest gain, ties split uniformly).
pub fn mc_win_probabilities(scn: &Scenario, sim: &SimConfig) -> Result<Vec<Estimate>> {
    let k = scn.k();
    simulate(sim, k, |rng, aux, out| {
        let g: Vec<f64> = scn.main_laws.iter().map(|l| l.sample(rng)).collect();
        let best = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..k).filter(|&i| g[i] == best).collect();
        let winner = if tied.len() > 1 { tied[aux.gen_range(0..tied.len())] } else { tied[0] };
        out.iter_mut().for_each(|o| *o = 0.0);
        out[winner] = 1.0;
    })
}

/// Constant-power transmission using channel statistics only.
pub fn mc_statistics_only_rate(scn: &Scenario, power: f64, sim: &SimConfig) -> Result<Estimate> {
    let laws = distinct_laws(scn);
    let est = simulate(sim, laws.len(), |rng, _, out| {
        let ge = scn.eve.sample(rng);
        for (k, law) in laws.iter().enumerate() {
            out[k] = ((law.sample(rng) * power).ln_1p() - (ge * power).ln_1p()) / LN_2;
        }
    })?;
    Ok(max_of(&est).positive_part())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BccmEstimate {
    pub r0: Estimate,
    pub r1: Estimate,
}

/// Block-level one-bit scheme: the bit reports `γe < min_k E[γ_k]`; an
/// erased bit (BEC mode) falls back to common-only transmission at `p02`.
pub fn mc_bccm_point(scn: &Scenario, split: &PowerSplit, mode: BccmMode, sim: &SimConfig) -> Result<BccmEstimate> {
    let model = BccmModel::new(scn);
    let w: Weights = model.weights(mode);
    if !split.is_feasible(&w, scn.p_avg) {
        return Err(crate::Error::ConstraintViolation { used: split.average_power(&w), budget: scn.p_avg });
    }
    let erasure = mode.erasure(scn.epsilon);
    let t = model.event.threshold;
    let laws = distinct_laws(scn);
    let n = laws.len();
    let s = split.p01 + split.p1;
    let rate = |g: f64, p: f64| (g * p).ln_1p() / LN_2;
    let est = simulate(sim, 2 * n + 1, |rng, aux, out| {
        let ge = scn.eve.sample(rng);
        let erased = aux.gen::<f64>() < erasure;
        let confidential = !erased && ge < t;
        for (k, law) in laws.iter().enumerate() {
            let g = law.sample(rng);
            if confidential {
                out[k] = rate(g, s) - rate(g, split.p1);
                out[n + 1 + k] = rate(g, split.p1) - rate(ge, split.p1);
            } else {
                out[k] = rate(g, split.p02);
                out[n + 1 + k] = 0.0;
            }
        }
        out[n] = if confidential { rate(ge, s) - rate(ge, split.p1) } else { rate(ge, split.p02) };
    })?;
    Ok(BccmEstimate { r0: min_of(&est[..=n]).positive_part(), r1: min_of(&est[n + 1..]).positive_part() })
}

/// Error-free partitioned feedback with an arbitrary cell indicator over
/// `(distinct receiver gains, γe)`; cell `q` uses `splits[q]`.
pub fn mc_bccm_cells<F>(scn: &Scenario, cell_of: F, splits: &[PowerSplit], sim: &SimConfig) -> Result<BccmEstimate>
where
    F: Fn(&[f64], f64) -> usize + Sync,
{
    if splits.is_empty() {
        return invalid("at least one cell split is required");
    }
    let t = crate::bccm::EventA::of(scn).threshold;
    let laws = distinct_laws(scn);
    let n = laws.len();
    let rate = |g: f64, p: f64| (g * p).ln_1p() / LN_2;
    let est = simulate(sim, 2 * n + 1, |rng, _, out| {
        let ge = scn.eve.sample(rng);
        let g: Vec<f64> = laws.iter().map(|l| l.sample(rng)).collect();
        let sp = &splits[cell_of(&g, ge).min(splits.len() - 1)];
        let s = sp.p01 + sp.p1;
        let inside = ge < t;
        for k in 0..n {
            if inside {
                out[k] = rate(g[k], s) - rate(g[k], sp.p1);
                out[n + 1 + k] = rate(g[k], sp.p1) - rate(ge, sp.p1);
            } else {
                out[k] = rate(g[k], sp.p02);
                out[n + 1 + k] = 0.0;
            }
        }
        out[n] = if inside { rate(ge, s) - rate(ge, sp.p1) } else { rate(ge, sp.p02) };
    })?;
    Ok(BccmEstimate { r0: min_of(&est[..=n]).positive_part(), r1: min_of(&est[n + 1..]).positive_part() })
}

/// Cell indicator for eavesdropper cells starting at `edges`.
pub fn eve_cell_index(edges: &[f64]) -> impl Fn(&[f64], f64) -> usize + Sync + '_ {
    move |_, ge| edges.partition_point(|&e| e <= ge).saturating_sub(1)
}

/// Base of a logarithm used by the scaling experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    pub fn log(&self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    /// Top threshold rule `τ_Q = log K` in this base.
    pub threshold_log: LogBase,
    /// Base of the inner log in the reference curve `log2 log K`.
    pub inner_log: LogBase,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { threshold_log: LogBase::Natural, inner_log: LogBase::Natural }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub k: u64,
    pub c_minus_hsnr: f64,
    pub c_plus_hsnr: f64,
    pub log_log_k: f64,
    pub gap_minus: f64,
    pub gap_plus: f64,
    /// E[log2 γ_max] / log2 log K.
    pub mean_log_ratio: f64,
    /// Sampled check of `c_plus_hsnr`, when blocks were requested.
    pub mc_c_plus: Option<Estimate>,
}

/// High-SNR independent-message bounds for `K` iid unit-mean Rayleigh
/// receivers, compared with `log2 log K`. The lower bound uses a single
/// threshold `τ = log K`. Pure quadrature on the maximum's law; `sim`
/// adds a sampled check of the upper value when `num_blocks > 0`.
pub fn scaling_law_experiment(
    eve: &GainDistribution,
    k_list: &[u64],
    config: &ScalingConfig,
    sim: Option<&SimConfig>,
) -> Result<Vec<ScalingRow>> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[1] <= w[0]) || k_list[0] == 0 {
        return invalid("K list must be positive and strictly increasing");
    }
    let base = GainDistribution::rayleigh(1.0)?;
    k_list
        .iter()
        .map(|&k| {
            let scn = Scenario::new(vec![base.clone()], eve.clone(), 1, 1.0)?;
            let max = GainDistribution::iid_max(base.clone(), k)?;
            let quad = scn.quad;
            let c_plus = high_snr_ratio_partial(&max, eve, 0.0, f64::INFINITY, &quad);
            let tau = config.threshold_log.log(k as f64);
            let c_minus = if tau > 0.0 {
                mass_between(&max, tau, f64::INFINITY) * high_snr_threshold_expectation(eve, tau, &quad)
            } else {
                0.0
            };
            let inner = config.inner_log.log(k as f64);
            let log_log_k = if inner > 0.0 { inner.log2() } else { f64::NAN };
            let mean_log = log2_partial_moment(&max, 0.0, f64::INFINITY, &quad);
            let mc_c_plus = match sim {
                Some(sim) if sim.num_blocks > 0 => Some(
                    simulate(sim, 1, |rng, _, out| {
                        let g = max.sample(rng);
                        out[0] = (g / eve.sample(rng)).log2().max(0.0);
                    })?[0],
                ),
                _ => None,
            };
            Ok(ScalingRow {
                k,
                c_minus_hsnr: c_minus,
                c_plus_hsnr: c_plus,
                log_log_k,
                gap_minus: (c_minus - log_log_k).abs(),
                gap_plus: (c_plus - log_log_k).abs(),
                mean_log_ratio: mean_log / log_log_k,
                mc_c_plus,
            })
        })
        .collect()
}
