//! Expectations of log-ratio rate functions against gain laws.
//!
//! Every integral is written against CDFs only (integration by parts), so the
//! same code handles densities and atomic laws; atoms become breakpoints.

use super::GainDistribution;
use crate::quadrature::{integrate, QuadratureSpec};
use crate::{Error, Result};
use std::f64::consts::LN_2;

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if lo.is_nan() || hi.is_nan() || lo < 0.0 || lo > hi {
        return Err(Error::InvalidInterval { lo, hi });
    }
    Ok(())
}

/// P[lo <= γ < hi] without argument checks.
pub(crate) fn mass_between(dist: &GainDistribution, lo: f64, hi: f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let upper_lo = dist.prob_at_least(lo);
    let m = if hi.is_infinite() {
        upper_lo
    } else if upper_lo < 0.5 {
        upper_lo - dist.prob_at_least(hi)
    } else {
        dist.prob_below(hi) - dist.prob_below(lo)
    };
    m.clamp(0.0, 1.0)
}

/// Probability that the gain falls in `[lo, hi)`.
pub fn interval_mass(dist: &GainDistribution, lo: f64, hi: f64) -> Result<f64> {
    check_interval(lo, hi)?;
    Ok(mass_between(dist, lo, hi))
}

fn merged_breaks(laws: &[&GainDistribution], lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = laws.iter().flat_map(|l| l.breakpoints(lo, hi)).collect();
    v.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
    v
}

fn top_of(dist: &GainDistribution, lo: f64, hi: f64, quad: &QuadratureSpec) -> f64 {
    if hi.is_finite() {
        hi
    } else {
        dist.upper_truncation(quad.tail_truncation_mass).max(lo)
    }
}

/// E[{log2((1 + tau P) / (1 + γe P))}^+] over the eavesdropper law.
pub fn pos_part_log_ratio_expectation(eve: &GainDistribution, tau: f64, p: f64, quad: &QuadratureSpec) -> f64 {
    if !(tau > 0.0 && p > 0.0) {
        return 0.0;
    }
    if let GainDistribution::Empirical(e) = eve {
        let s = e.samples();
        let top = (tau * p).ln_1p();
        let n = s.partition_point(|&x| x < tau);
        return s[..n].iter().map(|&x| top - (x * p).ln_1p()).sum::<f64>() / s.len() as f64 / LN_2;
    }
    let breaks = merged_breaks(&[eve], 0.0, tau, &[1.0 / p]);
    integrate(|x| eve.cdf(x) * p / (1.0 + x * p), 0.0, tau, &breaks, quad).value / LN_2
}

/// E[{log2((1 + γ P) / (1 + γe P))}^+ ; lo <= γ < hi] (not normalized by the interval mass).
pub fn pos_part_log_ratio_partial(
    main: &GainDistribution,
    eve: &GainDistribution,
    lo: f64,
    hi: f64,
    p: f64,
    quad: &QuadratureSpec,
) -> f64 {
    if !(p > 0.0 && hi > lo) {
        return 0.0;
    }
    let mass = mass_between(main, lo, hi);
    if mass == 0.0 {
        return 0.0;
    }
    let base = mass * pos_part_log_ratio_expectation(eve, lo, p, quad);
    let top = top_of(main, lo, hi, quad);
    let breaks = merged_breaks(&[main, eve], lo, top, &[1.0 / p]);
    let rest = integrate(
        |x| eve.cdf(x) * p / (1.0 + x * p) * mass_between(main, x, hi),
        lo,
        top,
        &breaks,
        quad,
    )
    .value;
    base + rest.max(0.0) / LN_2
}

/// E[{log2((1 + γ P) / (1 + γe P))}^+ | lo <= γ < hi].
pub fn conditional_pos_part_expectation(
    main: &GainDistribution,
    eve: &GainDistribution,
    lo: f64,
    hi: f64,
    p: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_interval(lo, hi)?;
    let mass = mass_between(main, lo, hi);
    if mass <= 0.0 {
        return Err(Error::DegenerateConditioning);
    }
    Ok(pos_part_log_ratio_partial(main, eve, lo, hi, p, &quad.scaled_abs(mass)) / mass)
}

/// E[log2(1 + P γ) ; lo <= γ < hi] (not normalized).
pub fn log1p_partial(dist: &GainDistribution, p: f64, lo: f64, hi: f64, quad: &QuadratureSpec) -> f64 {
    if !(p > 0.0 && hi > lo) {
        return 0.0;
    }
    let mass = mass_between(dist, lo, hi);
    if mass == 0.0 {
        return 0.0;
    }
    let base = (p * lo).ln_1p() * mass;
    let top = top_of(dist, lo, hi, quad);
    let breaks = merged_breaks(&[dist], lo, top, &[1.0 / p]);
    let rest = integrate(|t| p / (1.0 + p * t) * mass_between(dist, t, hi), lo, top, &breaks, quad).value;
    (base + rest) / LN_2
}

/// E[log2(1 + P γ) | condition], unconditioned when `condition` is `None`.
pub fn log1p_expectation(
    dist: &GainDistribution,
    p: f64,
    condition: Option<(f64, f64)>,
    quad: &QuadratureSpec,
) -> Result<f64> {
    match condition {
        None => Ok(log1p_partial(dist, p, 0.0, f64::INFINITY, quad)),
        Some((lo, hi)) => {
            check_interval(lo, hi)?;
            let mass = mass_between(dist, lo, hi);
            if mass <= 0.0 {
                return Err(Error::DegenerateConditioning);
            }
            Ok(log1p_partial(dist, p, lo, hi, &quad.scaled_abs(mass)) / mass)
        }
    }
}

/// E[{log2(tau / γe)}^+], the high-SNR limit of the fixed-rate term.
pub fn high_snr_threshold_expectation(eve: &GainDistribution, tau: f64, quad: &QuadratureSpec) -> f64 {
    if !(tau > 0.0) {
        return 0.0;
    }
    if eve.cdf(0.0) > 0.0 {
        return f64::INFINITY;
    }
    if let GainDistribution::Empirical(e) = eve {
        let s = e.samples();
        let n = s.partition_point(|&x| x < tau);
        return s[..n].iter().map(|&x| (tau / x).ln()).sum::<f64>() / s.len() as f64 / LN_2;
    }
    let breaks = merged_breaks(&[eve], 0.0, tau, &[]);
    integrate(|x| eve.cdf(x) / x, 0.0, tau, &breaks, quad).value / LN_2
}

/// E[{log2(γ / γe)}^+ ; lo <= γ < hi] (not normalized).
pub fn high_snr_ratio_partial(
    main: &GainDistribution,
    eve: &GainDistribution,
    lo: f64,
    hi: f64,
    quad: &QuadratureSpec,
) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let mass = mass_between(main, lo, hi);
    if mass == 0.0 {
        return 0.0;
    }
    if eve.cdf(0.0) > 0.0 {
        return f64::INFINITY;
    }
    let base = mass * high_snr_threshold_expectation(eve, lo, quad);
    let top = top_of(main, lo, hi, quad);
    let breaks = merged_breaks(&[main, eve], lo, top, &[]);
    let rest = integrate(|x| eve.cdf(x) / x * mass_between(main, x, hi), lo, top, &breaks, quad).value;
    base + rest / LN_2
}

/// E[log2 γ ; lo <= γ < hi] (not normalized); -inf when an atom sits at zero.
pub fn log2_partial_moment(dist: &GainDistribution, lo: f64, hi: f64, quad: &QuadratureSpec) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    if lo == 0.0 && dist.cdf(0.0) > 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    let c = 1.0;
    if lo < c {
        let c1 = hi.min(c);
        let m = mass_between(dist, lo, c1);
        if m > 0.0 {
            let breaks = merged_breaks(&[dist], lo, c1, &[]);
            let inner = integrate(|t| mass_between(dist, lo, t) / t, lo, c1, &breaks, quad).value;
            acc += c1.ln() * m - inner;
        }
    }
    if hi > c {
        let c2 = lo.max(c);
        let m = mass_between(dist, c2, hi);
        if m > 0.0 {
            let top = top_of(dist, c2, hi, quad);
            let breaks = merged_breaks(&[dist], c2, top, &[]);
            let inner = integrate(|t| mass_between(dist, t, hi) / t, c2, top, &breaks, quad).value;
            acc += c2.ln() * m + inner;
        }
    }
    acc / LN_2
}
