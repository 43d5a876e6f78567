//! Closed forms shared by unit tests.

use std::f64::consts::LN_2;

/// Exponential integral E1 (series below 1, continued fraction above).
pub fn e1(x: f64) -> f64 {
    if x < 1.0 {
        e1_series(x)
    } else {
        e1_scaled(x) * (-x).exp()
    }
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..60 {
        term *= -x / k as f64;
        sum += term / k as f64;
    }
    -0.577_215_664_901_532_9 - x.ln() - sum
}

/// e^x E1(x) for x >= 1.
fn e1_scaled(x: f64) -> f64 {
    let mut b = x + 1.0;
    let mut c = 1e300;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// E[log2(1 + p γ) ; lo <= γ < hi] for γ exponential with mean `s`.
pub fn exp_log1p_partial(s: f64, p: f64, lo: f64, hi: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    let a = 1.0 / (s * p);
    let edge = |x: f64| if x.is_infinite() { 0.0 } else { (p * x).ln_1p() * (-x / s).exp() };
    // e^a E1(a + x/s), kept finite for large a
    let shifted = |x: f64| {
        if x.is_infinite() {
            0.0
        } else if a + x / s >= 1.0 {
            e1_scaled(a + x / s) * (-x / s).exp()
        } else {
            a.exp() * e1_series(a + x / s)
        }
    };
    (edge(lo) - edge(hi) + shifted(lo) - shifted(hi)) / LN_2
}
