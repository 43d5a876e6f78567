//! Adaptive Gauss-Kronrod (G7/K15) integration with mandatory breakpoints,
//! plus a fixed Gauss-Legendre rule for cached integrand evaluations.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Tolerances shared by every quadrature in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Improper integrals stop where the remaining probability mass drops below this.
    pub tail_truncation_mass: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_subdivisions: 2000,
            tail_truncation_mass: 1e-12,
        }
    }
}

impl QuadratureSpec {
    /// Same spec with the absolute tolerance multiplied by `factor`.
    pub fn scaled_abs(&self, factor: f64) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: (self.abs_tol * factor).max(1e-300),
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint inside
/// the interval and then bisecting the worst piece until the tolerance is met.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    spec: &QuadratureSpec,
) -> Integral {
    if !(b > a) {
        return Integral { value: 0.0, error: 0.0, evaluations: 0 };
    }
    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b && x.is_finite())
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);

    let mut heap = BinaryHeap::with_capacity(edges.len() * 2);
    let mut evaluations = 0;
    let mut settled = 0.0;
    let mut settled_err = 0.0;
    for w in edges.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        evaluations += 15;
        heap.push(Piece { a: w[0], b: w[1], value, error });
    }
    let mut subdivisions = 0;
    let (mut total, mut err) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    loop {
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) || subdivisions >= spec.max_subdivisions {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if worst.b - worst.a <= 8.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            settled += worst.value;
            settled_err += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        subdivisions += 1;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
    let mut pieces = heap.into_vec();
    pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = settled + pieces.iter().map(|p| p.value).sum::<f64>();
    let error = settled_err + pieces.iter().map(|p| p.error).sum::<f64>();
    Integral { value, error, evaluations }
}

/// 8-point Gauss-Legendre abscissae and weights on [-1, 1].
pub const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
pub const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Gauss-Legendre nodes and weights on consecutive panels given by `edges`.
pub fn panel_nodes(edges: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(edges.len() * 8);
    let mut ws = Vec::with_capacity(edges.len() * 8);
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        if !(b > a) {
            continue;
        }
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (x, w) in GL8_X.iter().zip(GL8_W.iter()) {
            xs.push(c + h * x);
            ws.push(h * w);
        }
    }
    (xs, ws)
}

/// Gauss-Legendre rule with `n` points on [0, 1], roots of P_n by Newton iteration.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = 0.5 * (1.0 - x);
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}
