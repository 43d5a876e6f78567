//! Derivative-free local minimizers over unconstrained vectors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
}

/// Nelder-Mead with the standard coefficients. Restarts the simplex around
/// the incumbent once the first one collapses, which guards against
/// premature degeneracy in higher dimensions.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize, ftol: f64) -> SearchResult {
    let n = x0.len();
    let mut evals = 0;
    let mut best = (x0.to_vec(), f64::INFINITY);
    let mut start = x0.to_vec();
    let mut scale = step;
    for round in 0..3 {
        if evals >= max_evals {
            break;
        }
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut x = start.clone();
            if i > 0 {
                x[i - 1] += scale;
            }
            let fx = f(&x);
            evals += 1;
            simplex.push((x, fx));
        }
        while evals < max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (fb, fw) = (simplex[0].1, simplex[n].1);
            if (fw - fb).abs() <= ftol * fb.abs().max(1e-300) {
                break;
            }
            let mut c = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (ci, xi) in c.iter_mut().zip(x) {
                    *ci += xi / n as f64;
                }
            }
            let along = |t: f64, w: &[f64]| -> Vec<f64> { c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect() };
            let worst = simplex[n].0.clone();
            let xr = along(-1.0, &worst);
            let fr = f(&xr);
            evals += 1;
            if fr < simplex[0].1 {
                let xe = along(-2.0, &worst);
                let fe = f(&xe);
                evals += 1;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < fw {
                    let x = along(-0.5, &worst);
                    let v = f(&x);
                    (x, v)
                } else {
                    let x = along(0.5, &worst);
                    let v = f(&x);
                    (x, v)
                };
                evals += 1;
                if fc < fw.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for s in simplex.iter_mut().skip(1) {
                        s.0 = x0.iter().zip(&s.0).map(|(a, b)| a + 0.5 * (b - a)).collect();
                        s.1 = f(&s.0);
                        evals += 1;
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let improved = simplex[0].1 < best.1 - ftol * best.1.abs();
        if simplex[0].1 < best.1 {
            best = simplex[0].clone();
        }
        if !improved && best.1.is_finite() && round > 0 {
            break;
        }
        start = best.0.clone();
        scale *= 0.25;
    }
    SearchResult { x: best.0, f: best.1, evaluations: evals }
}

/// Coordinate search on a shrinking grid: each coordinate is scanned over
/// `2 * half_width + 1` points, then the spacing is halved.
pub fn grid_refine(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize, ftol: f64) -> SearchResult {
    const HALF_WIDTH: i32 = 4;
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut evals = 1;
    let mut h = step;
    while evals < max_evals && h > 1e-9 {
        let before = fx;
        for i in 0..x.len() {
            let center = x[i];
            for j in -HALF_WIDTH..=HALF_WIDTH {
                if j == 0 {
                    continue;
                }
                let mut y = x.clone();
                y[i] = center + j as f64 * h;
                let fy = f(&y);
                evals += 1;
                if fy < fx {
                    fx = fy;
                    x = y;
                }
            }
        }
        if before - fx <= ftol * fx.abs() {
            h *= 0.5;
        }
    }
    SearchResult { x, f: fx, evaluations: evals }
}

/// (1+1) evolution strategy with the one-fifth success rule.
pub fn one_plus_one(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    rng: &mut ChaCha8Rng,
) -> SearchResult {
    let n = x0.len().max(1) as f64;
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut sigma = step;
    let mut evals = 1;
    while evals < max_evals && sigma > 1e-10 {
        let y: Vec<f64> = x.iter().map(|v| v + sigma * standard_normal(rng)).collect();
        let fy = f(&y);
        evals += 1;
        if fy <= fx {
            x = y;
            fx = fy;
            sigma *= (0.8 / n).exp();
        } else {
            sigma *= (-0.2 / n).exp();
        }
    }
    SearchResult { x, f: fx, evaluations: evals }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one draw per call keeps the stream simple to reproduce.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    fn sphere(x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(i, v)| (v - i as f64 * 0.3).powi(2)).sum()
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], 0.5, 5000, 1e-14);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn nelder_mead_higher_dimension() {
        let r = nelder_mead(sphere, &[1.0; 8], 0.5, 20000, 1e-16);
        assert!(r.f < 1e-8, "{}", r.f);
    }

    #[test]
    fn grid_and_es_minimize_sphere() {
        let g = grid_refine(sphere, &[1.0; 4], 0.5, 20000, 1e-14);
        assert!(g.f < 1e-8, "{}", g.f);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = one_plus_one(sphere, &[1.0; 4], 0.5, 20000, &mut rng);
        assert!(e.f < 1e-8, "{}", e.f);
    }

    #[test]
    fn golden_section_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.7f64).powi(2) + 2.0, 0.0, 3.0, 1e-12);
        assert!((x - 0.7).abs() < 1e-6 && (fx - 2.0).abs() < 1e-12);
    }
}
