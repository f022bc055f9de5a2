//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use mvrsm::{MixedPoint, ReluSurrogate, SearchSpace, VariableSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Ridge solution `c0 + (ΦᵀΦ + λI)⁻¹ Φᵀ (y − Φ c0)` through the SVD of Φ,
/// which stays accurate when ΦᵀΦ is singular.
pub fn ridge_svd(phi: &[Vec<f64>], y: &[f64], c0: &[f64], lambda: f64) -> Vec<f64> {
    let n = phi.len();
    let m = c0.len();
    let a = DMatrix::from_fn(n, m, |i, j| phi[i][j]);
    let c0v = DVector::from_column_slice(c0);
    let r = DVector::from_column_slice(y) - &a * &c0v;
    let svd = a.svd(true, true);
    let u = svd.u.expect("u");
    let vt = svd.v_t.expect("v_t");
    let utr = u.transpose() * r;
    let scaled = DVector::from_fn(svd.singular_values.len(), |i, _| {
        let s = svd.singular_values[i];
        s / (s * s + lambda) * utr[i]
    });
    let delta = vt.transpose() * scaled;
    (c0v + delta).iter().copied().collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

/// Golden-section search for the minimiser of a unimodal function.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    while (b - a).abs() > tol {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    0.5 * (a + b)
}

/// Central finite-difference gradient of the surrogate.
pub fn fd_grad(model: &ReluSurrogate, flat: &[f64], h: f64) -> Vec<f64> {
    (0..flat.len())
        .map(|i| {
            let mut p = flat.to_vec();
            let mut m = flat.to_vec();
            p[i] += h;
            m[i] -= h;
            (model.eval_flat(&p).unwrap() - model.eval_flat(&m).unwrap()) / (2.0 * h)
        })
        .collect()
}

/// Small random mixed space with `d_c` continuous and `d_d` integer variables.
pub fn random_space<R: Rng>(rng: &mut R, d_c: usize, d_d: usize, max_width: i64) -> SearchSpace {
    let mut vars = Vec::new();
    for _ in 0..d_c {
        let l: f64 = rng.random_range(-3.0..1.0);
        let w: f64 = rng.random_range(0.5..4.0);
        vars.push(VariableSpec::continuous(l, l + w));
    }
    for _ in 0..d_d {
        let l: i64 = rng.random_range(-3..=1);
        let w: i64 = rng.random_range(1..=max_width);
        vars.push(VariableSpec::integer(l, l + w));
    }
    SearchSpace::new(vars).unwrap()
}

/// Random surrogate coefficients in [-1, 1] over the given model's basis.
pub fn with_random_coeffs<R: Rng>(model: &ReluSurrogate, rng: &mut R) -> ReluSurrogate {
    let coeffs = (0..model.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    ReluSurrogate::from_parts(model.d_c(), model.basis().to_vec(), coeffs, 1e-8).unwrap()
}

pub fn random_point<R: Rng>(space: &SearchSpace, rng: &mut R) -> MixedPoint {
    // continuous draw in every coordinate, integer ones included
    let lo = space.lower();
    let hi = space.upper();
    let flat: Vec<f64> = lo.iter().zip(&hi).map(|(l, u)| rng.random_range(*l..=*u)).collect();
    MixedPoint::unflatten(&flat, space.d_c())
}

pub fn is_integral(v: f64, tol: f64) -> bool {
    (v - v.round()).abs() <= tol
}
