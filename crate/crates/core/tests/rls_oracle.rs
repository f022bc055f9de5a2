mod common;

use common::{rel_err, ridge_svd};
use mvrsm::RlsState;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Problem {
    phi: Vec<Vec<f64>>,
    y: Vec<f64>,
    c0: Vec<f64>,
}

fn problem(rng: &mut ChaCha8Rng) -> Problem {
    let m = rng.random_range(1..=20);
    let n = rng.random_range(1..=50);
    // ReLU-like features: non-negative, some exactly zero
    let phi = (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-1.0f64..2.0).max(0.0)).collect())
        .collect();
    let y = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let c0 = (0..m).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect();
    Problem { phi, y, c0 }
}

fn fit(p: &Problem, order: &[usize]) -> Vec<f64> {
    let mut s = RlsState::new(p.c0.clone(), 1e-8).unwrap();
    for &i in order {
        s.update(&p.phi[i], p.y[i]).unwrap();
    }
    s.coeffs().to_vec()
}

#[test]
fn matches_dense_ridge_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..50 {
        let p = problem(&mut rng);
        let order: Vec<usize> = (0..p.y.len()).collect();
        let c = fit(&p, &order);
        let want = ridge_svd(&p.phi, &p.y, &p.c0, 1e-8);
        assert!(rel_err(&c, &want) <= 1e-6, "problem {k}: {}", rel_err(&c, &want));
    }
}

#[test]
fn data_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let p = problem(&mut rng);
        let mut order: Vec<usize> = (0..p.y.len()).collect();
        let a = fit(&p, &order);
        order.shuffle(&mut rng);
        let b = fit(&p, &order);
        assert!(rel_err(&a, &b) <= 1e-6);
    }
}

#[test]
fn covariance_stays_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = problem(&mut rng);
    let mut s = RlsState::new(p.c0.clone(), 1e-8).unwrap();
    for (phi, &y) in p.phi.iter().zip(&p.y) {
        s.update(phi, y).unwrap();
        for i in 0..s.len() {
            for j in 0..i {
                assert_eq!(s.covariance(i, j), s.covariance(j, i));
            }
        }
    }
}
