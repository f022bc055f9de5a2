mod common;

use common::{fd_grad, random_point, random_space, with_random_coeffs};
use mvrsm::{MixedPoint, ReluSurrogate, ZKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64, d_c: usize, d_d: usize) -> (mvrsm::SearchSpace, ReluSurrogate, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = random_space(&mut rng, d_c, d_d, 4);
    let model = ReluSurrogate::build(&space, &mut rng).unwrap();
    let model = with_random_coeffs(&model, &mut rng);
    (space, model, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn project_is_idempotent(seed in any::<u64>(), d_c in 0usize..4, d_d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = random_space(&mut rng, d_c, d_d, 5);
        // points well outside the box too
        let flat: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(-10.0..10.0)).collect();
        let p = MixedPoint::unflatten(&flat, d_c);
        let once = space.project(&p).unwrap();
        prop_assert!(space.is_feasible(&once));
        prop_assert_eq!(space.project(&once).unwrap(), once);
    }

    #[test]
    fn flatten_round_trip(xc in prop::collection::vec(-1e6f64..1e6, 0..5),
                          xd in prop::collection::vec(-50i32..50, 0..5)) {
        let p = MixedPoint::new(xc.clone(), xd.iter().map(|&v| v as f64).collect());
        prop_assert_eq!(MixedPoint::unflatten(&p.flatten(), xc.len()), p);
    }

    #[test]
    fn uniform_samples_are_feasible(seed in any::<u64>(), d_c in 0usize..4, d_d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = random_space(&mut rng, d_c, d_d, 6);
        for _ in 0..20 {
            let p = space.uniform_sample(&mut rng);
            prop_assert!(space.contains(&p));
            prop_assert!(p.is_integral());
        }
    }

    #[test]
    fn integer_units_are_integral_on_lattice(seed in any::<u64>(), d_c in 0usize..3, d_d in 1usize..4) {
        let (space, model, mut rng) = setup(seed, d_c, d_d);
        let p = space.uniform_sample(&mut rng);
        let flat = p.flatten();
        for z in model.basis().iter().filter(|z| z.kind != ZKind::Mixed) {
            let v = z.value(&flat);
            prop_assert_eq!(v, v.round());
        }
    }

    #[test]
    fn eval_is_linear_within_a_region(seed in any::<u64>(), d_c in 1usize..3, d_d in 1usize..3) {
        let (space, model, mut rng) = setup(seed, d_c, d_d);
        let p = random_point(&space, &mut rng);
        let dir: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(-1e-3..1e-3)).collect();
        let fp = p.flatten();
        let fq: Vec<f64> = fp.iter().zip(&dir).map(|(a, b)| a + b).collect();
        let along = |t: f64| -> Vec<f64> { fp.iter().zip(&fq).map(|(a, b)| a + t * (b - a)).collect() };
        // same region iff no unit changes sign on the sampled segment
        let signs = |x: &[f64]| -> Vec<bool> { model.basis().iter().map(|z| z.value(x) > 0.0).collect() };
        let s0 = signs(&fp);
        prop_assume!((1..=32).all(|k| signs(&along(k as f64 / 32.0)) == s0));
        let mid = model.eval_flat(&along(0.5)).unwrap();
        let avg = 0.5 * (model.eval_flat(&fp).unwrap() + model.eval_flat(&fq).unwrap());
        prop_assert!((mid - avg).abs() <= 1e-10 * avg.abs().max(1.0));
    }
}

#[test]
fn gradient_matches_finite_differences_away_from_kinks() {
    let mut checked = 0;
    for seed in 0..200u64 {
        let (space, model, mut rng) = setup(seed, 1 + (seed % 2) as usize, 1 + (seed % 3) as usize);
        for _ in 0..5 {
            let flat = random_point(&space, &mut rng).flatten();
            if model.basis().iter().any(|z| z.value(&flat).abs() <= 1e-6) {
                continue;
            }
            let (_, g) = model.value_grad_flat(&flat).unwrap();
            let fd = fd_grad(&model, &flat, 1e-7);
            let err = common::rel_err(&g, &fd);
            let scale: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            if scale > 1e-8 {
                assert!(err < 1e-5, "seed {seed}: {err}");
            }
            checked += 1;
        }
    }
    assert!(checked > 500);
}

#[test]
fn mixed_hyperplanes_separate_corner_points() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = random_space(&mut rng, 2, 2, 3);
        let model = ReluSurrogate::build(&space, &mut rng).unwrap();
        let lo = space.lower();
        let hi = space.upper();
        for z in model.basis().iter().filter(|z| z.kind == ZKind::Mixed) {
            // the box corner minimising / maximising ωᵀx
            let q1: Vec<f64> = z.omega.iter().enumerate().map(|(i, &w)| if w >= 0.0 { lo[i] } else { hi[i] }).collect();
            let q2: Vec<f64> = z.omega.iter().enumerate().map(|(i, &w)| if w >= 0.0 { hi[i] } else { lo[i] }).collect();
            assert!(z.value(&q1) <= 1e-12);
            assert!(z.value(&q2) >= -1e-12);
        }
    }
}

#[test]
fn vertices_are_integral() {
    for seed in 0..6u64 {
        let (space, model, _) = setup(seed, 1, 1 + (seed % 2) as usize);
        let vs = model.vertex_enumerate(&space).unwrap();
        assert!(!vs.is_empty());
        for v in vs {
            assert!(v.point.xd.iter().all(|&x| common::is_integral(x, 1e-9)), "{v:?}");
        }
    }
}
