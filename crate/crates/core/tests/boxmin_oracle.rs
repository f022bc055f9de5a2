mod common;

use common::{golden_section, random_point, random_space, with_random_coeffs};
use mvrsm::boxmin::minimize;
use mvrsm::{BoxMinConfig, MixedPoint, ReluSurrogate, SearchSpace, VariableSpec, ZFunction, ZKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(omega: f64, bias: f64) -> ZFunction {
    ZFunction {
        omega: vec![omega],
        bias,
        kind: ZKind::Integer,
    }
}

#[test]
fn convex_hinges_reach_golden_section_minimum() {
    let space = SearchSpace::new(vec![VariableSpec::integer(-4, 6)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        // sum of positive hinges either side of a random kink: convex, unimodal
        let k: f64 = rng.random_range(-3.0..5.0);
        let a: f64 = rng.random_range(0.2..3.0);
        let b: f64 = rng.random_range(0.2..3.0);
        let basis = vec![unit(1.0, -k), unit(-1.0, k)];
        let model = ReluSurrogate::from_parts(0, basis, vec![a, b], 1e-8).unwrap();
        let f = |x: f64| model.eval(&MixedPoint::new(vec![], vec![x])).unwrap();
        let want = golden_section(f, -4.0, 6.0, 1e-10);
        let start = MixedPoint::new(vec![], vec![rng.random_range(-4.0..6.0)]);
        let out = minimize(&model, &space, &start, &BoxMinConfig::default()).unwrap();
        assert!((out.point.xd[0] - want).abs() <= 1e-3, "kink {k}: {} vs {want}", out.point.xd[0]);
    }
}

#[test]
fn never_increases_and_stays_in_box() {
    let cfg = BoxMinConfig::default();
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = random_space(&mut rng, 1 + (seed % 3) as usize, 1 + (seed % 2) as usize, 4);
        let model = ReluSurrogate::build(&space, &mut rng).unwrap();
        let model = with_random_coeffs(&model, &mut rng);
        let start = random_point(&space, &mut rng);
        let out = minimize(&model, &space, &start, &cfg).unwrap();
        assert!(out.value <= model.eval(&start).unwrap() + 1e-12, "seed {seed}");
        assert!(space.contains(&out.point));
        assert!(out.iterations <= cfg.max_iters);
        assert_eq!(out.value, model.eval(&out.point).unwrap());
    }
}
