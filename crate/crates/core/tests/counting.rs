mod common;

use common::*;
use hofa::counting::*;
use hofa::oracle::{naive_count_indicator, naive_popular_count};
use hofa::rng::SplitMix64;
use hofa::{BoxSpec, ConfigSpec, GridFunction, PhaseTable, SetIndicator, TorusPhase};
use proptest::prelude::*;

fn bx(d: &[u64]) -> BoxSpec {
    BoxSpec::new(d.to_vec()).unwrap()
}

#[test]
fn single_corner_value() {
    let f0 = GridFunction::from_fn(bx(&[2, 4]), |x| c(if x == [1, 1] { 1.0 } else { 0.0 }, 0.0)).unwrap();
    let f1 = GridFunction::ones(bx(&[4, 4])).unwrap();
    let f2 = GridFunction::ones(bx(&[2, 8])).unwrap();
    let v = lambda_simple(&[f0, f1, f2], &[1, 2], 2).unwrap();
    assert!((v.re - 2.0 / 16.0).abs() < 1e-15);
}

#[test]
fn simple_matches_brute_force() {
    let mut rng = SplitMix64::new(21);
    for n_side in 1..=5u64 {
        let fs: Vec<GridFunction> = vec![
            random_grid(&mut rng, &[n_side, n_side * n_side]),
            random_grid(&mut rng, &[2 * n_side, n_side * n_side]),
            random_grid(&mut rng, &[n_side, 2 * n_side * n_side]),
        ];
        let got = lambda_simple(&fs, &[1, 2], n_side).unwrap();
        let want = brute_lambda(&fs, &bx(&[n_side, n_side * n_side]), n_side, &|r, j| (r as i64).pow(j as u32 + 1));
        assert!((got - want).norm() < 1e-12, "N = {n_side}");
    }
}

#[test]
fn general_matches_brute_force() {
    let mut rng = SplitMix64::new(22);
    let sets: Vec<GridFunction> = (0..3).map(|_| random_set(&mut rng, &[30, 900], 0.5).to_grid().unwrap()).collect();
    let spec = ConfigSpec::new(vec![1, 2], vec![30, 900], 2, 3).unwrap();
    let got = lambda_general(&sets, &spec).unwrap();
    let want = brute_lambda(&sets, &spec.bx, 3, &|r, j| (2 * r as i64).pow(j as u32 + 1));
    assert!((got - want).norm() < 1e-12);
    let ones = vec![GridFunction::ones(bx(&[30, 900])).unwrap(); 3];
    let spec = ConfigSpec::new(vec![1, 2], vec![30, 900], 1, 1).unwrap();
    let slack = lambda_general(&ones, &spec).unwrap();
    assert!((slack.re - 29.0 * 899.0 / (30.0 * 900.0)).abs() < 1e-12);
}

#[test]
fn phased_matches_brute_force() {
    let n_side = 4u64;
    let mut rng = SplitMix64::new(23);
    let f0 = random_grid(&mut rng, &[4]);
    let f1 = random_grid(&mut rng, &[8]);
    let half = PhaseTable::constant(bx(&[4]), TorusPhase::rational(1, 2).unwrap());
    let got = lambda_phased(&[f0.clone(), f1.clone()], &[half], &[1, 2], n_side).unwrap();
    let mut want = c(0.0, 0.0);
    for x in 1..=4i64 {
        for r in 1..=n_side as i64 {
            want += f0.get(&[x]) * f1.get(&[x + r]) * cis(0.5 * (r * r) as f64);
        }
    }
    assert!((got - want / 16.0).norm() < 1e-12);
    let zero = PhaseTable::constant(bx(&[4]), TorusPhase::zero());
    let plain = lambda_simple(&[f0.clone(), f1.clone()], &[1], n_side).unwrap();
    assert!((lambda_phased(&[f0, f1], &[zero], &[1, 2], n_side).unwrap() - plain).norm() < 1e-15);
}

#[test]
fn popular_count_examples() {
    let full = SetIndicator::full(bx(&[12, 144])).unwrap();
    for r in 1..=14u64 {
        let want = if r < 12 { (12 - r) * (144 - r * r) } else { 0 };
        assert_eq!(popular_count(&full, &[1, 2], r), want);
    }
    let empty = SetIndicator::empty(bx(&[12, 144])).unwrap();
    assert_eq!(popular_count(&empty, &[1, 2], 3), 0);
    let best = best_popular_difference(&empty, &[1, 2], 5).unwrap();
    assert_eq!((best.r, best.count), (1, 0));
    let mut rng = SplitMix64::new(24);
    let a = random_set(&mut rng, &[12, 144], 0.5);
    for r in 1..=12 {
        assert_eq!(popular_count(&a, &[1, 2], r), naive_popular_count(&a, &[1, 2], 1, r));
    }
    let a = random_set(&mut rng, &[16, 256], 0.5);
    let best = best_popular_difference(&a, &[1, 2], 15).unwrap();
    let oracle: Vec<u64> = (1..=15).map(|r| naive_popular_count(&a, &[1, 2], 1, r)).collect();
    assert_eq!(best.histogram, oracle);
    let max = *oracle.iter().max().unwrap();
    assert_eq!(best.r, oracle.iter().position(|&v| v == max).unwrap() as u64 + 1);
}

#[test]
fn averaging_identity_small() {
    let mut rng = SplitMix64::new(25);
    let spec = ConfigSpec::new(vec![1, 2], vec![8, 64], 2, 2).unwrap();
    let fs = vec![
        random_grid(&mut rng, &[8, 64]),
        random_grid(&mut rng, &[16, 64]),
        random_grid(&mut rng, &[8, 128]),
    ];
    let r = averaging_identity_check(&fs, &spec).unwrap();
    assert!((r.lhs - r.rhs).norm() < 1e-10);
}

fn config_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<u64>, u64, u64)> {
    prop_oneof![
        (2u64..12, 2u64..40, 1u64..3, 1u64..4).prop_map(|(a, b, q, m)| (vec![1, 2], vec![a, b], q, m)),
        (2u64..6, 2u64..10, 2u64..30, 1u64..3).prop_map(|(a, b, c3, m)| (vec![1, 2, 3], vec![a, b, c3], 1, m)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bitset_equals_naive((m, dims, q, big_m) in config_strategy(), seed in any::<u64>(), p in 0.1f64..0.9) {
        let mut rng = SplitMix64::new(seed);
        let a = random_set(&mut rng, &dims, p);
        let spec = ConfigSpec::new(m, dims, q, big_m).unwrap();
        let fast = count_indicator(&a, &spec).unwrap();
        prop_assert_eq!(fast.integer_count, naive_count_indicator(&a, &spec));
        let fs = vec![a.to_grid().unwrap(); spec.n() + 1];
        let float = lambda_general(&fs, &spec).unwrap().re;
        prop_assert!((float - fast.lambda).abs() <= 1e-9 * fast.lambda.max(1e-300));
    }

    #[test]
    fn multilinear_and_bounded(seed in any::<u64>(), n_side in 1u64..5) {
        let mut rng = SplitMix64::new(seed);
        let d = [n_side, n_side * n_side];
        let f0 = random_grid(&mut rng, &d);
        let g = random_grid(&mut rng, &d);
        let h = random_grid(&mut rng, &d);
        let f2 = random_grid(&mut rng, &d);
        let sum = g.zip_with(&h, |a, b| a + b).unwrap();
        let lhs = lambda_simple(&[f0.clone(), sum, f2.clone()], &[1, 2], n_side).unwrap();
        let a = lambda_simple(&[f0.clone(), g, f2.clone()], &[1, 2], n_side).unwrap();
        let b = lambda_simple(&[f0, h, f2], &[1, 2], n_side).unwrap();
        prop_assert!((lhs - a - b).norm() < 1e-10);
        prop_assert!(a.norm() <= 1.0 + 1e-12);
    }
}
