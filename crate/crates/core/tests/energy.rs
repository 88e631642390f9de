mod common;

use common::*;
use hofa::counting::best_popular_difference;
use hofa::energy::*;
use hofa::rng::SplitMix64;
use hofa::{BoxSpec, ConfigSpec, GridFunction, SetIndicator};
use proptest::prelude::*;

fn mod3_family() -> Vec<GridFunction> {
    let bx = BoxSpec::new(vec![27, 729]).unwrap();
    let phase = GridFunction::from_fn(bx.clone(), |x| cis(x[1] as f64 / 3.0)).unwrap();
    let conj = GridFunction::from_fn(bx.clone(), |x| cis(-(x[1] as f64) / 3.0)).unwrap();
    vec![conj, GridFunction::ones(bx).unwrap(), phase]
}

#[test]
fn box_count_matches_enumeration() {
    let mut rng = SplitMix64::new(51);
    let f = random_unit_interval_grid(&mut rng, &[6, 6]);
    assert!((box_count(&f).unwrap() - brute_box_count(&f)).abs() < 1e-12);
    let g = random_unit_interval_grid(&mut rng, &[9]);
    let mean = (0..9).map(|i| g.values()[i].re).sum::<f64>() / 9.0;
    assert!((box_count(&g).unwrap() - mean * mean).abs() < 1e-12);
}

#[test]
fn cond_box_count_matches_expansion() {
    let mut rng = SplitMix64::new(52);
    let f = random_unit_interval_grid(&mut rng, &[12, 12]);
    let c = cond_box_count(&f, &[2, 1], &[3, 4]).unwrap();
    let want = brute_cond_box_expansion_2d(&f, [2, 1], [3, 4]);
    assert!((c.value - want).abs() < 1e-12);
    assert!((c.expansion - c.value).abs() < 1e-12);
    assert!((c.weight_total - 1.0).abs() < 1e-12);
}

#[test]
fn linearization_example() {
    let mut rng = SplitMix64::new(53);
    let f = random_unit_interval_grid(&mut rng, &[30, 900]);
    let spec = ConfigSpec::new(vec![1, 2], vec![30, 900], 1, 2).unwrap();
    let r = linearization_gap(&f, &spec, 40, 0.9).unwrap();
    assert!((r.bound - 0.21).abs() < 1e-12);
    assert!(r.holds());
    assert!(linearization_gap(&f, &spec, 2, 0.9).unwrap_err().is_precondition());
}

#[test]
fn mod3_phase_triggers_increment() {
    let params = EnergyParams {
        q_max: 6,
        tau: 0.05,
        gamma: Some(0.25),
        range_divisor: Some(1.0),
        iter_cap: None,
    };
    let r = energy_increment(&mod3_family(), &[1, 2], 0.3, &params).unwrap();
    assert_eq!(r.status, DecompositionStatus::Converged);
    assert!(!r.trace.is_empty());
    assert!(r.iterations <= r.cap);
    assert_eq!(r.q % 3, 0);
    assert_eq!(r.trace[0].axis, 1);
    assert!(r.trace[0].gap > 0.3);
    for t in &r.trace {
        assert!(t.energy_after > t.energy_before);
    }
    assert!(r.gap.unwrap() <= 0.3);
}

#[test]
fn random_signs_converge_at_once() {
    let mut rng = SplitMix64::new(54);
    let bx = BoxSpec::new(vec![16, 256]).unwrap();
    let fs: Vec<GridFunction> = (0..3)
        .map(|_| GridFunction::from_fn(bx.clone(), |_| c(rng.sign(), 0.0)).unwrap())
        .collect();
    let params = EnergyParams {
        range_divisor: Some(1.0),
        ..EnergyParams::default()
    };
    let r = energy_increment(&fs, &[1, 2], 0.3, &params).unwrap();
    assert_eq!(r.status, DecompositionStatus::Converged);
    assert_eq!(r.iterations, 0);
}

#[test]
fn lift_inequality_by_count() {
    let mut rng = SplitMix64::new(55);
    let a = random_set(&mut rng, &[64], 0.5);
    let lift = lift_1d(&a, &[1, 2]).unwrap();
    let mut direct = 0u64;
    for x1 in 1..=8i64 {
        for x2 in 1..=64i64 {
            if a.contains(&[x1 + x2]) {
                direct += 1;
            }
        }
    }
    assert_eq!(lift.size, direct);
    assert_eq!(lift.lower_bound, (a.count() as i128 - 8) * 8);
    assert!(lift.holds());
}

#[test]
fn pipeline_on_residue_set() {
    let bx = BoxSpec::new(vec![16, 256]).unwrap();
    let a = SetIndicator::from_predicate(bx, |x| x[1] % 3 != 0).unwrap();
    let r = popular_difference_pipeline(&a, &[1, 2], 0.1, &PipelineParams::default()).unwrap();
    assert!(r.r >= 1);
    assert_eq!(r.count, hofa::counting::popular_count(&a, &[1, 2], r.r));
    let norm = r.count as f64 / 4096.0;
    assert!(norm >= r.certificate.density_power - 0.15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn box_count_lower_bound(seed in any::<u64>(), n in 2usize..4, side in 2u64..5) {
        let f = random_unit_interval_grid(&mut SplitMix64::new(seed), &vec![side; n]);
        let b = box_count(&f).unwrap();
        prop_assert!((b - brute_box_count(&f)).abs() < 1e-12);
        let mean = f.values().iter().map(|v| v.re).sum::<f64>() / f.values().len() as f64;
        prop_assert!(b >= mean.powi(n as i32 + 1) - 1e-12);
    }

    #[test]
    fn linearization_bound_on_admissible(seed in any::<u64>(), n1 in 20u64..31, t in 0.0f64..1.0) {
        let n2 = 400 + (t * (n1 * n1 - 400) as f64) as u64;
        let f = random_unit_interval_grid(&mut SplitMix64::new(seed), &[n1, n2]);
        let spec = ConfigSpec::new(vec![1, 2], vec![n1, n2], 1, 1).unwrap();
        let r = linearization_gap(&f, &spec, 18, 0.9).unwrap();
        prop_assert!(r.holds(), "gap {} bound {}", r.gap, r.bound);
    }

    #[test]
    fn energy_increment_invariants(seed in any::<u64>(), root in 8u64..33, extra in 0u64..8, kind in 0usize..3) {
        let mut rng = SplitMix64::new(seed);
        let dims = [(root + extra).min(32), root * root];
        let fs: Vec<GridFunction> = (0..3)
            .map(|_| match kind {
                0 => random_grid(&mut rng, &dims),
                1 => random_set(&mut rng, &dims, 0.5).to_grid().unwrap(),
                _ => GridFunction::ones(BoxSpec::new(dims.to_vec()).unwrap()).unwrap(),
            })
            .collect();
        let params = EnergyParams { range_divisor: Some(1.0), gamma: Some(0.5), ..EnergyParams::default() };
        let r = energy_increment(&fs, &[1, 2], 0.3, &params).unwrap();
        prop_assert!(r.iterations <= r.cap);
        prop_assert_eq!(r.iterations, r.trace.len());
        for t in &r.trace {
            prop_assert!(t.energy_after > t.energy_before);
        }
        if kind == 2 {
            prop_assert_eq!(r.status, DecompositionStatus::Converged);
            prop_assert_eq!(r.iterations, 0);
        }
    }

    #[test]
    fn pipeline_fallback_equivalence(seed in any::<u64>(), p in 0.5f64..0.95) {
        let a = random_set(&mut SplitMix64::new(seed), &[16, 256], p);
        let r = popular_difference_pipeline(&a, &[1, 2], 0.1, &PipelineParams::default()).unwrap();
        prop_assert!(r.certificate.vacuous || r.certificate.decomposition == Some(DecompositionStatus::ScaleExhausted));
        if r.certificate.fallback || r.certificate.vacuous {
            let best = best_popular_difference(&a, &[1, 2], 16).unwrap();
            prop_assert_eq!((r.r, r.count), (best.r, best.count));
        }
        prop_assert_eq!(r.certificate.fallback, r.certificate.decomposition.is_some_and(|s| s != DecompositionStatus::Converged));
    }
}
