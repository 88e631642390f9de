//! One test per acceptance criterion; run with `--nocapture` for the detail lines.

mod common;

use common::*;
use hofa::counting::*;
use hofa::energy::*;
use hofa::expsum::*;
use hofa::gowers::*;
use hofa::oracle::naive_count_indicator;
use hofa::partition::*;
use hofa::report::{Status, VerifierReport};
use hofa::rng::SplitMix64;
use hofa::{ApPartition, BoxSpec, ConfigSpec, GridFunction, LineFn, PhaseTable, SetIndicator, TorusPhase};
use std::time::{Duration, Instant};

fn line(rng: &mut SplitMix64, max_len: u64) -> LineFn {
    let lo = rng.range_inclusive(-50, 50);
    let len = 1 + rng.below(max_len) as usize;
    random_line(rng, lo, len)
}

fn report(id: u32, ok: bool, detail: &str) {
    println!("criterion {id:02}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

#[derive(Default)]
struct Tally {
    pass: usize,
    vacuous: usize,
    fail: usize,
}

impl Tally {
    fn add(&mut self, r: &VerifierReport) {
        match r.status {
            Status::Pass => self.pass += 1,
            Status::Vacuous => self.vacuous += 1,
            Status::Fail => self.fail += 1,
        }
    }
}

#[test]
fn criterion_01_partition_calculus() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xA1);
    let tol = 1e-10;
    let mut worst = [0.0f64; 4];
    for _ in 0..200 {
        let f = line(&mut rng, 1000);
        let g = line(&mut rng, 1000);
        let p = ApPartition::new(1 + rng.below(12), 1 + rng.below(12)).unwrap();
        let (a, b) = self_adjointness_check(&f, &g, &p);
        worst[0] = worst[0].max((a - b).norm());
    }
    for _ in 0..200 {
        let f = line(&mut rng, 1000);
        let q = 1 + rng.below(6);
        let (a, b, c2) = (1 + rng.below(5), 1 + rng.below(5), 1 + rng.below(5));
        let r = refinement_pythagoras(&f, &ApPartition::new(q, a * b * c2).unwrap(), &ApPartition::new(q * a, c2).unwrap()).unwrap();
        worst[1] = worst[1].max((r.lhs - r.rhs).abs());
        worst[2] = worst[2].max(r.tower_fine.max(r.tower_coarse));
    }
    for _ in 0..200 {
        let f = line(&mut rng, 1000);
        let (q, l, k) = (1 + rng.below(8), 1 + rng.below(8), 1 + rng.below(4) as u32);
        let p = ApPartition::new(q, l).unwrap();
        let formula = projection_lk_norm(&f, &p, k);
        let direct = brute_projection_norm(&f, q as i64, l as i64, k as i32);
        worst[3] = worst[3].max((formula - direct).abs());
    }
    let mut periodic_exact = true;
    let mut shift_ok = true;
    let mut refine_ok = true;
    for _ in 0..200 {
        let f = line(&mut rng, 1000);
        let p = ApPartition::new(1 + rng.below(10), 1 + rng.below(10)).unwrap();
        let s = rng.range_inclusive(-3, 3);
        let d = shift_norm_delta(&f, &p, s * p.block_len()).unwrap();
        periodic_exact &= d.clause == ShiftClause::Periodic && d.lhs == d.rhs;
        let h = rng.range_inclusive(-(p.q as i64) + 1, p.q as i64 - 1);
        if h.rem_euclid(p.block_len()) != 0 {
            shift_ok &= shift_norm_delta(&f, &p, h).unwrap().holds();
        }
        let m = if p.l > 1 { rng.range_inclusive(1, p.l as i64 - 1) } else { 0 };
        if m != 0 {
            shift_ok &= shift_norm_delta(&f, &p, m * p.q as i64).unwrap().holds();
        }
        let (qt, l2) = (1 + rng.below(5), 1 + rng.below(5));
        let l1 = qt * l2 + rng.below(40);
        refine_ok &= almost_refinement_delta(&f, 1 + rng.below(4), l1, qt, l2).unwrap().holds();
    }
    let elapsed = start.elapsed();
    let ok = worst.iter().all(|&w| w <= tol) && periodic_exact && shift_ok && refine_ok && elapsed < Duration::from_secs(30);
    report(
        1,
        ok,
        &format!(
            "adjoint {:.1e} pythagoras {:.1e} tower {:.1e} lk {:.1e} periodic_exact {periodic_exact} shift_8 {shift_ok} refine_8 {refine_ok} in {elapsed:.2?}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_02_counting_equivalence() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xA2);
    let mut mismatches = 0;
    let mut max_cells = 0;
    for trial in 0..500 {
        let (m, dims) = if trial % 2 == 0 {
            let n1 = 2 + rng.below(63);
            let n2 = 1 + rng.below((n1 * n1).min((1 << 16) / n1));
            (vec![1, 2], vec![n1, n2])
        } else {
            let n1 = 2 + rng.below(15);
            let n2 = 1 + rng.below((n1 * n1).min(64));
            let n3 = 1 + rng.below(((1 << 16) / (n1 * n2)).max(1));
            (vec![1, 2, 3], vec![n1, n2, n3])
        };
        max_cells = max_cells.max(dims.iter().product::<u64>());
        let p = rng.uniform(0.2, 0.9);
        let a = random_set(&mut rng, &dims, p);
        let spec = ConfigSpec::new(m, dims, 1 + rng.below(2), 1 + rng.below(4)).unwrap();
        if count_indicator(&a, &spec).unwrap().integer_count != naive_count_indicator(&a, &spec) {
            mismatches += 1;
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n_side = 1 + rng.below(5);
        let d = [n_side, n_side * n_side];
        let f0 = random_grid(&mut rng, &d);
        let g = random_grid(&mut rng, &d);
        let h = random_grid(&mut rng, &d);
        let f2 = random_grid(&mut rng, &d);
        let t = random_unit(&mut rng);
        let comb = g.zip_with(&h, |a, b| a + t * b).unwrap();
        let lhs = lambda_simple(&[f0.clone(), comb, f2.clone()], &[1, 2], n_side).unwrap();
        let a = lambda_simple(&[f0.clone(), g, f2.clone()], &[1, 2], n_side).unwrap();
        let b = lambda_simple(&[f0, h, f2], &[1, 2], n_side).unwrap();
        worst = worst.max((lhs - a - t * b).norm());
    }
    let elapsed = start.elapsed();
    let ok = mismatches == 0 && worst <= 1e-10 && elapsed < Duration::from_secs(60);
    report(2, ok, &format!("mismatches {mismatches}/500 (max {max_cells} cells) multilinearity {worst:.1e} in {elapsed:.2?}"));
    assert!(ok);
}

#[test]
fn criterion_03_stashing_identity() {
    let mut rng = SplitMix64::new(0xA3);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let (m, k): (Vec<u32>, usize) = match trial % 4 {
            0 => (vec![1], 0),
            1 => (vec![1, 2], 1),
            2 => (vec![1, 2], 0),
            _ => (vec![1, 2, 3], 1),
        };
        let n_side = 1 + rng.below(4);
        let n = m.len() - k;
        let base: Vec<u64> = m[..n].iter().map(|&e| n_side.pow(e)).collect();
        let mut fs = vec![random_grid(&mut rng, &base)];
        for i in 0..n {
            let mut d = base.clone();
            d[i] *= 2;
            fs.push(random_grid(&mut rng, &d));
        }
        let bx = BoxSpec::new(base).unwrap();
        let alphas: Vec<PhaseTable> = (0..k).map(|_| PhaseTable::from_fn(bx.clone(), |_| random_rational(&mut rng, 16))).collect();
        let r = stashing_identity_check(&fs, &alphas, &m, n_side).unwrap();
        worst = worst.max((r.lhs - r.rhs).norm());
    }
    let ok = worst <= 1e-10;
    report(3, ok, &format!("max |Λ − N^-Σm Σ f_n F| = {worst:.1e} over 100"));
    assert!(ok);
}

#[test]
fn criterion_04_gowers_consistency() {
    let two = LineFn::indicator(1, 2);
    let enumerated = brute_u2_fourth(&two);
    let norm4 = gowers_norm(&two, 2).unwrap().powi(4);
    let small_ok = enumerated == 6.0 && (norm4 - 6.0).abs() < 1e-12;
    let mut rng = SplitMix64::new(0xA4);
    let mut u1_exact = true;
    for _ in 0..100 {
        let (lo, len) = (rng.range_inclusive(-20, 20), 1 + rng.below(64) as usize);
        let f = random_signs(&mut rng, lo, len);
        u1_exact &= gowers_inner(&f, 1).unwrap().re == f.sum().norm_sqr();
    }
    let (mut spectral, mut modulation, mut translation) = (0.0f64, 0.0f64, true);
    for _ in 0..100 {
        let len = 1 + rng.below(64) as usize;
        let f = random_line(&mut rng, 1, len);
        let comb = gowers_inner(&f, 2).unwrap().re;
        spectral = spectral.max((comb - u2_via_spectrum(&f)).abs() / comb.abs().max(1e-300));
        let beta = rng.next_f64();
        let g = LineFn::from_fn(f.lo(), f.hi(), |x| f.get(x) * cis(beta * x as f64));
        let gm = gowers_inner(&g, 2).unwrap().re;
        modulation = modulation.max((gm - comb).abs() / comb.abs().max(1e-300));
        let a = rng.range_inclusive(-100, 100);
        translation &= gowers_inner(&f.translate(a), 2).unwrap() == gowers_inner(&f, 2).unwrap();
    }
    let ok = small_ok && u1_exact && spectral <= 1e-8 && modulation <= 1e-8 && translation;
    report(
        4,
        ok,
        &format!("U2(1_[2])^4 = {enumerated} U1 exact {u1_exact} spectral rel {spectral:.1e} modulation rel {modulation:.1e} translation exact {translation}"),
    );
    assert!(ok);
}

#[test]
fn criterion_05_box_counts() {
    let mut rng = SplitMix64::new(0xA5);
    let mut equality = true;
    for _ in 0..200 {
        let len = 1u64 << rng.below(6);
        let vals: Vec<f64> = (0..len).map(|_| rng.below(9) as f64 / 8.0).collect();
        let f = GridFunction::from_real(BoxSpec::new(vec![len]).unwrap(), &vals).unwrap();
        let mean = vals.iter().sum::<f64>() / len as f64;
        equality &= box_count(&f).unwrap() == mean * mean;
    }
    let (mut instances, mut violations, mut min_slack) = (0, 0, f64::INFINITY);
    for n in 2..=3usize {
        for _ in 0..600 {
            let dims: Vec<u64> = (0..n).map(|_| 1 + rng.below(8)).collect();
            let f = random_unit_interval_grid(&mut rng, &dims);
            let mean = f.values().iter().map(|v| v.re).sum::<f64>() / f.values().len() as f64;
            let slack = box_count(&f).unwrap() - mean.powi(n as i32 + 1);
            min_slack = min_slack.min(slack);
            instances += 1;
            if slack < -1e-12 {
                violations += 1;
            }
        }
    }
    let ok = equality && violations == 0;
    report(5, ok, &format!("n=1 equality exact {equality}; n∈{{2,3}} violations {violations}/{instances}, min slack {min_slack:.3e}"));
    assert!(ok);
}

#[test]
fn criterion_06_linearization() {
    let mut rng = SplitMix64::new(0xA6);
    let (mut fails, mut worst_ratio) = (0, 0.0f64);
    for _ in 0..100 {
        let n1 = 20 + rng.below(11);
        let n2 = 400 + rng.below(n1 * n1 - 399);
        let f = random_unit_interval_grid(&mut rng, &[n1, n2]);
        let big_m = 1 + rng.below(2);
        let l = 18 * big_m + rng.below(20);
        let spec = ConfigSpec::new(vec![1, 2], vec![n1, n2], 1, big_m).unwrap();
        let r = linearization_gap(&f, &spec, l, 0.9).unwrap();
        worst_ratio = worst_ratio.max(r.gap / r.bound);
        if !r.holds() {
            fails += 1;
        }
    }
    let ok = fails == 0;
    report(6, ok, &format!("violations {fails}/100, worst gap/bound {worst_ratio:.3}"));
    assert!(ok);
}

fn energy_params() -> EnergyParams {
    EnergyParams {
        q_max: 6,
        tau: 0.05,
        gamma: Some(0.25),
        range_divisor: Some(1.0),
        iter_cap: None,
    }
}

fn energy_instance(rng: &mut SplitMix64, kind: u64) -> (Vec<GridFunction>, bool) {
    let root = 16 + rng.below(17);
    let n1 = (root + rng.below(8)).min(32);
    let bx = BoxSpec::new(vec![n1, root * root]).unwrap();
    let dims = bx.dims().to_vec();
    match kind {
        0 => (vec![GridFunction::ones(bx).unwrap(); 3], true),
        1 => ((0..3).map(|_| random_grid(rng, &dims)).collect(), false),
        2 => {
            let p = rng.uniform(0.3, 0.8);
            ((0..3).map(|_| random_set(rng, &dims, p).to_grid().unwrap()).collect(), false)
        }
        _ => {
            let q = 2 + rng.below(4) as i64;
            let k = 1 + rng.below(q as u64 - 1);
            let t = k as f64 / q as f64;
            let phase = GridFunction::from_fn(bx.clone(), |x| cis(t * x[1] as f64)).unwrap();
            let conj = phase.map(|v| v.conj());
            (vec![conj, GridFunction::ones(bx).unwrap(), phase], false)
        }
    }
}

#[test]
fn criterion_07_energy_increment() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xA7);
    let params = energy_params();
    let mut statuses = std::collections::BTreeMap::new();
    let (mut bad_status, mut non_increase, mut over_cap, mut trivial_bad, mut steps) = (0, 0, 0, 0, 0);
    for trial in 0..100u64 {
        let (fs, trivial) = energy_instance(&mut rng, trial % 4);
        let r = energy_increment(&fs, &[1, 2], 0.3, &params).unwrap();
        *statuses.entry(format!("{:?}", r.status)).or_insert(0) += 1;
        if !matches!(r.status, DecompositionStatus::Converged | DecompositionStatus::IterationCap) {
            bad_status += 1;
        }
        if r.iterations > 2 * (2.0f64 / params.tau).ceil() as usize {
            over_cap += 1;
        }
        steps += r.trace.len();
        non_increase += r.trace.iter().filter(|t| t.energy_after <= t.energy_before).count();
        if trivial && (r.status != DecompositionStatus::Converged || r.iterations != 0) {
            trivial_bad += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = bad_status == 0 && non_increase == 0 && over_cap == 0 && trivial_bad == 0 && elapsed < Duration::from_secs(300);
    report(
        7,
        ok,
        &format!("statuses {statuses:?} oracle steps {steps} non-increasing {non_increase} over cap {over_cap} trivial failures {trivial_bad} in {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_08_popular_difference_sweep() {
    let mut rng = SplitMix64::new(0xA8);
    let params = PipelineParams {
        energy: energy_params(),
        divisor: None,
    };
    let bx = BoxSpec::new(vec![16, 256]).unwrap();
    let cells = bx.len() as f64;
    let (mut fails, mut fallbacks, mut vacuous) = (0, 0, 0);
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    for trial in 0..100 {
        let a = if trial % 5 == 4 {
            let q = 2 + rng.below(4) as i64;
            let keep = 1 + rng.below(q as u64 - 1) as i64;
            let axis = rng.below(2) as usize;
            SetIndicator::from_predicate(bx.clone(), |x| x[axis].rem_euclid(q) < keep.max((3 * q + 9) / 10)).unwrap()
        } else {
            let p = rng.uniform(0.3, 0.9);
            random_set(&mut rng, &[16, 256], p)
        };
        let mu = a.density();
        assert!(mu >= 0.3);
        let r = popular_difference_pipeline(&a, &[1, 2], 0.1, &params).unwrap();
        assert_eq!(r.count, popular_count(&a, &[1, 2], r.r));
        fallbacks += r.certificate.fallback as usize;
        vacuous += r.certificate.vacuous as usize;
        let norm = r.count as f64 / cells;
        let target = mu.powi(3) - 0.15;
        if norm < target {
            fails += 1;
        }
        let ratio = norm / mu.powi(3);
        if ratio < worst.0 {
            worst = (ratio, mu, norm);
        }
    }
    let ok = fails == 0;
    report(
        8,
        ok,
        &format!(
            "below μ³−0.15: {fails}/100; fallback {fallbacks} vacuous {vacuous}; worst count/μ³ {:.3} (μ {:.3}, count/|box| {:.3})",
            worst.0, worst.1, worst.2
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_09_expsum() {
    let mut fejer_ok = true;
    for h in 1..=10_000u64 {
        let den = (h * h) as i128;
        let mut total: i128 = 0;
        for x in -(h as i64)..=h as i64 {
            let v = fejer(h, x);
            total += *v.numer() * (den / *v.denom());
        }
        fejer_ok &= total == den;
    }
    let mut rng = SplitMix64::new(0xA9);
    let mut weyl_ok = true;
    for _ in 0..200 {
        let s = 1 + rng.below(4) as usize;
        let alphas: Vec<TorusPhase> = (0..s)
            .map(|_| if rng.bernoulli(0.5) { random_rational(&mut rng, 100) } else { TorusPhase::real(rng.next_f64()) })
            .collect();
        weyl_ok &= weyl_sum(&alphas, 1 + rng.below(500)).unwrap().norm() <= 1.0 + 1e-12;
    }
    let three_sevenths = TorusPhase::rational(3, 7).unwrap();
    let rec = rational_approx_search(&[three_sevenths], 100, 20).unwrap();
    let recovery = rec.q == 7 && rec.max_residual() == 0.0;
    let mut phi_ok = 0;
    for _ in 0..1000 {
        let d = 1 + rng.below(4) as usize;
        let coeffs: Vec<(Vec<i128>, i128)> = (0..d)
            .map(|_| ((0..d).map(|_| rng.range_inclusive(-9, 9) as i128).collect(), 1 + rng.below(50) as i128))
            .collect();
        let phi = |h: &[i64]| {
            let mut t = TorusPhase::zero();
            for (i, (row, den)) in coeffs.iter().enumerate() {
                let prod: i128 = (0..d).filter(|&j| j != i).map(|j| row[j] * h[j] as i128 + 1).product();
                t = t + TorusPhase::rational(prod, *den).unwrap();
            }
            t
        };
        let h0: Vec<i64> = (0..d).map(|_| rng.range_inclusive(-30, 30)).collect();
        let h1: Vec<i64> = (0..d).map(|_| rng.range_inclusive(-30, 30)).collect();
        let v = phi_tilde(phi, &h0, &h1).unwrap();
        if v.is_rational() && v.is_zero() {
            phi_ok += 1;
        }
    }
    let ok = fejer_ok && weyl_ok && recovery && phi_ok == 1000;
    report(9, ok, &format!("Fejér mass exact for H ≤ 10^4 {fejer_ok}; |Weyl| ≤ 1 {weyl_ok}; 3/7 → q = {}; φ̃ ≡ 0 {phi_ok}/1000", rec.q));
    assert!(ok);
}

#[test]
fn criterion_10_verifier_implications() {
    let mut rng = SplitMix64::new(0xAA);
    let mut vdc = Tally::default();
    for trial in 0..50 {
        let m = 200 + rng.below(200);
        let delta = rng.uniform(0.3, 0.8);
        let h = 1 + rng.below(((delta * delta * m as f64 / 4.0).floor() as u64).max(1));
        let family: Vec<Weighted<LineFn>> = (0..1 + rng.below(3))
            .map(|_| {
                let f = match trial % 3 {
                    0 => LineFn::indicator(1, m as i64),
                    1 => {
                        let beta = rng.uniform(0.0, 0.01);
                        LineFn::from_fn(1, m as i64, |x| cis(beta * x as f64))
                    }
                    _ => random_signs(&mut rng, 1, m as usize),
                };
                Weighted { weight: rng.uniform(0.2, 1.0), f }
            })
            .collect();
        vdc.add(&vdc_verify(&family, 1, m, delta, h).unwrap());
    }
    let cfg = VerifierConfig::default();
    let mut inter = Tally::default();
    for trial in 0..50 {
        let (n1, n2) = (4 + rng.below(5), 4 + rng.below(5));
        let delta = rng.uniform(0.1, 0.6);
        let l = ((delta * n1 as f64).ceil() as u64).max(1) + rng.below(3);
        let family: Vec<GridFunction> = (0..1 + rng.below(2))
            .map(|_| match trial % 3 {
                0 => GridFunction::ones(BoxSpec::new(vec![n1, n2]).unwrap()).unwrap(),
                1 => {
                    let t = rng.next_f64();
                    GridFunction::from_fn(BoxSpec::new(vec![n1, n2]).unwrap(), |x| cis(t * (x[0] * x[1]) as f64)).unwrap()
                }
                _ => random_grid(&mut rng, &[n1, n2]),
            })
            .collect();
        inter.add(&interchange_verify_2d(&family, 1 + rng.below(3), l, 1, delta, &cfg).unwrap());
    }
    let mut same = Tally::default();
    for trial in 0..50 {
        let delta = 0.3;
        let (n1, n2) = (1 + rng.below(3), 38 + rng.below(11));
        let l = (3 * n2).div_ceil(10) + rng.below(4);
        let f = match trial % 3 {
            0 => GridFunction::ones(BoxSpec::new(vec![n1, n2]).unwrap()).unwrap(),
            1 => {
                let t = rng.next_f64();
                GridFunction::from_fn(BoxSpec::new(vec![n1, n2]).unwrap(), |x| cis(t * (x[1] * x[1]) as f64)).unwrap()
            }
            _ => random_grid(&mut rng, &[n1, n2]),
        };
        same.add(&same_coord_verify(&f, 1 + rng.below(3), l, 1, delta, &cfg).unwrap());
    }
    let mut fourier = Tally::default();
    for trial in 0..50 {
        let (n, n_side) = if trial % 2 == 0 { (1u32, 4 + rng.below(12)) } else { (2u32, 2 + rng.below(4)) };
        let nn = n_side.pow(n) as i64;
        let delta = rng.uniform(0.2, 0.7);
        let poly: Vec<TorusPhase> = if n == 2 && rng.bernoulli(0.5) {
            vec![TorusPhase::zero(), random_rational(&mut rng, 6)]
        } else {
            Vec::new()
        };
        let f = match trial % 5 {
            0 => LineFn::indicator(1, 2 * nn),
            1 | 2 => {
                let t = random_rational(&mut rng, 6).to_f64();
                LineFn::from_fn(1, 2 * nn, |x| cis(t * x as f64))
            }
            3 => random_signs(&mut rng, 1, 2 * nn as usize),
            _ => random_line(&mut rng, 1, 2 * nn as usize),
        };
        fourier.add(&fourier_certificate_verify(&f, &poly, n, n_side, delta, 8).unwrap());
    }
    let line_for = |name: &str, t: &Tally| format!("{name} pass {} vacuous {} fail {}", t.pass, t.vacuous, t.fail);
    let ok = [&vdc, &inter, &same, &fourier].iter().all(|t| t.fail == 0);
    report(
        10,
        ok,
        &format!(
            "{}; {}; {}; {}",
            line_for("vdc", &vdc),
            line_for("interchange", &inter),
            line_for("same_coord", &same),
            line_for("fourier", &fourier)
        ),
    );
    assert!(ok);
}
