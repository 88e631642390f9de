//! Seeded property suites behind `hofa verify`.
//!
//! Trial `t` of property `p` in a suite draws from
//! `SplitMix64::stream(seed, 1000·p + t)`, so outcomes do not depend on the
//! number of threads.

use crate::config::ConfigSpec;
use crate::counting::{averaging_identity_check, best_popular_difference, count_indicator, lambda_general, lambda_simple};
use crate::energy::{
    box_count, cond_box_count, energy_increment, lift_1d, linearization_gap, popular_difference_pipeline, EnergyParams,
    PipelineParams,
};
use crate::error::{HofaError, Result};
use crate::expsum::{major_arc_check, phi_tilde, rational_approx_search, stashing_identity_check, weyl_sum, fourier_certificate_verify};
use crate::gowers::{
    fejer, gowers_inner, gowers_norm, interchange_verify_2d, same_coord_verify, u2_inverse, u2_via_spectrum, vdc_verify,
    VerifierConfig, Weighted,
};
use crate::grid::{BoxSpec, GridFunction, LineFn, PhaseTable};
use crate::numeric::e;
use crate::oracle::naive_count_indicator;
use crate::partition::{
    almost_refinement_delta, cond_energy, cond_expect, projection_lk_norm, refinement_pythagoras, self_adjointness_check,
    shift_norm_delta, ApPartition,
};
use crate::report::{Status, VerifierReport};
use crate::rng::SplitMix64;
use crate::set::SetIndicator;
use crate::torus::TorusPhase;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Partition,
    Counting,
    Gowers,
    Expsum,
    Energy,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Partition, Suite::Counting, Suite::Gowers, Suite::Expsum, Suite::Energy];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Partition => "partition",
            Suite::Counting => "counting",
            Suite::Gowers => "gowers",
            Suite::Expsum => "expsum",
            Suite::Energy => "energy",
        }
    }

    /// The suites selected by `name`, where `all` selects every suite.
    pub fn select(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Ok(vec![name.parse()?])
    }
}

impl FromStr for Suite {
    type Err = HofaError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| HofaError::invalid(format!("unknown suite {s:?}")))
    }
}

/// Outcome of one trial: `Pass`/`Fail` carry the measured error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    Pass(f64),
    Fail(f64),
    Vacuous,
}

impl Check {
    fn within(err: f64, tol: f64) -> Check {
        if err <= tol {
            Check::Pass(err)
        } else {
            Check::Fail(err)
        }
    }

    fn exact(ok: bool) -> Check {
        if ok {
            Check::Pass(0.0)
        } else {
            Check::Fail(1.0)
        }
    }

    fn from_report(r: &VerifierReport) -> Check {
        match r.status {
            Status::Pass => Check::Pass(0.0),
            Status::Vacuous => Check::Vacuous,
            Status::Fail => Check::Fail(r.threshold - r.conclusion),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub suite: &'static str,
    pub name: &'static str,
    pub tolerance: f64,
    pub passed: usize,
    pub failed: usize,
    pub vacuous: usize,
    /// Largest error over the non-vacuous trials.
    pub worst: f64,
    /// First trial index that failed, if any.
    pub first_failure: Option<usize>,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub suites: Vec<Suite>,
    pub properties: Vec<PropertyOutcome>,
    pub failures: usize,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.failures == 0
    }
}

type Prop = fn(&mut SplitMix64) -> Result<Check>;

fn run_property(suite: Suite, index: usize, name: &'static str, tolerance: f64, prop: Prop, seed: u64, trials: usize) -> PropertyOutcome {
    let checks: Vec<Result<Check>> = (0..trials)
        .into_par_iter()
        .map(|t| prop(&mut SplitMix64::stream(seed, (1000 * index + t) as u64)))
        .collect();
    let mut out = PropertyOutcome {
        suite: suite.name(),
        name,
        tolerance,
        passed: 0,
        failed: 0,
        vacuous: 0,
        worst: 0.0,
        first_failure: None,
        first_error: None,
    };
    for (t, c) in checks.into_iter().enumerate() {
        match c {
            Ok(Check::Pass(err)) => {
                out.passed += 1;
                out.worst = out.worst.max(err);
            }
            Ok(Check::Vacuous) => out.vacuous += 1,
            Ok(Check::Fail(err)) => {
                out.failed += 1;
                out.worst = out.worst.max(err);
                out.first_failure.get_or_insert(t);
            }
            Err(e) => {
                out.failed += 1;
                out.first_failure.get_or_insert(t);
                out.first_error.get_or_insert(e.to_string());
            }
        }
    }
    out
}

/// Runs the selected suites with `trials` seeded instances per property.
pub fn run(suites: &[Suite], seed: u64, trials: usize) -> VerifyReport {
    let mut properties = Vec::new();
    for &suite in suites {
        for (index, &(name, tol, prop)) in table(suite).iter().enumerate() {
            properties.push(run_property(suite, index, name, tol, prop, seed, trials));
        }
    }
    let failures = properties.iter().map(|p| p.failed).sum();
    VerifyReport {
        seed,
        trials,
        suites: suites.to_vec(),
        properties,
        failures,
    }
}

fn table(suite: Suite) -> &'static [(&'static str, f64, Prop)] {
    match suite {
        Suite::Partition => &[
            ("self_adjointness", 1e-10, p_self_adjoint),
            ("pythagoras_and_tower", 1e-10, p_pythagoras),
            ("lk_norm_formula", 1e-10, p_lk_formula),
            ("periodicity", 0.0, p_periodicity),
            ("almost_periodicity", 0.0, p_shift_bounds),
            ("almost_refinement", 0.0, p_almost_refinement),
            ("monotone_energy", 1e-10, p_monotone_energy),
        ],
        Suite::Counting => &[
            ("bitset_equals_naive", 0.0, p_bitset_naive),
            ("float_path_equals_integer", 1e-9, p_float_path),
            ("multilinearity", 1e-10, p_multilinear),
            ("averaging_identity", 1e-10, p_averaging),
        ],
        Suite::Gowers => &[
            ("u2_spectral_equals_combinatorial", 1e-8, p_u2_spectral),
            ("u1_identity", 0.0, p_u1_identity),
            ("translation_invariance", 0.0, p_translation),
            ("modulation_invariance", 1e-8, p_modulation),
            ("u2_inverse_guarantee", 0.0, p_u2_inverse),
            ("vdc_implication", 0.0, p_vdc),
            ("interchange_implication", 0.0, p_interchange),
            ("same_coordinate_implication", 0.0, p_same_coord),
        ],
        Suite::Expsum => &[
            ("weyl_bounded_and_periodic", 1e-12, p_weyl),
            ("rational_recovery", 0.0, p_rational_recovery),
            ("major_arc_lipschitz", 0.0, p_major_arc),
            ("stashing_identity", 1e-10, p_stashing),
            ("phi_tilde_low_rank", 0.0, p_phi_tilde),
            ("fejer_mass", 0.0, p_fejer),
            ("fourier_certificate_implication", 0.0, p_fourier),
        ],
        Suite::Energy => &[
            ("box_count_n1_equality", 0.0, p_box_n1),
            ("box_count_inequality", 1e-12, p_box_inequality),
            ("cond_box_count_expansion", 1e-12, p_cond_box),
            ("linearization_bound", 0.0, p_linearization),
            ("energy_trace_and_cap", 0.0, p_energy_increment),
            ("pipeline_fallback_equivalence", 0.0, p_pipeline_fallback),
            ("lift_inequality", 0.0, p_lift),
        ],
    }
}

fn unit(rng: &mut SplitMix64) -> Complex64 {
    Complex64::from_polar(rng.next_f64().sqrt(), std::f64::consts::TAU * rng.next_f64())
}

fn line(rng: &mut SplitMix64, max_len: u64) -> LineFn {
    let lo = rng.range_inclusive(-50, 50);
    let len = 1 + rng.below(max_len) as usize;
    LineFn::new(lo, (0..len).map(|_| unit(rng)).collect())
}

fn grid(rng: &mut SplitMix64, dims: &[u64]) -> Result<GridFunction> {
    let bx = BoxSpec::new(dims.to_vec())?;
    GridFunction::from_fn(bx, |_| unit(rng))
}

fn unit_interval_grid(rng: &mut SplitMix64, dims: &[u64]) -> Result<GridFunction> {
    let bx = BoxSpec::new(dims.to_vec())?;
    GridFunction::from_fn(bx, |_| Complex64::new(rng.next_f64(), 0.0))
}

fn random_set(rng: &mut SplitMix64, dims: &[u64], p: f64) -> Result<SetIndicator> {
    SetIndicator::from_predicate(BoxSpec::new(dims.to_vec())?, |_| rng.bernoulli(p))
}

fn rational(rng: &mut SplitMix64, max_den: u64) -> TorusPhase {
    let d = 1 + rng.below(max_den);
    TorusPhase::rational(rng.below(d) as i128, d as i128).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn ap(rng: &mut SplitMix64, max: u64) -> Result<ApPartition> {
    ApPartition::new(1 + rng.below(max), 1 + rng.below(max))
}

fn p_self_adjoint(rng: &mut SplitMix64) -> Result<Check> {
    let (f, g, p) = (line(rng, 300), line(rng, 300), ap(rng, 10)?);
    let (a, b) = self_adjointness_check(&f, &g, &p);
    Ok(Check::within((a - b).norm(), 1e-10))
}

fn p_pythagoras(rng: &mut SplitMix64) -> Result<Check> {
    let f = line(rng, 300);
    let q = 1 + rng.below(5);
    let (a, b, c) = (1 + rng.below(4), 1 + rng.below(4), 1 + rng.below(4));
    let r = refinement_pythagoras(&f, &ApPartition::new(q, a * b * c)?, &ApPartition::new(q * a, c)?)?;
    Ok(Check::within((r.lhs - r.rhs).abs().max(r.tower_fine).max(r.tower_coarse), 1e-10))
}

fn p_lk_formula(rng: &mut SplitMix64) -> Result<Check> {
    let (f, p) = (line(rng, 300), ap(rng, 8)?);
    let k = 1 + rng.below(4) as u32;
    let direct = cond_expect(&f, &p).norm_pow(k);
    Ok(Check::within((projection_lk_norm(&f, &p, k) - direct).abs() / direct.max(1.0), 1e-10))
}

fn p_periodicity(rng: &mut SplitMix64) -> Result<Check> {
    let (f, p) = (line(rng, 300), ap(rng, 10)?);
    let d = shift_norm_delta(&f, &p, rng.range_inclusive(-3, 3) * p.block_len())?;
    Ok(Check::exact(d.lhs == d.rhs))
}

fn p_shift_bounds(rng: &mut SplitMix64) -> Result<Check> {
    let (f, p) = (line(rng, 300), ap(rng, 10)?);
    let h = if rng.bernoulli(0.5) || p.l == 1 {
        rng.range_inclusive(-(p.q as i64) + 1, p.q as i64 - 1)
    } else {
        rng.range_inclusive(1, p.l as i64 - 1) * p.q as i64
    };
    if h.rem_euclid(p.block_len()) == 0 {
        return Ok(Check::Vacuous);
    }
    Ok(Check::exact(shift_norm_delta(&f, &p, h)?.holds()))
}

fn p_almost_refinement(rng: &mut SplitMix64) -> Result<Check> {
    let f = line(rng, 300);
    let (qt, l2) = (1 + rng.below(5), 1 + rng.below(5));
    let l1 = qt * l2 + rng.below(40);
    Ok(Check::exact(almost_refinement_delta(&f, 1 + rng.below(4), l1, qt, l2)?.holds()))
}

fn p_monotone_energy(rng: &mut SplitMix64) -> Result<Check> {
    let f = line(rng, 300);
    let q = 1 + rng.below(5);
    let (a, c) = (1 + rng.below(4), 1 + rng.below(6));
    let coarse = cond_energy(&f, &ApPartition::new(q, a * c)?);
    let fine = cond_energy(&f, &ApPartition::new(q * a, c)?);
    Ok(Check::within((coarse - fine).max(0.0), 1e-10))
}

fn random_config(rng: &mut SplitMix64) -> Result<(ConfigSpec, SetIndicator)> {
    let (m, dims) = if rng.bernoulli(0.5) {
        let n1 = 2 + rng.below(30);
        (vec![1, 2], vec![n1, 1 + rng.below(n1 * n1)])
    } else {
        let n1 = 2 + rng.below(8);
        let n2 = 1 + rng.below(n1 * n1);
        (vec![1, 2, 3], vec![n1, n2, 1 + rng.below(200)])
    };
    let p = rng.uniform(0.2, 0.9);
    let a = random_set(rng, &dims, p)?;
    Ok((ConfigSpec::new(m, dims, 1 + rng.below(2), 1 + rng.below(4))?, a))
}

fn p_bitset_naive(rng: &mut SplitMix64) -> Result<Check> {
    let (spec, a) = random_config(rng)?;
    Ok(Check::exact(count_indicator(&a, &spec)?.integer_count == naive_count_indicator(&a, &spec)))
}

fn p_float_path(rng: &mut SplitMix64) -> Result<Check> {
    let (spec, a) = random_config(rng)?;
    let fast = count_indicator(&a, &spec)?;
    let fs = vec![a.to_grid()?; spec.n() + 1];
    let float = lambda_general(&fs, &spec)?.re;
    Ok(Check::within((float - fast.lambda).abs() / fast.lambda.max(1e-300), 1e-9))
}

fn p_multilinear(rng: &mut SplitMix64) -> Result<Check> {
    let n = 1 + rng.below(5);
    let d = [n, n * n];
    let (f0, g, h, f2) = (grid(rng, &d)?, grid(rng, &d)?, grid(rng, &d)?, grid(rng, &d)?);
    let t = unit(rng);
    let comb = g.zip_with(&h, |a, b| a + t * b)?;
    let lhs = lambda_simple(&[f0.clone(), comb, f2.clone()], &[1, 2], n)?;
    let a = lambda_simple(&[f0.clone(), g, f2.clone()], &[1, 2], n)?;
    let b = lambda_simple(&[f0, h, f2], &[1, 2], n)?;
    Ok(Check::within((lhs - a - t * b).norm(), 1e-10))
}

fn p_averaging(rng: &mut SplitMix64) -> Result<Check> {
    let (q, big_m) = (1 + rng.below(2), 1 + rng.below(3));
    let n1 = q * big_m + rng.below(8);
    let n2 = (q * big_m).pow(2) + rng.below(n1 * n1 - (q * big_m).pow(2) + 1);
    let spec = ConfigSpec::new(vec![1, 2], vec![n1, n2], q, big_m)?;
    let fs = vec![grid(rng, &[n1, n2])?, grid(rng, &[2 * n1, n2])?, grid(rng, &[n1, 2 * n2])?];
    let r = averaging_identity_check(&fs, &spec)?;
    Ok(Check::within((r.lhs - r.rhs).norm(), 1e-10))
}

fn p_u2_spectral(rng: &mut SplitMix64) -> Result<Check> {
    let f = line(rng, 64);
    Ok(Check::within(rel(gowers_inner(&f, 2)?.re, u2_via_spectrum(&f)), 1e-8))
}

fn p_u1_identity(rng: &mut SplitMix64) -> Result<Check> {
    let len = 1 + rng.below(64) as usize;
    let f = LineFn::new(0, (0..len).map(|_| Complex64::new(rng.range_inclusive(-2, 2) as f64, 0.0)).collect());
    Ok(Check::exact(gowers_inner(&f, 1)?.re == f.sum().norm_sqr()))
}

fn p_translation(rng: &mut SplitMix64) -> Result<Check> {
    let f = line(rng, 24);
    let s = 1 + rng.below(3) as u32;
    let a = rng.range_inclusive(-100, 100);
    Ok(Check::exact(gowers_inner(&f.translate(a), s)? == gowers_inner(&f, s)?))
}

fn p_modulation(rng: &mut SplitMix64) -> Result<Check> {
    let f = line(rng, 64);
    let beta = rng.next_f64();
    let g = LineFn::from_fn(f.lo(), f.hi(), |x| f.get(x) * e(beta * x as f64));
    Ok(Check::within(rel(gowers_norm(&g, 2)?, gowers_norm(&f, 2)?), 1e-8))
}

fn p_u2_inverse(rng: &mut SplitMix64) -> Result<Check> {
    Ok(Check::exact(u2_inverse(&line(rng, 64)).guarantee_holds()))
}

fn p_vdc(rng: &mut SplitMix64) -> Result<Check> {
    let m = 200 + rng.below(200);
    let delta = rng.uniform(0.3, 0.8);
    let h = 1 + rng.below(((delta * delta * m as f64 / 4.0).floor() as u64).max(1));
    let kind = rng.below(3);
    let family: Vec<Weighted<LineFn>> = (0..1 + rng.below(3))
        .map(|_| {
            let f = match kind {
                0 => LineFn::indicator(1, m as i64),
                1 => {
                    let beta = rng.uniform(0.0, 0.01);
                    LineFn::from_fn(1, m as i64, |x| e(beta * x as f64))
                }
                _ => LineFn::new(1, (0..m).map(|_| Complex64::new(rng.sign(), 0.0)).collect()),
            };
            Weighted { weight: rng.uniform(0.2, 1.0), f }
        })
        .collect();
    Ok(Check::from_report(&vdc_verify(&family, 1, m, delta, h)?))
}

fn p_interchange(rng: &mut SplitMix64) -> Result<Check> {
    let (n1, n2) = (4 + rng.below(5), 4 + rng.below(5));
    let delta = rng.uniform(0.1, 0.6);
    let l = ((delta * n1 as f64).ceil() as u64).max(1) + rng.below(3);
    let kind = rng.below(3);
    let bx = BoxSpec::new(vec![n1, n2])?;
    let family = (0..1 + rng.below(2))
        .map(|_| match kind {
            0 => GridFunction::ones(bx.clone()),
            1 => {
                let t = rng.next_f64();
                GridFunction::from_fn(bx.clone(), |x| e(t * (x[0] * x[1]) as f64))
            }
            _ => grid(rng, &[n1, n2]),
        })
        .collect::<Result<Vec<_>>>()?;
    let q = 1 + rng.below(3);
    Ok(Check::from_report(&interchange_verify_2d(&family, q, l, 1, delta, &VerifierConfig::default())?))
}

fn p_same_coord(rng: &mut SplitMix64) -> Result<Check> {
    let delta = 0.3;
    let (n1, n2) = (1 + rng.below(3), 38 + rng.below(11));
    let l = (3 * n2).div_ceil(10) + rng.below(4);
    let bx = BoxSpec::new(vec![n1, n2])?;
    let f = match rng.below(3) {
        0 => GridFunction::ones(bx)?,
        1 => {
            let t = rng.next_f64();
            GridFunction::from_fn(bx, |x| e(t * (x[1] * x[1]) as f64))?
        }
        _ => grid(rng, &[n1, n2])?,
    };
    let q = 1 + rng.below(3);
    Ok(Check::from_report(&same_coord_verify(&f, q, l, 1, delta, &VerifierConfig::default())?))
}

fn p_weyl(rng: &mut SplitMix64) -> Result<Check> {
    let s = 1 + rng.below(4) as usize;
    let a: Vec<TorusPhase> = (0..s)
        .map(|_| if rng.bernoulli(0.5) { rational(rng, 100) } else { TorusPhase::real(rng.next_f64()) })
        .collect();
    let n = 1 + rng.below(300);
    let w = weyl_sum(&a, n)?;
    let shifted: Vec<TorusPhase> = a.iter().map(|t| *t + TorusPhase::rational(1, 1).unwrap()).collect();
    let excess = (w.norm() - 1.0).max(0.0);
    Ok(Check::within(excess.max((w - weyl_sum(&shifted, n)?).norm()), 1e-12))
}

fn p_rational_recovery(rng: &mut SplitMix64) -> Result<Check> {
    let d = 1 + rng.below(30);
    let t = rng.below(d);
    let alpha = TorusPhase::rational(t as i128, d as i128)?;
    let den = *alpha.as_ratio().unwrap().denom() as u64;
    let r = rational_approx_search(&[alpha], 1 + rng.below(200), 30)?;
    Ok(Check::exact(r.q == den && r.max_residual() == 0.0))
}

fn p_major_arc(rng: &mut SplitMix64) -> Result<Check> {
    let a: Vec<TorusPhase> = (0..1 + rng.below(3)).map(|_| rational(rng, 40)).collect();
    Ok(Check::exact(major_arc_check(&a, 1 + rng.below(60), 1 + rng.below(20))?.holds()))
}

fn p_stashing(rng: &mut SplitMix64) -> Result<Check> {
    let (m, k): (Vec<u32>, usize) = match rng.below(4) {
        0 => (vec![1], 0),
        1 => (vec![1, 2], 1),
        2 => (vec![1, 2], 0),
        _ => (vec![1, 2, 3], 1),
    };
    let n_side = 1 + rng.below(4);
    let n = m.len() - k;
    let base: Vec<u64> = m[..n].iter().map(|&j| n_side.pow(j)).collect();
    let mut fs = vec![grid(rng, &base)?];
    for i in 0..n {
        let mut d = base.clone();
        d[i] *= 2;
        fs.push(grid(rng, &d)?);
    }
    let bx = BoxSpec::new(base)?;
    let alphas: Vec<PhaseTable> = (0..k).map(|_| PhaseTable::from_fn(bx.clone(), |_| rational(rng, 16))).collect();
    let r = stashing_identity_check(&fs, &alphas, &m, n_side)?;
    Ok(Check::within((r.lhs - r.rhs).norm(), 1e-10))
}

fn p_phi_tilde(rng: &mut SplitMix64) -> Result<Check> {
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
    let v = phi_tilde(phi, &h0, &h1)?;
    Ok(Check::exact(v.is_rational() && v.is_zero()))
}

fn p_fejer(rng: &mut SplitMix64) -> Result<Check> {
    let h = 1 + rng.below(10_000);
    let den = (h * h) as i128;
    let total: i128 = (-(h as i64)..=h as i64)
        .map(|x| {
            let v = fejer(h, x);
            *v.numer() * (den / *v.denom())
        })
        .sum();
    Ok(Check::exact(total == den))
}

fn p_fourier(rng: &mut SplitMix64) -> Result<Check> {
    let (n, n_side) = if rng.bernoulli(0.5) { (1u32, 4 + rng.below(12)) } else { (2u32, 2 + rng.below(4)) };
    let nn = n_side.pow(n) as i64;
    let delta = rng.uniform(0.2, 0.7);
    let poly = if n == 2 && rng.bernoulli(0.5) {
        vec![TorusPhase::zero(), rational(rng, 6)]
    } else {
        Vec::new()
    };
    let f = match rng.below(4) {
        0 => LineFn::indicator(1, 2 * nn),
        1 => {
            let t = rational(rng, 6).to_f64();
            LineFn::from_fn(1, 2 * nn, |x| e(t * x as f64))
        }
        2 => LineFn::new(1, (0..2 * nn).map(|_| Complex64::new(rng.sign(), 0.0)).collect()),
        _ => LineFn::new(1, (0..2 * nn).map(|_| unit(rng)).collect()),
    };
    Ok(Check::from_report(&fourier_certificate_verify(&f, &poly, n, n_side, delta, 8)?))
}

fn p_box_n1(rng: &mut SplitMix64) -> Result<Check> {
    let len = 1u64 << rng.below(6);
    let vals: Vec<f64> = (0..len).map(|_| rng.below(9) as f64 / 8.0).collect();
    let f = GridFunction::from_real(BoxSpec::new(vec![len])?, &vals)?;
    let mean = vals.iter().sum::<f64>() / len as f64;
    Ok(Check::exact(box_count(&f)? == mean * mean))
}

fn p_box_inequality(rng: &mut SplitMix64) -> Result<Check> {
    let n = 2 + rng.below(2) as usize;
    let dims: Vec<u64> = (0..n).map(|_| 1 + rng.below(8)).collect();
    let f = unit_interval_grid(rng, &dims)?;
    let gap = f.mean().re.powi(n as i32 + 1) - box_count(&f)?;
    Ok(Check::within(gap.max(0.0), 1e-12))
}

fn p_cond_box(rng: &mut SplitMix64) -> Result<Check> {
    let dims = [2 + rng.below(12), 2 + rng.below(12)];
    let f = unit_interval_grid(rng, &dims)?;
    let (q, l) = ([1 + rng.below(3), 1 + rng.below(3)], [1 + rng.below(4), 1 + rng.below(4)]);
    let c = cond_box_count(&f, &q, &l)?;
    Ok(Check::within((c.expansion - c.value).abs(), 1e-12))
}

fn p_linearization(rng: &mut SplitMix64) -> Result<Check> {
    let n1 = 20 + rng.below(11);
    let n2 = 400 + rng.below(n1 * n1 - 399);
    let f = unit_interval_grid(rng, &[n1, n2])?;
    let big_m = 1 + rng.below(2);
    let spec = ConfigSpec::new(vec![1, 2], vec![n1, n2], 1, big_m)?;
    let r = linearization_gap(&f, &spec, 18 * big_m + rng.below(20), 0.9)?;
    Ok(if r.holds() { Check::Pass(r.gap / r.bound) } else { Check::Fail(r.gap - r.bound) })
}

fn increment_params() -> EnergyParams {
    EnergyParams {
        gamma: Some(0.25),
        range_divisor: Some(1.0),
        ..EnergyParams::default()
    }
}

fn p_energy_increment(rng: &mut SplitMix64) -> Result<Check> {
    let root = 16 + rng.below(17);
    let n1 = (root + rng.below(8)).min(32);
    let bx = BoxSpec::new(vec![n1, root * root])?;
    let dims = bx.dims().to_vec();
    let fs = match rng.below(4) {
        0 => vec![GridFunction::ones(bx)?; 3],
        1 => (0..3).map(|_| grid(rng, &dims)).collect::<Result<Vec<_>>>()?,
        2 => {
            let p = rng.uniform(0.3, 0.8);
            (0..3).map(|_| random_set(rng, &dims, p)?.to_grid()).collect::<Result<Vec<_>>>()?
        }
        _ => {
            let q = 2 + rng.below(4);
            let t = (1 + rng.below(q - 1)) as f64 / q as f64;
            let phase = GridFunction::from_fn(bx.clone(), |x| e(t * x[1] as f64))?;
            vec![phase.conj(), GridFunction::ones(bx)?, phase]
        }
    };
    let r = energy_increment(&fs, &[1, 2], 0.3, &increment_params())?;
    let monotone = r.trace.iter().all(|t| t.energy_after > t.energy_before);
    Ok(Check::exact(monotone && r.iterations <= r.cap && r.trace.len() == r.iterations))
}

fn p_pipeline_fallback(rng: &mut SplitMix64) -> Result<Check> {
    let p = rng.uniform(0.4, 0.95);
    let a = random_set(rng, &[16, 256], p)?;
    let energy = if rng.bernoulli(0.5) {
        EnergyParams::default()
    } else {
        EnergyParams {
            q_max: 2,
            tau: 0.9,
            ..increment_params()
        }
    };
    let params = PipelineParams { energy, divisor: None };
    let r = popular_difference_pipeline(&a, &[1, 2], 0.1, &params)?;
    if !r.certificate.fallback {
        return Ok(Check::Vacuous);
    }
    let best = best_popular_difference(&a, &[1, 2], 16)?;
    Ok(Check::exact((r.r, r.count) == (best.r, best.count)))
}

fn p_lift(rng: &mut SplitMix64) -> Result<Check> {
    let root = 2 + rng.below(7);
    let big_n = root * root;
    let p = rng.next_f64();
    let a = random_set(rng, &[big_n], p)?;
    let lift = lift_1d(&a, &[1, 2])?;
    let direct = (1..=root as i64)
        .flat_map(|x1| (1..=big_n as i64).map(move |x2| x1 + x2))
        .filter(|&s| a.contains(&[s]))
        .count() as u64;
    Ok(Check::exact(lift.holds() && lift.size == direct))
}
