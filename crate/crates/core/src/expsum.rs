//! Weyl sums, rational approximation, dual functions and the stashing
//! identity, the alternating sum `φ̃`, phase constancy by search, and the
//! Fourier certificate for a single polynomial shift.
//!
//! The Fourier transform is `f̂(ξ) = Σ_x f(x) e(−ξx)`.

use crate::config::check_exponents;
use crate::counting::{lambda_phased, shift_of};
use crate::error::{HofaError, Result};
use crate::grid::{BoxSpec, GridFunction, LineFn, PhaseLine, PhaseTable};
use crate::numeric::{pairwise, tree_sum};
use crate::partition::{cond_energy, ApPartition};
use crate::report::VerifierReport;
use crate::torus::TorusPhase;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::TAU;

/// Default number of snapped tuples tried by [`phase_constancy_search`].
pub const DEFAULT_TOP_K: usize = 16;
/// Largest polynomial degree accepted by [`fourier_certificate`].
pub const MAX_DEGREE: usize = 6;

/// `Σ_i α_i r^i`, with `alphas[0]` the coefficient of `r^1`.
fn poly_phase(alphas: &[TorusPhase], r: u64) -> TorusPhase {
    let mut total = TorusPhase::zero();
    for (i, a) in alphas.iter().enumerate() {
        total = total + a.mul_power(r, i as u32 + 1);
    }
    total
}

/// `E_{r∈[N]} e(Σ_i α_i r^i)` with `alphas = (α_1, …, α_s)`.
pub fn weyl_sum(alphas: &[TorusPhase], n: u64) -> Result<Complex64> {
    if alphas.is_empty() || n == 0 {
        return Err(HofaError::invalid("Weyl sum needs s >= 1 and N >= 1"));
    }
    Ok(tree_sum((1..=n).map(|r| poly_phase(alphas, r).e())) / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalApprox {
    pub q: u64,
    /// `‖q α_i‖ · N^i` for each `i`.
    pub residuals: Vec<f64>,
}

impl RationalApprox {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn residuals_for(alphas: &[TorusPhase], n: u64, q: u64) -> Vec<f64> {
    alphas
        .iter()
        .enumerate()
        .map(|(i, a)| a.mul_int(q as i128).dist() * (n as f64).powi(i as i32 + 1))
        .collect()
}

/// The smallest `q ≤ Q_max` minimizing `max_i ‖q α_i‖ N^i`.
pub fn rational_approx_search(alphas: &[TorusPhase], n: u64, q_max: u64) -> Result<RationalApprox> {
    if q_max == 0 {
        return Err(HofaError::invalid("Q_max must be positive"));
    }
    let mut best = RationalApprox {
        q: 1,
        residuals: residuals_for(alphas, n, 1),
    };
    for q in 2..=q_max {
        let res = residuals_for(alphas, n, q);
        let m = res.iter().copied().fold(0.0, f64::max);
        if m < best.max_residual() {
            best = RationalApprox { q, residuals: res };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorArcCheck {
    pub approx: RationalApprox,
    /// `max_i ‖q α_i‖ N^i`.
    pub rho: f64,
    pub weyl: f64,
    /// `|weyl_sum|` at `a_i / q`, the nearest fractions with denominator `q`.
    pub snapped_weyl: f64,
    /// `snapped_weyl − 2π ρ s`.
    pub lower_bound: f64,
}

impl MajorArcCheck {
    pub fn holds(&self) -> bool {
        self.weyl >= self.lower_bound - 1e-12
    }
}

/// Compares `|weyl_sum|` with its value at the rational point found by
/// [`rational_approx_search`], within the Lipschitz bound `2πρs`.
pub fn major_arc_check(alphas: &[TorusPhase], n: u64, q_max: u64) -> Result<MajorArcCheck> {
    let approx = rational_approx_search(alphas, n, q_max)?;
    let snapped: Vec<TorusPhase> = alphas
        .iter()
        .map(|a| a.snap(approx.q))
        .collect();
    let rho = approx.max_residual();
    let snapped_weyl = weyl_sum(&snapped, n)?.norm();
    Ok(MajorArcCheck {
        weyl: weyl_sum(alphas, n)?.norm(),
        snapped_weyl,
        lower_bound: snapped_weyl - TAU * rho * alphas.len() as f64,
        rho,
        approx,
    })
}

/// `F^{(i)}(x) = E_{r∈[N]} f_0(x − r^{m_i}e_i) Π_{j≠i} f_j(x + r^{m_j}e_j − r^{m_i}e_i)
/// · e(Σ_j α_j(x − r^{m_i}e_i) r^{m_{n+j}})`, for 1-based `i`.
///
/// The result lives on the box of `f_0` with side `i` extended by `N^{m_i}`.
pub fn dual_function(
    fs: &[GridFunction],
    alphas: &[PhaseTable],
    m: &[u32],
    n_side: u64,
    i: usize,
) -> Result<GridFunction> {
    check_exponents(m)?;
    if alphas.len() >= m.len() {
        return Err(HofaError::invalid("m must be longer than the phase list"));
    }
    let n = m.len() - alphas.len();
    if fs.len() != n + 1 || fs.iter().any(|f| f.n() != n) {
        return Err(HofaError::invalid(format!("expected {} functions on Z^{n}", n + 1)));
    }
    if i == 0 || i > n {
        return Err(HofaError::invalid(format!("dual index {i} outside 1..={n}")));
    }
    if n_side == 0 {
        return Err(HofaError::invalid("N must be positive"));
    }
    let axis = i - 1;
    let (shift_m, phase_m) = m.split_at(n);
    let shifts: Vec<Vec<i64>> = (1..=n_side)
        .map(|r| {
            shift_m
                .iter()
                .map(|&k| shift_of(r, 1, k).map(|s| s as i64).ok_or_else(|| HofaError::Overflow("shift".into())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut dims = fs[0].box_spec().dims().to_vec();
    dims[axis] += shift_of(n_side, 1, shift_m[axis]).ok_or_else(|| HofaError::Overflow("box".into()))?;
    let out = BoxSpec::new(dims)?;
    let points: Vec<Vec<i64>> = out.points().collect();
    let values: Vec<Complex64> = points
        .par_iter()
        .map(|x| {
            let mut terms = Vec::with_capacity(n_side as usize);
            for (ri, sh) in shifts.iter().enumerate() {
                let r = ri as u64 + 1;
                let mut base = x.clone();
                base[axis] -= sh[axis];
                let mut prod = fs[0].get(&base);
                for j in (0..n).filter(|&j| j != axis) {
                    if prod == Complex64::new(0.0, 0.0) {
                        break;
                    }
                    let mut y = base.clone();
                    y[j] += sh[j];
                    prod *= fs[j + 1].get(&y);
                }
                if prod == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut phase = TorusPhase::zero();
                for (a, &k) in alphas.iter().zip(phase_m) {
                    phase = phase + a.get(&base).mul_power(r, k);
                }
                terms.push(prod * phase.e());
            }
            pairwise(&terms) / n_side as f64
        })
        .collect();
    GridFunction::new(out, values, false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StashingReport {
    /// `Λ^{α}_{N;m}(f_0, …, f_n)`.
    pub lhs: Complex64,
    /// `N^{−(m_1+…+m_n)} Σ_x f_n(x) F^{(n)}(x)`.
    pub rhs: Complex64,
}

impl StashingReport {
    pub fn holds(&self, tol: f64) -> bool {
        (self.lhs - self.rhs).norm() <= tol
    }
}

/// Evaluates both sides of `Λ^{α}_{N;m}(f) = N^{−Σm_j} Σ_x f_n(x) F^{(n)}(x)`.
///
/// `f_0` must be supported in `Π[N^{m_j}]` so that both sides count the same `x`.
pub fn stashing_identity_check(
    fs: &[GridFunction],
    alphas: &[PhaseTable],
    m: &[u32],
    n_side: u64,
) -> Result<StashingReport> {
    let n = m.len().saturating_sub(alphas.len());
    let lhs = lambda_phased(fs, alphas, m, n_side)?;
    for (j, &k) in m[..n].iter().enumerate() {
        if fs[0].box_spec().dim(j) > shift_of(n_side, 1, k).unwrap_or(u64::MAX) {
            return Err(HofaError::precondition("f_0 must be supported in the averaging box"));
        }
    }
    let dual = dual_function(fs, alphas, m, n_side, n)?;
    let sum = tree_sum(dual.box_spec().points().map(|x| fs[n].get(&x) * dual.get(&x)));
    let vol: f64 = m[..n].iter().map(|&k| (n_side as f64).powi(k as i32)).product();
    Ok(StashingReport { lhs, rhs: sum / vol })
}

/// `φ̃(h^0, h^1) = Σ_{ω∈{0,1}^d} (−1)^{|ω|} φ(h_1^{ω_1}, …, h_d^{ω_d})`.
pub fn phi_tilde<F>(phi: F, h0: &[i64], h1: &[i64]) -> Result<TorusPhase>
where
    F: Fn(&[i64]) -> TorusPhase,
{
    if h0.len() != h1.len() || h0.is_empty() {
        return Err(HofaError::invalid("φ̃ needs two tuples of the same positive length"));
    }
    let d = h0.len();
    if d > 20 {
        return Err(HofaError::invalid("tuple length above 20"));
    }
    let mut total = TorusPhase::zero();
    let mut h = vec![0i64; d];
    for omega in 0u32..(1 << d) {
        for k in 0..d {
            h[k] = if omega >> k & 1 == 0 { h0[k] } else { h1[k] };
        }
        let v = phi(&h);
        total = if omega.count_ones() % 2 == 0 { total + v } else { total - v };
    }
    Ok(total)
}

/// `E_{x∈[N^{m_0}]} |E_{r∈[N]} f(x + r^{m_0}) e(Σ_j β_j(x) r^{m_j})|`.
fn constancy_average<B>(f: &LineFn, m: &[u32], n_side: u64, beta: B) -> f64
where
    B: Fn(i64) -> Vec<TorusPhase> + Sync,
{
    let span = shift_of(n_side, 1, m[0]).unwrap() as i64;
    let rows: Vec<f64> = (1..=span)
        .into_par_iter()
        .map(|x| {
            let b = beta(x);
            let s = tree_sum((1..=n_side).map(|r| {
                let mut phase = TorusPhase::zero();
                for (bj, &k) in b.iter().zip(&m[1..]) {
                    phase = phase + bj.mul_power(r, k);
                }
                f.get(x + shift_of(r, 1, m[0]).unwrap() as i64) * phase.e()
            }));
            (s / n_side as f64).norm()
        })
        .collect();
    pairwise(&rows) / span as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseConstancy {
    pub premise: f64,
    /// Grid sizes `T_j`.
    pub grids: Vec<u64>,
    /// `(β, frequency, achieved average)` for each tried tuple, most frequent first.
    pub candidates: Vec<(Vec<TorusPhase>, u64, f64)>,
    pub best: Option<(Vec<TorusPhase>, f64)>,
    /// Whether the best achieved average reached the caller's threshold.
    pub above_threshold: bool,
}

/// `T_j = ⌈2 δ^{−1} k N^{m_j}⌉`.
pub fn default_grids(m: &[u32], n_side: u64, delta: f64) -> Vec<u64> {
    let k = (m.len() - 1) as f64;
    m[1..]
        .iter()
        .map(|&mj| (2.0 / delta * k * (n_side as f64).powi(mj as i32)).ceil() as u64)
        .collect()
}

/// Index `t` of the grid point `t/T` nearest to `θ`.
fn grid_index(theta: TorusPhase, grid: u64) -> i128 {
    let r = theta.snap(grid).as_ratio().unwrap();
    *r.numer() * (grid as i128 / *r.denom())
}

/// Snaps each `α_j` to `{t/T_j}`, ranks the snapped tuples by frequency over
/// `x ∈ [N^{m_0}]`, and evaluates the `x`-independent average at the top `K`
/// of them. Each candidate uses the unsnapped values at the first `x` of its
/// class.
pub fn phase_constancy_search(
    f: &LineFn,
    alphas: &[PhaseLine],
    m: &[u32],
    n_side: u64,
    delta: f64,
    grids: Option<Vec<u64>>,
    top_k: usize,
    threshold: f64,
) -> Result<PhaseConstancy> {
    check_exponents(m)?;
    if alphas.len() + 1 != m.len() || alphas.is_empty() {
        return Err(HofaError::invalid("need k >= 1 phases and m = (m_0, …, m_k)"));
    }
    if n_side == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(HofaError::invalid("need N >= 1 and δ in (0, 1)"));
    }
    let span = shift_of(n_side, 1, m[0]).ok_or_else(|| HofaError::Overflow("N^{m_0}".into()))? as i64;
    let grids = grids.unwrap_or_else(|| default_grids(m, n_side, delta));
    if grids.len() != alphas.len() || grids.contains(&0) {
        return Err(HofaError::invalid("one positive grid size per phase"));
    }
    let premise = constancy_average(f, m, n_side, |x| alphas.iter().map(|a| a.get(x)).collect());

    let mut classes: HashMap<Vec<i128>, (u64, i64)> = HashMap::new();
    for x in 1..=span {
        let key: Vec<i128> = alphas
            .iter()
            .zip(&grids)
            .map(|(a, &t)| grid_index(a.get(x), t))
            .collect();
        let entry = classes.entry(key).or_insert((0, x));
        entry.0 += 1;
    }
    let mut ranked: Vec<(u64, i64)> = classes.into_values().collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let candidates: Vec<(Vec<TorusPhase>, u64, f64)> = ranked
        .iter()
        .take(top_k.max(1))
        .map(|&(count, x)| {
            let beta: Vec<TorusPhase> = alphas.iter().map(|a| a.get(x)).collect();
            let avg = constancy_average(f, m, n_side, |_| beta.clone());
            (beta, count, avg)
        })
        .collect();
    let mut best: Option<(Vec<TorusPhase>, f64)> = None;
    for (beta, _, avg) in &candidates {
        if best.as_ref().is_none_or(|b| *avg > b.1) {
            best = Some((beta.clone(), *avg));
        }
    }
    let above_threshold = best.as_ref().is_some_and(|b| b.1 >= threshold);
    Ok(PhaseConstancy {
        premise,
        grids,
        candidates,
        best,
        above_threshold,
    })
}

/// Output of [`fourier_certificate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierCertificate {
    /// `E_{x∈[N^n]} |E_{r∈[N]} f(x + r^n) e(P(r))|`.
    pub premise: f64,
    pub xi0: TorusPhase,
    /// `|f̂(ξ_0)|`.
    pub xi0_magnitude: f64,
    pub q: u64,
    /// `‖q ξ_0‖ N^n`.
    pub residual: f64,
    /// Number of grid points in the major-arc set.
    pub major_arc_points: u64,
    pub grid: u64,
    #[serde(skip)]
    f: LineFn,
}

impl FourierCertificate {
    /// `‖E(f | B_{(qL,q)})‖_2²`.
    pub fn check(&self, l: u64) -> Result<f64> {
        Ok(cond_energy(&self.f, &ApPartition::new(self.q, l)?))
    }
}

fn poly_values(poly: &[TorusPhase], n_side: u64) -> Vec<TorusPhase> {
    (1..=n_side)
        .map(|r| {
            let mut t = TorusPhase::zero();
            for (j, c) in poly.iter().enumerate().skip(1) {
                t = t + c.mul_power(r, j as u32);
            }
            t
        })
        .collect()
}

/// `E_{x∈[N^n]} |E_{r∈[N]} f(x + r^n) e(P(r))|` from the values `P(1), …, P(N)`.
fn phased_premise(f: &LineFn, p_vals: &[TorusPhase], n: u32, nn: u64) -> f64 {
    let n_side = p_vals.len() as u64;
    let rows: Vec<f64> = (1..=nn as i64)
        .into_par_iter()
        .map(|x| {
            let s = tree_sum(
                (1..=n_side).map(|r| f.get(x + shift_of(r, 1, n).unwrap() as i64) * p_vals[r as usize - 1].e()),
            );
            (s / n_side as f64).norm()
        })
        .collect();
    pairwise(&rows) / nn as f64
}

/// Major-arc search for `f` on `[2N^n]` against `P(r) = Σ_j c_j r^j`, where
/// `poly[j]` is `c_j` and `c_n` must vanish.
pub fn fourier_certificate(
    f: &LineFn,
    poly: &[TorusPhase],
    n: u32,
    n_side: u64,
    delta: f64,
    q_max: u64,
) -> Result<FourierCertificate> {
    if n == 0 || n_side == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(HofaError::invalid("need n >= 1, N >= 1 and δ in (0, 1)"));
    }
    if poly.len() > MAX_DEGREE + 1 {
        return Err(HofaError::invalid(format!("degree of P above {MAX_DEGREE}")));
    }
    if poly.get(n as usize).is_some_and(|c| !c.is_zero()) {
        return Err(HofaError::invalid(format!("P must contain no term of degree {n}")));
    }
    let nn = shift_of(n_side, 1, n).ok_or_else(|| HofaError::Overflow("N^n".into()))?;
    let p_vals = poly_values(poly, n_side);
    let premise = phased_premise(f, &p_vals, n, nn);

    let grid = 8 * nn;
    let weyl_at = |k: u64| {
        let xi = TorusPhase::rational(k as i128, grid as i128).unwrap();
        let s = tree_sum((1..=n_side).map(|r| (p_vals[r as usize - 1] + xi.mul_power(r, n)).e()));
        (s / n_side as f64).norm()
    };
    let weyl: Vec<f64> = (0..grid).into_par_iter().map(weyl_at).collect();
    let major: Vec<u64> = (0..grid).filter(|&k| weyl[k as usize] >= delta / 4.0).collect();
    if major.is_empty() {
        let best = weyl.iter().copied().fold(0.0, f64::max);
        return Err(HofaError::precondition(format!(
            "F_N empty on grid; largest Weyl average {best:.6} < δ/4"
        )));
    }

    let mut buf = vec![Complex64::new(0.0, 0.0); grid as usize];
    for (x, v) in f.iter() {
        buf[(x.rem_euclid(grid as i64)) as usize] += v;
    }
    FftPlanner::new().plan_fft_forward(grid as usize).process(&mut buf);
    let mut k0 = major[0];
    for &k in &major {
        if buf[k as usize].norm() > buf[k0 as usize].norm() {
            k0 = k;
        }
    }
    let xi0 = TorusPhase::rational(k0 as i128, grid as i128)?;
    let approx = rational_approx_search(&[xi0], nn, q_max)?;
    Ok(FourierCertificate {
        premise,
        xi0,
        xi0_magnitude: buf[k0 as usize].norm(),
        q: approx.q,
        residual: approx.residuals[0],
        major_arc_points: major.len() as u64,
        grid,
        f: f.clone(),
    })
}

/// Premise `≥ δ` implies a certificate with `‖E(f|B_{(qL,q)})‖_2² > 0` at
/// `L = max(1, ⌊δ² N^n⌋)`; the conclusion is that energy divided by `N^n`,
/// and 0 when the major-arc set is empty.
pub fn fourier_certificate_verify(
    f: &LineFn,
    poly: &[TorusPhase],
    n: u32,
    n_side: u64,
    delta: f64,
    q_max: u64,
) -> Result<VerifierReport> {
    let nn = shift_of(n_side, 1, n).ok_or_else(|| HofaError::Overflow("N^n".into()))? as f64;
    let l = ((delta * delta * nn).floor() as u64).max(1);
    match fourier_certificate(f, poly, n, n_side, delta, q_max) {
        Ok(cert) => {
            let conclusion = cert.check(l)? / nn;
            Ok(VerifierReport::evaluate("fourier", cert.premise, delta, conclusion, 0.0, true, delta))
        }
        Err(HofaError::Precondition(_)) => {
            let premise = phased_premise(f, &poly_values(poly, n_side), n, nn as u64);
            Ok(VerifierReport::evaluate("fourier", premise, delta, 0.0, 0.0, true, delta))
        }
        Err(e) => Err(e),
    }
}
