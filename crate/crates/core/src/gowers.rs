//! Multiplicative and additive differences, Gowers norms over `Z`, the `U²`
//! inverse by spectral maximization, the Fejér kernel, and the van der Corput,
//! dual-difference-interchange and same-coordinate verifiers.
//!
//! `Δ_h f = f · conj f(· + h)` and `∂_h α = α − α(· + h)`, iterated over the
//! entries of `h`. Norms are unnormalized:
//! `‖f‖_{U^s}^{2^s} = Σ_{x ∈ Z, h ∈ Z^s} Δ_h f(x)`.

use crate::error::{HofaError, Result};
use crate::grid::{GridFunction, LineFn, PhaseLine};
use crate::numeric::{e, pairwise, tree_sum};
use crate::partition::{cond_energy, ApPartition};
use crate::report::VerifierReport;
use crate::torus::TorusPhase;
use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

/// Largest order accepted by [`gowers_norm`].
pub const MAX_ORDER: u32 = 4;
const NEGATIVE_GUARD: f64 = 1e-8;
const GOLDEN_PEAKS: usize = 4;
const GOLDEN_ITERS: usize = 80;

/// Shifts `h` with an optional axis for directional differences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiffSpec {
    pub shifts: Vec<i64>,
    pub axis: Option<usize>,
}

impl DiffSpec {
    pub fn new(shifts: Vec<i64>, axis: Option<usize>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(HofaError::invalid("a difference needs s >= 1 shifts"));
        }
        Ok(DiffSpec { shifts, axis })
    }

    /// Applies the difference to `f`; the axis must be valid for its box.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let axis = self.axis.unwrap_or(f.n() - 1);
        directional_diff(f, &self.shifts, axis)
    }
}

/// `Δ_h f`.
pub fn mult_diff(f: &LineFn, h: &[i64]) -> LineFn {
    let mut g = f.clone();
    for &hk in h {
        g = g.mul(&g.translate(hk).conj());
    }
    g
}

/// `∂_h α`, on the points where every shifted read lies in the stored range.
pub fn add_diff(alpha: &PhaseLine, h: &[i64]) -> PhaseLine {
    let mut a = alpha.clone();
    for &hk in h {
        if a.is_empty() {
            break;
        }
        let lo = a.lo().max(a.lo() - hk);
        let hi = a.hi().min(a.hi() - hk);
        let values = (lo..=hi).map(|x| a.get(x) - a.get(x + hk)).collect();
        a = PhaseLine::new(lo, values);
    }
    a
}

/// `Δ_{h|e_axis} f`: the difference applied to every line along `axis`.
pub fn directional_diff(f: &GridFunction, h: &[i64], axis: usize) -> Result<GridFunction> {
    if axis >= f.n() {
        return Err(HofaError::invalid(format!("axis {} out of range for dimension {}", axis + 1, f.n())));
    }
    let mut g = f.clone();
    for &hk in h {
        let prev = g.clone();
        g = GridFunction::from_fn(f.box_spec().clone(), |x| {
            let mut y = x.to_vec();
            y[axis] += hk;
            prev.get(x) * prev.get(&y).conj()
        })?;
    }
    Ok(g)
}

fn inner_rec(f: &LineFn, s: u32) -> Complex64 {
    let f = f.trimmed();
    if f.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    if s == 0 {
        return f.sum();
    }
    let span = f.len() as i64 - 1;
    let terms: Vec<Complex64> = (-span..=span).map(|h| inner_rec(&mult_diff(&f, &[h]), s - 1)).collect();
    pairwise(&terms)
}

/// `Σ_{x, h ∈ Z^s} Δ_h f(x)`; shifts beyond the support span contribute 0.
pub fn gowers_inner(f: &LineFn, s: u32) -> Result<Complex64> {
    if s == 0 || s > MAX_ORDER {
        return Err(HofaError::invalid(format!("Gowers order must be in 1..={MAX_ORDER}, got {s}")));
    }
    let f = f.trimmed();
    if f.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let span = f.len() as i64 - 1;
    let terms: Vec<Complex64> = (-span..=span)
        .into_par_iter()
        .map(|h| inner_rec(&mult_diff(&f, &[h]), s - 1))
        .collect();
    Ok(pairwise(&terms))
}

/// `‖f‖_{U^s}`.
pub fn gowers_norm(f: &LineFn, s: u32) -> Result<f64> {
    let inner = gowers_inner(f, s)?;
    let n = f.trimmed().len().max(1) as f64;
    if inner.re < -NEGATIVE_GUARD * n.powi(s as i32 + 1) {
        return Err(HofaError::Precondition(format!(
            "Gowers sum {} is negative beyond the numerical guard",
            inner.re
        )));
    }
    Ok(inner.re.max(0.0).powf(1.0 / (1u64 << s) as f64))
}

/// `f̂(k/M) = Σ_x f(x) e(−kx/M)` for `k ∈ [0, M)`, with `x` counted from `f.lo()`.
fn dft(f: &LineFn, size: usize, inverse: bool) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (i, v) in f.values().iter().enumerate() {
        buf[i % size] += v;
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(size)
    } else {
        planner.plan_fft_forward(size)
    };
    fft.process(&mut buf);
    buf
}

/// `‖f‖_{U²}^4 = ∫ |f̂|^4`, evaluated exactly by a quadrature on `M ≥ 4N − 3` points.
pub fn u2_via_spectrum(f: &LineFn) -> f64 {
    let f = f.trimmed();
    if f.is_empty() {
        return 0.0;
    }
    let size = (4 * f.len() - 3).next_power_of_two();
    let spec = dft(&f, size, false);
    tree_sum(spec.iter().map(|z| z.norm_sqr() * z.norm_sqr())) / size as f64
}

/// `|Σ_x f(x) e(αx)|`.
pub fn fourier_magnitude(f: &LineFn, alpha: f64) -> f64 {
    tree_sum(f.iter().map(|(x, v)| v * e(alpha * x as f64))).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct U2Inverse {
    pub alpha: TorusPhase,
    /// `|Σ_x f(x) e(α x)|`.
    pub magnitude: f64,
    /// `‖f‖_{U²}^4`.
    pub u2_fourth: f64,
    /// `Σ |f|²`.
    pub l2_sq: f64,
    /// Support length.
    pub n: u64,
}

impl U2Inverse {
    /// `magnitude² · Σ|f|² ≥ ‖f‖_{U²}^4 − 1e−6 · N³`.
    pub fn guarantee_holds(&self) -> bool {
        self.magnitude * self.magnitude * self.l2_sq >= self.u2_fourth - 1e-6 * (self.n as f64).powi(3)
    }
}

fn golden_max(f: &LineFn, lo: f64, hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (fourier_magnitude(f, c), fourier_magnitude(f, d));
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = fourier_magnitude(f, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = fourier_magnitude(f, d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `|Σ_x f(x) e(αx)|` over an `8N`-point torus grid, then refines
/// the largest local maxima by golden-section search.
pub fn u2_inverse(f: &LineFn) -> U2Inverse {
    let f = f.trimmed();
    let n = f.len().max(1);
    let grid = 8 * n;
    let spec = dft(&f, grid, true);
    let mags: Vec<f64> = spec.iter().map(|z| z.norm()).collect();
    let mut best_k = 0;
    for (k, &v) in mags.iter().enumerate() {
        if v > mags[best_k] {
            best_k = k;
        }
    }
    let mut best = (best_k as f64 / grid as f64, fourier_magnitude(&f, best_k as f64 / grid as f64));
    let mut peaks: Vec<usize> = (0..grid)
        .filter(|&k| {
            let l = mags[(k + grid - 1) % grid];
            let r = mags[(k + 1) % grid];
            mags[k] >= l && mags[k] >= r
        })
        .collect();
    peaks.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    let step = 1.0 / grid as f64;
    for &k in peaks.iter().take(GOLDEN_PEAKS) {
        let centre = k as f64 * step;
        let (a, v) = golden_max(&f, centre - step, centre + step);
        if v > best.1 {
            best = (a, v);
        }
    }
    U2Inverse {
        alpha: TorusPhase::real(best.0),
        magnitude: best.1,
        u2_fourth: u2_via_spectrum(&f),
        l2_sq: f.l2_sq(),
        n: f.len() as u64,
    }
}

/// `μ_H(x) = (H − min(H, |x|)) / H²`.
pub fn fejer(h: u64, x: i64) -> Ratio<i128> {
    assert!(h >= 1, "Fejér kernel needs H >= 1");
    let h = h as i128;
    Ratio::new(h - h.min(x.unsigned_abs() as i128), h * h)
}

fn fejer_f64(h: u64, x: i64) -> f64 {
    let v = fejer(h, x);
    *v.numer() as f64 / *v.denom() as f64
}

/// One member of a weighted family `(σ(α), f_α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weighted<T> {
    pub weight: f64,
    pub f: T,
}

fn mean_on(f: &LineFn, lo: i64, len: u64) -> Complex64 {
    tree_sum((lo..lo + len as i64).map(|y| f.get(y))) / len as f64
}

/// Premise `Σ σ |E_{y∈I} f_α(y)| ≥ δ`, conclusion
/// `Re Σ_{α,h} σ μ_H(h) E_{y∈I} Δ_h f_α(y) ≥ δ²/4`, for `I = [lo, lo + M)`.
pub fn vdc_verify(family: &[Weighted<LineFn>], lo: i64, m: u64, delta: f64, h: u64) -> Result<VerifierReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HofaError::invalid("δ must lie in (0, 1)"));
    }
    if family.is_empty() || family.iter().any(|w| w.weight < 0.0) {
        return Err(HofaError::invalid("family must be nonempty with nonnegative weights"));
    }
    if (m as f64) < 10.0 / (delta * delta) {
        return Err(HofaError::precondition(format!("M = {m} is below 10/δ²")));
    }
    if h == 0 || h as f64 > delta * delta * m as f64 / 4.0 {
        return Err(HofaError::precondition(format!("H = {h} outside [1, δ²M/4]")));
    }
    if family.iter().any(|w| w.f.max_abs() > 1.0 + 1e-12) {
        return Err(HofaError::precondition("family members must be 1-bounded"));
    }
    let premise = tree_sum(family.iter().map(|w| w.weight * mean_on(&w.f, lo, m).norm()));
    let conclusion = tree_sum(family.iter().map(|w| {
        let hh = h as i64;
        let per_h: Vec<f64> = (-hh + 1..hh)
            .map(|s| fejer_f64(h, s) * mean_on(&mult_diff(&w.f, &[s]), lo, m).re)
            .collect();
        w.weight * pairwise(&per_h)
    }));
    Ok(VerifierReport::evaluate(
        "vdc",
        premise,
        delta,
        conclusion,
        delta * delta / 4.0,
        false,
        delta,
    ))
}

/// Thresholds for the two-dimensional verifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifierConfig {
    /// Smallest admissible box side.
    pub floor: u64,
    /// Constant in the same-coordinate conclusion `κ δ³ N_2^{s+2}`.
    pub kappa: f64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            floor: 4,
            kappa: 1.0 / 64.0,
        }
    }
}

/// All `h ∈ [−R, R]^s` in lexicographic order.
fn shift_cube(r: i64, s: u32) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..s {
        out = out
            .into_iter()
            .flat_map(|h| {
                (-r..=r).map(move |v| {
                    let mut g = h.clone();
                    g.push(v);
                    g
                })
            })
            .collect();
    }
    out
}

/// `Π_{ω ∈ {0,1}^s} C^{|ω|} f(x, y + ω·h)`.
fn diff_e2(f: &GridFunction, x: i64, y: i64, h: &[i64]) -> Complex64 {
    let s = h.len();
    let mut prod = Complex64::new(1.0, 0.0);
    for omega in 0u32..(1 << s) {
        let shift: i64 = (0..s).filter(|&k| omega >> k & 1 == 1).map(|k| h[k]).sum();
        let v = f.get(&[x, y + shift]);
        prod *= if omega.count_ones() % 2 == 0 { v } else { v.conj() };
        if prod == Complex64::new(0.0, 0.0) {
            break;
        }
    }
    prod
}

fn check_2d(f: &GridFunction) -> Result<(u64, u64)> {
    if f.n() != 2 {
        return Err(HofaError::invalid("verifier needs functions on Z^2"));
    }
    if f.max_abs() > 1.0 + 1e-12 {
        return Err(HofaError::precondition("functions must be 1-bounded"));
    }
    Ok((f.box_spec().dim(0), f.box_spec().dim(1)))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HofaError::invalid("δ must lie in (0, 1)"));
    }
    Ok(())
}

/// Premise `E_{y∈[N_2], h∈[±N_2]^s} ‖E((Δ_{h|e_2} F)_y | B_{(qL,q)})‖_2² ≥ δN_1`
/// with `F` the family average; conclusion
/// `E_{y,h} |E_{x∈[N_1], α} Δ_{h|e_2} f_α(x, y)| > 0`.
pub fn interchange_verify_2d(
    family: &[GridFunction],
    q: u64,
    l: u64,
    s: u32,
    delta: f64,
    cfg: &VerifierConfig,
) -> Result<VerifierReport> {
    check_delta(delta)?;
    if family.is_empty() || s == 0 {
        return Err(HofaError::invalid("need a nonempty family and s >= 1"));
    }
    let (n1, n2) = check_2d(&family[0])?;
    for f in family {
        if check_2d(f)? != (n1, n2) {
            return Err(HofaError::invalid("family members must share a box"));
        }
    }
    if n1 < cfg.floor || n2 < cfg.floor {
        return Err(HofaError::precondition(format!("box ({n1}, {n2}) below the floor {}", cfg.floor)));
    }
    if (l as f64) < delta * n1 as f64 {
        return Err(HofaError::precondition(format!("L = {l} is below δN_1")));
    }
    let p = ApPartition::new(q, l)?;
    let k = family.len() as f64;
    let big_f = GridFunction::from_fn(family[0].box_spec().clone(), |x| {
        tree_sum(family.iter().map(|f| f.get(x))) / k
    })?;
    let hs = shift_cube(n2 as i64, s);
    let pairs: Vec<(i64, &Vec<i64>)> = (1..=n2 as i64).flat_map(|y| hs.iter().map(move |h| (y, h))).collect();
    let terms: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(y, h)| {
            let line = LineFn::from_fn(1, n1 as i64, |x| diff_e2(&big_f, x, y, h));
            let energy = cond_energy(&line, &p);
            let avg = tree_sum(
                family
                    .iter()
                    .flat_map(|f| (1..=n1 as i64).map(move |x| diff_e2(f, x, y, h))),
            ) / (k * n1 as f64);
            (energy, avg.norm())
        })
        .collect();
    let count = terms.len() as f64;
    let premise = pairwise(&terms.iter().map(|t| t.0).collect::<Vec<_>>()) / count;
    let conclusion = pairwise(&terms.iter().map(|t| t.1).collect::<Vec<_>>()) / count;
    Ok(VerifierReport::evaluate(
        "interchange",
        premise,
        delta * n1 as f64,
        conclusion,
        0.0,
        true,
        delta,
    ))
}

/// Premise `E_{x∈[N_1], h∈[±N_2]^s} ‖E((Δ_{h|e_2} f)_x | B_{(qL,q)})‖_2² ≥ δN_2`;
/// conclusion `E_x ‖f_x‖_{U^{s+1}}^{2^{s+1}} ≥ κ δ³ N_2^{s+2}`.
pub fn same_coord_verify(
    f: &GridFunction,
    q: u64,
    l: u64,
    s: u32,
    delta: f64,
    cfg: &VerifierConfig,
) -> Result<VerifierReport> {
    check_delta(delta)?;
    if s == 0 || s + 1 > MAX_ORDER {
        return Err(HofaError::invalid(format!("s must lie in 1..={}", MAX_ORDER - 1)));
    }
    let (n1, n2) = check_2d(f)?;
    if (l as f64) < delta * n2 as f64 {
        return Err(HofaError::precondition(format!("L = {l} is below δN_2")));
    }
    if (n2 as f64) < delta.powi(-3) {
        return Err(HofaError::precondition(format!("N_2 = {n2} is below δ^-3")));
    }
    let p = ApPartition::new(q, l)?;
    let hs = shift_cube(n2 as i64, s);
    let rows: Vec<(f64, f64)> = (1..=n1 as i64)
        .into_par_iter()
        .map(|x| {
            let line = f.slice(1, &[x, 1]);
            let energy = tree_sum(hs.iter().map(|h| cond_energy(&mult_diff(&line, h), &p))) / hs.len() as f64;
            let norm = gowers_inner(&line, s + 1).map(|v| v.re).unwrap_or(0.0);
            (energy, norm)
        })
        .collect();
    let premise = pairwise(&rows.iter().map(|r| r.0).collect::<Vec<_>>()) / n1 as f64;
    let conclusion = pairwise(&rows.iter().map(|r| r.1).collect::<Vec<_>>()) / n1 as f64;
    let threshold = cfg.kappa * delta.powi(3) * (n2 as f64).powi(s as i32 + 2);
    Ok(VerifierReport::evaluate(
        "same_coordinate",
        premise,
        delta * n2 as f64,
        conclusion,
        threshold,
        false,
        delta,
    ))
}
