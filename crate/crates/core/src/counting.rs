//! Counting operators for the corner pattern
//! `x, x + P(r)^{m_1} e_1, …, x + P(r)^{m_n} e_n` and the popular-difference
//! search.
//!
//! Every operator averages `x` over its declared box and `r` over `[M]`;
//! functions read 0 outside their own boxes. Per-`r` sums run in parallel and
//! are combined in `r` order by a pairwise reduction, so results do not depend
//! on the thread count.

use crate::config::{check_exponents, ConfigSpec};
use crate::error::{HofaError, Result};
use crate::grid::{BoxSpec, GridFunction, PhaseTable, INDEX_LIMIT};
use crate::numeric::{pairwise, TreeSum};
use crate::set::SetIndicator;
use crate::torus::TorusPhase;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// `(base·r)^k`, or `None` past the index cap.
pub fn shift_of(base: u64, r: u64, k: u32) -> Option<u64> {
    (base as u128 * r as u128)
        .checked_pow(k)
        .filter(|&s| s <= INDEX_LIMIT as u128)
        .map(|s| s as u64)
}

fn power_box(n_side: u64, m: &[u32]) -> Result<BoxSpec> {
    let dims = m
        .iter()
        .map(|&k| {
            shift_of(n_side, 1, k).ok_or_else(|| HofaError::Overflow(format!("N^{k} with N = {n_side}")))
        })
        .collect::<Result<Vec<_>>>()?;
    BoxSpec::new(dims)
}

fn check_functions(fs: &[GridFunction], n: usize) -> Result<()> {
    if n == 0 {
        return Err(HofaError::invalid("need n >= 1"));
    }
    if fs.len() != n + 1 {
        return Err(HofaError::invalid(format!("expected {} functions f_0..f_n, got {}", n + 1, fs.len())));
    }
    if let Some(i) = fs.iter().position(|f| f.n() != n) {
        return Err(HofaError::invalid(format!("f_{i} has dimension {}, expected {n}", fs[i].n())));
    }
    Ok(())
}

/// `Σ_{x ∈ avg} f_0(x) Π_j f_j(x + shift_j e_j) · phase(x)` for one `r`.
fn sum_for_shift<P>(fs: &[GridFunction], avg: &BoxSpec, shifts: &[Option<u64>], phase: &P) -> Complex64
where
    P: Fn(&[i64]) -> Complex64,
{
    if shifts.iter().any(|s| s.is_none()) {
        return Complex64::new(0.0, 0.0);
    }
    let shifts: Vec<i64> = shifts.iter().map(|s| s.unwrap() as i64).collect();
    let n = avg.n();
    let dims = avg.dims();
    let mut acc = TreeSum::new();
    let mut x = vec![1i64; n];
    for _ in 0..avg.len() {
        let mut prod = fs[0].get(&x);
        for j in 0..n {
            if prod == Complex64::new(0.0, 0.0) {
                break;
            }
            x[j] += shifts[j];
            prod *= fs[j + 1].get(&x);
            x[j] -= shifts[j];
        }
        if prod != Complex64::new(0.0, 0.0) {
            acc.push(prod * phase(&x));
        }
        for i in (0..n).rev() {
            if (x[i] as u64) < dims[i] {
                x[i] += 1;
                break;
            }
            x[i] = 1;
        }
    }
    acc.total()
}

fn average_over_r<S, P>(fs: &[GridFunction], avg: &BoxSpec, big_m: u64, shifts: S, phase: P) -> Complex64
where
    S: Fn(u64) -> Vec<Option<u64>> + Sync,
    P: Fn(&[i64], u64) -> Complex64 + Sync,
{
    let per_r: Vec<Complex64> = (1..=big_m)
        .into_par_iter()
        .map(|r| sum_for_shift(fs, avg, &shifts(r), &|x: &[i64]| phase(x, r)))
        .collect();
    pairwise(&per_r) / (avg.len() as f64 * big_m as f64)
}

fn no_phase(_: &[i64], _: u64) -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// `Λ_{N;m}(f_0, …, f_n) = E_{x ∈ Π[N^{m_i}], r ∈ [N]} f_0(x) Π_j f_j(x + r^{m_j} e_j)`.
pub fn lambda_simple(fs: &[GridFunction], m: &[u32], n_side: u64) -> Result<Complex64> {
    check_exponents(m)?;
    check_functions(fs, m.len())?;
    if n_side == 0 {
        return Err(HofaError::invalid("N must be positive"));
    }
    let avg = power_box(n_side, m)?;
    Ok(average_over_r(
        fs,
        &avg,
        n_side,
        |r| m.iter().map(|&k| shift_of(r, 1, k)).collect(),
        no_phase,
    ))
}

/// `Λ_{q,M,N;m}(f_0, …, f_n) = E_{x ∈ Π[N_i], r ∈ [M]} f_0(x) Π_j f_j(x + (qr)^{m_j} e_j)`.
pub fn lambda_general(fs: &[GridFunction], spec: &ConfigSpec) -> Result<Complex64> {
    spec.check_structure()?;
    check_functions(fs, spec.n())?;
    Ok(average_over_r(
        fs,
        &spec.bx,
        spec.big_m,
        |r| spec.m.iter().map(|&k| shift_of(spec.q, r, k)).collect(),
        no_phase,
    ))
}

/// `Λ^{α_1…α_k}_{N;m}`: the simple operator with the extra factor
/// `e(Σ_j α_j(x) r^{m_{n+j}})`, where `m` has length `n + k`.
pub fn lambda_phased(fs: &[GridFunction], alphas: &[PhaseTable], m: &[u32], n_side: u64) -> Result<Complex64> {
    check_exponents(m)?;
    if alphas.len() >= m.len() {
        return Err(HofaError::invalid(format!(
            "m has length {} but {} phases leave no shifted functions",
            m.len(),
            alphas.len()
        )));
    }
    let n = m.len() - alphas.len();
    check_functions(fs, n)?;
    if n_side == 0 {
        return Err(HofaError::invalid("N must be positive"));
    }
    let (shift_m, phase_m) = m.split_at(n);
    let avg = power_box(n_side, shift_m)?;
    Ok(average_over_r(
        fs,
        &avg,
        n_side,
        |r| shift_m.iter().map(|&k| shift_of(r, 1, k)).collect(),
        |x, r| {
            let mut total = TorusPhase::zero();
            for (a, &k) in alphas.iter().zip(phase_m) {
                total = total + a.get(x).mul_power(r, k);
            }
            total.e()
        },
    ))
}

/// `|{x ∈ A : x + (qr)^{m_j} e_j ∈ A for all j}|` via shifted bitset ANDs.
pub fn popular_count_q(a: &SetIndicator, m: &[u32], q: u64, r: u64) -> u64 {
    let bx = a.box_spec();
    assert_eq!(bx.n(), m.len(), "exponent tuple length must match the box dimension");
    let dims = bx.dims();
    let strides = bx.strides();
    let mut acc = a.bits().clone();
    for (j, &k) in m.iter().enumerate() {
        let s = match shift_of(q, r, k) {
            Some(s) if s < dims[j] => s,
            _ => return 0,
        };
        acc.and_shifted(a.bits(), (s * strides[j]) as usize);
        let block = (dims[j] * strides[j]) as usize;
        let keep = ((dims[j] - s) * strides[j]) as usize;
        let mut start = 0usize;
        while start < acc.len() {
            acc.clear_range(start + keep, start + block);
            start += block;
        }
    }
    acc.count_ones()
}

/// [`popular_count_q`] with `q = 1`.
pub fn popular_count(a: &SetIndicator, m: &[u32], r: u64) -> u64 {
    popular_count_q(a, m, 1, r)
}

/// Counts for every `r ∈ [M]`, in order.
pub fn popular_histogram(a: &SetIndicator, m: &[u32], q: u64, big_m: u64) -> Vec<u64> {
    (1..=big_m).into_par_iter().map(|r| popular_count_q(a, m, q, r)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PopularDifference {
    pub r: u64,
    pub count: u64,
    /// `histogram[r-1]` is the count for `r`.
    pub histogram: Vec<u64>,
}

/// The `r ∈ [M]` maximizing [`popular_count`]; ties go to the smallest `r`.
pub fn best_popular_difference(a: &SetIndicator, m: &[u32], big_m: u64) -> Result<PopularDifference> {
    best_popular_difference_q(a, m, 1, big_m)
}

pub fn best_popular_difference_q(a: &SetIndicator, m: &[u32], q: u64, big_m: u64) -> Result<PopularDifference> {
    check_exponents(m)?;
    if m.len() != a.box_spec().n() {
        return Err(HofaError::invalid("exponent tuple length must match the box dimension"));
    }
    if big_m == 0 || q == 0 {
        return Err(HofaError::invalid("M and q must be positive"));
    }
    let histogram = popular_histogram(a, m, q, big_m);
    let mut best = 0usize;
    for (i, &c) in histogram.iter().enumerate() {
        if c > histogram[best] {
            best = i;
        }
    }
    Ok(PopularDifference {
        r: best as u64 + 1,
        count: histogram[best],
        histogram,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorCount {
    /// `Σ_{r ∈ [M]} |{x ∈ A : x + (qr)^{m_j} e_j ∈ A ∀j}|`.
    pub integer_count: u128,
    /// `Π N_i · M`.
    pub normalization: u128,
    /// `integer_count / normalization`.
    pub lambda: f64,
}

/// `Λ_{q,M,N;m}(χ_A, …, χ_A)` computed exactly on the bitset path.
pub fn count_indicator(a: &SetIndicator, spec: &ConfigSpec) -> Result<IndicatorCount> {
    spec.check_structure()?;
    if a.box_spec() != &spec.bx {
        return Err(HofaError::invalid(format!(
            "set box {:?} differs from configuration box {:?}",
            a.box_spec().dims(),
            spec.bx.dims()
        )));
    }
    let integer_count: u128 = popular_histogram(a, &spec.m, spec.q, spec.big_m)
        .iter()
        .map(|&c| c as u128)
        .sum();
    let normalization = spec.bx.cells()? as u128 * spec.big_m as u128;
    Ok(IndicatorCount {
        integer_count,
        normalization,
        lambda: integer_count as f64 / normalization as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragingReport {
    /// `Λ_{q,M,N;m}(f)`.
    pub lhs: Complex64,
    /// `C · E_{x ∈ Π[±2N_j]} Λ_{M;m}(f^{x,q})`.
    pub rhs: Complex64,
    /// `C = Π(4N_j + 1) / Π N_j`.
    pub constant: f64,
}

/// Rewrites `Λ_{q,M,N;m}` as an average of `Λ_{M;m}` over the slices
/// `f_i^{x,q}(x′) = f_i(x + Σ_j q^{m_j} x′_j e_j)` and evaluates both sides.
///
/// Needs `f_0` supported in `Π[N_j]`, `f_i` in `Π[2^{[j=i]} N_j]` and
/// `(qM)^{m_j} ≤ N_j`.
pub fn averaging_identity_check(fs: &[GridFunction], spec: &ConfigSpec) -> Result<AveragingReport> {
    spec.check_structure()?;
    let n = spec.n();
    check_functions(fs, n)?;
    let dims = spec.bx.dims();
    for (i, f) in fs.iter().enumerate() {
        for (j, &d) in f.box_spec().dims().iter().enumerate() {
            let cap = if i == j + 1 { 2 * dims[j] } else { dims[j] };
            if d > cap {
                return Err(HofaError::precondition(format!(
                    "f_{i} extends past the allowed support on axis {}",
                    j + 1
                )));
            }
        }
    }
    let mut slice_dims = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    for (j, &k) in spec.m.iter().enumerate() {
        match shift_of(spec.q, spec.big_m, k) {
            Some(s) if s <= dims[j] => {}
            _ => {
                return Err(HofaError::precondition(format!(
                    "range condition (qM)^{k} <= N_{} fails",
                    j + 1
                )))
            }
        }
        slice_dims.push(shift_of(spec.big_m, 1, k).unwrap());
        steps.push(shift_of(spec.q, 1, k).unwrap() as i64);
    }
    let slice_boxes: Vec<BoxSpec> = (0..=n)
        .map(|i| {
            let mut d = slice_dims.clone();
            if i > 0 {
                d[i - 1] *= 2;
            }
            BoxSpec::new(d)
        })
        .collect::<Result<_>>()?;

    let outer = BoxSpec::new(dims.iter().map(|&d| 4 * d + 1).collect())?;
    let outer_points: Vec<Vec<i64>> = outer.points().collect();
    let terms: Vec<Complex64> = outer_points
        .par_iter()
        .map(|p| {
            let base: Vec<i64> = p.iter().zip(dims).map(|(&c, &d)| c - 1 - 2 * d as i64).collect();
            let slices: Vec<GridFunction> = fs
                .iter()
                .zip(&slice_boxes)
                .map(|(f, sb)| {
                    GridFunction::from_fn(sb.clone(), |xp| {
                        let y: Vec<i64> = (0..n).map(|j| base[j] + steps[j] * xp[j]).collect();
                        f.get(&y)
                    })
                })
                .collect::<Result<_>>()?;
            averaging_inner(&slices, &spec.m, spec.big_m, &slice_boxes[0])
        })
        .collect::<Result<_>>()?;
    let constant = outer.len() as f64 / spec.bx.len() as f64;
    Ok(AveragingReport {
        lhs: lambda_general(fs, spec)?,
        rhs: pairwise(&terms) / outer.len() as f64 * constant,
        constant,
    })
}

fn averaging_inner(slices: &[GridFunction], m: &[u32], big_m: u64, avg: &BoxSpec) -> Result<Complex64> {
    let per_r: Vec<Complex64> = (1..=big_m)
        .map(|r| {
            let shifts: Vec<Option<u64>> = m.iter().map(|&k| shift_of(r, 1, k)).collect();
            sum_for_shift(slices, avg, &shifts, &|_: &[i64]| Complex64::new(1.0, 0.0))
        })
        .collect();
    Ok(pairwise(&per_r) / (avg.len() as f64 * big_m as f64))
}
