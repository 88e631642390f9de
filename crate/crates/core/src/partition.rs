//! Arithmetic-progression partitions of `Z` and conditional expectation.
//!
//! `B_{(qL,q)}` cuts `Z` into blocks `(qLs, qL(s+1)]` and each block into the
//! `q` progressions `{qLs + qk + r : 0 ≤ k < L}`, `r ∈ (0, q]`. Conditional
//! expectation replaces a function by its mean on every atom that meets the
//! stored range of the function; atoms outside that range carry 0.

use crate::error::{HofaError, Result};
use crate::grid::{BoxSpec, GridFunction, LineFn};
use crate::numeric::tree_sum;
use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;
use std::collections::BTreeMap;

/// The implicit constant in the almost-periodicity and almost-refinement
/// bounds.
pub const PARTITION_CONSTANT: f64 = 8.0;

const BRUTE_PERIOD_LIMIT: u64 = 1 << 22;

/// An atom `{start + step·k : 0 ≤ k < len}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Atom {
    pub start: i64,
    pub step: i64,
    pub len: u64,
}

impl Atom {
    pub fn last(&self) -> i64 {
        self.start + self.step * (self.len as i64 - 1)
    }

    pub fn contains(&self, x: i64) -> bool {
        x >= self.start && x <= self.last() && (x - self.start) % self.step == 0
    }

    pub fn points(&self) -> impl Iterator<Item = i64> {
        let (s, d) = (self.start, self.step);
        (0..self.len as i64).map(move |k| s + d * k)
    }

    /// Whether every point of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &Atom) -> bool {
        if !other.contains(self.start) || !other.contains(self.last()) {
            return false;
        }
        self.len == 1 || self.step % other.step == 0
    }
}

/// A partition of `Z` by atoms.
pub trait Partition: Sync {
    /// The atom containing `x`.
    fn atom(&self, x: i64) -> Atom;

    /// Whether every atom of `self` lies inside an atom of `coarse`.
    fn refines(&self, coarse: &ApPartition) -> bool;
}

/// `B_{(qL,q)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ApPartition {
    pub q: u64,
    pub l: u64,
}

impl ApPartition {
    pub fn new(q: u64, l: u64) -> Result<Self> {
        if q == 0 || l == 0 {
            return Err(HofaError::invalid("partition needs q >= 1 and L >= 1"));
        }
        (q as i64)
            .checked_mul(l as i64)
            .ok_or_else(|| HofaError::Overflow(format!("block length {q}*{l}")))?;
        Ok(ApPartition { q, l })
    }

    /// The partition of `Z` into consecutive blocks of length `n`.
    pub fn intervals(n: u64) -> Result<Self> {
        ApPartition::new(1, n)
    }

    pub fn block_len(&self) -> i64 {
        (self.q * self.l) as i64
    }

    /// `(s, r)` with `r = ((x−1) mod q) + 1` and `s = ⌊(x−r)/(qL)⌋`.
    pub fn atom_of(&self, x: i64) -> (i64, i64) {
        let q = self.q as i64;
        let r = (x - 1).mod_floor(&q) + 1;
        let s = Integer::div_floor(&(x - r), &self.block_len());
        (s, r)
    }

    /// `{qLs + qk + r : 0 ≤ k < L}`.
    pub fn atom_at(&self, s: i64, r: i64) -> Atom {
        Atom {
            start: self.block_len() * s + r,
            step: self.q as i64,
            len: self.l,
        }
    }
}

impl Partition for ApPartition {
    fn atom(&self, x: i64) -> Atom {
        let (s, r) = self.atom_of(x);
        self.atom_at(s, r)
    }

    fn refines(&self, coarse: &ApPartition) -> bool {
        if self.l == 1 {
            return true;
        }
        if self.q % coarse.q == 0 && coarse.block_len() % self.block_len() == 0 {
            return true;
        }
        let period = (self.block_len() as u64).lcm(&(coarse.block_len() as u64));
        if period > BRUTE_PERIOD_LIMIT {
            return false;
        }
        (1..=period as i64).all(|x| self.atom(x).is_subset_of(&coarse.atom(x)))
    }
}

/// The common refinement `B_1 ∨ … ∨ B_j` of AP partitions.
///
/// Its atom through `x` is `{y ∈ [lo, hi] : y ≡ x mod lcm(q_i)}` where
/// `[lo, hi]` is the intersection of the hulls of the component atoms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefinedPartition {
    parts: Vec<ApPartition>,
    modulus: i64,
}

impl RefinedPartition {
    pub fn new(parts: Vec<ApPartition>) -> Result<Self> {
        if parts.is_empty() {
            return Err(HofaError::invalid("common refinement of no partitions"));
        }
        let mut modulus: i64 = 1;
        for p in &parts {
            modulus = modulus
                .checked_mul(p.q as i64 / modulus.gcd(&(p.q as i64)))
                .ok_or_else(|| HofaError::Overflow("lcm of moduli".into()))?;
        }
        Ok(RefinedPartition { parts, modulus })
    }

    pub fn join(a: ApPartition, b: ApPartition) -> Result<Self> {
        RefinedPartition::new(vec![a, b])
    }

    pub fn parts(&self) -> &[ApPartition] {
        &self.parts
    }
}

impl Partition for RefinedPartition {
    fn atom(&self, x: i64) -> Atom {
        let mut lo = i64::MIN;
        let mut hi = i64::MAX;
        for p in &self.parts {
            let a = p.atom(x);
            lo = lo.max(a.start);
            hi = hi.min(a.last());
        }
        let first = lo + (x - lo).mod_floor(&self.modulus);
        Atom {
            start: first,
            step: self.modulus,
            len: ((hi - first) / self.modulus + 1) as u64,
        }
    }

    fn refines(&self, coarse: &ApPartition) -> bool {
        self.parts.iter().any(|p| p.refines(coarse))
    }
}

struct AtomGroup {
    atom: Atom,
    values: Vec<Complex64>,
}

fn is_indicator(f: &LineFn) -> bool {
    f.values()
        .iter()
        .all(|v| v.im == 0.0 && (v.re == 0.0 || v.re == 1.0))
}

fn group_atoms<P: Partition + ?Sized>(f: &LineFn, p: &P) -> Vec<AtomGroup> {
    let mut groups: BTreeMap<i64, AtomGroup> = BTreeMap::new();
    for (x, v) in f.iter() {
        let atom = p.atom(x);
        groups
            .entry(atom.start)
            .or_insert_with(|| AtomGroup {
                atom,
                values: Vec::new(),
            })
            .values
            .push(v);
    }
    groups.into_values().collect()
}

fn group_mean(g: &AtomGroup, indicator: bool) -> Complex64 {
    if indicator {
        let count = g.values.iter().filter(|v| v.re == 1.0).count() as u64;
        Complex64::new(count as f64 / g.atom.len as f64, 0.0)
    } else {
        tree_sum(g.values.iter().copied()) / g.atom.len as f64
    }
}

/// Per-atom means of `f` over the atoms meeting its stored range.
pub fn atom_means<P: Partition + ?Sized>(f: &LineFn, p: &P) -> Vec<(Atom, Complex64)> {
    let indicator = is_indicator(f);
    group_atoms(f, p)
        .into_iter()
        .map(|g| {
            let m = group_mean(&g, indicator);
            (g.atom, m)
        })
        .collect()
}

/// `E(f | P)`: the mean of `f` on each atom meeting the stored range of `f`.
///
/// Means of 0/1-valued `f` are an integer count divided by the atom size.
pub fn cond_expect<P: Partition + ?Sized>(f: &LineFn, p: &P) -> LineFn {
    let means = atom_means(f, p);
    if means.is_empty() {
        return LineFn::default();
    }
    let lo = means.iter().map(|(a, _)| a.start).min().unwrap();
    let hi = means.iter().map(|(a, _)| a.last()).max().unwrap();
    let mut out = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
    for (atom, m) in &means {
        for y in atom.points() {
            out[(y - lo) as usize] = *m;
        }
    }
    LineFn::new(lo, out)
}

/// `‖E(f | P)‖_2²`, computed from the atom means without materializing.
pub fn cond_energy<P: Partition + ?Sized>(f: &LineFn, p: &P) -> f64 {
    tree_sum(
        atom_means(f, p)
            .iter()
            .map(|(a, m)| a.len as f64 * m.norm_sqr()),
    )
}

/// `L · Σ_{s, x ∈ (qLs, qLs+q]} |E_{0≤l<L} f(x+ql)|^k`.
pub fn projection_lk_norm(f: &LineFn, p: &ApPartition, k: u32) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    let (s_lo, _) = p.atom_of(f.lo());
    let (s_hi, _) = p.atom_of(f.hi());
    let q = p.q as i64;
    let mut terms = Vec::new();
    for s in s_lo..=s_hi {
        for x in p.block_len() * s + 1..=p.block_len() * s + q {
            let mean = tree_sum((0..p.l as i64).map(|l| f.get(x + q * l))) / p.l as f64;
            terms.push(mean.norm().powi(k as i32));
        }
    }
    p.l as f64 * tree_sum(terms)
}

/// Which almost-periodicity clause produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftClause {
    /// `h ≡ 0 mod qL`: exact equality.
    Periodic,
    /// `|h| < q`: bound `8(|h|/q)N`.
    SmallShift,
    /// `h = sq`, `|s| < L`: bound `8(|s|/L)N`.
    ModulusMultiple,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftDelta {
    /// `‖E(f(·+h) | B)‖_2²`.
    pub lhs: f64,
    /// `‖E(f | B)‖_2²`.
    pub rhs: f64,
    pub bound: f64,
    pub clause: ShiftClause,
    /// Length of the shortest interval containing the support.
    pub support_len: u64,
}

impl ShiftDelta {
    pub fn holds(&self) -> bool {
        match self.clause {
            ShiftClause::Periodic => self.lhs == self.rhs,
            _ => (self.lhs - self.rhs).abs() <= self.bound,
        }
    }
}

/// Compares `‖E(f(·+h)|B)‖_2²` with `‖E(f|B)‖_2²` under the applicable clause.
pub fn shift_norm_delta(f: &LineFn, p: &ApPartition, h: i64) -> Result<ShiftDelta> {
    let q = p.q as i64;
    let l = p.l as i64;
    let support = f.trimmed();
    let n = support.len() as f64;
    let (clause, bound) = if h.rem_euclid(p.block_len()) == 0 {
        (ShiftClause::Periodic, 0.0)
    } else if h.abs() < q {
        (ShiftClause::SmallShift, PARTITION_CONSTANT * (h.abs() as f64 / q as f64) * n)
    } else if h % q == 0 && (h / q).abs() < l {
        (
            ShiftClause::ModulusMultiple,
            PARTITION_CONSTANT * ((h / q).abs() as f64 / l as f64) * n,
        )
    } else {
        return Err(HofaError::precondition(format!(
            "no clause applies to h = {h} with q = {q}, L = {l}"
        )));
    };
    Ok(ShiftDelta {
        lhs: cond_expect(&f.translate(h), p).l2_sq(),
        rhs: cond_expect(f, p).l2_sq(),
        bound,
        clause,
        support_len: support.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PythagorasReport {
    /// `‖E(f|B′) − E(f|B)‖_2²`.
    pub lhs: f64,
    /// `‖E(f|B′)‖_2² − ‖E(f|B)‖_2²`.
    pub rhs: f64,
    /// `max |E(E(f|B)|B′) − E(f|B)|`.
    pub tower_fine: f64,
    /// `max |E(E(f|B′)|B) − E(f|B)|`.
    pub tower_coarse: f64,
    /// `‖f‖_2²`, the normalization for the tolerances.
    pub scale: f64,
}

impl PythagorasReport {
    pub fn holds(&self, tol: f64) -> bool {
        let s = self.scale.max(1.0);
        (self.lhs - self.rhs).abs() <= tol * s && self.tower_fine <= tol && self.tower_coarse <= tol
    }
}

/// Pythagoras and tower identities for a refinement pair.
pub fn refinement_pythagoras<P: Partition + ?Sized>(
    f: &LineFn,
    coarse: &ApPartition,
    fine: &P,
) -> Result<PythagorasReport> {
    if !fine.refines(coarse) {
        return Err(HofaError::precondition("partition does not refine the coarse partition"));
    }
    let ec = cond_expect(f, coarse);
    let ef = cond_expect(f, fine);
    Ok(PythagorasReport {
        lhs: ef.sub(&ec).l2_sq(),
        rhs: ef.l2_sq() - ec.l2_sq(),
        tower_fine: cond_expect(&ec, fine).max_abs_diff(&ec),
        tower_coarse: cond_expect(&ef, coarse).max_abs_diff(&ec),
        scale: f.l2_sq(),
    })
}

/// `(⟨E(f|P), g⟩, ⟨f, E(g|P)⟩)`.
pub fn self_adjointness_check<P: Partition + ?Sized>(
    f: &LineFn,
    g: &LineFn,
    p: &P,
) -> (Complex64, Complex64) {
    (cond_expect(f, p).inner(g), f.inner(&cond_expect(g, p)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlmostRefinement {
    /// `‖E(f | B_1 ∨ B_2)‖_2²`.
    pub lhs: f64,
    /// `‖E(f | B_2)‖_2²`.
    pub rhs: f64,
    /// `8 (q̃ L_2 / L_1) N`.
    pub bound: f64,
    /// Number of points where the two projections differ.
    pub differing_points: u64,
    pub support_len: u64,
}

impl AlmostRefinement {
    pub fn holds(&self) -> bool {
        (self.lhs - self.rhs).abs() <= self.bound
    }
}

/// Compares projections onto `B_1 ∨ B_2` and `B_2`, where
/// `B_1 = B_{(qL_1,q)}` and `B_2 = B_{(qq̃L_2, qq̃)}`.
pub fn almost_refinement_delta(f: &LineFn, q: u64, l1: u64, qt: u64, l2: u64) -> Result<AlmostRefinement> {
    if qt.checked_mul(l2).is_none_or(|v| v > l1) {
        return Err(HofaError::precondition(format!(
            "almost refinement needs q~ L2 <= L1, got {qt}*{l2} > {l1}"
        )));
    }
    let b1 = ApPartition::new(q, l1)?;
    let b2 = ApPartition::new(q * qt, l2)?;
    let joined = RefinedPartition::join(b1, b2)?;
    let ej = cond_expect(f, &joined);
    let e2 = cond_expect(f, &b2);
    let diff = ej.sub(&e2);
    let differing_points = diff.values().iter().filter(|v| v.norm() > 1e-12).count() as u64;
    let n = f.trimmed().len() as u64;
    Ok(AlmostRefinement {
        lhs: ej.l2_sq(),
        rhs: e2.l2_sq(),
        bound: PARTITION_CONSTANT * (qt as f64 * l2 as f64 / l1 as f64) * n as f64,
        differing_points,
        support_len: n,
    })
}

/// `F(x) = E(f_{x̂^i} | P)(x_i)` on the box of `f` with side `axis` replaced
/// by `out_len`.
pub fn cond_expect_along<P: Partition + ?Sized>(
    f: &GridFunction,
    axis: usize,
    p: &P,
    out_len: u64,
) -> Result<GridFunction> {
    let mut dims = f.box_spec().dims().to_vec();
    dims[axis] = out_len;
    let out_box = BoxSpec::new(dims)?;
    let mut out = vec![Complex64::new(0.0, 0.0); out_box.len()];
    let strides = out_box.strides();
    let stride = strides[axis] as usize;
    let mut base_dims = out_box.dims().to_vec();
    base_dims[axis] = 1;
    let base_box = BoxSpec::new(base_dims)?;
    for base in base_box.points() {
        let proj = cond_expect(&f.slice(axis, &base), p);
        let start = out_box.index(&base).unwrap();
        for t in 1..=out_len as i64 {
            out[start + (t as usize - 1) * stride] = proj.get(t);
        }
    }
    GridFunction::new(out_box, out, false)
}

/// `E_{x̂^i} ‖E(f_{x̂^i} | P)‖_2²`, averaging over the other axes of the box.
pub fn axis_energy<P: Partition + ?Sized>(f: &GridFunction, axis: usize, p: &P) -> Result<f64> {
    let mut base_dims = f.box_spec().dims().to_vec();
    base_dims[axis] = 1;
    let base_box = BoxSpec::new(base_dims)?;
    let count = base_box.len() as f64;
    Ok(tree_sum(base_box.points().map(|b| cond_energy(&f.slice(axis, &b), p))) / count)
}
