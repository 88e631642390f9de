//! Boxes, dense grid functions, one-dimensional finitely supported functions
//! and phase tables.
//!
//! Coordinates are 1-based: the box with dimensions `(N_1, …, N_n)` is
//! `[1, N_1] × … × [1, N_n]`. Storage is row-major with axis 0 slowest.
//! Axes are 0-based in the Rust API.

use crate::error::{HofaError, Result};
use crate::numeric::tree_sum;
use crate::torus::TorusPhase;
use num_complex::Complex64;
use serde::Serialize;

/// Largest number of cells a dense [`GridFunction`] may hold.
pub const DENSE_LIMIT: u64 = 1 << 27;
/// Largest dimension of a dense [`GridFunction`].
pub const DENSE_MAX_DIM: usize = 3;
/// Cap on index arithmetic.
pub const INDEX_LIMIT: u64 = 1 << 62;

const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BoxSpec {
    dims: Vec<u64>,
}

impl BoxSpec {
    pub fn new(dims: Vec<u64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(HofaError::invalid("box must have dimension n >= 1"));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(HofaError::invalid(format!("box side {} is zero", i + 1)));
        }
        let bx = BoxSpec { dims };
        bx.cells()?;
        Ok(bx)
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn dim(&self, axis: usize) -> u64 {
        self.dims[axis]
    }

    /// Number of cells; errors beyond the index-arithmetic cap.
    pub fn cells(&self) -> Result<u64> {
        let mut acc: u64 = 1;
        for &d in &self.dims {
            acc = acc
                .checked_mul(d)
                .filter(|&c| c <= INDEX_LIMIT)
                .ok_or_else(|| HofaError::Overflow(format!("box {:?} has too many cells", self.dims)))?;
        }
        Ok(acc)
    }

    /// Number of cells, assuming construction succeeded.
    pub fn len(&self) -> usize {
        self.dims.iter().product::<u64>() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn strides(&self) -> Vec<u64> {
        let mut s = vec![1u64; self.n()];
        for i in (0..self.n().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.n()
            && x
                .iter()
                .zip(&self.dims)
                .all(|(&xi, &d)| xi >= 1 && (xi as u64) <= d)
    }

    /// Row-major linear index of `x`, or `None` outside the box.
    #[inline]
    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.n() {
            return None;
        }
        let mut idx: u64 = 0;
        for (&xi, &d) in x.iter().zip(&self.dims) {
            if xi < 1 || xi as u64 > d {
                return None;
            }
            idx = idx * d + (xi as u64 - 1);
        }
        Some(idx as usize)
    }

    /// The point with linear index `idx`.
    pub fn point(&self, idx: usize) -> Vec<i64> {
        let mut rem = idx as u64;
        let mut x = vec![0i64; self.n()];
        for i in (0..self.n()).rev() {
            x[i] = (rem % self.dims[i]) as i64 + 1;
            rem /= self.dims[i];
        }
        x
    }

    /// All points in row-major order.
    pub fn points(&self) -> BoxPoints<'_> {
        BoxPoints {
            bx: self,
            next: Some(vec![1; self.n()]),
        }
    }

    /// The box with side `axis` multiplied by `factor`.
    pub fn scaled_axis(&self, axis: usize, factor: u64) -> Result<BoxSpec> {
        let mut dims = self.dims.clone();
        dims[axis] = dims[axis]
            .checked_mul(factor)
            .ok_or_else(|| HofaError::Overflow("scaled box side".into()))?;
        BoxSpec::new(dims)
    }
}

/// Row-major odometer over a box.
pub struct BoxPoints<'a> {
    bx: &'a BoxSpec,
    next: Option<Vec<i64>>,
}

impl Iterator for BoxPoints<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let cur = self.next.take()?;
        let mut nxt = cur.clone();
        let mut i = nxt.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if (nxt[i] as u64) < self.bx.dims[i] {
                nxt[i] += 1;
                self.next = Some(nxt);
                break;
            }
            nxt[i] = 1;
        }
        Some(cur)
    }
}

/// A complex-valued function on `Z^n` supported in a box, stored densely.
///
/// Reads outside the box return 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    bx: BoxSpec,
    values: Vec<Complex64>,
    bounded: bool,
}

fn check_dense(bx: &BoxSpec) -> Result<()> {
    if bx.n() > DENSE_MAX_DIM {
        return Err(HofaError::invalid(format!(
            "dense grid functions support n <= {DENSE_MAX_DIM}, got {}",
            bx.n()
        )));
    }
    let cells = bx.cells()?;
    if cells > DENSE_LIMIT {
        return Err(HofaError::TooLarge {
            cells: cells as u128,
            limit: DENSE_LIMIT as u128,
        });
    }
    Ok(())
}

impl GridFunction {
    /// Builds a grid function; when `bounded` is set, `|value| ≤ 1` is checked.
    pub fn new(bx: BoxSpec, values: Vec<Complex64>, bounded: bool) -> Result<Self> {
        check_dense(&bx)?;
        if values.len() != bx.len() {
            return Err(HofaError::invalid(format!(
                "expected {} values, got {}",
                bx.len(),
                values.len()
            )));
        }
        if bounded {
            if let Some(v) = values.iter().find(|v| v.norm() > 1.0 + BOUND_TOL) {
                return Err(HofaError::invalid(format!("value {v} violates |f| <= 1")));
            }
        }
        Ok(GridFunction { bx, values, bounded })
    }

    pub fn zeros(bx: BoxSpec) -> Result<Self> {
        let len = bx.len();
        check_dense(&bx)?;
        Ok(GridFunction {
            bx,
            values: vec![Complex64::new(0.0, 0.0); len],
            bounded: true,
        })
    }

    /// The indicator of the whole box.
    pub fn ones(bx: BoxSpec) -> Result<Self> {
        Self::constant(bx, Complex64::new(1.0, 0.0))
    }

    pub fn constant(bx: BoxSpec, c: Complex64) -> Result<Self> {
        check_dense(&bx)?;
        let len = bx.len();
        GridFunction::new(bx, vec![c; len], c.norm() <= 1.0 + BOUND_TOL)
    }

    pub fn from_fn(bx: BoxSpec, mut f: impl FnMut(&[i64]) -> Complex64) -> Result<Self> {
        check_dense(&bx)?;
        let values: Vec<Complex64> = bx.points().map(|x| f(&x)).collect();
        let bounded = values.iter().all(|v| v.norm() <= 1.0 + BOUND_TOL);
        Ok(GridFunction { bx, values, bounded })
    }

    pub fn from_real(bx: BoxSpec, values: &[f64]) -> Result<Self> {
        let vals = values.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>();
        let bounded = vals.iter().all(|v| v.norm() <= 1.0 + BOUND_TOL);
        GridFunction::new(bx, vals, bounded)
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.bx
    }

    pub fn n(&self) -> usize {
        self.bx.n()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    #[inline]
    pub fn get(&self, x: &[i64]) -> Complex64 {
        match self.bx.index(x) {
            Some(i) => self.values[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    #[inline]
    pub fn at(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn sum(&self) -> Complex64 {
        tree_sum(self.values.iter().copied())
    }

    /// Average over the box.
    pub fn mean(&self) -> Complex64 {
        self.sum() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        let values: Vec<Complex64> = self.values.iter().map(|&v| f(v)).collect();
        let bounded = values.iter().all(|v| v.norm() <= 1.0 + BOUND_TOL);
        GridFunction {
            bx: self.bx.clone(),
            values,
            bounded,
        }
    }

    pub fn conj(&self) -> GridFunction {
        self.map(|v| v.conj())
    }

    /// Pointwise combination of two functions on the same box.
    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GridFunction> {
        if self.bx != other.bx {
            return Err(HofaError::invalid("grid functions live on different boxes"));
        }
        let values: Vec<Complex64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let bounded = values.iter().all(|v| v.norm() <= 1.0 + BOUND_TOL);
        Ok(GridFunction {
            bx: self.bx.clone(),
            values,
            bounded,
        })
    }

    /// Whether every value is real and lies in `[0, 1]` up to `tol`.
    pub fn is_unit_interval(&self, tol: f64) -> bool {
        self.values
            .iter()
            .all(|v| v.im.abs() <= tol && v.re >= -tol && v.re <= 1.0 + tol)
    }

    /// The line through `base` along `axis`: `t ↦ f(base with x_axis = t)`,
    /// as a function on `[1, N_axis]`.
    pub fn slice(&self, axis: usize, base: &[i64]) -> LineFn {
        let d = self.bx.dim(axis) as usize;
        let mut x = base.to_vec();
        let mut vals = Vec::with_capacity(d);
        for t in 1..=d as i64 {
            x[axis] = t;
            vals.push(self.get(&x));
        }
        LineFn::new(1, vals)
    }

    /// Same data on a larger box containing this one (new cells are 0).
    pub fn embed(&self, bx: BoxSpec) -> Result<GridFunction> {
        if bx.n() != self.n() || bx.dims().iter().zip(self.bx.dims()).any(|(a, b)| a < b) {
            return Err(HofaError::invalid("target box does not contain source box"));
        }
        let mut out = GridFunction::zeros(bx)?;
        for (i, x) in self.bx.points().enumerate() {
            let j = out.bx.index(&x).unwrap();
            out.values[j] = self.values[i];
        }
        out.bounded = self.bounded;
        Ok(out)
    }
}

/// A finitely supported function `Z → C`, stored on `[offset, offset+len)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineFn {
    offset: i64,
    values: Vec<Complex64>,
}

impl LineFn {
    pub fn new(offset: i64, values: Vec<Complex64>) -> Self {
        LineFn { offset, values }
    }

    pub fn from_real(offset: i64, values: &[f64]) -> Self {
        LineFn::new(offset, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// The indicator of `[lo, hi]`.
    pub fn indicator(lo: i64, hi: i64) -> Self {
        let len = (hi - lo + 1).max(0) as usize;
        LineFn::new(lo, vec![Complex64::new(1.0, 0.0); len])
    }

    pub fn zeros(lo: i64, len: usize) -> Self {
        LineFn::new(lo, vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_fn(lo: i64, hi: i64, f: impl Fn(i64) -> Complex64) -> Self {
        LineFn::new(lo, (lo..=hi).map(f).collect())
    }

    /// First stored point.
    pub fn lo(&self) -> i64 {
        self.offset
    }

    /// Last stored point (`lo − 1` when empty).
    pub fn hi(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: i64) -> Complex64 {
        let k = x - self.offset;
        if k < 0 || k as usize >= self.values.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[k as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.offset + k as i64, v))
    }

    /// `x ↦ f(x + h)`.
    pub fn translate(&self, h: i64) -> LineFn {
        LineFn::new(self.offset - h, self.values.clone())
    }

    pub fn conj(&self) -> LineFn {
        LineFn::new(self.offset, self.values.iter().map(|v| v.conj()).collect())
    }

    pub fn scale(&self, c: Complex64) -> LineFn {
        LineFn::new(self.offset, self.values.iter().map(|&v| v * c).collect())
    }

    /// Drops zero values at both ends.
    pub fn trimmed(&self) -> LineFn {
        let zero = Complex64::new(0.0, 0.0);
        let Some(first) = self.values.iter().position(|&v| v != zero) else {
            return LineFn::new(self.offset, Vec::new());
        };
        let last = self.values.iter().rposition(|&v| v != zero).unwrap();
        LineFn::new(self.offset + first as i64, self.values[first..=last].to_vec())
    }

    fn combine(&self, other: &LineFn, f: impl Fn(Complex64, Complex64) -> Complex64) -> LineFn {
        if self.is_empty() && other.is_empty() {
            return LineFn::default();
        }
        let lo = if self.is_empty() {
            other.lo()
        } else if other.is_empty() {
            self.lo()
        } else {
            self.lo().min(other.lo())
        };
        let hi = self.hi().max(other.hi());
        LineFn::from_fn(lo, hi, |x| f(self.get(x), other.get(x)))
    }

    pub fn add(&self, other: &LineFn) -> LineFn {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &LineFn) -> LineFn {
        self.combine(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &LineFn) -> LineFn {
        let lo = self.lo().max(other.lo());
        let hi = self.hi().min(other.hi());
        if hi < lo {
            return LineFn::default();
        }
        LineFn::from_fn(lo, hi, |x| self.get(x) * other.get(x))
    }

    pub fn sum(&self) -> Complex64 {
        tree_sum(self.values.iter().copied())
    }

    /// `Σ |f|^k`.
    pub fn norm_pow(&self, k: u32) -> f64 {
        tree_sum(self.values.iter().map(|v| v.norm().powi(k as i32)))
    }

    /// `Σ |f|²`.
    pub fn l2_sq(&self) -> f64 {
        tree_sum(self.values.iter().map(|v| v.norm_sqr()))
    }

    /// `⟨f, g⟩ = Σ f(x) conj g(x)`.
    pub fn inner(&self, g: &LineFn) -> Complex64 {
        let lo = self.lo().max(g.lo());
        let hi = self.hi().min(g.hi());
        tree_sum((lo..=hi).map(|x| self.get(x) * g.get(x).conj()))
    }

    /// `max_x |f(x) − g(x)|`.
    pub fn max_abs_diff(&self, g: &LineFn) -> f64 {
        self.sub(g).values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// A phase function `α : Z^n → T` on a box; reads outside return 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    bx: BoxSpec,
    entries: Vec<TorusPhase>,
}

impl PhaseTable {
    pub fn new(bx: BoxSpec, entries: Vec<TorusPhase>) -> Result<Self> {
        if entries.len() != bx.len() {
            return Err(HofaError::invalid(format!(
                "expected {} phases, got {}",
                bx.len(),
                entries.len()
            )));
        }
        Ok(PhaseTable { bx, entries })
    }

    pub fn constant(bx: BoxSpec, theta: TorusPhase) -> Self {
        let len = bx.len();
        PhaseTable {
            bx,
            entries: vec![theta; len],
        }
    }

    pub fn from_fn(bx: BoxSpec, mut f: impl FnMut(&[i64]) -> TorusPhase) -> Self {
        let entries = bx.points().map(|x| f(&x)).collect();
        PhaseTable { bx, entries }
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.bx
    }

    pub fn entries(&self) -> &[TorusPhase] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, x: &[i64]) -> TorusPhase {
        match self.bx.index(x) {
            Some(i) => self.entries[i],
            None => TorusPhase::zero(),
        }
    }
}

/// A finitely supported phase map `Z → T` on `[offset, offset+len)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhaseLine {
    offset: i64,
    values: Vec<TorusPhase>,
}

impl PhaseLine {
    pub fn new(offset: i64, values: Vec<TorusPhase>) -> Self {
        PhaseLine { offset, values }
    }

    pub fn lo(&self) -> i64 {
        self.offset
    }

    pub fn hi(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[TorusPhase] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: i64) -> TorusPhase {
        let k = x - self.offset;
        if k < 0 || k as usize >= self.values.len() {
            TorusPhase::zero()
        } else {
            self.values[k as usize]
        }
    }

    /// `e(α)` as a function with the same stored range.
    pub fn exp(&self) -> LineFn {
        LineFn::new(self.offset, self.values.iter().map(|v| v.e()).collect())
    }
}
