//! Deterministic summation and the additive character `e(x) = exp(2πix)`.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::ops::Add;

const BLOCK: usize = 32;

/// Cascade (pairwise) accumulator.
///
/// Values are summed sequentially in blocks of 32; block sums are merged like a
/// binary counter, so the result depends only on the sequence of pushed
/// values and the rounding error grows as `O(log n)` rather than `O(n)`.
#[derive(Debug, Clone)]
pub struct TreeSum<T> {
    block: T,
    filled: usize,
    stack: Vec<(u32, T)>,
}

impl<T: Copy + Default + Add<Output = T>> Default for TreeSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Copy + Default + Add<Output = T>> TreeSum<T> {
    pub fn new() -> Self {
        TreeSum {
            block: T::default(),
            filled: 0,
            stack: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, v: T) {
        self.block = self.block + v;
        self.filled += 1;
        if self.filled == BLOCK {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let mut level = 0u32;
        let mut value = self.block;
        while let Some(&(l, top)) = self.stack.last() {
            if l != level {
                break;
            }
            self.stack.pop();
            value = top + value;
            level += 1;
        }
        self.stack.push((level, value));
        self.block = T::default();
        self.filled = 0;
    }

    pub fn total(&self) -> T {
        let mut acc = self.block;
        for &(_, v) in self.stack.iter().rev() {
            acc = v + acc;
        }
        acc
    }
}

impl<T: Copy + Default + Add<Output = T>> Extend<T> for TreeSum<T> {
    fn extend<I: IntoIterator<Item = T>>(&mut self, iter: I) {
        for v in iter {
            self.push(v);
        }
    }
}

/// Pairwise sum of a slice.
pub fn pairwise<T: Copy + Default + Add<Output = T>>(xs: &[T]) -> T {
    if xs.len() <= BLOCK {
        return xs.iter().fold(T::default(), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise(&xs[..mid]) + pairwise(&xs[mid..])
}

/// Pairwise sum of an iterator.
pub fn tree_sum<T, I>(iter: I) -> T
where
    T: Copy + Default + Add<Output = T>,
    I: IntoIterator<Item = T>,
{
    let mut acc = TreeSum::new();
    acc.extend(iter);
    acc.total()
}

/// `e(x) = exp(2πix)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let t = x - x.floor();
    Complex64::from_polar(1.0, TAU * t)
}

/// `⌊n^{1/k}⌋` computed exactly.
pub fn int_root(n: u64, k: u32) -> u64 {
    if k <= 1 || n <= 1 {
        return if k == 0 { 1 } else { n };
    }
    let mut r = (n as f64).powf(1.0 / k as f64) as u64;
    while r > 0 && r.checked_pow(k).is_none_or(|p| p > n) {
        r -= 1;
    }
    while (r + 1).checked_pow(k).is_some_and(|p| p <= n) {
        r += 1;
    }
    r
}

/// Whether `n` is a perfect `k`-th power.
pub fn is_perfect_power(n: u64, k: u32) -> bool {
    int_root(n, k).checked_pow(k) == Some(n)
}

/// Relative difference `|a−b| / max(|a|,|b|,floor)`.
pub fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
