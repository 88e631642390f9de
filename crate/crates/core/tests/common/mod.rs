//! Independent brute-force oracles and seeded generators shared by the
//! integration tests.

#![allow(dead_code)]

use hofa::rng::SplitMix64;
use hofa::{BoxSpec, GridFunction, LineFn, SetIndicator, TorusPhase};
use num_complex::Complex64;
use std::f64::consts::TAU;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cis(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * t)
}

pub fn random_unit(rng: &mut SplitMix64) -> Complex64 {
    Complex64::from_polar(rng.next_f64().sqrt(), TAU * rng.next_f64())
}

pub fn random_line(rng: &mut SplitMix64, lo: i64, len: usize) -> LineFn {
    LineFn::new(lo, (0..len).map(|_| random_unit(rng)).collect())
}

pub fn random_signs(rng: &mut SplitMix64, lo: i64, len: usize) -> LineFn {
    LineFn::new(lo, (0..len).map(|_| c(rng.sign(), 0.0)).collect())
}

pub fn random_grid(rng: &mut SplitMix64, dims: &[u64]) -> GridFunction {
    let bx = BoxSpec::new(dims.to_vec()).unwrap();
    let vals = (0..bx.len()).map(|_| random_unit(rng)).collect();
    GridFunction::new(bx, vals, true).unwrap()
}

pub fn random_unit_interval_grid(rng: &mut SplitMix64, dims: &[u64]) -> GridFunction {
    let bx = BoxSpec::new(dims.to_vec()).unwrap();
    let vals: Vec<f64> = (0..bx.len()).map(|_| rng.next_f64()).collect();
    GridFunction::from_real(bx, &vals).unwrap()
}

pub fn random_set(rng: &mut SplitMix64, dims: &[u64], p: f64) -> SetIndicator {
    let bx = BoxSpec::new(dims.to_vec()).unwrap();
    SetIndicator::from_predicate(bx, |_| rng.bernoulli(p)).unwrap()
}

pub fn random_rational(rng: &mut SplitMix64, max_den: u64) -> TorusPhase {
    let d = 1 + rng.below(max_den) as i128;
    TorusPhase::rational(rng.below(d as u64) as i128, d).unwrap()
}

/// Mean of `f` over the atom `{qLs + qk + r : 0 ≤ k < L}` through `x`.
pub fn brute_atom_mean(f: &dyn Fn(i64) -> Complex64, q: i64, l: i64, x: i64) -> Complex64 {
    let r = (x - 1).rem_euclid(q) + 1;
    let s = (x - r).div_euclid(q * l);
    let mut total = c(0.0, 0.0);
    for k in 0..l {
        total += f(q * l * s + q * k + r);
    }
    total / l as f64
}

/// `‖E(f | B_{(qL,q)})‖_k^k` summed pointwise over a window that covers every
/// atom meeting `[lo, hi]`.
pub fn brute_projection_norm(f: &LineFn, q: i64, l: i64, k: i32) -> f64 {
    let get = |x: i64| f.get(x);
    let lo = f.lo() - q * l;
    let hi = f.hi() + q * l;
    (lo..=hi).map(|x| brute_atom_mean(&get, q, l, x).norm().powi(k)).sum()
}

/// `E_{x ∈ box, r ∈ [M]} f_0(x) Π_j f_j(x + s_j(r) e_j)` by nested loops.
pub fn brute_lambda(fs: &[GridFunction], avg: &BoxSpec, big_m: u64, shift: &dyn Fn(u64, usize) -> i64) -> Complex64 {
    let n = avg.n();
    let mut total = c(0.0, 0.0);
    for r in 1..=big_m {
        for x in avg.points() {
            let mut p = fs[0].get(&x);
            for j in 0..n {
                let mut y = x.clone();
                y[j] += shift(r, j);
                p *= fs[j + 1].get(&y);
            }
            total += p;
        }
    }
    total / (avg.len() as f64 * big_m as f64)
}

/// `Σ_{x, h_1, h_2} f(x) f̄(x+h_1) f̄(x+h_2) f(x+h_1+h_2)` by direct loops.
pub fn brute_u2_fourth(f: &LineFn) -> f64 {
    let (lo, hi) = (f.lo(), f.hi());
    let span = hi - lo;
    let mut total = c(0.0, 0.0);
    for x in lo..=hi {
        for h1 in -span..=span {
            for h2 in -span..=span {
                total += f.get(x) * f.get(x + h1).conj() * f.get(x + h2).conj() * f.get(x + h1 + h2);
            }
        }
    }
    total.re
}

/// `E_{x,x′} f(x) Π_j f(x + (x′_j − x_j)e_j)` by enumerating all pairs.
pub fn brute_box_count(f: &GridFunction) -> f64 {
    let bx = f.box_spec();
    let pts: Vec<Vec<i64>> = bx.points().collect();
    let mut total = 0.0;
    for x in &pts {
        for xp in &pts {
            let mut p = f.get(x).re;
            for j in 0..bx.n() {
                let mut y = x.clone();
                y[j] = xp[j];
                p *= f.get(&y).re;
            }
            total += p;
        }
    }
    total / (pts.len() * pts.len()) as f64
}

/// The full expansion
/// `(ΠL/ΠN) Σ_{s, x ∈ Π(q_iL_is_i, q_iL_is_i+q_i]} E_{k,l} f(x + Σ q_ik_ie_i) Π_i f(x + Σ_{j≠i} q_jk_je_j + q_il_ie_i)`
/// for two-dimensional `f`.
pub fn brute_cond_box_expansion_2d(f: &GridFunction, q: [i64; 2], l: [i64; 2]) -> f64 {
    let dims = f.box_spec().dims();
    let (n1, n2) = (dims[0] as i64, dims[1] as i64);
    let blocks = |n: i64, q: i64, l: i64| 0..=(n - 1).div_euclid(q * l);
    let mut total = 0.0;
    for s1 in blocks(n1, q[0], l[0]) {
        for s2 in blocks(n2, q[1], l[1]) {
            for x1 in q[0] * l[0] * s1 + 1..=q[0] * l[0] * s1 + q[0] {
                for x2 in q[1] * l[1] * s2 + 1..=q[1] * l[1] * s2 + q[1] {
                    let mut acc = 0.0;
                    for k1 in 0..l[0] {
                        for k2 in 0..l[1] {
                            for l1 in 0..l[0] {
                                for l2 in 0..l[1] {
                                    let base = f.get(&[x1 + q[0] * k1, x2 + q[1] * k2]).re;
                                    let a = f.get(&[x1 + q[0] * l1, x2 + q[1] * k2]).re;
                                    let b = f.get(&[x1 + q[0] * k1, x2 + q[1] * l2]).re;
                                    acc += base * a * b;
                                }
                            }
                        }
                    }
                    total += acc / (l[0] * l[1] * l[0] * l[1]) as f64;
                }
            }
        }
    }
    (l[0] * l[1]) as f64 / (n1 * n2) as f64 * total
}

/// `E_{r ∈ [N]} e(Σ_i α_i r^i)` in floating point.
pub fn naive_weyl(alphas: &[f64], n: u64) -> Complex64 {
    let mut total = c(0.0, 0.0);
    for r in 1..=n {
        let mut t = 0.0;
        for (i, a) in alphas.iter().enumerate() {
            t += (a * (r as f64).powi(i as i32 + 1)).rem_euclid(1.0);
        }
        total += cis(t);
    }
    total / n as f64
}
