//! Elements of the torus `T = R/Z`.

use crate::error::{HofaError, Result};
use crate::numeric::e;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Serialize, Serializer};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// A point of `R/Z`, either an exact rational `t/T` with `0 ≤ t < T` or a
/// float in `[0, 1)`.
///
/// Arithmetic between two rationals stays exact; mixing in a float yields a
/// float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TorusPhase {
    Rational(Ratio<i128>),
    Real(f64),
}

fn reduce_unit(r: Ratio<i128>) -> Ratio<i128> {
    let den = *r.denom();
    let num = r.numer().mod_floor(&den);
    Ratio::new(num, den)
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

impl Default for TorusPhase {
    fn default() -> Self {
        TorusPhase::zero()
    }
}

impl TorusPhase {
    pub fn zero() -> Self {
        TorusPhase::Rational(Ratio::from_integer(0))
    }

    /// The class of `t/den` modulo 1.
    pub fn rational(t: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(HofaError::invalid("torus denominator must be nonzero"));
        }
        Ok(TorusPhase::Rational(reduce_unit(Ratio::new(t, den))))
    }

    pub fn from_ratio(r: Ratio<i128>) -> Self {
        TorusPhase::Rational(reduce_unit(r))
    }

    pub fn real(x: f64) -> Self {
        TorusPhase::Real(frac(x))
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, TorusPhase::Rational(_))
    }

    pub fn as_ratio(&self) -> Option<Ratio<i128>> {
        match self {
            TorusPhase::Rational(r) => Some(*r),
            TorusPhase::Real(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            TorusPhase::Rational(r) => *r.numer() as f64 / *r.denom() as f64,
            TorusPhase::Real(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TorusPhase::Rational(r) => *r.numer() == 0,
            TorusPhase::Real(x) => *x == 0.0,
        }
    }

    /// Exact distance to the nearest integer, `min(t, T−t)/T`.
    pub fn dist_exact(&self) -> Option<Ratio<i128>> {
        self.as_ratio().map(|r| {
            let (t, den) = (*r.numer(), *r.denom());
            Ratio::new(t.min(den - t), den)
        })
    }

    /// Distance to the nearest integer `‖·‖`.
    pub fn dist(&self) -> f64 {
        match self {
            TorusPhase::Rational(_) => {
                let d = self.dist_exact().unwrap();
                *d.numer() as f64 / *d.denom() as f64
            }
            TorusPhase::Real(x) => x.min(1.0 - x),
        }
    }

    /// `k·θ` modulo 1.
    pub fn mul_int(&self, k: i128) -> Self {
        match self {
            TorusPhase::Rational(r) => {
                let den = *r.denom();
                let t = *r.numer();
                let km = k.mod_floor(&den);
                match t.checked_mul(km) {
                    Some(p) => TorusPhase::Rational(Ratio::new(p.mod_floor(&den), den)),
                    None => TorusPhase::Rational(Ratio::new(mulmod(t, km, den), den)),
                }
            }
            TorusPhase::Real(x) => {
                let whole = k as f64 * x;
                TorusPhase::real(whole)
            }
        }
    }

    /// `r^k·θ` modulo 1, reducing after every factor so nothing overflows.
    pub fn mul_power(&self, r: u64, k: u32) -> Self {
        let mut t = *self;
        for _ in 0..k {
            t = t.mul_int(r as i128);
        }
        t
    }

    /// Nearest point of the grid `{t/T : 0 ≤ t < T}`.
    pub fn snap(&self, grid: u64) -> Self {
        let g = grid.max(1) as i128;
        match self {
            TorusPhase::Rational(r) => {
                let scaled = Ratio::new(*r.numer() * g, *r.denom());
                let t = scaled.round().to_integer().mod_floor(&g);
                TorusPhase::Rational(Ratio::new(t, g))
            }
            TorusPhase::Real(x) => {
                let t = ((x * g as f64).round() as i128).mod_floor(&g);
                TorusPhase::Rational(Ratio::new(t, g))
            }
        }
    }

    /// `e(θ)`.
    pub fn e(&self) -> Complex64 {
        match self {
            TorusPhase::Rational(r) => {
                let (t, den) = (*r.numer(), *r.denom());
                // fold into (−1/2, 1/2] for accuracy
                let t2 = if 2 * t > den { t - den } else { t };
                e(t2 as f64 / den as f64)
            }
            TorusPhase::Real(x) => e(*x),
        }
    }
}

fn mulmod(a: i128, b: i128, m: i128) -> i128 {
    let (mut a, mut b) = (a.mod_floor(&m), b.mod_floor(&m));
    let mut acc: i128 = 0;
    while b > 0 {
        if b & 1 == 1 {
            acc = (acc + a) % m;
        }
        a = (a * 2) % m;
        b >>= 1;
    }
    acc
}

impl Add for TorusPhase {
    type Output = TorusPhase;
    fn add(self, rhs: TorusPhase) -> TorusPhase {
        match (self, rhs) {
            (TorusPhase::Rational(a), TorusPhase::Rational(b)) => {
                TorusPhase::Rational(reduce_unit(a + b))
            }
            (a, b) => TorusPhase::real(a.to_f64() + b.to_f64()),
        }
    }
}

impl Neg for TorusPhase {
    type Output = TorusPhase;
    fn neg(self) -> TorusPhase {
        match self {
            TorusPhase::Rational(a) => TorusPhase::Rational(reduce_unit(-a)),
            TorusPhase::Real(x) => TorusPhase::real(-x),
        }
    }
}

impl Sub for TorusPhase {
    type Output = TorusPhase;
    fn sub(self, rhs: TorusPhase) -> TorusPhase {
        self + (-rhs)
    }
}

impl fmt::Display for TorusPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusPhase::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            TorusPhase::Real(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Serialize)]
struct PhaseRepr {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    num: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    den: Option<String>,
}

impl Serialize for TorusPhase {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            TorusPhase::Rational(r) => PhaseRepr {
                value: self.to_f64(),
                num: Some(r.numer().to_string()),
                den: Some(r.denom().to_string()),
            },
            TorusPhase::Real(x) => PhaseRepr {
                value: *x,
                num: None,
                den: None,
            },
        };
        repr.serialize(s)
    }
}
