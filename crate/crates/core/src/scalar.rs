//! Exact rational scalars and their floating-point view.
//!
//! All algebraic identities are evaluated in [`Rational`]. Floats appear only
//! at the boundary with eigen solves and sampling, and every comparison made
//! in that view goes through [`Tolerance`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{ChaosError, Result};

pub type Rational = BigRational;

/// Absolute tolerance carried by float comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance(pub f64);

impl Tolerance {
    pub fn eq(self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.0
    }

    pub fn is_zero(self, a: f64) -> bool {
        a.abs() <= self.0
    }
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Fall back on a scaled division when numerator or denominator overflow.
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Exact rational value of a finite float.
pub fn from_f64_exact(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

/// Best rational approximation of `x` (continued fractions) within `tol`.
///
/// Falls back on the exact binary value when no convergent with a
/// moderate denominator is close enough.
pub fn approx_rational(x: f64, tol: f64) -> Rational {
    if !x.is_finite() {
        return Rational::zero();
    }
    if x == x.trunc() && x.abs() < 1e15 {
        return int(x as i64);
    }
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        let a_int = BigInt::from_f64(a).unwrap_or_default();
        let p2 = &a_int * &p1 + &p0;
        let q2 = &a_int * &q1 + &q0;
        let candidate = Rational::new(p2.clone(), q2.clone());
        if (to_f64(&candidate) - x).abs() <= tol {
            return candidate;
        }
        let frac = rest - a;
        if frac.abs() < 1e-300 || q2.bits() > 80 {
            break;
        }
        rest = 1.0 / frac;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    from_f64_exact(x)
}

/// Exact rational unit vector close to the float unit vector `v`.
///
/// Uses inverse stereographic projection from the pole opposite the largest
/// component, so coordinate axes map to themselves exactly.
pub fn rational_unit_vector(v: &[f64], tol: f64) -> Vec<Rational> {
    if v.is_empty() {
        return Vec::new();
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let pivot = u
        .iter()
        .enumerate()
        .fold(0, |best, (i, x)| if x.abs() > u[best].abs() { i } else { best });
    let sign = if u[pivot] < 0.0 { -1 } else { 1 };
    let t: Vec<Rational> = u
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if i == pivot {
                Rational::zero()
            } else {
                approx_rational(x / (1.0 + u[pivot].abs()), tol)
            }
        })
        .collect();
    let t_sq: Rational = t.iter().map(|x| x * x).sum();
    let denom = Rational::one() + &t_sq;
    t.iter()
        .enumerate()
        .map(|(i, ti)| {
            if i == pivot {
                (Rational::one() - &t_sq) / &denom * int(sign)
            } else {
                int(2) * ti / &denom
            }
        })
        .collect()
}

/// Canonical `p/q` rendering (denominator always present).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || ChaosError::Parse(format!("invalid rational `{s}`"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(p))
        }
    }
}

/// Integer square root when `n` is a perfect square.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &n * &n == *r.numer() && &d * &d == *r.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}
