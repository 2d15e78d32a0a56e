//! Exact polynomials in independent standard Gaussians, in the probabilists'
//! Hermite basis `He_k` (`He_2 = x² − 1`, `⟨He_j, He_k⟩ = k!·δ_jk`).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{ChaosError, Result};
use crate::multi_index::{MultiIndex, VarId};
use crate::scalar::{self, Rational};

/// Finite linear combination of Hermite monomials with rational
/// coefficients. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChaosPoly {
    terms: BTreeMap<MultiIndex, Rational>,
}

impl ChaosPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(MultiIndex::constant(), c)
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn monomial(index: MultiIndex, coeff: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(index, coeff);
        }
        ChaosPoly { terms }
    }

    /// `He_k(G_var)`.
    pub fn hermite(var: VarId, k: u32) -> Self {
        Self::monomial(MultiIndex::single(var, k), Rational::one())
    }

    /// `G_var`.
    pub fn gaussian(var: VarId) -> Self {
        Self::hermite(var, 1)
    }

    /// `Σ a_i G_i`.
    pub fn linear<'a, I: IntoIterator<Item = (VarId, &'a Rational)>>(coeffs: I) -> Self {
        Self::from_terms(coeffs.into_iter().map(|(v, c)| (MultiIndex::single(v, 1), c.clone())))
    }

    /// Sums repeated indices and prunes zeros.
    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, Rational)>>(terms: I) -> Self {
        let mut out = BTreeMap::new();
        for (index, c) in terms {
            accumulate(&mut out, index, c);
        }
        out.retain(|_, c| !c.is_zero());
        ChaosPoly { terms: out }
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Rational> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, index: &MultiIndex) -> Rational {
        self.terms.get(index).cloned().unwrap_or_else(Rational::zero)
    }

    /// Maximum total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::total_degree).max()
    }

    /// Sorted set of total degrees present.
    pub fn degrees(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.terms.keys().map(MultiIndex::total_degree).collect();
        set.into_iter().collect()
    }

    /// The common degree when every term lies in one chaos. The zero
    /// polynomial is not homogeneous of any particular degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        match self.degrees().as_slice() {
            [p] => Some(*p),
            _ => None,
        }
    }

    /// Checks membership of a single chaos; zero counts as homogeneous of
    /// every degree and is reported as degree 0.
    pub fn require_homogeneous(&self, argument: &'static str) -> Result<u32> {
        if self.is_zero() {
            return Ok(0);
        }
        self.homogeneous_degree().ok_or_else(|| ChaosError::NotHomogeneous {
            argument,
            degrees: self.degrees(),
        })
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.terms.keys().flat_map(|m| m.vars().collect::<Vec<_>>()).collect()
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.vars().into_iter().next_back()
    }

    /// Smallest id strictly above every id used by `self`.
    pub fn fresh_var(&self) -> VarId {
        self.max_var().map_or(1, |v| v + 1)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        ChaosPoly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    /// Applies `f` to each term's coefficient keyed by its index.
    pub fn map_terms<F: Fn(&MultiIndex, &Rational) -> Rational>(&self, f: F) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, a)| (m.clone(), f(m, a))))
    }

    /// Keeps the terms for which `keep` holds.
    pub fn filter<F: Fn(&MultiIndex) -> bool>(&self, keep: F) -> Self {
        ChaosPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, a)| (m.clone(), a.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            accumulate(&mut terms, m.clone(), c.clone());
        }
        terms.retain(|_, c| !c.is_zero());
        ChaosPoly { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    /// Exact product re-expanded in the Hermite basis.
    pub fn mul(&self, other: &Self) -> Self {
        let mut cache: HashMap<(u32, u32), Vec<(u32, BigInt)>> = HashMap::new();
        let mut out: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let c = ca * cb;
                for (m, w) in monomial_product(ma, mb, &mut cache) {
                    accumulate(&mut out, m, &c * Rational::from_integer(w));
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        ChaosPoly { terms: out }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `∂_var`, using `He_k' = k·He_{k−1}`.
    pub fn partial_derivative(&self, var: VarId) -> Self {
        Self::from_terms(self.terms.iter().filter_map(|(m, c)| {
            let k = m.degree_of(var);
            (k > 0).then(|| (m.with_degree(var, k - 1), c * scalar::int(k as i64)))
        }))
    }

    /// `E[f]`, the constant coefficient.
    pub fn expectation(&self) -> Rational {
        self.coeff(&MultiIndex::constant())
    }

    /// `E[f g] = Σ c_f c_g ∏ k_i!` over shared indices.
    pub fn inner_product(&self, other: &Self) -> Rational {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small
            .terms
            .iter()
            .filter_map(|(m, a)| {
                large
                    .terms
                    .get(m)
                    .map(|b| a * b * Rational::from_integer(m.factorial_weight()))
            })
            .sum()
    }

    pub fn norm_sq(&self) -> Rational {
        self.inner_product(self)
    }

    pub fn norm(&self) -> f64 {
        scalar::to_f64(&self.norm_sq()).max(0.0).sqrt()
    }

    pub fn variance(&self) -> Rational {
        let mean = self.expectation();
        self.norm_sq() - &mean * &mean
    }

    /// Orthogonal projection `J_m` onto the `m`-th chaos.
    pub fn project_chaos(&self, m: u32) -> Self {
        self.filter(|idx| idx.total_degree() == m)
    }

    /// Exact `E[f^k]`, computed as `⟨f^⌈k/2⌉, f^⌊k/2⌋⟩`.
    pub fn moment(&self, k: u32) -> Rational {
        let lo = self.pow(k / 2);
        if k % 2 == 0 {
            lo.norm_sq()
        } else {
            lo.inner_product(&lo.mul(self))
        }
    }

    /// Numeric evaluation through the three-term Hermite recurrence.
    pub fn eval(&self, point: &BTreeMap<VarId, f64>) -> Result<f64> {
        let missing: Vec<VarId> = self.vars().into_iter().filter(|v| !point.contains_key(v)).collect();
        if !missing.is_empty() {
            return Err(ChaosError::MissingVariables(missing));
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                scalar::to_f64(c)
                    * m.entries().iter().map(|&(v, k)| hermite_value(k, point[&v])).product::<f64>()
            })
            .sum())
    }

    /// Coefficients as floats, for the sampling and eigen paths.
    pub fn to_float_terms(&self) -> Vec<(MultiIndex, f64)> {
        self.terms.iter().map(|(m, c)| (m.clone(), scalar::to_f64(c))).collect()
    }
}

/// `He_l(x)` composed with an arbitrary polynomial, re-expanded exactly.
pub fn compose_hermite(l: u32, x: &ChaosPoly) -> ChaosPoly {
    let mut prev = ChaosPoly::one();
    if l == 0 {
        return prev;
    }
    let mut cur = x.clone();
    for k in 1..l {
        let next = x.mul(&cur).sub(&prev.scale(&scalar::int(k as i64)));
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `He_k(x)` as a float.
pub fn hermite_value(k: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Linearization coefficients `He_m He_n = Σ_r C(m,r) C(n,r) r! He_{m+n−2r}`.
pub fn hermite_linearization(m: u32, n: u32) -> Vec<(u32, BigInt)> {
    (0..=m.min(n))
        .map(|r| {
            let w = scalar::binomial(m, r) * scalar::binomial(n, r) * scalar::factorial(r);
            (m + n - 2 * r, w)
        })
        .collect()
}

fn monomial_product(
    a: &MultiIndex,
    b: &MultiIndex,
    cache: &mut HashMap<(u32, u32), Vec<(u32, BigInt)>>,
) -> Vec<(MultiIndex, BigInt)> {
    let mut fixed: Vec<(VarId, u32)> = Vec::new();
    let mut shared: Vec<(VarId, u32, u32)> = Vec::new();
    let (ea, eb) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    while i < ea.len() || j < eb.len() {
        match (ea.get(i), eb.get(j)) {
            (Some(&(va, da)), Some(&(vb, db))) if va == vb => {
                shared.push((va, da, db));
                i += 1;
                j += 1;
            }
            (Some(&(va, da)), Some(&(vb, _))) if va < vb => {
                fixed.push((va, da));
                i += 1;
            }
            (Some(&(va, da)), None) => {
                fixed.push((va, da));
                i += 1;
            }
            (_, Some(&(vb, db))) => {
                fixed.push((vb, db));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    let mut partial: Vec<(Vec<(VarId, u32)>, BigInt)> = vec![(fixed, BigInt::one())];
    for (v, da, db) in shared {
        let lin = cache.entry((da, db)).or_insert_with(|| hermite_linearization(da, db));
        let mut next = Vec::with_capacity(partial.len() * lin.len());
        for (pairs, w) in &partial {
            for (deg, c) in lin.iter() {
                let mut p = pairs.clone();
                if *deg > 0 {
                    p.push((v, *deg));
                }
                next.push((p, w * c));
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .map(|(pairs, w)| (MultiIndex::from_pairs(pairs), w))
        .collect()
}

fn accumulate(map: &mut BTreeMap<MultiIndex, Rational>, index: MultiIndex, c: Rational) {
    if c.is_zero() {
        return;
    }
    match map.get_mut(&index) {
        Some(existing) => *existing += c,
        None => {
            map.insert(index, c);
        }
    }
}

impl fmt::Display for ChaosPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for &(v, k) in m.entries() {
                write!(f, "·He{k}(G{v})")?;
            }
        }
        Ok(())
    }
}

impl Add for &ChaosPoly {
    type Output = ChaosPoly;
    fn add(self, rhs: &ChaosPoly) -> ChaosPoly {
        ChaosPoly::add(self, rhs)
    }
}

impl Sub for &ChaosPoly {
    type Output = ChaosPoly;
    fn sub(self, rhs: &ChaosPoly) -> ChaosPoly {
        ChaosPoly::sub(self, rhs)
    }
}

impl Mul for &ChaosPoly {
    type Output = ChaosPoly;
    fn mul(self, rhs: &ChaosPoly) -> ChaosPoly {
        ChaosPoly::mul(self, rhs)
    }
}

impl Neg for &ChaosPoly {
    type Output = ChaosPoly;
    fn neg(self) -> ChaosPoly {
        self.scale(&-Rational::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn he(v: VarId, k: u32) -> ChaosPoly {
        ChaosPoly::hermite(v, k)
    }

    #[test]
    fn addition() {
        assert_eq!(&he(1, 2) + &ChaosPoly::zero(), he(1, 2));
        assert!((&he(1, 2) - &he(1, 2)).is_zero());
        let s = &he(1, 1) + &he(2, 1);
        assert_eq!(s.len(), 2);
        assert_eq!(s.coeff(&MultiIndex::single(1, 1)), int(1));
        assert_eq!(s.coeff(&MultiIndex::single(2, 1)), int(1));
    }

    #[test]
    fn multiplication() {
        assert_eq!(&he(1, 1) * &he(1, 1), &he(1, 2) + &ChaosPoly::one());
        assert_eq!(
            &he(1, 1) * &he(2, 1),
            ChaosPoly::monomial(MultiIndex::from_pairs([(1, 1), (2, 1)]), int(1))
        );
        let sq = &he(1, 2) * &he(1, 2);
        let expected = ChaosPoly::from_terms([
            (MultiIndex::single(1, 4), int(1)),
            (MultiIndex::single(1, 2), int(4)),
            (MultiIndex::constant(), int(2)),
        ]);
        assert_eq!(sq, expected);
    }

    #[test]
    fn derivatives() {
        assert_eq!(he(1, 3).partial_derivative(1), he(1, 2).scale(&int(3)));
        assert!(he(1, 3).partial_derivative(2).is_zero());
        let f = &he(1, 2) * &he(2, 1);
        assert_eq!(f.partial_derivative(1), (&he(1, 1) * &he(2, 1)).scale(&int(2)));
    }

    #[test]
    fn expectations_and_inner_products() {
        assert_eq!(he(1, 2).expectation(), int(0));
        assert_eq!(ChaosPoly::constant(int(5)).expectation(), int(5));
        assert_eq!((&he(1, 2) * &he(1, 2)).expectation(), int(2));
        assert_eq!(he(1, 2).inner_product(&he(1, 2)), int(2));
        assert_eq!(he(1, 2).inner_product(&he(1, 1)), int(0));
        let g12 = &he(1, 1) * &he(2, 1);
        assert_eq!(g12.inner_product(&g12), int(1));
    }

    #[test]
    fn projections() {
        let f = he(1, 2).add(&he(1, 1).scale(&int(3))).add(&ChaosPoly::one());
        assert_eq!(f.project_chaos(2), he(1, 2));
        assert_eq!(f.project_chaos(0), ChaosPoly::one());
        assert!(he(1, 2).project_chaos(5).is_zero());
    }

    #[test]
    fn composition() {
        assert_eq!(compose_hermite(0, &he(4, 3)), ChaosPoly::one());
        assert_eq!(compose_hermite(2, &he(1, 1)), he(1, 2));
        let x = ChaosPoly::from_terms([
            (MultiIndex::single(1, 1), ratio(3, 5)),
            (MultiIndex::single(2, 1), ratio(4, 5)),
        ]);
        let expected = ChaosPoly::from_terms([
            (MultiIndex::single(1, 2), ratio(9, 25)),
            (MultiIndex::single(2, 2), ratio(16, 25)),
            (MultiIndex::from_pairs([(1, 1), (2, 1)]), ratio(24, 25)),
        ]);
        assert_eq!(compose_hermite(2, &x), expected);
        for l in 0..=8 {
            assert_eq!(compose_hermite(l, &he(3, 1)), he(3, l));
        }
    }

    #[test]
    fn evaluation() {
        let pt = BTreeMap::from([(1, 2.0)]);
        assert_eq!(he(1, 2).eval(&pt).unwrap(), 3.0);
        assert_eq!(ChaosPoly::one().eval(&BTreeMap::new()).unwrap(), 1.0);
        let g12 = &he(1, 1) * &he(2, 1);
        assert_eq!(g12.eval(&BTreeMap::from([(1, 2.0), (2, -3.0)])).unwrap(), -6.0);
        assert_eq!(
            g12.eval(&pt).unwrap_err(),
            ChaosError::MissingVariables(vec![2])
        );
    }

    #[test]
    fn moments() {
        assert_eq!(he(1, 1).moment(2), int(1));
        assert_eq!(he(1, 1).moment(4), int(3));
        assert_eq!(he(1, 1).moment(6), int(15));
        assert_eq!(he(1, 1).moment(3), int(0));
        assert_eq!(he(1, 2).moment(4), int(60));
        assert_eq!(he(1, 2).moment(3), int(8));
    }

    #[test]
    fn degree_bookkeeping() {
        assert_eq!(ChaosPoly::zero().degree(), None);
        assert_eq!(ChaosPoly::one().degree(), Some(0));
        let f = he(1, 2).add(&he(2, 1));
        assert_eq!(f.degree(), Some(2));
        assert_eq!(f.homogeneous_degree(), None);
        assert!(f.require_homogeneous("f").is_err());
        assert_eq!(he(2, 3).fresh_var(), 3);
        assert_eq!(ChaosPoly::one().fresh_var(), 1);
    }
}
