//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chaoscalc::multi_index::{MultiIndex, VarId};
use chaoscalc::{ChaosPoly, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(p: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(d))
}

fn fact(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// Polynomial in the power basis: exponent vector (var → power) → coefficient.
pub type Power = BTreeMap<Vec<(VarId, u32)>, Rational>;

fn insert(p: &mut Power, key: Vec<(VarId, u32)>, c: Rational) {
    let e = p.entry(key.clone()).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        p.remove(&key);
    }
}

/// `He_k(x) = Σ_j (−1)^j k!/(j!(k−2j)!2^j) x^{k−2j}`.
fn hermite_power(k: u32) -> Vec<(u32, Rational)> {
    (0..=k / 2)
        .map(|j| {
            let c = Rational::from_integer(fact(k))
                / Rational::from_integer(fact(j) * fact(k - 2 * j) * BigInt::from(2).pow(j));
            (k - 2 * j, if j % 2 == 1 { -c } else { c })
        })
        .collect()
}

/// `x^n = Σ_j n!/(j!(n−2j)!2^j) He_{n−2j}(x)`.
fn power_hermite(n: u32) -> Vec<(u32, Rational)> {
    (0..=n / 2)
        .map(|j| {
            let c = Rational::from_integer(fact(n))
                / Rational::from_integer(fact(j) * fact(n - 2 * j) * BigInt::from(2).pow(j));
            (n - 2 * j, c)
        })
        .collect()
}

pub fn to_power(f: &ChaosPoly) -> Power {
    let mut out = Power::new();
    for (idx, c) in f.iter() {
        let mut partial: Vec<(Vec<(VarId, u32)>, Rational)> = vec![(Vec::new(), c.clone())];
        for &(v, k) in idx.entries() {
            let mut next = Vec::new();
            for (key, a) in &partial {
                for (e, b) in hermite_power(k) {
                    let mut key = key.clone();
                    if e > 0 {
                        key.push((v, e));
                    }
                    next.push((key, a * &b));
                }
            }
            partial = next;
        }
        for (k, c) in partial {
            insert(&mut out, k, c);
        }
    }
    out
}

pub fn from_power(p: &Power) -> ChaosPoly {
    let mut terms: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
    for (key, c) in p {
        let mut partial: Vec<(Vec<(VarId, u32)>, Rational)> = vec![(Vec::new(), c.clone())];
        for &(v, n) in key {
            let mut next = Vec::new();
            for (k, a) in &partial {
                for (d, b) in power_hermite(n) {
                    let mut k = k.clone();
                    if d > 0 {
                        k.push((v, d));
                    }
                    next.push((k, a * &b));
                }
            }
            partial = next;
        }
        for (k, c) in partial {
            *terms.entry(MultiIndex::from_pairs(k)).or_insert_with(Rational::zero) += c;
        }
    }
    ChaosPoly::from_terms(terms)
}

pub fn power_mul(a: &Power, b: &Power) -> Power {
    let mut out = Power::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let mut m: BTreeMap<VarId, u32> = ka.iter().copied().collect();
            for &(v, e) in kb {
                *m.entry(v).or_insert(0) += e;
            }
            insert(&mut out, m.into_iter().collect(), ca * cb);
        }
    }
    out
}

/// Product through the power basis.
pub fn oracle_mul(f: &ChaosPoly, g: &ChaosPoly) -> ChaosPoly {
    from_power(&power_mul(&to_power(f), &to_power(g)))
}

fn double_factorial_odd(n: u32) -> BigInt {
    // (n − 1)!! for even n
    (1..n).step_by(2).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// Isserlis/Wick: `E[∏ G_i^{n_i}] = ∏ (n_i − 1)!!` for even powers, else 0.
pub fn wick_expectation(p: &Power) -> Rational {
    p.iter()
        .filter(|(k, _)| k.iter().all(|&(_, e)| e % 2 == 0))
        .map(|(k, c)| c * Rational::from_integer(k.iter().map(|&(_, e)| double_factorial_odd(e)).product()))
        .sum()
}

pub fn wick_mean(f: &ChaosPoly) -> Rational {
    wick_expectation(&to_power(f))
}

/// `E[f g]` through the power basis.
pub fn wick_inner(f: &ChaosPoly, g: &ChaosPoly) -> Rational {
    wick_expectation(&power_mul(&to_power(f), &to_power(g)))
}

/// `E[f^k]` through the power basis.
pub fn wick_moment(f: &ChaosPoly, k: u32) -> Rational {
    let pf = to_power(f);
    let mut acc: Power = [(Vec::new(), Rational::one())].into_iter().collect();
    for _ in 0..k {
        acc = power_mul(&acc, &pf);
    }
    wick_expectation(&acc)
}

pub fn small_rational<R: Rng>(rng: &mut R) -> Rational {
    loop {
        let n: i64 = rng.random_range(-6..=6);
        if n != 0 {
            return q(n, rng.random_range(1..=4));
        }
    }
}

fn random_index<R: Rng>(rng: &mut R, vars: u32, degree: u32) -> MultiIndex {
    MultiIndex::from_pairs((0..degree).map(|_| (rng.random_range(1..=vars), 1)))
}

/// Random polynomial with up to `terms` terms, `≤ vars` variables, total degree `≤ max_degree`.
pub fn random_poly<R: Rng>(rng: &mut R, vars: u32, max_degree: u32, terms: usize) -> ChaosPoly {
    let n = rng.random_range(1..=terms);
    ChaosPoly::from_terms((0..n).map(|_| {
        let d = rng.random_range(0..=max_degree);
        (random_index(rng, vars, d), small_rational(rng))
    }))
}

/// Random nonzero element of `W_degree`.
pub fn random_homogeneous<R: Rng>(rng: &mut R, vars: u32, degree: u32, terms: usize) -> ChaosPoly {
    loop {
        let n = rng.random_range(1..=terms);
        let f = ChaosPoly::from_terms((0..n).map(|_| (random_index(rng, vars, degree), small_rational(rng))));
        if !f.is_zero() {
            return f;
        }
    }
}

/// Exact rational unit vector `((1 − |t|²), 2t)/(1 + |t|²)` in dimension `n`.
pub fn rational_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<Rational> {
    if n == 1 {
        return vec![if rng.random::<bool>() { Rational::one() } else { -Rational::one() }];
    }
    let t: Vec<Rational> = (0..n - 1).map(|_| q(rng.random_range(-4..=4), rng.random_range(1..=3))).collect();
    let s: Rational = t.iter().map(|x| x * x).sum();
    let den = Rational::one() + &s;
    let mut v = vec![(Rational::one() - &s) / &den];
    v.extend(t.iter().map(|x| q(2, 1) * x / &den));
    v
}

/// Product of Householder reflections `I − 2uuᵀ` for rational unit `u`:
/// an exactly orthogonal rational matrix.
pub fn rational_orthogonal<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    for _ in 0..2 {
        let u = rational_unit(rng, n);
        let h: Vec<Vec<Rational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = if i == j { Rational::one() } else { Rational::zero() };
                        d - q(2, 1) * &u[i] * &u[j]
                    })
                    .collect()
            })
            .collect();
        m = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| &h[i][k] * &m[k][j]).sum()).collect())
            .collect();
    }
    m
}

/// `Σ_k He_2(G_k)/√2` over `vars`, scaled by `1/√n` with `n = vars.len()`,
/// with `1/√(2n)` rounded to a rational.
pub fn clt_family(vars: &[VarId]) -> ChaosPoly {
    let c = chaoscalc::scalar::approx_rational(1.0 / (2.0 * vars.len() as f64).sqrt(), 1e-17);
    ChaosPoly::from_terms(vars.iter().map(|&v| (MultiIndex::single(v, 2), c.clone())))
}

/// Same family with the exact square of the scale, `(1/2n)·Σ He_2`, used
/// where exact arithmetic must not see rounding: returns `(Σ He_2(G_k), 1/(2n))`.
pub fn clt_family_unscaled(vars: &[VarId]) -> (ChaosPoly, Rational) {
    let f = ChaosPoly::from_terms(vars.iter().map(|&v| (MultiIndex::single(v, 2), Rational::one())));
    (f, q(1, 2 * vars.len() as i64))
}

/// Independent maximization of `‖Γ(f, X)‖` over unit `X` in the span of the
/// normalized Hermite monomials of degree `q` over `vars`: a fifth of the
/// `draws` are uniform random unit directions, the rest random plane
/// searches, each maximizing over the great circle through the current best
/// and a random orthogonal direction. Returns every candidate value seen and
/// the best.
pub fn random_search_rho(f: &ChaosPoly, vars: &[VarId], q: u32, draws: usize, seed: u64) -> (Vec<f64>, f64) {
    use chaoscalc::malliavin::carre_du_champ;
    use chaoscalc::multi_index::indices_of_degree;
    use chaoscalc::scalar::to_f64;
    let basis = indices_of_degree(vars, q);
    let gammas: Vec<ChaosPoly> = basis
        .iter()
        .map(|idx| carre_du_champ(f, &ChaosPoly::monomial(idx.clone(), Rational::one())))
        .collect();
    let rows: std::collections::BTreeSet<MultiIndex> = gammas.iter().flat_map(|g| g.terms().keys().cloned()).collect();
    let phi: Vec<Vec<f64>> = rows
        .iter()
        .map(|beta| {
            let wb = to_f64(&Rational::from_integer(beta.factorial_weight())).sqrt();
            basis
                .iter()
                .zip(&gammas)
                .map(|(alpha, g)| {
                    let wa = to_f64(&Rational::from_integer(alpha.factorial_weight())).sqrt();
                    to_f64(&g.coeff(beta)) * wb / wa
                })
                .collect()
        })
        .collect();
    let dim = basis.len();
    let value = |v: &[f64]| -> f64 {
        phi.iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let normalize = |v: &mut Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
    };
    let mut r = rng(seed);
    let gauss = |r: &mut ChaCha8Rng| -> f64 { r.sample(rand_distr::StandardNormal) };
    let mut seen = Vec::with_capacity(draws);
    let mut best_v = vec![0.0; dim];
    let mut best = f64::NEG_INFINITY;
    let explore = draws / 5;
    for _ in 0..explore.max(1) {
        let mut v: Vec<f64> = (0..dim).map(|_| gauss(&mut r)).collect();
        normalize(&mut v);
        let val = value(&v);
        seen.push(val);
        if val > best {
            best = val;
            best_v = v;
        }
    }
    let apply = |v: &[f64]| -> Vec<f64> { phi.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let apply_t = |w: &[f64]| -> Vec<f64> { (0..dim).map(|j| phi.iter().zip(w).map(|(row, x)| row[j] * x).sum()).collect() };
    for step in explore.max(1)..draws {
        // Alternate random planes with the plane spanned by the ascent direction.
        let mut d: Vec<f64> = if step % 2 == 0 {
            apply_t(&apply(&best_v))
        } else {
            (0..dim).map(|_| gauss(&mut r)).collect()
        };
        let along = dot(&d, &best_v);
        d.iter_mut().zip(&best_v).for_each(|(x, b)| *x -= along * b);
        if d.iter().map(|x| x * x).sum::<f64>() < 1e-24 {
            continue;
        }
        normalize(&mut d);
        let (pv, pd) = (apply(&best_v), apply(&d));
        let (a, b, c) = (dot(&pv, &pv), dot(&pv, &pd), dot(&pd, &pd));
        let theta = 0.5 * (2.0 * b).atan2(a - c);
        let mut v: Vec<f64> = best_v.iter().zip(&d).map(|(x, y)| x * theta.cos() + y * theta.sin()).collect();
        normalize(&mut v);
        let val = value(&v);
        seen.push(val);
        if val > best {
            best = val;
            best_v = v;
        }
    }
    (seen, best)
}
