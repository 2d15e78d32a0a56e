mod common;

use std::collections::BTreeMap;

use chaoscalc::multi_index::MultiIndex;
use chaoscalc::scalar::to_f64;
use chaoscalc::{compose_hermite, ChaosPoly, Rational};
use common::*;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

fn he(v: u32, k: u32) -> ChaosPoly {
    ChaosPoly::hermite(v, k)
}

fn pair(seed: u64) -> (ChaosPoly, ChaosPoly, ChaosPoly) {
    let mut r = rng(seed);
    (random_poly(&mut r, 4, 3, 5), random_poly(&mut r, 4, 3, 5), random_poly(&mut r, 4, 3, 5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ring_axioms(seed in any::<u64>()) {
        let (f, g, h) = pair(seed);
        prop_assert_eq!(f.add(&g), g.add(&f));
        prop_assert_eq!(f.add(&g).add(&h), f.add(&g.add(&h)));
        prop_assert_eq!(f.mul(&g), g.mul(&f));
        prop_assert_eq!(f.mul(&g).mul(&h), f.mul(&g.mul(&h)));
        prop_assert_eq!(f.mul(&g.add(&h)), f.mul(&g).add(&f.mul(&h)));
        prop_assert_eq!(f.mul(&ChaosPoly::one()), f.clone());
        prop_assert!(f.sub(&f).is_zero());
        prop_assert!(f.mul(&ChaosPoly::zero()).is_zero());
    }

    #[test]
    fn product_matches_power_basis_oracle(seed in any::<u64>()) {
        let (f, g, _) = pair(seed);
        let prod = f.mul(&g);
        prop_assert_eq!(&prod, &oracle_mul(&f, &g));
        if let (Some(a), Some(b)) = (f.degree(), g.degree()) {
            prop_assert!(prod.degree().unwrap_or(0) <= a + b);
        }
    }

    #[test]
    fn moments_match_wick(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_poly(&mut r, 3, 2, 4);
        let g = random_poly(&mut r, 3, 3, 4);
        prop_assert_eq!(f.inner_product(&g), wick_inner(&f, &g));
        prop_assert_eq!(f.expectation(), wick_mean(&f));
        for k in 1..=4 {
            prop_assert_eq!(f.moment(k), wick_moment(&f, k));
        }
        prop_assert!(f.variance() >= Rational::zero());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let (f, _, _) = pair(seed);
        let text = f.to_json();
        prop_assert_eq!(ChaosPoly::from_json(&text).unwrap(), f);
    }

    #[test]
    fn evaluation_matches_power_basis(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_poly(&mut r, 3, 4, 5);
        let point: BTreeMap<u32, f64> = (1..=3).map(|v| (v, r.random_range(-2.0..2.0))).collect();
        let direct: f64 = to_power(&f)
            .iter()
            .map(|(k, c)| to_f64(c) * k.iter().map(|&(v, e)| point[&v].powi(e as i32)).product::<f64>())
            .sum();
        let got = f.eval(&point).unwrap();
        prop_assert!((got - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn composed_hermite_is_orthogonal_for_unit_directions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = rational_unit(&mut r, 3);
        let x = ChaosPoly::linear((1..=3).zip(a.iter()));
        for l in 0..=3u32 {
            for m in 0..=3u32 {
                let e = compose_hermite(l, &x).inner_product(&compose_hermite(m, &x));
                let expected = if l == m {
                    Rational::from_integer((1..=l.max(1) as i64).product::<i64>().into())
                } else {
                    Rational::zero()
                };
                prop_assert_eq!(e, expected);
            }
        }
    }
}

#[test]
fn worked_products() {
    assert_eq!(he(1, 1).mul(&he(1, 1)), he(1, 2).add(&ChaosPoly::one()));
    assert_eq!(
        he(1, 2).mul(&he(1, 2)),
        he(1, 4).add(&he(1, 2).scale(&q(4, 1))).add(&ChaosPoly::constant(q(2, 1)))
    );
    assert_eq!(oracle_mul(&he(1, 2), &he(1, 2)), he(1, 2).mul(&he(1, 2)));
    assert_eq!(he(1, 1).mul(&he(2, 1)), ChaosPoly::monomial(MultiIndex::from_pairs([(1, 1), (2, 1)]), Rational::one()));
    assert_eq!(he(1, 2).moment(4), q(60, 1));
}

#[test]
fn mixed_degree_polynomials_are_not_homogeneous() {
    assert_eq!(he(1, 2).add(&he(2, 2)).homogeneous_degree(), Some(2));
    assert_eq!(he(1, 2).add(&he(2, 1)).homogeneous_degree(), None);
    assert_eq!(ChaosPoly::zero().degree(), None);
}
