//! Ornstein–Uhlenbeck generator, carré du champ and exact checks of the
//! operator identities they satisfy on Wiener chaoses.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::poly::ChaosPoly;
use crate::scalar::{self, format_rational, Rational};

/// `L f = Σ_m (−m) J_m f`.
pub fn ou_generator(f: &ChaosPoly) -> ChaosPoly {
    f.map_terms(|m, c| c * scalar::int(-(m.total_degree() as i64)))
}

/// `Γ[f, g] = ½ (L(fg) − f·Lg − g·Lf)`.
pub fn carre_du_champ(f: &ChaosPoly, g: &ChaosPoly) -> ChaosPoly {
    let fg = f.mul(g);
    ou_generator(&fg)
        .sub(&f.mul(&ou_generator(g)))
        .sub(&g.mul(&ou_generator(f)))
        .scale(&scalar::ratio(1, 2))
}

/// `Σ_i ∂_i f · ∂_i g`, computed independently of the generator.
pub fn gamma_gradient(f: &ChaosPoly, g: &ChaosPoly) -> ChaosPoly {
    let gv = g.vars();
    f.vars()
        .into_iter()
        .filter(|v| gv.contains(v))
        .fold(ChaosPoly::zero(), |acc, v| {
            acc.add(&f.partial_derivative(v).mul(&g.partial_derivative(v)))
        })
}

/// `‖Γ(f, x)‖_{L²}`; vanishes when `f` lies in the independence algebra of `x`.
pub fn independence_score(f: &ChaosPoly, x: &ChaosPoly) -> f64 {
    gamma_gradient(f, x).norm()
}

/// Outcome of an exact identity or inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub lhs: Rational,
    pub rhs: Rational,
    pub residual: Rational,
    pub holds: bool,
}

impl IdentityReport {
    fn equality(lhs: Rational, rhs: Rational) -> Self {
        let residual = &lhs - &rhs;
        let holds = num_traits::Zero::is_zero(&residual);
        IdentityReport { lhs, rhs, residual, holds }
    }

    fn at_most(lhs: Rational, rhs: Rational) -> Self {
        let residual = &lhs - &rhs;
        let holds = lhs <= rhs;
        IdentityReport { lhs, rhs, residual, holds }
    }
}

impl Serialize for IdentityReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("IdentityReport", 4)?;
        s.serialize_field("lhs", &format_rational(&self.lhs))?;
        s.serialize_field("rhs", &format_rational(&self.rhs))?;
        s.serialize_field("residual", &format_rational(&self.residual))?;
        s.serialize_field("holds", &self.holds)?;
        s.end()
    }
}

/// `−E[f·Lg] = E[Γ(f, g)]`.
pub fn check_ipp(f: &ChaosPoly, g: &ChaosPoly) -> IdentityReport {
    let lhs = -f.inner_product(&ou_generator(g));
    let rhs = carre_du_champ(f, g).expectation();
    IdentityReport::equality(lhs, rhs)
}

/// `E[Γ(f, g) h] = ((p + q − r)/2)·E[f g h]` for `(f, g, h) ∈ W_p × W_q × W_r`.
pub fn check_algebraic_identity(f: &ChaosPoly, g: &ChaosPoly, h: &ChaosPoly) -> Result<IdentityReport> {
    let p = f.require_homogeneous("f")? as i64;
    let q = g.require_homogeneous("g")? as i64;
    let r = h.require_homogeneous("h")? as i64;
    let lhs = carre_du_champ(f, g).inner_product(h);
    let rhs = scalar::ratio(p + q - r, 2) * f.mul(g).inner_product(h);
    Ok(IdentityReport::equality(lhs, rhs))
}

/// `E[Γ(x, y)²] ≤ ((p + q)/2)·E[x y Γ(x, y)]` for `(x, y) ∈ W_p × W_q`.
///
/// Expanding `Γ = ½(L + p + q)(xy)` gives
/// `E[Γ²] = ¼E[xy·L(L + p + q)(xy)] + ½(p + q)E[xyΓ]`, and the first term
/// is non-positive because `xy ∈ W_{≤ p+q}`.
pub fn check_spectral_inequality(x: &ChaosPoly, y: &ChaosPoly) -> Result<IdentityReport> {
    let p = x.require_homogeneous("x")? as i64;
    let q = y.require_homogeneous("y")? as i64;
    let gamma = carre_du_champ(x, y);
    let lhs = gamma.norm_sq();
    let rhs = scalar::ratio(p + q, 2) * x.mul(y).inner_product(&gamma);
    Ok(IdentityReport::at_most(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ChaosError;
    use crate::scalar::int;

    fn he(v: u32, k: u32) -> ChaosPoly {
        ChaosPoly::hermite(v, k)
    }

    fn g12() -> ChaosPoly {
        &he(1, 1) * &he(2, 1)
    }

    #[test]
    fn generator_acts_stratum_wise() {
        assert_eq!(ou_generator(&he(1, 3)), he(1, 3).scale(&int(-3)));
        assert!(ou_generator(&ChaosPoly::constant(int(7))).is_zero());
        let f = he(1, 2).add(&he(2, 1));
        assert_eq!(ou_generator(&f), he(1, 2).scale(&int(-2)).sub(&he(2, 1)));
    }

    #[test]
    fn carre_du_champ_examples() {
        assert_eq!(carre_du_champ(&he(1, 1), &he(1, 1)), ChaosPoly::one());
        assert_eq!(carre_du_champ(&he(1, 2), &he(1, 1)), he(1, 1).scale(&int(2)));
        let expected = he(1, 2).add(&he(2, 2)).add(&ChaosPoly::constant(int(2)));
        assert_eq!(carre_du_champ(&g12(), &g12()), expected);
    }

    #[test]
    fn gradient_examples() {
        assert!(gamma_gradient(&he(1, 1), &he(2, 1)).is_zero());
        let expected = he(1, 2).scale(&int(4)).add(&ChaosPoly::constant(int(4)));
        assert_eq!(gamma_gradient(&he(1, 2), &he(1, 2)), expected);
        assert!(gamma_gradient(&ChaosPoly::constant(int(3)), &g12()).is_zero());
    }

    #[test]
    fn ipp_examples() {
        let r = check_ipp(&he(1, 1), &he(1, 1));
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(1), int(1), true));
        let r = check_ipp(&he(1, 2), &he(1, 2));
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(4), int(4), true));
        let r = check_ipp(&he(1, 1), &he(2, 1));
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(0), int(0), true));
    }

    #[test]
    fn algebraic_identity_examples() {
        let r = check_algebraic_identity(&g12(), &he(1, 1), &he(2, 1)).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(1), int(1), true));
        let r = check_algebraic_identity(&he(1, 1), &he(2, 1), &g12()).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(0), int(0), true));
        let r = check_algebraic_identity(&he(1, 2), &he(1, 2), &ChaosPoly::one()).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(4), int(4), true));
    }

    #[test]
    fn algebraic_identity_rejects_mixed_degrees() {
        let mixed = he(1, 2).add(&he(2, 1));
        match check_algebraic_identity(&he(1, 1), &mixed, &he(1, 1)) {
            Err(ChaosError::NotHomogeneous { argument, .. }) => assert_eq!(argument, "g"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(check_spectral_inequality(&mixed, &he(1, 1)).is_err());
    }

    #[test]
    fn spectral_inequality_examples() {
        let r = check_spectral_inequality(&he(1, 1), &he(1, 1)).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(1), int(1), true));
        let r = check_spectral_inequality(&he(1, 1), &he(2, 1)).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(0), int(0), true));
        let r = check_spectral_inequality(&he(1, 2), &he(1, 2)).unwrap();
        assert_eq!((r.lhs.clone(), r.rhs.clone(), r.holds), (int(48), int(80), true));
    }

    #[test]
    fn quarter_constant_fails_on_a_single_gaussian() {
        // E[Γ(G1,G1)²] = 1 while (1+1)/4·E[G1²·Γ] = 1/2.
        let x = he(1, 1);
        let gamma = carre_du_champ(&x, &x);
        let quarter = scalar::ratio(2, 4) * x.mul(&x).inner_product(&gamma);
        assert!(gamma.norm_sq() > quarter);
    }

    #[test]
    fn independence_examples() {
        assert_eq!(independence_score(&he(1, 2), &he(2, 1)), 0.0);
        assert_eq!(independence_score(&he(1, 1), &he(1, 1)), 1.0);
        assert_eq!(independence_score(&g12(), &he(1, 1)), 1.0);
    }

    #[test]
    fn report_json() {
        let r = check_ipp(&he(1, 2), &he(1, 2));
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"lhs":"4/1","rhs":"4/1","residual":"0/1","holds":true}"#
        );
    }
}
