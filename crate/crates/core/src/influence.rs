//! Directional influences `ρ_q(F) = sup { ‖Γ(F, X)‖ : X ∈ W_q, E[X²] = 1 }`,
//! the direction of strongest influence, and variable influences of
//! multilinear polynomials.
//!
//! The supremum is taken over the span of normalized Hermite monomials of
//! degree `q` in the variables of `F` plus a configurable number of fresh
//! variables, which turns it into the top eigenvalue of the quadratic form
//! `Q_αβ = ⟨Γ(F, e_α), Γ(F, e_β)⟩`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::ensembles::MultilinearPoly;
use crate::error::{ChaosError, Result};
use crate::linalg::{jacobi_eigen, top_eigenpair};
use crate::malliavin::carre_du_champ;
use crate::multi_index::{count_of_degree, indices_of_degree, MultiIndex, VarId};
use crate::poly::ChaosPoly;
use crate::scalar::{self, approx_rational, rational_unit_vector, Rational};

pub const MAX_BASIS_DIM_ENV: &str = "CHAOSCALC_MAX_BASIS_DIM";
pub const DEFAULT_MAX_BASIS_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfluenceConfig {
    pub max_basis_dim: usize,
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        InfluenceConfig { max_basis_dim: DEFAULT_MAX_BASIS_DIM }
    }
}

impl InfluenceConfig {
    /// Reads the basis cap from `CHAOSCALC_MAX_BASIS_DIM`.
    pub fn from_env() -> Self {
        let max_basis_dim = std::env::var(MAX_BASIS_DIM_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_BASIS_DIM);
        InfluenceConfig { max_basis_dim }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceResult {
    pub q: u32,
    pub value: f64,
    /// Unit-norm element of `W_q` attaining the value on the assembled basis.
    pub direction: ChaosPoly,
    pub basis_dimension: usize,
    pub extra_variables_used: u32,
}

impl InfluenceResult {
    pub fn to_json_value(&self) -> Value {
        json!({
            "q": self.q,
            "value": self.value,
            "direction": self.direction.to_json_value(),
            "basis_dimension": self.basis_dimension,
            "extra_variables_used": self.extra_variables_used,
        })
    }
}

fn fallback_direction(f: &ChaosPoly, q: u32) -> ChaosPoly {
    // A unit element of W_q in a variable f does not use.
    let v = f.fresh_var();
    let weight = scalar::to_f64(&Rational::from_integer(scalar::factorial(q)));
    ChaosPoly::monomial(MultiIndex::single(v, q), approx_rational(1.0 / weight.sqrt(), 1e-17))
}

/// `ρ_1` through the gradient Gram matrix `M_ij = ⟨∂_i f, ∂_j f⟩`.
///
/// The direction is an exact rational unit vector `Σ a_i G_i`.
pub fn rho_1(f: &ChaosPoly) -> InfluenceResult {
    let vars: Vec<VarId> = f.vars().into_iter().collect();
    if vars.is_empty() {
        return InfluenceResult {
            q: 1,
            value: 0.0,
            direction: fallback_direction(f, 1),
            basis_dimension: 0,
            extra_variables_used: 0,
        };
    }
    let grads: Vec<ChaosPoly> = vars.iter().map(|&v| f.partial_derivative(v)).collect();
    let m: Vec<Vec<f64>> = grads
        .iter()
        .map(|gi| grads.iter().map(|gj| scalar::to_f64(&gi.inner_product(gj))).collect())
        .collect();
    let eig = jacobi_eigen(&m);
    let (lambda, vec) = top_eigenpair(&eig).expect("nonempty matrix");
    let a = rational_unit_vector(&vec, 1e-15);
    InfluenceResult {
        q: 1,
        value: lambda.max(0.0).sqrt(),
        direction: ChaosPoly::linear(vars.iter().copied().zip(a.iter())),
        basis_dimension: vars.len(),
        extra_variables_used: 0,
    }
}

/// Variables of `f` followed by `extra_vars` fresh ids.
pub fn influence_variables(f: &ChaosPoly, extra_vars: u32) -> Vec<VarId> {
    let mut vars: Vec<VarId> = f.vars().into_iter().collect();
    let fresh = f.fresh_var();
    vars.extend((0..extra_vars).map(|k| fresh + k));
    vars
}

/// The quadratic form of `ρ_q` on normalized Hermite monomials, with the
/// basis indices it was assembled on.
pub fn influence_form(
    f: &ChaosPoly,
    q: u32,
    extra_vars: u32,
    config: &InfluenceConfig,
) -> Result<(Vec<MultiIndex>, Vec<Vec<f64>>)> {
    if q == 0 {
        return Err(ChaosError::Precondition("q must be at least 1".into()));
    }
    let vars = influence_variables(f, extra_vars);
    let dimension = count_of_degree(vars.len(), q);
    if dimension > config.max_basis_dim {
        return Err(ChaosError::BasisTooLarge { dimension, cap: config.max_basis_dim });
    }
    let basis = indices_of_degree(&vars, q);
    let gammas: Vec<ChaosPoly> = basis
        .par_iter()
        .map(|idx| carre_du_champ(f, &ChaosPoly::monomial(idx.clone(), Rational::from_integer(1.into()))))
        .collect();
    let raw: Vec<Vec<Rational>> = (0..basis.len())
        .into_par_iter()
        .map(|a| (0..basis.len()).map(|b| gammas[a].inner_product(&gammas[b])).collect())
        .collect();
    let weights: Vec<f64> = basis
        .iter()
        .map(|idx| scalar::to_f64(&Rational::from_integer(idx.factorial_weight())).sqrt())
        .collect();
    let form = raw
        .iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(b, x)| scalar::to_f64(x) / (weights[a] * weights[b]))
                .collect()
        })
        .collect();
    Ok((basis, form))
}

/// `ρ_q` on the degree-`q` basis over `vars(f)` and `extra_vars` fresh ids.
pub fn rho_q(f: &ChaosPoly, q: u32, extra_vars: u32, config: &InfluenceConfig) -> Result<InfluenceResult> {
    let (basis, form) = influence_form(f, q, extra_vars, config)?;
    if basis.is_empty() {
        return Ok(InfluenceResult {
            q,
            value: 0.0,
            direction: fallback_direction(f, q),
            basis_dimension: 0,
            extra_variables_used: extra_vars,
        });
    }
    let eig = jacobi_eigen(&form);
    let (lambda, vec) = top_eigenpair(&eig).expect("nonempty matrix");
    let direction = ChaosPoly::from_terms(basis.iter().zip(&vec).map(|(idx, &v)| {
        let weight = scalar::to_f64(&Rational::from_integer(idx.factorial_weight())).sqrt();
        let c = v / weight;
        (idx.clone(), approx_rational(c, 1e-17_f64.max(c.abs() * 1e-16)))
    }));
    Ok(InfluenceResult {
        q,
        value: lambda.max(0.0).sqrt(),
        direction,
        basis_dimension: basis.len(),
        extra_variables_used: extra_vars,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongestInfluence {
    /// Least `q` with `ρ_q ≥ threshold`, if any.
    pub q_star: Option<u32>,
    pub rho_values: BTreeMap<u32, f64>,
    #[serde(skip)]
    pub direction: Option<ChaosPoly>,
    pub threshold: f64,
}

impl StrongestInfluence {
    pub fn to_json_value(&self) -> Value {
        json!({
            "q_star": self.q_star,
            "rho_values": self.rho_values,
            "direction": self.direction.as_ref().map(ChaosPoly::to_json_value),
            "threshold": self.threshold,
        })
    }
}

/// `ρ_q` for `q = 1..=⌊p/2⌋`; uses [`rho_1`] at `q = 1` and `extra_vars`
/// fresh variables (default `q − 1`) above.
pub fn strongest_influence(
    f: &ChaosPoly,
    threshold: f64,
    extra_vars: Option<u32>,
    config: &InfluenceConfig,
) -> Result<StrongestInfluence> {
    let p = f.homogeneous_degree().ok_or_else(|| ChaosError::NotHomogeneous {
        argument: "f",
        degrees: f.degrees(),
    })?;
    if p < 2 {
        return Err(ChaosError::Precondition(format!("degree must be at least 2, got {p}")));
    }
    if !(threshold > 0.0) {
        return Err(ChaosError::Precondition("threshold must be positive".into()));
    }
    let mut rho_values = BTreeMap::new();
    let mut found: Option<InfluenceResult> = None;
    for q in 1..=p / 2 {
        let result = if q == 1 {
            rho_1(f)
        } else {
            rho_q(f, q, extra_vars.unwrap_or(q - 1), config)?
        };
        rho_values.insert(q, result.value);
        if found.is_none() && result.value >= threshold {
            found = Some(result);
        }
    }
    Ok(StrongestInfluence {
        q_star: found.as_ref().map(|r| r.q),
        rho_values,
        direction: found.map(|r| r.direction),
        threshold,
    })
}

/// `Inf_i = Σ_{J∋i} a_J² / Σ_{J≠∅} a_J²`.
pub fn multilinear_influences(p: &MultilinearPoly) -> Result<BTreeMap<VarId, f64>> {
    let variance = p.variance();
    if num_traits::Zero::is_zero(&variance) {
        return Err(ChaosError::ZeroVariance);
    }
    Ok(p.influence_masses()
        .into_iter()
        .map(|(v, m)| (v, scalar::to_f64(&(m / &variance))))
        .collect())
}

/// `τ = max_i Inf_i`.
pub fn max_influence(p: &MultilinearPoly) -> Result<f64> {
    Ok(multilinear_influences(p)?.into_values().fold(0.0, f64::max))
}
