//! Orthogonal changes of Gaussian basis, single-step and iterated
//! decompositions `F = Σ_l A_l·He_l(X) + A_0`, and the canonical form of
//! degree-2 polynomials.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{ChaosError, Result};
use crate::influence::{strongest_influence, InfluenceConfig};
use crate::linalg::{jacobi_eigen, nullspace, solve_symmetric_min_norm, sorted_by_magnitude};
use crate::malliavin::{carre_du_champ, independence_score};
use crate::multi_index::{count_of_degree, indices_of_degree, MultiIndex, VarId};
use crate::poly::{compose_hermite, ChaosPoly};
use crate::scalar::{self, approx_rational, format_rational, rational_unit_vector, Rational};

pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-12;
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// Accepted deviation of `E[X²]` from 1 for directions of degree `q > 1`,
/// which come out of the eigen solver with rounded coefficients.
pub const DIRECTION_NORM_TOLERANCE: f64 = 1e-10;

/// Orthogonal matrix acting on the listed coordinates: `Ĝ_i = Σ_j R_ij G_j`,
/// where `Ĝ_i` reuses the id `ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    ids: Vec<VarId>,
    rows: Vec<Vec<Rational>>,
}

impl Rotation {
    pub fn new(ids: Vec<VarId>, rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(ChaosError::Precondition(format!(
                "rotation must be {n}x{n} over the listed variables"
            )));
        }
        if ids.iter().collect::<BTreeSet<_>>().len() != n || ids.contains(&0) {
            return Err(ChaosError::Precondition("rotation ids must be distinct and positive".into()));
        }
        let rot = Rotation { ids, rows };
        let deviation = rot.orthogonality_deviation();
        if deviation > ORTHOGONALITY_TOLERANCE {
            return Err(ChaosError::NotOrthogonal { max_deviation: deviation });
        }
        Ok(rot)
    }

    pub fn identity(ids: Vec<VarId>) -> Result<Self> {
        let n = ids.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        Self::new(ids, rows)
    }

    /// Rational approximation (to 1e-17) of a floating matrix.
    pub fn from_f64(ids: Vec<VarId>, rows: &[Vec<f64>]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&x| approx_rational(x, 1e-17)).collect())
            .collect();
        Self::new(ids, rows)
    }

    pub fn ids(&self) -> &[VarId] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    /// `max |R Rᵀ − I|` entrywise.
    pub fn orthogonality_deviation(&self) -> f64 {
        let n = self.ids.len();
        let mut max: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let mut s: Rational = self.rows[i].iter().zip(&self.rows[j]).map(|(a, b)| a * b).sum();
                if i == j {
                    s -= Rational::one();
                }
                max = max.max(scalar::to_f64(&s).abs());
            }
        }
        max
    }

    pub fn is_exactly_orthogonal(&self) -> bool {
        self.orthogonality_deviation() == 0.0
    }

    pub fn transpose(&self) -> Rotation {
        let n = self.ids.len();
        Rotation {
            ids: self.ids.clone(),
            rows: (0..n).map(|i| (0..n).map(|j| self.rows[j][i].clone()).collect()).collect(),
        }
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "ids": self.ids,
            "rows": self.rows.iter()
                .map(|r| r.iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json_value(value: &Value) -> Result<Self> {
        let bad = |m: &str| ChaosError::Parse(format!("rotation: {m}"));
        let ids = value
            .get("ids")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"ids\""))?
            .iter()
            .map(|v| v.as_u64().map(|x| x as VarId).ok_or_else(|| bad("ids must be integers")))
            .collect::<Result<Vec<_>>>()?;
        let rows = value
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"rows\""))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| bad("rows must be arrays"))?
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => scalar::parse_rational(s),
                        Value::Number(n) => n
                            .as_f64()
                            .map(|f| approx_rational(f, 1e-17))
                            .ok_or_else(|| bad("invalid number")),
                        _ => Err(bad("entries must be \"p/q\" strings or numbers")),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ids, rows)
    }
}

/// Substitutes `G = Rᵀ·Ĝ` and re-expands in the Hermite basis of `Ĝ`.
/// Variables outside the rotation are left in place.
pub fn rotate_basis(f: &ChaosPoly, rotation: &Rotation) -> ChaosPoly {
    let position: HashMap<VarId, usize> = rotation.ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let columns: Vec<ChaosPoly> = (0..rotation.ids.len())
        .map(|j| ChaosPoly::linear(rotation.ids.iter().copied().zip(rotation.rows.iter().map(|r| &r[j]))))
        .collect();
    let mut cache: HashMap<(usize, u32), ChaosPoly> = HashMap::new();
    let mut out = ChaosPoly::zero();
    for (idx, c) in f.iter() {
        let fixed = MultiIndex::from_pairs(idx.entries().iter().copied().filter(|(v, _)| !position.contains_key(v)));
        let mut term = ChaosPoly::monomial(fixed, c.clone());
        for &(v, k) in idx.entries() {
            if let Some(&j) = position.get(&v) {
                let h = cache.entry((j, k)).or_insert_with(|| compose_hermite(k, &columns[j]));
                term = term.mul(h);
            }
        }
        out = out.add(&term);
    }
    out
}

/// Orthogonal matrix with first row `a`, built from the Householder
/// reflector through `a + s·e_1`, `s = sign(a_1)`.
pub fn householder_frame(ids: Vec<VarId>, a: &[Rational]) -> Result<Rotation> {
    let n = a.len();
    if ids.len() != n || n == 0 {
        return Err(ChaosError::Precondition("direction must list one coefficient per variable".into()));
    }
    let s = if a[0].is_negative() { -Rational::one() } else { Rational::one() };
    let mut v = a.to_vec();
    v[0] += &s;
    let vv: Rational = v.iter().map(|x| x * x).sum();
    let two_over = scalar::int(2) / vv;
    let mut rows: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = if i == j { Rational::one() } else { Rational::zero() };
                    d - &two_over * &v[i] * &v[j]
                })
                .collect()
        })
        .collect();
    for x in rows[0].iter_mut() {
        *x = -(&s * &*x);
    }
    Rotation::new(ids, rows)
}

/// One pass of `F = Σ_{l≥1} A_l·He_l(X) + A_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionStep {
    /// Unit element `X` of `W_q`.
    pub direction: ChaosPoly,
    pub q: u32,
    /// `A_0, A_1, …` in the original coordinates.
    pub coefficients: Vec<ChaosPoly>,
    /// `‖Γ(F − Σ_{l≥1} A_l He_l(X), X)‖`.
    pub remainder_gamma_norm: f64,
    /// `‖F − Σ_l A_l He_l(X) − A_0‖`.
    pub reassembly_residual_norm: f64,
    pub exact: bool,
    /// Rank of the normal equations on the least-squares path.
    pub rank: Option<usize>,
    /// Rotation with first row `X` and the coefficients written in it
    /// (`Ĝ_1` carries the first id of the frame).
    pub frame: Option<Rotation>,
    pub rotated_coefficients: Option<Vec<ChaosPoly>>,
}

impl DecompositionStep {
    /// `Σ_{l≥1} A_l·He_l(X)`.
    pub fn direction_part(&self) -> ChaosPoly {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .fold(ChaosPoly::zero(), |acc, (l, a)| {
                if a.is_zero() {
                    acc
                } else {
                    acc.add(&a.mul(&compose_hermite(l as u32, &self.direction)))
                }
            })
    }

    pub fn reassemble(&self) -> ChaosPoly {
        let a0 = self.coefficients.first().cloned().unwrap_or_default();
        self.direction_part().add(&a0)
    }

    /// Largest `l` with `A_l ≠ 0`.
    pub fn hermite_order(&self) -> u32 {
        self.coefficients.iter().rposition(|a| !a.is_zero()).unwrap_or(0) as u32
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "q": self.q,
            "direction": self.direction.to_json_value(),
            "coefficients": self.coefficients.iter().map(ChaosPoly::to_json_value).collect::<Vec<_>>(),
            "remainder_gamma_norm": self.remainder_gamma_norm,
            "reassembly_residual_norm": self.reassembly_residual_norm,
            "exact": self.exact,
            "rank": self.rank,
            "frame": self.frame.as_ref().map(Rotation::to_json_value),
            "rotated_coefficients": self.rotated_coefficients.as_ref()
                .map(|cs| cs.iter().map(ChaosPoly::to_json_value).collect::<Vec<_>>()),
        })
    }
}

/// Exact decomposition along `X = Σ a_i G_i` by rotating `X` onto `Ĝ_1`
/// and grouping terms by their degree in `Ĝ_1`.
pub fn decompose_along_w1(f: &ChaosPoly, a: &[(VarId, Rational)]) -> Result<DecompositionStep> {
    let mut pairs: BTreeMap<VarId, Rational> = BTreeMap::new();
    for (v, c) in a {
        if *v == 0 || pairs.insert(*v, c.clone()).is_some() {
            return Err(ChaosError::Precondition(format!("invalid or repeated direction variable {v}")));
        }
    }
    let ids: Vec<VarId> = pairs.keys().copied().collect();
    let mut coeffs: Vec<Rational> = pairs.into_values().collect();
    let norm_sq: Rational = coeffs.iter().map(|x| x * x).sum();
    if !norm_sq.is_one() {
        let n = scalar::to_f64(&norm_sq);
        if ids.is_empty() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(ChaosError::NotUnit { norm_sq: n });
        }
        let floats: Vec<f64> = coeffs.iter().map(scalar::to_f64).collect();
        coeffs = rational_unit_vector(&floats, 1e-17);
    }
    let frame = householder_frame(ids.clone(), &coeffs)?;
    let rotated = rotate_basis(f, &frame);
    let lead = ids[0];
    let top = f.degree().unwrap_or(0) as usize;
    let mut rotated_coefficients = vec![ChaosPoly::zero(); top + 1];
    for (idx, c) in rotated.iter() {
        let l = idx.degree_of(lead) as usize;
        rotated_coefficients[l] =
            rotated_coefficients[l].add(&ChaosPoly::monomial(idx.without(lead), c.clone()));
    }
    let back = frame.transpose();
    let coefficients: Vec<ChaosPoly> = rotated_coefficients.iter().map(|p| rotate_basis(p, &back)).collect();
    let direction = ChaosPoly::linear(ids.iter().copied().zip(coeffs.iter()));
    let mut step = DecompositionStep {
        direction,
        q: 1,
        coefficients,
        remainder_gamma_norm: 0.0,
        reassembly_residual_norm: 0.0,
        exact: true,
        rank: None,
        frame: Some(frame),
        rotated_coefficients: Some(rotated_coefficients),
    };
    let remainder = f.sub(&step.direction_part());
    step.remainder_gamma_norm = independence_score(&remainder, &step.direction);
    step.reassembly_residual_norm = f.sub(&step.reassemble()).norm();
    Ok(step)
}

/// Basis of `{g : deg g ≤ degree, Γ(g, x) = 0}` over `vars`.
fn gamma_kernel(x: &ChaosPoly, vars: &[VarId], degree: u32) -> Vec<ChaosPoly> {
    let monomials: Vec<MultiIndex> = (0..=degree).flat_map(|d| indices_of_degree(vars, d)).collect();
    let images: Vec<ChaosPoly> = monomials
        .iter()
        .map(|m| carre_du_champ(&ChaosPoly::monomial(m.clone(), Rational::one()), x))
        .collect();
    let rows: BTreeSet<&MultiIndex> = images.iter().flat_map(|g| g.terms().keys()).collect();
    let matrix: Vec<Vec<Rational>> = rows.iter().map(|r| images.iter().map(|g| g.coeff(r)).collect()).collect();
    nullspace(&matrix, monomials.len())
        .into_iter()
        .map(|v| ChaosPoly::from_terms(monomials.iter().cloned().zip(v)))
        .collect()
}

/// Decomposition of `f ∈ W_p` along a unit `x ∈ W_q`, `q < p`.
///
/// For `q = 1` this is [`decompose_along_w1`]. For `q > 1` the `A_l` are
/// constrained to the exact kernel of `g ↦ Γ(g, x)` (degree `≤ p − l·q`,
/// over the variables of `f` and `x`) and fitted by least squares on the
/// span of `He_l(x)·A_l`; the reassembly is then generally inexact.
pub fn decompose_along(f: &ChaosPoly, x: &ChaosPoly, config: &InfluenceConfig) -> Result<DecompositionStep> {
    let p = f.require_homogeneous("f")?;
    let q = x.require_homogeneous("x")?;
    if x.is_zero() || q == 0 {
        return Err(ChaosError::Precondition("direction must be a nonconstant element of W_q".into()));
    }
    if q >= p {
        return Err(ChaosError::Precondition(format!("need 1 <= q < p, got q = {q}, p = {p}")));
    }
    if q == 1 {
        let a: Vec<(VarId, Rational)> = x.iter().map(|(idx, c)| (idx.entries()[0].0, c.clone())).collect();
        return decompose_along_w1(f, &a);
    }
    let norm_sq = scalar::to_f64(&x.norm_sq());
    if (norm_sq - 1.0).abs() > DIRECTION_NORM_TOLERANCE {
        return Err(ChaosError::NotUnit { norm_sq });
    }
    let vars: Vec<VarId> = f.vars().union(&x.vars()).copied().collect();
    let levels = p / q;
    let dimension: usize = (0..=levels)
        .map(|l| (0..=p - l * q).map(|d| count_of_degree(vars.len(), d)).sum::<usize>())
        .sum();
    if dimension > config.max_basis_dim {
        return Err(ChaosError::BasisTooLarge { dimension, cap: config.max_basis_dim });
    }
    let mut labels: Vec<(usize, ChaosPoly)> = Vec::new();
    let mut spanning: Vec<ChaosPoly> = Vec::new();
    for l in 0..=levels {
        let h = compose_hermite(l, x);
        for b in gamma_kernel(x, &vars, p - l * q) {
            spanning.push(h.mul(&b));
            labels.push((l as usize, b));
        }
    }
    let gram: Vec<Vec<Rational>> = spanning
        .iter()
        .map(|a| spanning.iter().map(|b| a.inner_product(b)).collect())
        .collect();
    let rhs: Vec<Rational> = spanning.iter().map(|a| a.inner_product(f)).collect();
    let (solution, rank) = solve_symmetric_min_norm(&gram, &rhs)
        .ok_or_else(|| ChaosError::Precondition("normal equations are inconsistent".into()))?;
    let mut coefficients = vec![ChaosPoly::zero(); levels as usize + 1];
    for ((l, b), c) in labels.iter().zip(&solution) {
        if !c.is_zero() {
            coefficients[*l] = coefficients[*l].add(&b.scale(c));
        }
    }
    let mut step = DecompositionStep {
        direction: x.clone(),
        q,
        coefficients,
        remainder_gamma_norm: 0.0,
        reassembly_residual_norm: 0.0,
        exact: false,
        rank: Some(rank),
        frame: None,
        rotated_coefficients: None,
    };
    let remainder = f.sub(&step.direction_part());
    step.remainder_gamma_norm = independence_score(&remainder, x);
    step.reassembly_residual_norm = f.sub(&step.reassemble()).norm();
    Ok(step)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Every `ρ_q`, `q ≤ ⌊p/2⌋`, of the remainder is below the threshold.
    InfluenceBelowThreshold,
    NormBelowThreshold,
    MaxSteps,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::InfluenceBelowThreshold => "influence_below_threshold",
            StopReason::NormBelowThreshold => "norm_below_threshold",
            StopReason::MaxSteps => "max_steps",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub steps: Vec<DecompositionStep>,
    pub residual: ChaosPoly,
    pub residual_norm: f64,
    /// `‖F_k‖` with `F_k = Σ_{l≥1} A_{k,l}·He_l(X_k)`.
    pub per_step_norms: Vec<f64>,
    /// Largest Hermite order in a direction over all steps.
    pub max_hermite_order: u32,
    pub stop_reason: StopReason,
}

impl IterationTrace {
    pub fn contributions(&self) -> Vec<ChaosPoly> {
        self.steps.iter().map(DecompositionStep::direction_part).collect()
    }

    pub fn reassemble(&self) -> ChaosPoly {
        self.contributions().iter().fold(self.residual.clone(), |acc, c| acc.add(c))
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "steps": self.steps.iter().map(DecompositionStep::to_json_value).collect::<Vec<_>>(),
            "residual": self.residual.to_json_value(),
            "residual_norm": self.residual_norm,
            "per_step_norms": self.per_step_norms,
            "max_hermite_order": self.max_hermite_order,
            "stop_reason": self.stop_reason.as_str(),
        })
    }
}

/// Repeatedly peels off the direction of strongest influence of the
/// remainder, keeping its degree-`p` chaos as the next remainder.
pub fn iterate_decomposition(
    f: &ChaosPoly,
    threshold: f64,
    max_steps: usize,
    extra_vars: Option<u32>,
    config: &InfluenceConfig,
) -> Result<IterationTrace> {
    let p = f.require_homogeneous("f")?;
    if !(threshold > 0.0) {
        return Err(ChaosError::Precondition("threshold must be positive".into()));
    }
    if !f.is_zero() {
        let n = scalar::to_f64(&f.norm_sq());
        if (n - 1.0).abs() > 1e-9 {
            return Err(ChaosError::Precondition(format!("input must have unit norm, got E[f^2] = {n}")));
        }
    }
    let mut steps = Vec::new();
    let mut per_step_norms = Vec::new();
    let mut remainder = f.clone();
    let stop_reason = loop {
        if remainder.norm() < threshold {
            break StopReason::NormBelowThreshold;
        }
        if p < 2 {
            break StopReason::InfluenceBelowThreshold;
        }
        if steps.len() >= max_steps {
            break StopReason::MaxSteps;
        }
        let strongest = strongest_influence(&remainder, threshold, extra_vars, config)?;
        let Some(direction) = strongest.direction else {
            break StopReason::InfluenceBelowThreshold;
        };
        let step = decompose_along(&remainder, &direction, config)?;
        let part = step.direction_part();
        per_step_norms.push(part.norm());
        remainder = remainder.sub(&part).project_chaos(p);
        steps.push(step);
    };
    let max_hermite_order = steps.iter().map(DecompositionStep::hermite_order).max().unwrap_or(0);
    Ok(IterationTrace {
        residual_norm: remainder.norm(),
        residual: remainder,
        steps,
        per_step_norms,
        max_hermite_order,
        stop_reason,
    })
}

/// `F = Σ λ_i He_2(Ĝ_i) + Σ b_i Ĝ_i + c` with `Ĝ = R·G`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCanonicalForm {
    pub ids: Vec<VarId>,
    /// Descending by `|λ|`, positive first on ties.
    pub eigenvalues: Vec<f64>,
    /// Rows are the eigenvectors; `Ĝ_i` carries the id `ids[i]`.
    pub rotation: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub constant: Rational,
    /// Present when the rotation and eigenvalues reproduce `F` exactly in
    /// rational arithmetic.
    pub exact_rotation: Option<Rotation>,
    quadratic: Vec<Vec<f64>>,
    original_linear: Vec<f64>,
}

impl QuadraticCanonicalForm {
    /// The canonical polynomial in `Ĝ`, with rounded rational coefficients.
    pub fn canonical_poly(&self) -> ChaosPoly {
        let mut terms = Vec::new();
        for (i, &v) in self.ids.iter().enumerate() {
            terms.push((MultiIndex::single(v, 2), approx_rational(self.eigenvalues[i], 1e-17)));
            terms.push((MultiIndex::single(v, 1), approx_rational(self.linear[i], 1e-17)));
        }
        terms.push((MultiIndex::constant(), self.constant.clone()));
        ChaosPoly::from_terms(terms)
    }

    /// Largest entry of `|Rᵀ diag(λ) R − S|` and `|Rᵀ b − b₀|`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.ids.len();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| self.rotation[k][i] * self.eigenvalues[k] * self.rotation[k][j]).sum();
                err = err.max((s - self.quadratic[i][j]).abs());
            }
            let b: f64 = (0..n).map(|k| self.rotation[k][i] * self.linear[k]).sum();
            err = err.max((b - self.original_linear[i]).abs());
        }
        err
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "ids": self.ids,
            "eigenvalues": self.eigenvalues,
            "rotation": self.rotation,
            "linear": self.linear,
            "constant": format_rational(&self.constant),
            "exact": self.exact_rotation.is_some(),
            "reconstruction_error": self.reconstruction_error(),
            "canonical": self.canonical_poly().to_json_value(),
        })
    }
}

/// Diagonalizes the quadratic part of a polynomial of degree at most 2.
pub fn canonical_quadratic(f: &ChaosPoly) -> Result<QuadraticCanonicalForm> {
    if f.degree().unwrap_or(0) > 2 {
        return Err(ChaosError::Precondition(format!(
            "canonical form needs degree <= 2, got {}",
            f.degree().unwrap_or(0)
        )));
    }
    let ids: Vec<VarId> = f.vars().into_iter().collect();
    let n = ids.len();
    let pos: HashMap<VarId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut s = vec![vec![Rational::zero(); n]; n];
    let mut b = vec![Rational::zero(); n];
    for (idx, c) in f.iter() {
        match idx.entries() {
            [(v, 2)] => s[pos[v]][pos[v]] = c.clone(),
            [(v, 1)] => b[pos[v]] = c.clone(),
            [(u, 1), (v, 1)] => {
                let half = c / scalar::int(2);
                s[pos[u]][pos[v]] = half.clone();
                s[pos[v]][pos[u]] = half;
            }
            _ => {}
        }
    }
    let constant = f.expectation();
    let sf: Vec<Vec<f64>> = s.iter().map(|r| r.iter().map(scalar::to_f64).collect()).collect();
    let bf: Vec<f64> = b.iter().map(scalar::to_f64).collect();
    let pairs = sorted_by_magnitude(&jacobi_eigen(&sf));
    let eigenvalues: Vec<f64> = pairs.iter().map(|(l, _)| *l).collect();
    let rotation: Vec<Vec<f64>> = pairs.into_iter().map(|(_, v)| v).collect();
    let linear: Vec<f64> = rotation.iter().map(|r| r.iter().zip(&bf).map(|(x, y)| x * y).sum()).collect();
    let exact_rotation = exact_diagonalization(&ids, &rotation, &eigenvalues, &s);
    Ok(QuadraticCanonicalForm {
        ids,
        eigenvalues,
        rotation,
        linear,
        constant,
        exact_rotation,
        quadratic: sf,
        original_linear: bf,
    })
}

fn exact_diagonalization(ids: &[VarId], rotation: &[Vec<f64>], eigenvalues: &[f64], s: &[Vec<Rational>]) -> Option<Rotation> {
    let rows: Vec<Vec<Rational>> = rotation
        .iter()
        .map(|r| r.iter().map(|&x| approx_rational(x, 1e-12)).collect())
        .collect();
    let rot = Rotation { ids: ids.to_vec(), rows };
    if !rot.is_exactly_orthogonal() {
        return None;
    }
    let lambda: Vec<Rational> = eigenvalues.iter().map(|&x| approx_rational(x, 1e-12)).collect();
    let n = ids.len();
    for i in 0..n {
        for j in 0..n {
            let v: Rational = (0..n).map(|k| &rot.rows[k][i] * &lambda[k] * &rot.rows[k][j]).sum();
            if v != s[i][j] {
                return None;
            }
        }
    }
    Some(rot)
}
