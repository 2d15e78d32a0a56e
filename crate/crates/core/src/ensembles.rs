//! Orthonormal ensembles built from a general centered, unit-variance input
//! law, multilinear polynomials over them and their Gaussian images.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::error::{ChaosError, Result};
use crate::multi_index::{MultiIndex, VarId};
use crate::poly::ChaosPoly;
use crate::scalar::{self, approx_rational, exact_sqrt, format_rational, parse_rational, Rational};

/// Largest ensemble level accepted by [`substitute_gaussian`].
pub const GAUSSIAN_LEVEL_CAP: u32 = 20;

/// Law of one input coordinate. All variants are centered with unit variance.
#[derive(Debug, Clone, PartialEq)]
pub enum InputLaw {
    Gaussian,
    Rademacher,
    /// Uniform on `(−√3, √3)`.
    Uniform,
    Discrete {
        points: Vec<Rational>,
        probabilities: Vec<Rational>,
    },
}

impl InputLaw {
    /// Validated finite-support law.
    pub fn discrete(points: Vec<Rational>, probabilities: Vec<Rational>) -> Result<Self> {
        let law = InputLaw::Discrete { points, probabilities };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if let InputLaw::Discrete { points, probabilities } = self {
            if points.is_empty() || points.len() != probabilities.len() {
                return Err(ChaosError::InvalidLaw("points and probabilities must match and be nonempty".into()));
            }
            if probabilities.iter().any(Signed::is_negative) {
                return Err(ChaosError::InvalidLaw("negative probability".into()));
            }
            if probabilities.iter().sum::<Rational>() != Rational::one() {
                return Err(ChaosError::InvalidLaw("probabilities do not sum to 1".into()));
            }
        }
        if !self.moment(1).is_zero() {
            return Err(ChaosError::InvalidLaw("law is not centered".into()));
        }
        if !self.moment(2).is_one() {
            return Err(ChaosError::InvalidLaw("law does not have unit variance".into()));
        }
        Ok(())
    }

    /// Exact `E[X^k]`.
    pub fn moment(&self, k: u32) -> Rational {
        match self {
            InputLaw::Gaussian => {
                if k % 2 == 1 {
                    Rational::zero()
                } else {
                    // (k − 1)!!
                    Rational::from_integer((1..k).step_by(2).map(num_bigint::BigInt::from).product())
                }
            }
            InputLaw::Rademacher => {
                if k % 2 == 1 {
                    Rational::zero()
                } else {
                    Rational::one()
                }
            }
            InputLaw::Uniform => {
                if k % 2 == 1 {
                    Rational::zero()
                } else {
                    Rational::from_integer(num_bigint::BigInt::from(3).pow(k / 2)) / scalar::int(k as i64 + 1)
                }
            }
            InputLaw::Discrete { points, probabilities } => points
                .iter()
                .zip(probabilities)
                .map(|(x, p)| p * num_traits::pow(x.clone(), k as usize))
                .sum(),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, InputLaw::Gaussian)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InputLaw::Gaussian => rng.sample(StandardNormal),
            InputLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            InputLaw::Uniform => (rng.random::<f64>() * 2.0 - 1.0) * 3f64.sqrt(),
            InputLaw::Discrete { points, probabilities } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, p) in points.iter().zip(probabilities) {
                    acc += scalar::to_f64(p);
                    if u < acc {
                        return scalar::to_f64(x);
                    }
                }
                scalar::to_f64(points.last().expect("validated nonempty"))
            }
        }
    }

    pub fn to_json_value(&self) -> Value {
        match self {
            InputLaw::Gaussian => json!({"kind": "gaussian"}),
            InputLaw::Rademacher => json!({"kind": "rademacher"}),
            InputLaw::Uniform => json!({"kind": "uniform"}),
            InputLaw::Discrete { points, probabilities } => json!({
                "kind": "discrete",
                "points": points.iter().map(format_rational).collect::<Vec<_>>(),
                "probabilities": probabilities.iter().map(format_rational).collect::<Vec<_>>(),
            }),
        }
    }

    pub fn from_json_value(value: &Value) -> Result<Self> {
        let kind = value
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| ChaosError::Parse("law: missing `kind`".into()))?;
        let rationals = |key: &str| -> Result<Vec<Rational>> {
            value
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| ChaosError::Parse(format!("law: missing `{key}`")))?
                .iter()
                .map(|v| match v {
                    Value::String(s) => parse_rational(s),
                    Value::Number(n) => parse_rational(&n.to_string()),
                    _ => Err(ChaosError::Parse(format!("law: bad entry in `{key}`"))),
                })
                .collect()
        };
        match kind {
            "gaussian" => Ok(InputLaw::Gaussian),
            "rademacher" => Ok(InputLaw::Rademacher),
            "uniform" => Ok(InputLaw::Uniform),
            "discrete" => InputLaw::discrete(rationals("points")?, rationals("probabilities")?),
            other => Err(ChaosError::Parse(format!("law: unknown kind `{other}`"))),
        }
    }
}

/// `T_k = P_k / √norm_sq` for a monic orthogonal polynomial `P_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoPoly {
    /// Coefficients of the monic polynomial, lowest degree first.
    pub monic: Vec<Rational>,
    pub norm_sq: Rational,
}

impl OrthoPoly {
    pub fn degree(&self) -> usize {
        self.monic.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let p = self.monic.iter().rev().fold(0.0, |acc, c| acc * x + scalar::to_f64(c));
        p / scalar::to_f64(&self.norm_sq).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalEnsemble {
    pub law: InputLaw,
    pub polys: Vec<OrthoPoly>,
}

impl OrthonormalEnsemble {
    pub fn effective_degree(&self) -> u32 {
        (self.polys.len() - 1) as u32
    }

    fn pairing(&self, a: &[Rational], b: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                acc += x * y * self.law.moment((i + j) as u32);
            }
        }
        acc
    }

    /// Exact check of `E[T_j T_k] = δ_jk` through the monic representation.
    pub fn is_orthonormal(&self) -> bool {
        self.polys.iter().enumerate().all(|(j, pj)| {
            self.polys.iter().enumerate().all(|(k, pk)| {
                let e = self.pairing(&pj.monic, &pk.monic);
                if j == k {
                    e == pj.norm_sq
                } else {
                    e.is_zero()
                }
            })
        })
    }

    pub fn eval(&self, level: u32, x: f64) -> f64 {
        self.polys[level as usize].eval(x)
    }
}

/// Gram–Schmidt on `1, x, x², …` under the law's moments, stopping early
/// when the next polynomial vanishes in `L²` (finite support).
pub fn build_ensemble(law: &InputLaw, d: u32) -> Result<OrthonormalEnsemble> {
    law.validate()?;
    let mut ens = OrthonormalEnsemble {
        law: law.clone(),
        polys: vec![OrthoPoly { monic: vec![Rational::one()], norm_sq: Rational::one() }],
    };
    for k in 1..=d as usize {
        let mut monic = vec![Rational::zero(); k + 1];
        monic[k] = Rational::one();
        let mut power = monic.clone();
        for pj in &ens.polys {
            let c = ens.pairing(&power, &pj.monic) / &pj.norm_sq;
            for (i, a) in pj.monic.iter().enumerate() {
                monic[i] -= &c * a;
            }
        }
        power.clone_from(&monic);
        let norm_sq = ens.pairing(&power, &monic);
        if norm_sq.is_zero() {
            break;
        }
        ens.polys.push(OrthoPoly { monic, norm_sq });
    }
    Ok(ens)
}

/// One factor `T_level(X_var)` of a multilinear term.
pub type Factor = (VarId, u32);

/// `Σ_J a_J Z_J` with each variable appearing at most once per term.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearPoly {
    pub law: InputLaw,
    terms: BTreeMap<Vec<Factor>, Rational>,
}

impl MultilinearPoly {
    pub fn new(law: InputLaw) -> Self {
        MultilinearPoly { law, terms: BTreeMap::new() }
    }

    /// Sums repeated terms and prunes zeros; rejects repeated variables and
    /// zero levels inside a term.
    pub fn from_terms<I>(law: InputLaw, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<Factor>, Rational)>,
    {
        let mut out: BTreeMap<Vec<Factor>, Rational> = BTreeMap::new();
        for (mut factors, c) in terms {
            factors.sort_unstable();
            let mut seen = BTreeSet::new();
            for &(v, level) in &factors {
                if level == 0 {
                    return Err(ChaosError::Parse(format!("zero level for variable {v}")));
                }
                if v == 0 {
                    return Err(ChaosError::Parse("variable id 0 is not allowed".into()));
                }
                if !seen.insert(v) {
                    return Err(ChaosError::Parse(format!("variable {v} repeated in a term")));
                }
            }
            *out.entry(factors).or_insert_with(Rational::zero) += c;
        }
        out.retain(|_, c| !c.is_zero());
        Ok(MultilinearPoly { law, terms: out })
    }

    /// `Σ_i c_i X_i` at level 1.
    pub fn linear<I: IntoIterator<Item = (VarId, Rational)>>(law: InputLaw, coeffs: I) -> Result<Self> {
        Self::from_terms(law, coeffs.into_iter().map(|(v, c)| (vec![(v, 1)], c)))
    }

    pub fn terms(&self) -> &BTreeMap<Vec<Factor>, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn with_law(&self, law: InputLaw) -> Self {
        MultilinearPoly { law, terms: self.terms.clone() }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.terms.keys().flatten().map(|&(v, _)| v).collect()
    }

    pub fn max_level(&self) -> u32 {
        self.terms.keys().flatten().map(|&(_, l)| l).max().unwrap_or(0)
    }

    pub fn mean(&self) -> Rational {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(Rational::zero)
    }

    /// `Σ_{J≠∅} a_J²`.
    pub fn variance(&self) -> Rational {
        self.terms
            .iter()
            .filter(|(j, _)| !j.is_empty())
            .map(|(_, a)| a * a)
            .sum()
    }

    /// Unnormalized influence masses `Σ_{J∋i} a_J²`.
    pub fn influence_masses(&self) -> BTreeMap<VarId, Rational> {
        let mut out: BTreeMap<VarId, Rational> = BTreeMap::new();
        for (factors, a) in &self.terms {
            for &(v, _) in factors {
                *out.entry(v).or_insert_with(Rational::zero) += a * a;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (j, c) in &other.terms {
            *terms.entry(j.clone()).or_insert_with(Rational::zero) += c;
        }
        terms.retain(|_, c| !c.is_zero());
        MultilinearPoly { law: self.law.clone(), terms }
    }

    /// Multiplies every term by the factor `T_level(X_var)`; terms already
    /// containing `var` are rejected.
    pub fn times_factor(&self, var: VarId, level: u32) -> Result<Self> {
        Self::from_terms(
            self.law.clone(),
            self.terms.iter().map(|(j, c)| {
                let mut f = j.clone();
                f.push((var, level));
                (f, c.clone())
            }),
        )
    }

    /// Evaluates at the input values `x[var]` using the law's ensemble.
    pub fn eval_with(&self, ensemble: &OrthonormalEnsemble, x: &BTreeMap<VarId, f64>) -> f64 {
        self.terms
            .iter()
            .map(|(j, c)| {
                scalar::to_f64(c) * j.iter().map(|&(v, l)| ensemble.eval(l, x[&v])).product::<f64>()
            })
            .sum()
    }

    /// Ensemble of the attached law, checked to cover every level used.
    pub fn ensemble(&self) -> Result<OrthonormalEnsemble> {
        let ens = build_ensemble(&self.law, self.max_level().max(1))?;
        for &(v, l) in self.terms.keys().flatten() {
            if l > ens.effective_degree() {
                return Err(ChaosError::LevelOutOfRange { var: v, level: l, max: ens.effective_degree() });
            }
        }
        Ok(ens)
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "law": self.law.to_json_value(),
            "terms": self.terms.iter().map(|(j, c)| json!({
                "coeff": format_rational(c),
                "vars": j.iter().map(|&(v, l)| json!([v, l])).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    /// Reads `{"law":{…},"terms":[{"coeff":"p/q","vars":[[id,level],…]}]}`;
    /// a bare id or `[id]` means level 1.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| {
            ChaosError::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
        })?;
        Self::from_json_value(&value)
    }

    pub fn from_json_value(value: &Value) -> Result<Self> {
        let law = InputLaw::from_json_value(
            value.get("law").ok_or_else(|| ChaosError::Parse("missing `law`".into()))?,
        )?;
        let terms = value
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| ChaosError::Parse("missing `terms`".into()))?;
        let mut parsed = Vec::with_capacity(terms.len());
        for (pos, term) in terms.iter().enumerate() {
            let fail = |msg: &str| ChaosError::Parse(format!("term {pos}: {msg}"));
            let coeff = term
                .get("coeff")
                .and_then(Value::as_str)
                .ok_or_else(|| fail("missing coeff"))
                .and_then(|s| parse_rational(s).map_err(|e| fail(&e.detail())))?;
            if coeff.is_zero() {
                return Err(fail("zero coefficient"));
            }
            let vars = term.get("vars").and_then(Value::as_array).ok_or_else(|| fail("missing vars"))?;
            let mut factors = Vec::with_capacity(vars.len());
            for entry in vars {
                let as_u32 = |v: &Value| v.as_u64().and_then(|x| u32::try_from(x).ok());
                let factor = match entry {
                    Value::Array(a) if a.len() == 1 => as_u32(&a[0]).map(|v| (v, 1)),
                    Value::Array(a) if a.len() == 2 => as_u32(&a[0]).zip(as_u32(&a[1])),
                    other => as_u32(other).map(|v| (v, 1)),
                };
                factors.push(factor.ok_or_else(|| fail("bad vars entry"))?);
            }
            parsed.push((factors, coeff));
        }
        let n = parsed.len();
        let poly = Self::from_terms(law, parsed)?;
        if poly.terms.len() != n {
            return Err(ChaosError::Parse("duplicate terms".into()));
        }
        Ok(poly)
    }
}

/// Replaces each factor `T_k(X_j)` by the normalized Hermite `He_k(G_j)/√k!`.
///
/// Coefficients stay exact whenever `∏ k!` is a perfect square (always the
/// case at level 1); otherwise they carry the nearest double.
pub fn substitute_gaussian(p: &MultilinearPoly) -> Result<ChaosPoly> {
    let mut terms = Vec::with_capacity(p.terms.len());
    for (factors, a) in &p.terms {
        for &(v, l) in factors {
            if l > GAUSSIAN_LEVEL_CAP {
                return Err(ChaosError::LevelOutOfRange { var: v, level: l, max: GAUSSIAN_LEVEL_CAP });
            }
        }
        let index = MultiIndex::from_pairs(factors.iter().copied());
        let weight = Rational::from_integer(index.factorial_weight());
        let coeff = match exact_sqrt(&weight) {
            Some(root) => a / root,
            None => {
                let x = scalar::to_f64(a) / scalar::to_f64(&weight).sqrt();
                approx_rational(x, x.abs() * 1e-16)
            }
        };
        terms.push((index, coeff));
    }
    Ok(ChaosPoly::from_terms(terms))
}

/// A peeled variable `Z_var = T_level(X_var)` and its cofactor.
#[derive(Debug, Clone, PartialEq)]
pub struct PeeledFactor {
    pub var: VarId,
    pub level: u32,
    pub rest: MultilinearPoly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    /// Variables in peeling order.
    pub order: Vec<VarId>,
    pub retained: Vec<PeeledFactor>,
    pub remainder: MultilinearPoly,
    /// Largest influence mass in the remainder, relative to the input variance.
    pub remainder_max_influence: f64,
    /// `1/count`, the reference scale for the remainder influence.
    pub influence_bound: Option<f64>,
}

impl Truncation {
    /// `Σ Z_v R_v + remainder`.
    pub fn reconstruct(&self) -> Result<MultilinearPoly> {
        let mut acc = self.remainder.clone();
        for peeled in &self.retained {
            acc = acc.add(&peeled.rest.times_factor(peeled.var, peeled.level)?);
        }
        Ok(acc)
    }
}

/// Peels the `count` most influential variables (ties by ascending id).
pub fn truncate_by_influence(p: &MultilinearPoly, count: usize) -> Truncation {
    let masses = p.influence_masses();
    let mut ranked: Vec<(VarId, Rational)> = masses.into_iter().collect();
    ranked.sort_by(|(va, a), (vb, b)| b.cmp(a).then(va.cmp(vb)));
    let order: Vec<VarId> = ranked.iter().take(count).map(|&(v, _)| v).collect();

    let mut remaining = p.terms.clone();
    let mut retained = Vec::new();
    for &v in &order {
        let mut by_level: BTreeMap<u32, Vec<(Vec<Factor>, Rational)>> = BTreeMap::new();
        remaining.retain(|factors, c| match factors.iter().find(|&&(w, _)| w == v) {
            Some(&(_, level)) => {
                let rest: Vec<Factor> = factors.iter().copied().filter(|&(w, _)| w != v).collect();
                by_level.entry(level).or_default().push((rest, c.clone()));
                false
            }
            None => true,
        });
        for (level, terms) in by_level {
            let rest = MultilinearPoly::from_terms(p.law.clone(), terms).expect("subterms of a valid polynomial");
            retained.push(PeeledFactor { var: v, level, rest });
        }
    }
    let remainder = MultilinearPoly { law: p.law.clone(), terms: remaining };
    let variance = p.variance();
    let remainder_max_influence = if variance.is_zero() {
        0.0
    } else {
        remainder
            .influence_masses()
            .values()
            .map(|m| scalar::to_f64(&(m / &variance)))
            .fold(0.0, f64::max)
    };
    Truncation {
        order,
        retained,
        remainder,
        remainder_max_influence,
        influence_bound: (count > 0).then(|| 1.0 / count as f64),
    }
}
