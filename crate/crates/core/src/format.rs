//! Canonical JSON encoding of [`ChaosPoly`].
//!
//! `{"terms":[{"coeff":"p/q","index":{"<var>":<degree>,...}},...]}` with
//! terms sorted by total degree then lexicographic index; the empty index
//! is the constant term.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ChaosError, Result};
use crate::multi_index::{MultiIndex, VarId};
use crate::poly::ChaosPoly;
use crate::scalar::{format_rational, parse_rational};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolyTermJson {
    pub coeff: String,
    pub index: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PolyJson {
    pub terms: Vec<PolyTermJson>,
}

#[derive(Serialize)]
struct OutTerm {
    coeff: String,
    index: BTreeMap<VarId, u32>,
}

#[derive(Serialize)]
struct OutPoly {
    terms: Vec<OutTerm>,
}

impl ChaosPoly {
    /// Serializable view in canonical term order.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.out_poly()).expect("polynomial serialization")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.out_poly()).expect("polynomial serialization")
    }

    fn out_poly(&self) -> OutPoly {
        OutPoly {
            terms: self
                .iter()
                .map(|(m, c)| OutTerm {
                    coeff: format_rational(c),
                    index: m.entries().iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PolyJson = serde_json::from_str(text).map_err(|e| {
            ChaosError::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
        })?;
        Self::from_json_terms(&raw)
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let raw: PolyJson =
            serde_json::from_value(value.clone()).map_err(|e| ChaosError::Parse(e.to_string()))?;
        Self::from_json_terms(&raw)
    }

    fn from_json_terms(raw: &PolyJson) -> Result<Self> {
        let mut terms: BTreeMap<MultiIndex, _> = BTreeMap::new();
        for (pos, term) in raw.terms.iter().enumerate() {
            let fail = |msg: String| ChaosError::Parse(format!("term {pos}: {msg}"));
            let coeff = parse_rational(&term.coeff).map_err(|e| fail(e.detail()))?;
            if num_traits::Zero::is_zero(&coeff) {
                return Err(fail("zero coefficient".into()));
            }
            let mut pairs = Vec::with_capacity(term.index.len());
            for (key, &deg) in &term.index {
                let var: VarId = key
                    .trim()
                    .parse()
                    .map_err(|_| fail(format!("invalid variable id `{key}`")))?;
                pairs.push((var, deg));
            }
            let index = MultiIndex::try_from_pairs(pairs).map_err(|e| fail(e.detail()))?;
            if terms.insert(index, coeff).is_some() {
                return Err(fail("duplicate index".into()));
            }
        }
        Ok(ChaosPoly::from_terms(terms))
    }
}
