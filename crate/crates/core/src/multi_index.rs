use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{ChaosError, Result};

/// Identifier of a Gaussian coordinate `G_i`; ids are positive.
pub type VarId = u32;

/// Exponent pattern of a Hermite monomial `∏ He_{k_i}(G_i)`.
///
/// Entries are sorted by variable id and never carry a zero degree, so the
/// empty index is the constant monomial. Indices order first by total degree
/// and then lexicographically, which is the canonical order of the
/// polynomial file format.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    entries: Vec<(VarId, u32)>,
    total: u32,
}

impl MultiIndex {
    pub fn constant() -> Self {
        Self::default()
    }

    /// `He_degree(G_var)`; a zero degree gives the constant index.
    pub fn single(var: VarId, degree: u32) -> Self {
        if degree == 0 {
            Self::constant()
        } else {
            MultiIndex {
                entries: vec![(var, degree)],
                total: degree,
            }
        }
    }

    /// Builds an index from arbitrary `(var, degree)` pairs, merging repeats
    /// and dropping zero degrees.
    pub fn from_pairs<I: IntoIterator<Item = (VarId, u32)>>(pairs: I) -> Self {
        let mut map = BTreeMap::new();
        for (v, d) in pairs {
            *map.entry(v).or_insert(0) += d;
        }
        Self::from_sorted(map.into_iter().filter(|&(_, d)| d > 0).collect())
    }

    /// Strict constructor used by readers: rejects zero degrees, zero ids
    /// and repeated variables.
    pub fn try_from_pairs<I: IntoIterator<Item = (VarId, u32)>>(pairs: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, d) in pairs {
            if v == 0 {
                return Err(ChaosError::Parse("variable id 0 is not allowed".into()));
            }
            if d == 0 {
                return Err(ChaosError::Parse(format!("zero degree for variable {v}")));
            }
            if map.insert(v, d).is_some() {
                return Err(ChaosError::Parse(format!("variable {v} repeated")));
            }
        }
        Ok(Self::from_sorted(map.into_iter().collect()))
    }

    fn from_sorted(entries: Vec<(VarId, u32)>) -> Self {
        let total = entries.iter().map(|&(_, d)| d).sum();
        MultiIndex { entries, total }
    }

    pub fn entries(&self) -> &[(VarId, u32)] {
        &self.entries
    }

    pub fn total_degree(&self) -> u32 {
        self.total
    }

    pub fn is_constant(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn degree_of(&self, var: VarId) -> u32 {
        self.entries
            .binary_search_by_key(&var, |&(v, _)| v)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.entries.iter().map(|&(v, _)| v)
    }

    /// Replaces the degree of `var` (zero removes it).
    pub fn with_degree(&self, var: VarId, degree: u32) -> Self {
        let mut entries: Vec<_> = self.entries.iter().copied().filter(|&(v, _)| v != var).collect();
        if degree > 0 {
            let pos = entries.partition_point(|&(v, _)| v < var);
            entries.insert(pos, (var, degree));
        }
        Self::from_sorted(entries)
    }

    /// Index with `var` removed.
    pub fn without(&self, var: VarId) -> Self {
        self.with_degree(var, 0)
    }

    /// `∏ k_i!`, the squared norm of the monomial.
    pub fn factorial_weight(&self) -> num_bigint::BigInt {
        self.entries
            .iter()
            .fold(num_bigint::BigInt::from(1), |acc, &(_, d)| acc * crate::scalar::factorial(d))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total
            .cmp(&other.total)
            .then_with(|| self.entries.cmp(&other.entries))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Enumerates all indices of total degree `degree` over `vars`, in ascending
/// canonical order.
pub fn indices_of_degree(vars: &[VarId], degree: u32) -> Vec<MultiIndex> {
    fn rec(vars: &[VarId], left: u32, acc: &mut Vec<(VarId, u32)>, out: &mut Vec<MultiIndex>) {
        if left == 0 {
            out.push(MultiIndex::from_pairs(acc.iter().copied()));
            return;
        }
        let Some((&first, rest)) = vars.split_first() else {
            return;
        };
        for d in (0..=left).rev() {
            if d > 0 {
                acc.push((first, d));
            }
            rec(rest, left - d, acc, out);
            if d > 0 {
                acc.pop();
            }
        }
    }
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out = Vec::new();
    rec(&sorted, degree, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Number of indices of total degree `degree` over `n_vars` variables.
pub fn count_of_degree(n_vars: usize, degree: u32) -> usize {
    if n_vars == 0 {
        return usize::from(degree == 0);
    }
    // C(n_vars + degree - 1, degree), saturating.
    let mut acc: u128 = 1;
    for i in 0..degree as u128 {
        acc = acc * (n_vars as u128 + i) / (i + 1);
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_degree() {
        let a = MultiIndex::from_pairs([(2, 1), (1, 1)]);
        assert_eq!(a.entries(), &[(1, 1), (2, 1)]);
        assert_eq!(a.total_degree(), 2);
        assert!(MultiIndex::single(5, 1) < a);
        assert!(a < MultiIndex::single(1, 2));
        assert_eq!(MultiIndex::single(3, 0), MultiIndex::constant());
    }

    #[test]
    fn strict_reader_rejects_bad_pairs() {
        assert!(MultiIndex::try_from_pairs([(1, 0)]).is_err());
        assert!(MultiIndex::try_from_pairs([(0, 1)]).is_err());
        assert!(MultiIndex::try_from_pairs([(1, 1), (1, 2)]).is_err());
    }

    #[test]
    fn enumeration_counts() {
        let idx = indices_of_degree(&[1, 2, 3], 2);
        assert_eq!(idx.len(), 6);
        assert_eq!(count_of_degree(3, 2), 6);
        assert_eq!(count_of_degree(5, 4), 70);
        assert_eq!(indices_of_degree(&[1, 2, 3, 4, 5], 4).len(), 70);
        assert_eq!(indices_of_degree(&[], 0), vec![MultiIndex::constant()]);
        assert!(indices_of_degree(&[], 1).is_empty());
    }

    #[test]
    fn degree_edits() {
        let a = MultiIndex::from_pairs([(1, 2), (3, 1)]);
        assert_eq!(a.degree_of(1), 2);
        assert_eq!(a.degree_of(2), 0);
        assert_eq!(a.with_degree(2, 4).entries(), &[(1, 2), (2, 4), (3, 1)]);
        assert_eq!(a.without(1).entries(), &[(3, 1)]);
    }
}
