//! Finitely supported rational vectors over a tagged index universe.

use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rat::Rat;

/// Opaque dense index handle.
pub type IndexId = u32;

/// Name of the index set a vector lives on.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Universe(Arc<str>);

impl Universe {
    pub fn new(name: &str) -> Universe {
        Universe(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn naturals() -> Universe {
        Universe::new("N")
    }

    fn same(&self, other: &Universe) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VecError {
    #[error("universe mismatch: {0:?} vs {1:?}")]
    UniverseMismatch(Universe, Universe),
    #[error("index {0} outside the domain")]
    OutOfDomain(IndexId),
}

/// Sparse vector: entries sorted by index, no stored zeros.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FinVec {
    universe: Universe,
    entries: Vec<(IndexId, Rat)>,
}

impl FinVec {
    pub fn zero(universe: &Universe) -> FinVec {
        FinVec { universe: universe.clone(), entries: Vec::new() }
    }

    pub fn unit(universe: &Universe, i: IndexId) -> FinVec {
        FinVec { universe: universe.clone(), entries: vec![(i, Rat::one())] }
    }

    /// Builds a vector from arbitrary entries, summing duplicates and dropping zeros.
    pub fn from_entries<I>(universe: &Universe, entries: I) -> FinVec
    where
        I: IntoIterator<Item = (IndexId, Rat)>,
    {
        let mut v: Vec<(IndexId, Rat)> = entries.into_iter().collect();
        v.sort_by_key(|e| e.0);
        let mut out: Vec<(IndexId, Rat)> = Vec::with_capacity(v.len());
        for (i, x) in v {
            match out.last_mut() {
                Some((j, y)) if *j == i => *y += &x,
                _ => out.push((i, x)),
            }
        }
        out.retain(|e| !e.1.is_zero());
        FinVec { universe: universe.clone(), entries: out }
    }

    /// Caller guarantees sorted, distinct, nonzero entries.
    pub fn from_sorted(universe: &Universe, entries: Vec<(IndexId, Rat)>) -> FinVec {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|e| !e.1.is_zero()));
        FinVec { universe: universe.clone(), entries }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn entries(&self) -> &[(IndexId, Rat)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(IndexId, Rat)> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: IndexId) -> Rat {
        match self.entries.binary_search_by_key(&i, |e| e.0) {
            Ok(p) => self.entries[p].1.clone(),
            Err(_) => Rat::zero(),
        }
    }

    pub fn support(&self) -> impl Iterator<Item = IndexId> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn min_index(&self) -> Option<IndexId> {
        self.entries.first().map(|e| e.0)
    }

    pub fn max_index(&self) -> Option<IndexId> {
        self.entries.last().map(|e| e.0)
    }

    pub fn l1_norm(&self) -> Rat {
        self.entries.iter().map(|e| e.1.abs()).sum()
    }

    pub fn linf_norm(&self) -> Rat {
        self.entries.iter().map(|e| e.1.abs()).max().unwrap_or_else(Rat::zero)
    }

    /// Dual pairing over the common support.
    pub fn pair(&self, x: &FinVec) -> Result<Rat, VecError> {
        if !self.universe.same(&x.universe) {
            return Err(VecError::UniverseMismatch(self.universe.clone(), x.universe.clone()));
        }
        Ok(self.dot(x))
    }

    /// Pairing without the universe check.
    pub fn dot(&self, x: &FinVec) -> Rat {
        let (a, b) = (&self.entries, &x.entries);
        let (mut i, mut j) = (0, 0);
        let mut s = Rat::zero();
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += &a[i].1 * &b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    pub fn scale(&self, a: &Rat) -> FinVec {
        if a.is_zero() {
            return FinVec::zero(&self.universe);
        }
        FinVec {
            universe: self.universe.clone(),
            entries: self.entries.iter().map(|(i, x)| (*i, x * a)).collect(),
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: &Rat, other: &FinVec) -> FinVec {
        if a.is_zero() || other.is_empty() {
            return self.clone();
        }
        let (x, y) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(x.len() + y.len());
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            if j == y.len() || (i < x.len() && x[i].0 < y[j].0) {
                out.push(x[i].clone());
                i += 1;
            } else if i == x.len() || y[j].0 < x[i].0 {
                out.push((y[j].0, a * &y[j].1));
                j += 1;
            } else {
                let s = &x[i].1 + a * &y[j].1;
                if !s.is_zero() {
                    out.push((x[i].0, s));
                }
                i += 1;
                j += 1;
            }
        }
        FinVec { universe: self.universe.clone(), entries: out }
    }

    pub fn add(&self, other: &FinVec) -> FinVec {
        self.axpy(&Rat::one(), other)
    }

    pub fn sub(&self, other: &FinVec) -> FinVec {
        self.axpy(&-Rat::one(), other)
    }

    pub fn neg(&self) -> FinVec {
        self.scale(&-Rat::one())
    }

    /// Entrywise absolute value.
    pub fn abs(&self) -> FinVec {
        FinVec {
            universe: self.universe.clone(),
            entries: self.entries.iter().map(|(i, x)| (*i, x.abs())).collect(),
        }
    }

    pub fn restrict<F: Fn(IndexId) -> bool>(&self, keep: F) -> FinVec {
        FinVec {
            universe: self.universe.clone(),
            entries: self.entries.iter().filter(|e| keep(e.0)).cloned().collect(),
        }
    }

    /// Relabels indices (and possibly the universe); `f` must be injective.
    pub fn reindex<F: Fn(IndexId) -> IndexId>(&self, universe: &Universe, f: F) -> FinVec {
        FinVec::from_entries(universe, self.entries.iter().map(|(i, x)| (f(*i), x.clone())))
    }

    pub fn with_universe(&self, universe: &Universe) -> FinVec {
        FinVec { universe: universe.clone(), entries: self.entries.clone() }
    }
}

impl fmt::Debug for FinVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (i, x)) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}: {x}")?;
        }
        write!(f, "}}@{:?}", self.universe)
    }
}

fn int_number(s: String) -> serde_json::Value {
    serde_json::Value::Number(s.parse().expect("integer literal"))
}

impl Serialize for FinVec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(i, x)| {
                serde_json::Value::Array(vec![
                    serde_json::Value::from(*i),
                    int_number(x.numer().to_string()),
                    int_number(x.denom().to_string()),
                ])
            })
            .collect();
        let mut m = serde_json::Map::new();
        m.insert("universe".into(), serde_json::Value::String(self.universe.name().to_string()));
        m.insert("entries".into(), serde_json::Value::Array(entries));
        serde_json::Value::Object(m).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FinVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<FinVec, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            universe: String,
            entries: Vec<(serde_json::Number, serde_json::Number, serde_json::Number)>,
        }
        let raw = Raw::deserialize(d)?;
        let u = Universe::new(&raw.universe);
        let mut out = Vec::with_capacity(raw.entries.len());
        for (i, n, den) in raw.entries {
            let i: IndexId = i.to_string().parse().map_err(D::Error::custom)?;
            let x: Rat = format!("{n}/{den}").parse().map_err(D::Error::custom)?;
            if x.is_zero() {
                return Err(D::Error::custom("stored zero entry"));
            }
            out.push((i, x));
        }
        if !out.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(D::Error::custom("entries not sorted by index"));
        }
        Ok(FinVec { universe: u, entries: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn v(entries: &[(IndexId, Rat)]) -> FinVec {
        FinVec::from_entries(&Universe::new("G"), entries.iter().cloned())
    }

    #[test]
    fn norms() {
        assert_eq!(v(&[]).l1_norm(), Rat::zero());
        assert_eq!(v(&[(1, q(1, 2)), (2, q(-1, 2))]).l1_norm(), Rat::one());
        assert_eq!(v(&[(1, q(3, 10)), (2, q(3, 10)), (3, q(4, 5))]).l1_norm(), q(7, 5));
        assert_eq!(v(&[]).linf_norm(), Rat::zero());
        assert_eq!(v(&[(1, q(-3, 4))]).linf_norm(), q(3, 4));
        assert_eq!(v(&[(1, q(1, 2)), (2, Rat::one())]).linf_norm(), Rat::one());
    }

    #[test]
    fn pairing() {
        assert_eq!(v(&[(7, Rat::one())]).pair(&v(&[(7, Rat::one())])).unwrap(), Rat::one());
        assert_eq!(v(&[(1, q(1, 2))]).pair(&v(&[(2, Rat::one())])).unwrap(), Rat::zero());
        let f = v(&[(1, q(1, 3)), (2, q(2, 3))]);
        let x = v(&[(1, Rat::int(3)), (2, q(-3, 2))]);
        assert_eq!(f.pair(&x).unwrap(), Rat::zero());
        let other = FinVec::unit(&Universe::new("N"), 1);
        assert!(matches!(f.pair(&other), Err(VecError::UniverseMismatch(..))));
    }

    #[test]
    fn duplicates_merge_and_zeros_drop() {
        let a = v(&[(3, q(1, 2)), (1, Rat::one()), (3, q(-1, 2))]);
        assert_eq!(a.entries(), &[(1, Rat::one())]);
    }

    #[test]
    fn json_round_trip() {
        let a = v(&[(2, q(-3, 7)), (5, Rat::new(i64::MAX, 3) * Rat::new(i64::MAX, 1))]);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.starts_with("{\"entries\":[[2,-3,7]"));
        let b: FinVec = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}
