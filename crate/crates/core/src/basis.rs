//! Unitriangular change between the `e*` and `d* = e* - c*` coordinates of `ℓ₁(Γ)`.
//!
//! Indices are allocated in rank order, so index order is rank compatible and
//! every row `c*_γ` only touches indices of strictly smaller rank.

use std::collections::BTreeMap;

use crate::rat::Rat;
use crate::vector::{FinVec, IndexId, Universe, VecError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BasisError {
    #[error("c*-row of {0} touches index {1} of rank {2}, not below rank {3}")]
    NotStrictlyLower(IndexId, IndexId, u32, u32),
    #[error("ranks must be nondecreasing in index order (index {0})")]
    RankOrder(IndexId),
    #[error(transparent)]
    Vec(#[from] VecError),
}

#[derive(Debug, Clone)]
pub struct TriangularBasisChange {
    universe: Universe,
    ranks: Vec<u32>,
    cstar: Vec<FinVec>,
}

impl TriangularBasisChange {
    pub fn new(universe: &Universe) -> TriangularBasisChange {
        TriangularBasisChange { universe: universe.clone(), ranks: Vec::new(), cstar: Vec::new() }
    }

    /// Appends the next index with its rank and `c*` row; returns the new id.
    pub fn push(&mut self, rank: u32, cstar: FinVec) -> Result<IndexId, BasisError> {
        let id = self.ranks.len() as IndexId;
        if let Some(&last) = self.ranks.last() {
            if rank < last {
                return Err(BasisError::RankOrder(id));
            }
        }
        if cstar.universe() != &self.universe {
            return Err(VecError::UniverseMismatch(cstar.universe().clone(), self.universe.clone()).into());
        }
        for j in cstar.support() {
            let rj = self.ranks.get(j as usize).copied().ok_or(VecError::OutOfDomain(j))?;
            if rj >= rank {
                return Err(BasisError::NotStrictlyLower(id, j, rj, rank));
            }
        }
        self.ranks.push(rank);
        self.cstar.push(cstar);
        Ok(id)
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn rank(&self, i: IndexId) -> u32 {
        self.ranks[i as usize]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn cstar(&self, i: IndexId) -> &FinVec {
        &self.cstar[i as usize]
    }

    fn check_domain(&self, v: &FinVec) -> Result<(), VecError> {
        if v.universe() != &self.universe {
            return Err(VecError::UniverseMismatch(v.universe().clone(), self.universe.clone()));
        }
        if let Some(m) = v.max_index() {
            if m as usize >= self.ranks.len() {
                return Err(VecError::OutOfDomain(m));
            }
        }
        Ok(())
    }

    /// Coefficients `a` with `v = Σ a_γ d*_γ`, by back substitution from the top index down.
    pub fn to_d(&self, v: &FinVec) -> Result<FinVec, VecError> {
        self.check_domain(v)?;
        let mut w: BTreeMap<IndexId, Rat> = v.entries().iter().cloned().collect();
        let mut out = Vec::with_capacity(w.len());
        while let Some((g, a)) = w.pop_last() {
            if a.is_zero() {
                continue;
            }
            for (j, c) in self.cstar[g as usize].entries() {
                let e = w.entry(*j).or_insert_with(Rat::zero);
                *e += &a * c;
            }
            out.push((g, a));
        }
        out.reverse();
        Ok(FinVec::from_sorted(&self.universe, out))
    }

    /// `Σ a_γ (e*_γ - c*_γ)`.
    pub fn from_d(&self, a: &FinVec) -> Result<FinVec, VecError> {
        self.check_domain(a)?;
        let mut acc: BTreeMap<IndexId, Rat> = BTreeMap::new();
        for (g, x) in a.entries() {
            *acc.entry(*g).or_insert_with(Rat::zero) += x;
            for (j, c) in self.cstar[*g as usize].entries() {
                *acc.entry(*j).or_insert_with(Rat::zero) -= &(x * c);
            }
        }
        Ok(FinVec::from_entries(&self.universe, acc))
    }

    /// `P*_{(k,m]} v`: keep the `d*` coordinates whose rank lies in `(k, m]`.
    pub fn project(&self, v: &FinVec, k: u32, m: u32) -> Result<FinVec, VecError> {
        let a = self.to_d(v)?;
        let kept = a.restrict(|g| {
            let r = self.ranks[g as usize];
            r > k && r <= m
        });
        self.from_d(&kept)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn chain() -> TriangularBasisChange {
        let u = Universe::new("G");
        let mut bc = TriangularBasisChange::new(&u);
        bc.push(1, FinVec::zero(&u)).unwrap();
        bc.push(2, FinVec::from_entries(&u, [(0, q(1, 2))])).unwrap();
        bc.push(3, FinVec::from_entries(&u, [(0, q(1, 4)), (1, q(-1, 3))])).unwrap();
        bc
    }

    #[test]
    fn unit_with_zero_row_is_its_own_d() {
        let bc = chain();
        let e0 = FinVec::unit(bc.universe(), 0);
        assert_eq!(bc.to_d(&e0).unwrap(), e0);
    }

    #[test]
    fn one_step_substitution() {
        let bc = chain();
        let e1 = FinVec::unit(bc.universe(), 1);
        let d = bc.to_d(&e1).unwrap();
        assert_eq!(d.entries(), &[(0, q(1, 2)), (1, Rat::one())]);
        assert_eq!(bc.from_d(&d).unwrap(), e1);
    }

    #[test]
    fn rejects_non_lower_rows() {
        let u = Universe::new("G");
        let mut bc = TriangularBasisChange::new(&u);
        bc.push(1, FinVec::zero(&u)).unwrap();
        let err = bc.push(1, FinVec::unit(&u, 0)).unwrap_err();
        assert!(matches!(err, BasisError::NotStrictlyLower(1, 0, 1, 1)));
    }

    #[test]
    fn projection_kills_lower_units() {
        let bc = chain();
        let e0 = FinVec::unit(bc.universe(), 0);
        assert!(bc.project(&e0, 1, 3).unwrap().is_zero());
        let e2 = FinVec::unit(bc.universe(), 2);
        assert_eq!(bc.project(&e2, 0, 3).unwrap(), e2);
    }
}
