//! Bourgain–Delbaen index sets, their functionals `c*_γ`, `d*_γ`, the
//! projections `P*_{(k,m]}`, the constants `C_n(θ)`, the extension operators
//! `J_m`, analyses of elements and verifiers for the associated inequalities.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::basis::{BasisError, TriangularBasisChange};
use crate::rat::Rat;
use crate::simplex;
use crate::vector::{FinVec, IndexId, Universe, VecError};
use crate::verdict::{Check, Report, Verdict};

pub const BD_SCHEMA: &str = "bdspace/bd-stage-set/v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BdError {
    #[error("rank {0} is below the previous rank {1}")]
    RankOrder(u32, u32),
    #[error("element of rank {0} has the wrong shape: {1}")]
    Shape(u32, String),
    #[error("reference to unknown element {0}")]
    UnknownRef(IndexId),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Vec(#[from] VecError),
    #[error("stage set JSON: {0}")]
    Json(String),
}

/// The tuple shape of an element. `Initial` marks the members of `Δ_1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GammaKind {
    Initial,
    /// `(n, β, b*, f)`.
    Type0 { beta: Rat, bstar: FinVec },
    /// `(n, α, k, ξ, β, b*, f)`.
    Type1 { alpha: Rat, k: u32, xi: IndexId, beta: Rat, bstar: FinVec },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaElement {
    pub id: IndexId,
    pub rank: u32,
    #[serde(flatten)]
    pub kind: GammaKind,
    /// Free variable; opaque to the framework.
    pub free: String,
}

impl GammaElement {
    /// The weight `w(γ) = β` (0 for `Δ_1`).
    pub fn weight(&self) -> Rat {
        match &self.kind {
            GammaKind::Initial => Rat::zero(),
            GammaKind::Type0 { beta, .. } | GammaKind::Type1 { beta, .. } => beta.clone(),
        }
    }

    pub fn bstar(&self) -> Option<&FinVec> {
        match &self.kind {
            GammaKind::Initial => None,
            GammaKind::Type0 { bstar, .. } | GammaKind::Type1 { bstar, .. } => Some(bstar),
        }
    }
}

/// A frozen sequence `Δ_1, …, Δ_N` with its `c*` table.
#[derive(Debug, Clone)]
pub struct BDStageSet {
    universe: Universe,
    elements: Vec<GammaElement>,
    basis: TriangularBasisChange,
}

#[derive(Serialize, Deserialize)]
struct StageSetDump {
    schema: String,
    universe: String,
    elements: Vec<GammaElement>,
    cstar: Vec<FinVec>,
}

impl BDStageSet {
    pub fn new(universe: &Universe) -> BDStageSet {
        BDStageSet { universe: universe.clone(), elements: Vec::new(), basis: TriangularBasisChange::new(universe) }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GammaElement] {
        &self.elements
    }

    pub fn element(&self, id: IndexId) -> &GammaElement {
        &self.elements[id as usize]
    }

    pub fn rank(&self, id: IndexId) -> u32 {
        self.elements[id as usize].rank
    }

    pub fn cstar(&self, id: IndexId) -> &FinVec {
        self.basis.cstar(id)
    }

    pub fn basis(&self) -> &TriangularBasisChange {
        &self.basis
    }

    /// Largest rank present.
    pub fn stage_bound(&self) -> u32 {
        self.elements.last().map_or(0, |e| e.rank)
    }

    /// Ids of `Δ_n`.
    pub fn delta(&self, n: u32) -> std::ops::Range<IndexId> {
        let lo = self.elements.partition_point(|e| e.rank < n) as IndexId;
        let hi = self.elements.partition_point(|e| e.rank <= n) as IndexId;
        lo..hi
    }

    /// `|Γ_n|`; the ids of `Γ_n` are `0..gamma_len(n)`.
    pub fn gamma_len(&self, n: u32) -> usize {
        self.elements.partition_point(|e| e.rank <= n)
    }

    pub fn unit(&self, id: IndexId) -> FinVec {
        FinVec::unit(&self.universe, id)
    }

    fn shape_error(rank: u32, m: &str) -> BdError {
        BdError::Shape(rank, m.to_string())
    }

    /// Computes `c*_γ` for a new element of rank `rank`.
    pub fn compute_cstar(&self, rank: u32, kind: &GammaKind) -> Result<FinVec, BdError> {
        match kind {
            GammaKind::Initial => Ok(FinVec::zero(&self.universe)),
            GammaKind::Type0 { beta, bstar } => {
                self.check_refs(bstar, rank)?;
                Ok(bstar.scale(beta))
            }
            GammaKind::Type1 { alpha, k, xi, beta, bstar } => {
                self.check_refs(bstar, rank)?;
                let x = self.elements.get(*xi as usize).ok_or(BdError::UnknownRef(*xi))?;
                if x.rank != *k || *k >= rank {
                    return Err(Self::shape_error(rank, "ξ must lie in Δ_k with k below the rank"));
                }
                let p = self.basis.project(bstar, *k, rank - 1)?;
                Ok(p.scale(beta).axpy(alpha, &self.unit(*xi)))
            }
        }
    }

    fn check_refs(&self, v: &FinVec, rank: u32) -> Result<(), BdError> {
        if v.universe() != &self.universe {
            return Err(VecError::UniverseMismatch(v.universe().clone(), self.universe.clone()).into());
        }
        for j in v.support() {
            let e = self.elements.get(j as usize).ok_or(BdError::UnknownRef(j))?;
            if e.rank >= rank {
                return Err(Self::shape_error(rank, "b* must live on lower ranks"));
            }
        }
        Ok(())
    }

    /// Appends an element; structural errors are rejected, the ball and
    /// range constraints are left to [`BDStageSet::validate_schema`].
    pub fn push(&mut self, rank: u32, kind: GammaKind, free: impl Into<String>) -> Result<IndexId, BdError> {
        let last = self.stage_bound();
        if rank < last.max(1) {
            return Err(BdError::RankOrder(rank, last));
        }
        match (&kind, rank) {
            (GammaKind::Initial, 1) => {}
            (GammaKind::Initial, _) => return Err(Self::shape_error(rank, "only Δ_1 holds initial elements")),
            (_, 1) => return Err(Self::shape_error(rank, "Δ_1 holds initial elements only")),
            _ => {}
        }
        let cstar = self.compute_cstar(rank, &kind)?;
        let id = self.basis.push(rank, cstar)?;
        self.elements.push(GammaElement { id, rank, kind, free: free.into() });
        Ok(id)
    }

    pub fn to_json(&self) -> String {
        let dump = StageSetDump {
            schema: BD_SCHEMA.to_string(),
            universe: self.universe.name().to_string(),
            elements: self.elements.clone(),
            cstar: (0..self.len() as IndexId).map(|i| self.cstar(i).clone()).collect(),
        };
        serde_json::to_string(&dump).expect("stage set serializes")
    }

    /// Rebuilds a stage set; the stored `c*` table must match the recomputed one.
    pub fn from_json(text: &str) -> Result<BDStageSet, BdError> {
        let (b, rep) = BDStageSet::from_json_checked(text)?;
        let failure = rep.failures().next().map(|f| f.detail.clone());
        match failure {
            Some(d) => Err(BdError::Json(d)),
            None => Ok(b),
        }
    }

    /// Rebuilds a stage set from its tuples and compares every stored `c*` with the
    /// recomputed one; each mismatch is a failed check naming the element.
    pub fn from_json_checked(text: &str) -> Result<(BDStageSet, Report), BdError> {
        let dump: StageSetDump = serde_json::from_str(text).map_err(|e| BdError::Json(e.to_string()))?;
        if dump.schema != BD_SCHEMA {
            return Err(BdError::Json(format!("schema tag {:?}", dump.schema)));
        }
        if dump.cstar.len() != dump.elements.len() {
            return Err(BdError::Json(format!("{} elements but {} c* entries", dump.elements.len(), dump.cstar.len())));
        }
        let mut b = BDStageSet::new(&Universe::new(&dump.universe));
        let mut bad = Vec::new();
        for (e, c) in dump.elements.into_iter().zip(dump.cstar) {
            let id = b.push(e.rank, e.kind, e.free)?;
            if id != e.id {
                return Err(BdError::Json(format!("element {} stored with id {}", id, e.id)));
            }
            let c = c.with_universe(&b.universe);
            if b.cstar(id) != &c {
                bad.push(json!({ "gamma": id, "rank": e.rank, "stored": c, "recomputed": b.cstar(id) }));
            }
        }
        let mut rep = Report::new();
        rep.push(match bad.first() {
            None => Check::pass("bd.cstar-table", format!("stored c* equals the recomputed c* for {} elements", b.len())),
            Some(first) => Check::fail(
                "bd.cstar-table",
                format!("element {}: stored c* differs from the recomputed one ({} mismatches)", first["gamma"], bad.len()),
                serde_json::Value::Array(bad),
            ),
        });
        Ok((b, rep))
    }

    /// `P*_{(k,m]} v`.
    pub fn project(&self, v: &FinVec, k: u32, m: u32) -> FinVec {
        self.basis.project(v, k, m).expect("vector over this stage set")
    }

    /// Checks the tuple shapes, ball memberships, ranges and the `c*` table.
    pub fn validate_schema(&self) -> Report {
        let mut rep = Report::new();
        let unit_interval = |r: &Rat| !r.is_negative() && *r <= Rat::one();
        let mut bad: Vec<(IndexId, &'static str)> = Vec::new();
        let mut seen = HashSet::new();
        for e in &self.elements {
            let n = e.rank;
            if !seen.insert((n, &e.kind, &e.free)) {
                bad.push((e.id, "duplicate tuple"));
            }
            match &e.kind {
                GammaKind::Initial => {
                    if n != 1 {
                        bad.push((e.id, "initial element outside Δ_1"));
                    }
                }
                GammaKind::Type0 { beta, bstar } => {
                    if !unit_interval(beta) {
                        bad.push((e.id, "β outside [0,1]"));
                    }
                    if bstar.l1_norm() > Rat::one() {
                        bad.push((e.id, "b* outside the ℓ₁ ball"));
                    }
                    if bstar.support().any(|j| self.rank(j) >= n) {
                        bad.push((e.id, "b* not in ℓ₁(Γ_{n-1})"));
                    }
                }
                GammaKind::Type1 { alpha, k, xi, beta, bstar } => {
                    if !unit_interval(alpha) || !unit_interval(beta) {
                        bad.push((e.id, "α or β outside [0,1]"));
                    }
                    if *k < 1 || *k + 2 > n {
                        bad.push((e.id, "k outside [1, n-2]"));
                    }
                    if self.rank(*xi) != *k {
                        bad.push((e.id, "ξ not in Δ_k"));
                    }
                    if bstar.l1_norm() > Rat::one() {
                        bad.push((e.id, "b* outside the ℓ₁ ball"));
                    }
                    if bstar.support().any(|j| self.rank(j) <= *k || self.rank(j) >= n) {
                        bad.push((e.id, "b* not in ℓ₁(Γ_{n-1} \\ Γ_k)"));
                    }
                }
            }
            if self.compute_cstar(n, &e.kind).ok().as_ref() != Some(self.cstar(e.id)) {
                bad.push((e.id, "c* table differs from the recomputed functional"));
            }
        }
        let empty: Vec<u32> = (1..=self.stage_bound()).filter(|&n| self.delta(n).is_empty()).collect();
        rep.push(if bad.is_empty() {
            Check::pass("bd.schema", format!("{} elements over {} stages", self.len(), self.stage_bound()))
        } else {
            let w: Vec<_> = bad.iter().take(20).map(|(id, m)| json!({ "element": id, "violation": m })).collect();
            Check::fail("bd.schema", format!("{} violations; first: element {} {}", bad.len(), bad[0].0, bad[0].1), json!(w))
        });
        rep.push(if empty.is_empty() {
            Check::pass("bd.nonempty-stages", "every Δ_n is nonempty")
        } else {
            // An empty Δ_n only makes F_n = {0}; builders decide whether it is a defect.
            Check::new("bd.nonempty-stages", Verdict::NotApplicable, format!("Δ_n is empty for n in {empty:?}")).with_witness(json!(empty))
        });
        rep
    }

    /// Every type-1 element has `β ≤ θ` or `b* = e*_η` with `k < rk(η) < n` and `c*_η = 0`.
    pub fn small_weight_condition(&self, theta: &Rat) -> Result<(), IndexId> {
        for e in &self.elements {
            if let GammaKind::Type1 { k, beta, bstar, .. } = &e.kind {
                if beta <= theta {
                    continue;
                }
                let ok = bstar.len() == 1 && bstar.entries()[0].1.is_one() && {
                    let eta = bstar.entries()[0].0;
                    let r = self.rank(eta);
                    *k < r && r < e.rank && self.cstar(eta).is_zero()
                };
                if !ok {
                    return Err(e.id);
                }
            }
        }
        Ok(())
    }

    /// `C_n(θ)`, `C_n` and the column bound `max ‖P*_{[1,m]} e*_γ‖₁` for every stage.
    pub fn compute_constants(&self, theta: &Rat) -> Constants {
        let top = self.stage_bound() as usize;
        // Per type-1 element: (rank, weight, max_m ‖P*_{(k,m]} b*‖₁ · β).
        let per: Vec<(u32, Rat, Rat)> = self
            .elements
            .par_iter()
            .filter_map(|e| match &e.kind {
                GammaKind::Type1 { k, beta, bstar, .. } => {
                    let a = self.basis.to_d(bstar).unwrap();
                    let best = (k + 1..e.rank)
                        .map(|m| self.d_restricted_norm(&a, *k, m))
                        .max()
                        .unwrap_or_else(Rat::zero);
                    Some((e.rank, beta.clone(), beta * &best))
                }
                _ => None,
            })
            .collect();
        let columns: Vec<(u32, Rat)> = self
            .elements
            .par_iter()
            .map(|e| {
                let a = self.basis.to_d(&self.unit(e.id)).unwrap();
                let best = (1..e.rank).map(|m| self.d_restricted_norm(&a, 0, m)).max().unwrap_or_else(Rat::zero);
                (e.rank, Rat::max_of(&best, &Rat::one()))
            })
            .collect();
        let mut stages = Vec::with_capacity(top);
        let (mut ct, mut c0, mut col) = (Rat::zero(), Rat::zero(), Rat::zero());
        for n in 1..=top as u32 {
            for (r, beta, v) in &per {
                if *r == n {
                    if beta > theta {
                        ct = Rat::max_of(&ct, v);
                    }
                    c0 = Rat::max_of(&c0, v);
                }
            }
            for (r, v) in &columns {
                if *r == n {
                    col = Rat::max_of(&col, v);
                }
            }
            stages.push(StageConstants { n, c_theta: ct.clone(), c_n: c0.clone(), column_bound: col.clone() });
        }
        let c_sup = c0.clone();
        let weight_bound = if self.small_weight_condition(theta).is_ok() && *theta < Rat::new(1, 2) {
            let t = (Rat::one() - theta * Rat::int(2)).recip();
            Some(Rat::max_of(&t, &Rat::int(2)))
        } else {
            None
        };
        Constants { theta: theta.clone(), stages, m_bound: Rat::one() + &c_sup, c_sup, m_stage: col, weight_bound }
    }

    /// `‖P*_{(k,m]} v‖₁` from the `d*` coordinates `a` of `v`.
    fn d_restricted_norm(&self, a: &FinVec, k: u32, m: u32) -> Rat {
        let kept = a.restrict(|g| {
            let r = self.rank(g);
            r > k && r <= m
        });
        self.basis.from_d(&kept).unwrap().l1_norm()
    }

    /// Checks the decomposition-constant statements on this build.
    pub fn verify_constants(&self, theta: &Rat) -> (Constants, Report) {
        let k = self.compute_constants(theta);
        let mut rep = Report::new();
        let half = Rat::new(1, 2);
        let mut bad_a = Vec::new();
        let mut bad_col = Vec::new();
        for s in &k.stages {
            if *theta < half {
                let t = theta * Rat::int(2);
                let bound = Rat::max_of(&(&t / (Rat::one() - &t)), &s.c_theta);
                if s.c_n > bound {
                    bad_a.push(s.n);
                }
            }
            if s.column_bound > Rat::one() + &s.c_n {
                bad_col.push(s.n);
            }
        }
        rep.push(if bad_a.is_empty() {
            Check::pass("bd.constants.theta-bound", format!("C_n ≤ max(2θ/(1-2θ), C_n(θ)) for θ = {theta}"))
        } else {
            Check::fail("bd.constants.theta-bound", "C_n exceeds max(2θ/(1-2θ), C_n(θ))", json!(bad_a))
        });
        rep.push(if bad_col.is_empty() {
            Check::pass("bd.constants.projections", format!("‖P*_[1,m]‖ ≤ 1 + C_n on every stage; M_stage = {}, 1 + C = {}", k.m_stage, k.m_bound))
        } else {
            Check::fail("bd.constants.projections", "‖P*_[1,m]‖ exceeds 1 + C_n", json!(bad_col))
        });
        match (&k.weight_bound, self.small_weight_condition(theta)) {
            (Some(b), _) => rep.push(if k.m_stage <= *b && k.m_bound <= *b {
                Check::pass("bd.constants.small-weights", format!("condition holds for θ = {theta}; M ≤ {b}"))
            } else {
                Check::fail("bd.constants.small-weights", format!("condition holds but M exceeds {b}"), json!(k.m_stage.to_string()))
            }),
            (None, Err(id)) => rep.push(Check::new(
                "bd.constants.small-weights",
                Verdict::NotApplicable,
                format!("element {id} violates the condition for θ = {theta}"),
            )),
            (None, Ok(())) => rep.push(Check::new("bd.constants.small-weights", Verdict::NotApplicable, "θ ≥ 1/2")),
        }
        (k, rep)
    }

    /// `J_m x` on the whole build: `x` on `Γ_m`, then `(J_m x)(γ) = ⟨c*_γ, J_m x⟩` upwards.
    pub fn extend(&self, x: &FinVec, m: u32) -> FinVec {
        let base = self.gamma_len(m);
        let mut y: Vec<Rat> = vec![Rat::zero(); self.len()];
        for (i, v) in x.entries() {
            if (*i as usize) < base {
                y[*i as usize] = v.clone();
            }
        }
        for g in base..self.len() {
            let v: Rat = self.cstar(g as IndexId).entries().iter().map(|(j, c)| c * &y[*j as usize]).sum();
            y[g] = v;
        }
        FinVec::from_entries(&self.universe, y.into_iter().enumerate().map(|(i, v)| (i as IndexId, v)))
    }

    /// `R_target J_m x`.
    pub fn apply_jm(&self, x: &FinVec, m: u32, target: u32) -> FinVec {
        let len = self.gamma_len(target) as IndexId;
        self.extend(x, m).restrict(|g| g < len)
    }

    /// `J_m` is an isometry on `ℓ∞(Δ_m)`: all sign patterns when `|Δ_m| ≤ 12`, else sampled ones.
    pub fn verify_isometry(&self, m: u32, samples: usize, seed: u64) -> Check {
        let name = format!("bd.isometry.J{m}");
        let d = self.delta(m);
        let size = d.len();
        if size == 0 {
            return Check::pass(&name, "Δ_m is empty");
        }
        let exhaustive = size <= 12;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let patterns: Vec<Vec<bool>> = if exhaustive {
            (0..1u32 << size.saturating_sub(1)).map(|p| (0..size).map(|i| i > 0 && p >> (i - 1) & 1 == 1).collect()).collect()
        } else {
            (0..samples).map(|_| (0..size).map(|_| rng.gen()).collect()).collect()
        };
        let failure = patterns.par_iter().find_map_any(|p| {
            let x = FinVec::from_entries(
                &self.universe,
                d.clone().zip(p).map(|(g, neg)| (g, if *neg { -Rat::one() } else { Rat::one() })),
            );
            let y = self.extend(&x, m);
            (y.linf_norm() != Rat::one() || y.restrict(|g| self.rank(g) <= m) != x).then_some(x)
        });
        match failure {
            Some(x) => Check::fail(&name, "‖J_m x‖ ≠ ‖x‖ for a sign pattern", serde_json::to_value(&x).unwrap()),
            None if exhaustive => Check::pass(&name, format!("all {} sign patterns on |Δ_m| = {size}", patterns.len())),
            None => Check::new(&name, Verdict::PassAtBudget, format!("{} sampled sign patterns on |Δ_m| = {size}", patterns.len())),
        }
    }

    /// `R_m J_m = id`, `J_n R_n J_m = J_m` and `‖J_m x‖ ≤ M‖x‖` on random rational `x ∈ ℓ∞(Γ_m)`.
    pub fn verify_extension(&self, m: u32, bound: &Rat, samples: usize, seed: u64) -> Check {
        let name = format!("bd.extension.J{m}");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = self.gamma_len(m);
        for _ in 0..samples {
            let x = FinVec::from_entries(
                &self.universe,
                (0..len).map(|g| (g as IndexId, Rat::new(rng.gen_range(-8..=8), 8))),
            );
            let y = self.extend(&x, m);
            if y.restrict(|g| (g as usize) < len) != x {
                return Check::fail(&name, "R_m J_m x ≠ x", serde_json::to_value(&x).unwrap());
            }
            for n in m..=self.stage_bound() {
                let z = self.extend(&y.restrict(|g| self.rank(g) <= n), n);
                if z != y {
                    return Check::fail(&name, format!("J_n R_n J_m x ≠ J_m x for n = {n}"), serde_json::to_value(&x).unwrap());
                }
            }
            if y.linf_norm() > bound * &x.linf_norm() {
                return Check::fail(&name, format!("‖J_m x‖ > {bound}·‖x‖"), serde_json::to_value(&x).unwrap());
            }
        }
        Check::new(&name, Verdict::PassAtBudget, format!("{samples} random vectors"))
    }

    /// The analysis of `γ`: unfold type-1 references down to a type-0 (or initial) root.
    pub fn analyze(&self, id: IndexId) -> Result<AnalysisRecord, BdError> {
        let mut chain = vec![id];
        let mut cur = id;
        while let GammaKind::Type1 { xi, .. } = &self.element(cur).kind {
            if *xi >= cur {
                return Err(BdError::Shape(self.rank(cur), "cyclic reference".into()));
            }
            cur = *xi;
            chain.push(cur);
        }
        chain.reverse();
        // Coefficient of e*_{ξ_j} after unfolding from γ down to ξ_j.
        let mut coeff = vec![Rat::one(); chain.len()];
        for j in (0..chain.len() - 1).rev() {
            let a = match &self.element(chain[j + 1]).kind {
                GammaKind::Type1 { alpha, .. } => alpha.clone(),
                _ => unreachable!(),
            };
            coeff[j] = &coeff[j + 1] * &a;
        }
        let mut terms = Vec::with_capacity(chain.len());
        let mut prev = 0u32;
        for (j, &g) in chain.iter().enumerate() {
            let e = self.element(g);
            let (beta, bstar) = match &e.kind {
                GammaKind::Initial => (Rat::zero(), FinVec::zero(&self.universe)),
                GammaKind::Type0 { beta, bstar } | GammaKind::Type1 { beta, bstar, .. } => (beta.clone(), bstar.clone()),
            };
            terms.push(AnalysisTerm { alpha: coeff[j].clone(), xi: g, beta: &coeff[j] * &beta, bstar, lo: prev, hi: e.rank });
            prev = e.rank;
        }
        let cuts = chain.iter().map(|&g| self.rank(g)).collect();
        Ok(AnalysisRecord { gamma: id, terms, cuts })
    }

    /// Expands `Σ α_j d*_{ξ_j} + β_j P*_{(p_{j-1},p_j)} b*_j` in `e*` coordinates.
    pub fn expand_analysis(&self, a: &AnalysisRecord) -> FinVec {
        let mut acc = FinVec::zero(&self.universe);
        for t in &a.terms {
            let d = self.unit(t.xi).sub(self.cstar(t.xi));
            acc = acc.axpy(&t.alpha, &d);
            if !t.beta.is_zero() {
                acc = acc.axpy(&t.beta, &self.project(&t.bstar, t.lo, t.hi - 1));
            }
        }
        acc
    }

    /// The analysis expansion reproduces `e*_γ` for every element.
    pub fn verify_analyses(&self) -> Check {
        let bad = (0..self.len() as IndexId).into_par_iter().find_any(|&g| match self.analyze(g) {
            Ok(a) => self.expand_analysis(&a) != self.unit(g),
            Err(_) => true,
        });
        match bad {
            None => Check::pass("bd.analysis", format!("expansion equals e*_γ for all {} elements", self.len())),
            Some(g) => Check::fail("bd.analysis", format!("analysis of element {g} does not reproduce it"), json!(g)),
        }
    }

    /// Rows `R_n P*_{[1,n]} e*_γ` for `γ ∈ Γ_N`, so that `(J_n x)(γ) = row_γ · x`; deduplicated.
    fn jn_rows(&self, n: u32) -> Vec<Vec<Rat>> {
        let len = self.gamma_len(n);
        let mut rows: Vec<Vec<Rat>> = (0..len).map(|i| (0..len).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()).collect();
        for g in len..self.len() {
            let mut row = vec![Rat::zero(); len];
            for (j, c) in self.cstar(g as IndexId).entries() {
                for (r, v) in row.iter_mut().zip(&rows[*j as usize]) {
                    if !v.is_zero() {
                        *r += &(c * v);
                    }
                }
            }
            rows.push(row);
        }
        let mut out: Vec<Vec<Rat>> = rows.into_iter().filter(|r| r.iter().any(|v| !v.is_zero())).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Dual norm of `y* ∈ ℓ₁(Γ_n)` against the stage space `J_n(ℓ∞(Γ_n))` normed in `ℓ∞(Γ_N)`:
    /// `max{⟨y*, x⟩ : ‖J_n x‖ ≤ 1}`, an exact linear program over the build.
    pub fn stage_dual_norm(&self, y: &FinVec, n: u32) -> Rat {
        let rows = self.jn_rows(n);
        self.stage_dual_norm_with(y, n, &rows)
    }

    fn stage_dual_norm_with(&self, y: &FinVec, n: u32, rows: &[Vec<Rat>]) -> Rat {
        let len = self.gamma_len(n);
        // x = u - v with u, v ≥ 0; constraints ±row·x ≤ 1.
        let mut obj = vec![Rat::zero(); 2 * len];
        for (g, a) in y.entries() {
            obj[*g as usize] = a.clone();
            obj[len + *g as usize] = -a;
        }
        let mut a = Vec::with_capacity(2 * rows.len());
        for r in rows {
            let mut p = r.clone();
            p.extend(r.iter().map(|v| -v));
            let neg: Vec<Rat> = p.iter().map(|v| -v).collect();
            a.push(p);
            a.push(neg);
        }
        let b = vec![Rat::one(); a.len()];
        simplex::maximize(&obj, &a, &b).expect("bounded since J_n x restricts to x")
    }

    /// `‖y*‖_* ≤ ‖y*‖₁ ≤ M‖y*‖_*` on random `y* ∈ ℓ₁(Γ_n)`, and the factored
    /// representation on `⊕_{j=m+1}^n F*_j`. Exact when `|Γ_n| ≤ exact_limit`,
    /// otherwise `‖y*‖_*` is bracketed by the sign-pattern bound and `‖y*‖₁`.
    pub fn verify_dual_norms(&self, n: u32, m_const: &Rat, samples: usize, exact_limit: usize, seed: u64) -> Report {
        let mut rep = Report::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = self.gamma_len(n);
        let exact = len <= exact_limit;
        let rows = if exact { self.jn_rows(n) } else { Vec::new() };
        let ys: Vec<FinVec> = (0..samples)
            .map(|_| {
                let k = rng.gen_range(1..=len.min(6));
                FinVec::from_entries(
                    &self.universe,
                    (0..k).map(|_| (rng.gen_range(0..len) as IndexId, Rat::new(rng.gen_range(-6..=6), rng.gen_range(1..=4)))),
                )
            })
            .filter(|y| !y.is_zero())
            .collect();
        let results: Vec<Option<(FinVec, String)>> = ys
            .par_iter()
            .map(|y| {
                let l1 = y.l1_norm();
                let lower = if exact {
                    self.stage_dual_norm_with(y, n, &rows)
                } else {
                    let s = FinVec::from_entries(&self.universe, y.entries().iter().map(|(g, a)| (*g, Rat::int(a.signum() as i64))));
                    &l1 / &self.extend(&s, n).linf_norm()
                };
                if lower > l1 {
                    return Some((y.clone(), format!("‖y*‖_* = {lower} > ‖y*‖₁ = {l1}")));
                }
                if l1 > m_const * &lower {
                    return Some((y.clone(), format!("‖y*‖₁ = {l1} > M·‖y*‖_* = {}", m_const * &lower)));
                }
                None
            })
            .collect();
        let name = "bd.dual-norms";
        let bad = results.iter().flatten().next();
        rep.push(match bad {
            Some((y, why)) => Check::fail(name, why.clone(), serde_json::to_value(y).unwrap()),
            None => Check::new(
                name,
                if exact { Verdict::Pass } else { Verdict::PassAtBudget },
                format!("{} functionals on Γ_{n} (|Γ_n| = {len}, {})", ys.len(), if exact { "exact" } else { "bracketed" }),
            ),
        });
        // Factored representation: y* = P*_{(m,n]} y, a = e*-coordinates of y* off Γ_m.
        let mut bad_f = None;
        for (i, y) in ys.iter().enumerate() {
            let m = 1 + (i as u32) % n.max(2).saturating_sub(1).max(1);
            if m >= n {
                continue;
            }
            let ystar = self.project(y, m, n);
            if ystar.is_zero() {
                continue;
            }
            let a = ystar.restrict(|g| self.rank(g) > m);
            let lower = if exact {
                self.stage_dual_norm_with(&ystar, n, &rows)
            } else {
                let s = FinVec::from_entries(&self.universe, ystar.entries().iter().map(|(g, v)| (*g, Rat::int(v.signum() as i64))));
                &ystar.l1_norm() / &self.extend(&s, n).linf_norm()
            };
            if self.project(&a, m, n) != ystar || a.l1_norm() > m_const * &lower {
                bad_f = Some(ystar);
                break;
            }
        }
        rep.push(match bad_f {
            Some(y) => Check::fail("bd.dual-norms.factored", "factored representation fails", serde_json::to_value(&y).unwrap()),
            None => Check::new(
                "bd.dual-norms.factored",
                if exact { Verdict::Pass } else { Verdict::PassAtBudget },
                "y* = P*_(m,n](Σ a_γ e*_γ) with ‖a‖₁ ≤ M‖y*‖_*",
            ),
        });
        rep
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageConstants {
    pub n: u32,
    pub c_theta: Rat,
    pub c_n: Rat,
    /// `max ‖P*_{[1,m]} e*_γ‖₁` over `γ ∈ Γ_n`, `m < n` (at least 1).
    pub column_bound: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constants {
    pub theta: Rat,
    pub stages: Vec<StageConstants>,
    pub c_sup: Rat,
    /// `1 + C`.
    pub m_bound: Rat,
    /// The decomposition constant of the built stages.
    pub m_stage: Rat,
    /// `max(1/(1-2θ), 2)` when the small-weight condition holds.
    pub weight_bound: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisTerm {
    pub alpha: Rat,
    pub xi: IndexId,
    pub beta: Rat,
    pub bstar: FinVec,
    /// The open interval `(p_{j-1}, p_j)`.
    pub lo: u32,
    pub hi: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub gamma: IndexId,
    pub terms: Vec<AnalysisTerm>,
    pub cuts: Vec<u32>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    /// Δ_1 = {a, b}; Δ_2 = {(2, 1/2, e*_a - e*_b)}; Δ_3 = {(3, 1, 1, a, 1/4, e*_c)} with c the Δ_2 element.
    fn small() -> BDStageSet {
        let u = Universe::new("G");
        let mut b = BDStageSet::new(&u);
        let a = b.push(1, GammaKind::Initial, "a").unwrap();
        let bb = b.push(1, GammaKind::Initial, "b").unwrap();
        let bstar = FinVec::from_entries(&u, [(a, q(1, 2)), (bb, q(-1, 2))]);
        let c = b.push(2, GammaKind::Type0 { beta: q(1, 2), bstar }, "").unwrap();
        b.push(3, GammaKind::Type1 { alpha: Rat::one(), k: 1, xi: a, beta: q(1, 4), bstar: b.unit(c) }, "").unwrap();
        b
    }

    #[test]
    fn schema_and_functionals() {
        let b = small();
        assert!(!b.validate_schema().has_failures());
        // P*_(1,2] e*_c = d*_c = e*_c - (e*_a - e*_b)/4.
        assert_eq!(b.cstar(3), &FinVec::from_entries(b.universe(), [(0, q(15, 16)), (1, q(1, 16)), (2, q(1, 4))]));
        assert_eq!(b.delta(1), 0..2);
        assert_eq!(b.gamma_len(2), 3);
    }

    #[test]
    fn schema_violations() {
        let mut b = small();
        let big = FinVec::from_entries(b.universe(), [(2, q(3, 2))]);
        b.push(4, GammaKind::Type1 { alpha: Rat::one(), k: 1, xi: 0, beta: q(1, 2), bstar: big }, "").unwrap();
        assert!(b.validate_schema().has_failures());
        let mut b = small();
        let low = FinVec::from_entries(b.universe(), [(0, q(1, 2))]);
        b.push(4, GammaKind::Type1 { alpha: Rat::one(), k: 1, xi: 0, beta: q(1, 2), bstar: low }, "").unwrap();
        assert!(b.validate_schema().has_failures());
    }

    #[test]
    fn projections() {
        let b = small();
        let e2 = b.unit(2);
        assert_eq!(b.project(&e2, 2, 3), FinVec::zero(b.universe()));
        let v = FinVec::from_entries(b.universe(), [(0, q(1, 3)), (3, q(2, 1))]);
        let p = b.project(&v, 1, 3);
        assert_eq!(b.project(&p, 1, 3), p);
    }

    #[test]
    fn extension_and_isometry() {
        let b = small();
        for m in 1..=3 {
            assert_eq!(b.verify_isometry(m, 10, 1).verdict, Verdict::Pass);
        }
        let x = FinVec::from_entries(b.universe(), [(0, q(1, 1)), (1, q(-1, 1))]);
        let y = b.extend(&x, 1);
        assert_eq!(y.get(2), q(1, 2));
        assert_eq!(y.get(3), q(1, 1));
    }

    #[test]
    fn constants_and_analysis() {
        let b = small();
        let k = b.compute_constants(&q(1, 4));
        assert_eq!(k.stages[0].c_n, Rat::zero());
        assert_eq!(k.weight_bound, Some(q(2, 1)));
        assert!(!b.verify_constants(&q(1, 4)).1.has_failures());
        let a = b.analyze(3).unwrap();
        assert_eq!(a.cuts, vec![1, 3]);
        assert_eq!(b.verify_analyses().verdict, Verdict::Pass);
    }

    #[test]
    fn dual_norms() {
        let b = small();
        let k = b.compute_constants(&q(1, 4));
        let rep = b.verify_dual_norms(3, &k.m_stage, 30, 20, 5);
        assert!(!rep.has_failures(), "{}", rep.render());
        let e = b.unit(0);
        assert_eq!(b.stage_dual_norm(&e, 1), Rat::one());
    }

    #[test]
    fn json_round_trip() {
        let b = small();
        let back = BDStageSet::from_json(&b.to_json()).unwrap();
        assert_eq!(back.elements(), b.elements());
    }
}
