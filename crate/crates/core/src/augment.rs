//! Augmentations of a Bourgain–Delbaen build. New elements `Θ_n` are added
//! stage by stage so that their functionals follow the coded norming set of a
//! space `V` with a 1-unconditional basis. The base space is carried over by
//! `ψ`, block coefficient patterns of `V*` are realised by single elements, and
//! block sequences get exact lower-estimate certificates.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bd::{BDStageSet, BdError, Constants, GammaKind};
use crate::family::is_spread;
use crate::rat::Rat;
use crate::seed::EpsRule;
use crate::simplex;
use crate::theorem_a::{m_sequence, Tuple};
use crate::tsirelson::{build_dual_norming_set_on, TsirelsonError, TsirelsonSpec};
use crate::vector::{FinVec, IndexId, Universe};
use crate::verdict::{Check, Report, Verdict};

pub const AUGMENT_SCHEMA: &str = "bdspace/augmentation/v1";
pub const CERTIFICATE_SCHEMA: &str = "bdspace/lower-estimate/v1";

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("stage {0} is beyond the base build (stage bound {1})")]
    StageBound(u32, u32),
    #[error(transparent)]
    Bd(#[from] BdError),
    #[error(transparent)]
    Tsirelson(#[from] TsirelsonError),
    #[error("no {class} element at stage {stage} for this pattern")]
    MissingTheta { class: ThetaClass, stage: u32 },
    #[error("windows break q_n + n < p_(n+1) at block {0}")]
    Windows(usize),
    #[error("the functional is not a member of D^V supported on the window tops")]
    Pattern,
    #[error("{0}")]
    Input(String),
}

/// The four kinds of new elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThetaClass {
    /// `(n+1, rc, b*)` for an atom `(r v*_{n+1})`.
    #[serde(rename = "0,1")]
    ZeroOne,
    /// `(n+1, r, e*_η)` with `η^V` the decomposition of a longer `x*`.
    #[serde(rename = "0,2")]
    ZeroTwo,
    /// `(n+1, k, ξ, rc, b*)`.
    #[serde(rename = "1,1")]
    OneOne,
    /// `(n+1, k, ξ, r, e*_η)`.
    #[serde(rename = "1,2")]
    OneTwo,
}

impl fmt::Display for ThetaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThetaClass::ZeroOne => "(0,1)",
            ThetaClass::ZeroTwo => "(0,2)",
            ThetaClass::OneOne => "(1,1)",
            ThetaClass::OneTwo => "(1,2)",
        })
    }
}

impl ThetaClass {
    fn tag(self) -> String {
        format!("theta:{self}")
    }

    fn is_type1(self) -> bool {
        matches!(self, ThetaClass::OneOne | ThetaClass::OneTwo)
    }
}

/// A member of `D^V` over stage coordinates, with its special decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VMember {
    pub functional: FinVec,
    pub decomposition: Tuple,
}

impl VMember {
    pub fn support(&self) -> Vec<u32> {
        self.functional.support().collect()
    }

    pub fn is_atom(&self) -> bool {
        self.functional.len() == 1
    }
}

/// The nonnegative part of the Tsirelson dual norming set of `V`, on stage
/// coordinates. Signs are carried by the `b*` of the new elements instead.
#[derive(Debug, Clone)]
pub struct DualV {
    pub spec: TsirelsonSpec,
    /// `V` index `j` sits at stage coordinate `m_j` (the remaining coordinates are `c₀`'s).
    pub interleaved: bool,
    pub members: Vec<VMember>,
    full: HashMap<Tuple, usize>,
    prefixes: HashSet<Tuple>,
    /// Next parts `(r, x*)` after each prefix (the empty prefix included).
    extensions: HashMap<Tuple, Vec<(Rat, usize)>>,
    atoms: HashMap<u32, usize>,
}

impl DualV {
    /// Builds `D^V` from the Tsirelson set on the `V` indices `support`.
    pub fn build(spec: &TsirelsonSpec, depth: u32, support: &[u32], cap: usize, interleaved: bool) -> Result<DualV, AugmentError> {
        let ds = build_dual_norming_set_on(spec, depth, support, cap)?;
        let u = Universe::new("v");
        let coord = |j: u32| if interleaved { m_sequence(j) } else { j };
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut members = Vec::new();
        for (i, m) in ds.members.iter().enumerate() {
            if m.functional.entries().iter().any(|(_, a)| a.is_negative()) {
                continue;
            }
            let decomposition: Tuple = if m.parts.is_empty() {
                vec![(Rat::one(), members.len())]
            } else {
                match ds.decomposition(i).into_iter().map(|(r, p)| remap.get(&p).map(|&q| (r, q))).collect() {
                    Some(d) => d,
                    None => continue,
                }
            };
            remap.insert(i, members.len());
            members.push(VMember { functional: m.functional.reindex(&u, coord), decomposition });
        }
        Ok(DualV::from_members(spec.clone(), interleaved, members))
    }

    fn from_members(spec: TsirelsonSpec, interleaved: bool, members: Vec<VMember>) -> DualV {
        let mut full = HashMap::new();
        let mut prefixes = HashSet::new();
        let mut extensions: HashMap<Tuple, Vec<(Rat, usize)>> = HashMap::new();
        let mut atoms = HashMap::new();
        for (i, m) in members.iter().enumerate() {
            full.insert(m.decomposition.clone(), i);
            if m.is_atom() {
                atoms.insert(m.functional.min_index().unwrap(), i);
            }
            for j in 0..m.decomposition.len() {
                let t = m.decomposition[..j].to_vec();
                let next = m.decomposition[j].clone();
                let list = extensions.entry(t).or_default();
                if !list.contains(&next) {
                    list.push(next);
                }
                prefixes.insert(m.decomposition[..=j].to_vec());
            }
        }
        DualV { spec, interleaved, members, full, prefixes, extensions, atoms }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Stage coordinate of `V` index `j`.
    pub fn coord(&self, j: u32) -> u32 {
        if self.interleaved {
            m_sequence(j)
        } else {
            j
        }
    }

    /// `V` index of a stage coordinate.
    pub fn index_of(&self, coord: u32) -> Option<u32> {
        if !self.interleaved {
            return Some(coord);
        }
        (1..=coord).find(|&j| m_sequence(j) == coord)
    }

    /// `(r x*_1, …)` is an initial segment of some special decomposition.
    pub fn in_gamma(&self, t: &[(Rat, usize)]) -> bool {
        self.prefixes.contains(t)
    }

    pub fn member_of_decomposition(&self, t: &[(Rat, usize)]) -> Option<usize> {
        self.full.get(t).copied()
    }

    pub fn extensions(&self, t: &[(Rat, usize)]) -> &[(Rat, usize)] {
        self.extensions.get(t).map_or(&[], |v| v.as_slice())
    }

    pub fn atom_at(&self, coord: u32) -> Option<usize> {
        self.atoms.get(&coord).copied()
    }

    pub fn min_support(&self, i: usize) -> u32 {
        self.members[i].functional.min_index().unwrap()
    }

    pub fn max_support(&self, i: usize) -> u32 {
        self.members[i].functional.max_index().unwrap()
    }

    /// `‖Σ a_j v_j‖_V` for coefficients given on stage coordinates.
    pub fn v_norm(&self, coeffs: &[(u32, Rat)]) -> Rat {
        let u = Universe::naturals();
        let x = FinVec::from_entries(&u, coeffs.iter().map(|(c, a)| (self.index_of(*c).expect("coordinate of V"), a.clone())));
        self.spec.norm(&x)
    }
}

/// A vector of the base space with, in FDD mode, the stage `m` with `x ∈ F_m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanVector {
    pub stage: Option<u32>,
    pub vector: FinVec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmentMode {
    /// `X` has an FDD with `E_n ⊂ F_n`; every `b*` annihilates `ψ(X)` on its window.
    WithFdd,
    General,
}

/// Which members of the dense sets `B_{(k,n]}` are materialised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum DensePolicy {
    /// Only explicitly registered functionals.
    Registered,
    /// Also `±e*_γ` for the first `per_stage` elements `γ ∈ Δ̄_n` (annihilating ones in FDD mode).
    TopUnits { per_stage: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentOptions {
    pub mode: AugmentMode,
    pub dense: DensePolicy,
    /// Cap on `|Θ_n|`.
    pub theta_cap: usize,
    /// `ε` of the certificate and the rule for `ε_n`.
    pub eps: Rat,
    pub eps_rule: EpsRule,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            mode: AugmentMode::General,
            dense: DensePolicy::Registered,
            theta_cap: 256,
            eps: Rat::new(1, 32),
            eps_rule: EpsRule { first: Rat::new(1, 512), ratio: Rat::new(1, 4) },
        }
    }
}

/// A materialised member of `B_{(k,hi]}` for every `k ≤ lo`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseEntry {
    pub lo: u32,
    pub hi: u32,
    pub bstar: FinVec,
    pub origin: String,
    /// Distance to the target it stands for; members are used as their own targets.
    pub distance: Rat,
    /// `ε_{hi+1}/(2M+4)`.
    pub tolerance: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaInfo {
    pub id: IndexId,
    pub rank: u32,
    pub class: ThetaClass,
    /// The element `γ̄^V` of `Γ^V`.
    pub shadow: Tuple,
}

/// The merged sequence `Δ̄_n = Δ_n ∪ Θ_n`, built one stage at a time.
#[derive(Debug, Clone)]
pub struct AugmentedBuild {
    pub base: BDStageSet,
    pub dual_v: DualV,
    /// The constant of `V`'s construction; weights are `rc` or `r`.
    pub c: Rat,
    pub options: AugmentOptions,
    pub spanning: Vec<SpanVector>,
    pub merged: BDStageSet,
    pub base_to_merged: Vec<IndexId>,
    pub merged_to_base: Vec<Option<IndexId>>,
    pub thetas: Vec<ThetaInfo>,
    pub ledger: Vec<DenseEntry>,
    pub log: Vec<String>,
    /// Decomposition constant of the base build.
    pub base_m: Rat,
    theta_of: HashMap<IndexId, usize>,
    by_shadow: HashMap<Tuple, Vec<usize>>,
    lookup: HashMap<(u32, ThetaClass, GammaKind), IndexId>,
    psi: Vec<Vec<Rat>>,
    built: u32,
}

impl AugmentedBuild {
    pub fn new(base: &BDStageSet, dual_v: DualV, spanning: Vec<SpanVector>, options: AugmentOptions) -> Result<AugmentedBuild, AugmentError> {
        if options.mode == AugmentMode::WithFdd && spanning.iter().any(|s| s.stage.is_none()) {
            return Err(AugmentError::Input("FDD mode needs the stage of every spanning vector".into()));
        }
        let c = dual_v.spec.c.clone();
        let base_m = base.compute_constants(&(&c * Rat::int(2))).m_stage;
        Ok(AugmentedBuild {
            base: base.clone(),
            c,
            dual_v,
            options,
            psi: vec![Vec::new(); spanning.len()],
            spanning,
            merged: BDStageSet::new(&Universe::new("gamma-bar")),
            base_to_merged: vec![0; base.len()],
            merged_to_base: Vec::new(),
            thetas: Vec::new(),
            ledger: Vec::new(),
            log: Vec::new(),
            base_m,
            theta_of: HashMap::new(),
            by_shadow: HashMap::new(),
            lookup: HashMap::new(),
            built: 0,
        })
    }

    /// Last merged stage built so far.
    pub fn built(&self) -> u32 {
        self.built
    }

    pub fn build_through(&mut self, stage: u32) -> Result<(), AugmentError> {
        while self.built < stage {
            self.build_stage(self.built + 1)?;
        }
        Ok(())
    }

    /// Builds every stage of the base.
    pub fn build_all(&mut self) -> Result<(), AugmentError> {
        self.build_through(self.base.stage_bound())
    }

    pub fn theta(&self, id: IndexId) -> Option<&ThetaInfo> {
        self.theta_of.get(&id).map(|&i| &self.thetas[i])
    }

    /// `|Θ_n|` for every built stage.
    pub fn theta_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.built as usize];
        for t in &self.thetas {
            out[t.rank as usize - 1] += 1;
        }
        out
    }

    fn remap(&self, v: &FinVec) -> FinVec {
        v.reindex(self.merged.universe(), |j| self.base_to_merged[j as usize])
    }

    /// A base vector in merged coordinates (zero on `Λ`).
    pub fn lift(&self, x: &FinVec) -> FinVec {
        let len = self.merged.len();
        FinVec::from_entries(
            self.merged.universe(),
            x.entries().iter().map(|(j, a)| (self.base_to_merged[*j as usize], a.clone())).filter(|(m, _)| (*m as usize) < len),
        )
    }

    fn tolerance(&self, hi: u32) -> Rat {
        let e = &self.options.eps_rule.first * &self.options.eps_rule.ratio.pow(hi);
        e / (&self.base_m * Rat::int(2) + Rat::int(4))
    }

    fn build_stage(&mut self, s: u32) -> Result<(), AugmentError> {
        if s > self.base.stage_bound() {
            return Err(AugmentError::StageBound(s, self.base.stage_bound()));
        }
        for g in self.base.delta(s) {
            let e = self.base.element(g).clone();
            let kind = match e.kind {
                GammaKind::Initial => GammaKind::Initial,
                GammaKind::Type0 { beta, bstar } => GammaKind::Type0 { beta, bstar: self.remap(&bstar) },
                GammaKind::Type1 { alpha, k, xi, beta, bstar } => {
                    GammaKind::Type1 { alpha, k, xi: self.base_to_merged[xi as usize], beta, bstar: self.remap(&bstar) }
                }
            };
            let id = self.merged.push(s, kind, e.free)?;
            self.base_to_merged[g as usize] = id;
            self.merged_to_base.push(Some(g));
            for (p, sv) in self.psi.iter_mut().zip(&self.spanning) {
                p.push(sv.vector.get(g));
            }
        }
        if s >= 2 {
            let candidates = self.candidates(s);
            let total = candidates.len();
            let admitted = self.admit(s, candidates);
            if admitted.len() < total {
                self.log.push(format!("stage {s}: {} of {total} candidates failed admission", total - admitted.len()));
            }
            let kept_len = admitted.len().min(self.options.theta_cap);
            if kept_len < admitted.len() {
                self.log.push(format!("stage {s}: Θ cap kept {kept_len} of {} admitted candidates", admitted.len()));
            }
            for (class, kind, shadow) in admitted.into_iter().take(kept_len) {
                let id = self.merged.push(s, kind.clone(), class.tag())?;
                let cs = self.merged.cstar(id).clone();
                for p in self.psi.iter_mut() {
                    let v: Rat = cs.entries().iter().map(|(j, a)| a * &p[*j as usize]).sum();
                    p.push(v);
                }
                self.merged_to_base.push(None);
                self.theta_of.insert(id, self.thetas.len());
                self.by_shadow.entry(shadow.clone()).or_default().push(self.thetas.len());
                self.lookup.insert((s, class, kind), id);
                self.thetas.push(ThetaInfo { id, rank: s, class, shadow });
            }
        }
        self.built = s;
        if let DensePolicy::TopUnits { per_stage } = self.options.dense {
            let mut taken = 0;
            for g in self.merged.delta(s) {
                if taken >= per_stage {
                    break;
                }
                let e = self.merged.unit(g);
                if self.annihilates(&e, s - 1, s) {
                    self.register(s - 1, s, &e, "top-unit")?;
                    taken += 1;
                }
            }
        }
        Ok(())
    }

    /// `b*(ψ(x)) = 0` for the spanning vectors living on stages `(k, n]` (FDD mode only).
    fn annihilates(&self, b: &FinVec, k: u32, n: u32) -> bool {
        if self.options.mode != AugmentMode::WithFdd {
            return true;
        }
        self.spanning.iter().zip(&self.psi).all(|(sv, p)| {
            let st = sv.stage.unwrap();
            st <= k || st > n || b.entries().iter().map(|(j, a)| a * &p[*j as usize]).sum::<Rat>().is_zero()
        })
    }

    /// Materialises `±b*` in `B_{(k,hi]}` for all `k ≤ lo`.
    pub fn register(&mut self, lo: u32, hi: u32, bstar: &FinVec, origin: &str) -> Result<usize, AugmentError> {
        if hi > self.built || lo >= hi {
            return Err(AugmentError::Input(format!("window ({lo}, {hi}] outside the built stages 1..{}", self.built)));
        }
        let b = bstar.with_universe(self.merged.universe());
        if b.l1_norm() > Rat::one() || b.support().any(|j| {
            let r = self.merged.rank(j);
            r <= lo || r > hi
        }) {
            return Err(AugmentError::Input(format!("b* is not in the unit ball of ℓ₁(Γ̄_{hi} \\ Γ̄_{lo})")));
        }
        let first = self.ledger.len();
        let tolerance = self.tolerance(hi);
        for v in [b.clone(), b.neg()] {
            if v.is_zero() || self.ledger.iter().any(|e| e.lo == lo && e.hi == hi && e.bstar == v) {
                continue;
            }
            self.ledger.push(DenseEntry { lo, hi, bstar: v, origin: origin.to_string(), distance: Rat::zero(), tolerance: tolerance.clone() });
        }
        Ok(first)
    }

    /// Materialised members of `B_{(k,n]}`.
    fn dense(&self, k: u32, n: u32) -> Vec<&FinVec> {
        self.ledger.iter().filter(|e| e.hi == n && e.lo >= k && self.annihilates(&e.bstar, k, n)).map(|e| &e.bstar).collect()
    }

    fn candidates(&self, s: u32) -> Vec<(ThetaClass, GammaKind, Tuple)> {
        let n = s - 1;
        let c = &self.c;
        let dv = &self.dual_v;
        let mut out: Vec<(ThetaClass, GammaKind, Tuple)> = Vec::new();
        let atom = dv.atom_at(s);
        let e = |id: IndexId| self.merged.unit(id);
        // (0,1)
        if let Some(a) = atom {
            let rs: Vec<Rat> = dv.extensions(&[]).iter().filter(|(_, x)| *x == a).map(|(r, _)| r.clone()).collect();
            for r in rs {
                for b in self.dense(0, n) {
                    out.push((ThetaClass::ZeroOne, GammaKind::Type0 { beta: &r * c, bstar: b.clone() }, vec![(r.clone(), a)]));
                }
            }
        }
        // (0,2)
        for th in &self.thetas {
            let Some(x) = dv.member_of_decomposition(&th.shadow) else { continue };
            if dv.members[x].is_atom() {
                continue;
            }
            for (r, y) in dv.extensions(&[]) {
                if *y == x {
                    out.push((ThetaClass::ZeroTwo, GammaKind::Type0 { beta: r.clone(), bstar: e(th.id) }, vec![(r.clone(), x)]));
                }
            }
        }
        // (1,1) and (1,2)
        for xi in self.thetas.iter().filter(|t| t.rank < n) {
            let k = xi.rank;
            for (r, y) in dv.extensions(&xi.shadow) {
                let mut shadow = xi.shadow.clone();
                shadow.push((r.clone(), *y));
                if Some(*y) == atom {
                    for b in self.dense(k, n) {
                        let kind = GammaKind::Type1 { alpha: Rat::one(), k, xi: xi.id, beta: r * c, bstar: b.clone() };
                        out.push((ThetaClass::OneOne, kind, shadow.clone()));
                    }
                } else if !dv.members[*y].is_atom() {
                    let dec = &dv.members[*y].decomposition;
                    for &t in self.by_shadow.get(dec).map_or(&[][..], |v| v.as_slice()) {
                        let eta = &self.thetas[t];
                        if eta.rank > k && eta.rank <= n {
                            let kind = GammaKind::Type1 { alpha: Rat::one(), k, xi: xi.id, beta: r.clone(), bstar: e(eta.id) };
                            out.push((ThetaClass::OneTwo, kind, shadow.clone()));
                        }
                    }
                }
            }
        }
        let mut seen = HashSet::new();
        out.retain(|(cl, kind, _)| seen.insert((*cl, kind.clone())));
        out
    }

    /// `|c*_γ̄(ψ(x))| ≤ ‖x‖` on the spanning set (`= 0` in FDD mode); schema-valid only.
    fn admit(&self, s: u32, cands: Vec<(ThetaClass, GammaKind, Tuple)>) -> Vec<(ThetaClass, GammaKind, Tuple)> {
        let fdd = self.options.mode == AugmentMode::WithFdd;
        let norms: Vec<Rat> = self.spanning.iter().map(|sv| sv.vector.linf_norm()).collect();
        let verdicts: Vec<bool> = cands
            .par_iter()
            .map(|(class, kind, _)| {
                let Ok(cs) = self.merged.compute_cstar(s, kind) else { return false };
                if !(fdd || class.is_type1()) {
                    return true;
                }
                self.psi.iter().zip(&norms).all(|(p, nx)| {
                    let v: Rat = cs.entries().iter().map(|(j, a)| a * &p[*j as usize]).sum();
                    if fdd {
                        v.is_zero()
                    } else {
                        v.abs() <= *nx
                    }
                })
            })
            .collect();
        cands.into_iter().zip(verdicts).filter(|(_, ok)| *ok).map(|(c, _)| c).collect()
    }

    /// `ψ(x)` for a base vector: base coordinates are copied, new ones follow `c̄*`.
    pub fn psi(&self, x: &FinVec) -> FinVec {
        let mut y: Vec<Rat> = Vec::with_capacity(self.merged.len());
        for (id, b) in self.merged_to_base.iter().enumerate() {
            let v = match b {
                Some(g) => x.get(*g),
                None => self.merged.cstar(id as IndexId).entries().iter().map(|(j, a)| a * &y[*j as usize]).sum(),
            };
            y.push(v);
        }
        FinVec::from_entries(self.merged.universe(), y.into_iter().enumerate().map(|(i, v)| (i as IndexId, v)))
    }

    /// `π(z) = z|_Γ` in base coordinates.
    pub fn pi(&self, z: &FinVec) -> FinVec {
        FinVec::from_entries(
            self.base.universe(),
            z.entries().iter().filter_map(|(j, a)| self.merged_to_base[*j as usize].map(|g| (g, a.clone()))),
        )
    }

    /// The largest `|c*_γ̄(ψ(x))|/‖x‖` over `Λ` and the spanning set.
    pub fn c_x(&self) -> Rat {
        let mut best = Rat::zero();
        for (sv, p) in self.spanning.iter().zip(&self.psi) {
            let nx = sv.vector.linf_norm();
            if nx.is_zero() {
                continue;
            }
            for t in &self.thetas {
                best = Rat::max_of(&best, &(p[t.id as usize].abs() / &nx));
            }
        }
        best
    }

}

fn first_bad<T: Serialize>(name: &str, bad: &[T], ok: String, what: &str) -> Check {
    if bad.is_empty() {
        Check::pass(name, ok)
    } else {
        Check::fail(name, format!("{} {what}", bad.len()), json!(bad.iter().take(20).collect::<Vec<_>>()))
    }
}

impl AugmentedBuild {
    /// Every structural statement about the augmentation.
    pub fn verify(&self, samples: usize, seed: u64) -> Report {
        let mut rep = self.merged.validate_schema();
        rep.push(self.check_base_carried());
        rep.push(self.check_shapes());
        rep.push(self.check_weights());
        rep.push(self.check_spread());
        rep.push(self.merged.verify_analyses());
        rep.extend(self.check_psi(samples, seed));
        rep.push(self.check_admission());
        rep.push(self.check_ledger());
        rep.extend(self.check_constants(&(&self.c * Rat::int(2))).1);
        rep
    }

    /// Base elements keep their functionals: `c̄*_γ = c*_γ`.
    fn check_base_carried(&self) -> Check {
        let bad: Vec<IndexId> = (0..self.base.len() as IndexId)
            .filter(|&g| self.base.rank(g) <= self.built)
            .filter(|&g| self.merged.cstar(self.base_to_merged[g as usize]) != &self.remap(self.base.cstar(g)))
            .collect();
        first_bad("augment.base-functionals", &bad, "c̄*_γ = c*_γ for every base element".into(), "base elements changed their functional")
    }

    fn check_shapes(&self) -> Check {
        let dv = &self.dual_v;
        let mut bad: Vec<(IndexId, &str)> = Vec::new();
        for t in &self.thetas {
            let e = self.merged.element(t.id);
            let last = t.shadow.last().unwrap();
            let last_atom = dv.members[last.1].is_atom();
            if !dv.in_gamma(&t.shadow) {
                bad.push((t.id, "shadow outside Γ^V"));
            }
            let eta_ok = |b: &FinVec| {
                b.len() == 1
                    && b.entries()[0].1.is_one()
                    && self.theta(b.entries()[0].0).is_some_and(|h| dv.member_of_decomposition(&h.shadow) == Some(last.1))
            };
            let ok = match (t.class, &e.kind) {
                (ThetaClass::ZeroOne, GammaKind::Type0 { beta, .. }) => {
                    t.shadow.len() == 1 && last_atom && dv.min_support(last.1) == t.rank && *beta == &last.0 * &self.c
                }
                (ThetaClass::ZeroTwo, GammaKind::Type0 { beta, bstar }) => {
                    t.shadow.len() == 1 && !last_atom && *beta == last.0 && eta_ok(bstar)
                }
                (ThetaClass::OneOne, GammaKind::Type1 { alpha, xi, beta, .. }) => {
                    alpha.is_one()
                        && last_atom
                        && dv.min_support(last.1) == t.rank
                        && *beta == &last.0 * &self.c
                        && self.theta(*xi).is_some_and(|x| x.shadow[..] == t.shadow[..t.shadow.len() - 1])
                }
                (ThetaClass::OneTwo, GammaKind::Type1 { alpha, xi, beta, bstar, .. }) => {
                    alpha.is_one()
                        && !last_atom
                        && *beta == last.0
                        && eta_ok(bstar)
                        && self.theta(*xi).is_some_and(|x| x.shadow[..] == t.shadow[..t.shadow.len() - 1])
                }
                _ => false,
            };
            if !ok {
                bad.push((t.id, "shape does not match its class"));
            }
        }
        first_bad("augment.theta-shapes", &bad, format!("{} new elements match their classes", self.thetas.len()), "elements with the wrong shape")
    }

    /// `r ≤ c` on `(·,2)`, `rc ≤ c` on `(·,1)`.
    fn check_weights(&self) -> Check {
        let bad: Vec<IndexId> = self.thetas.iter().filter(|t| self.merged.element(t.id).weight() > self.c).map(|t| t.id).collect();
        first_bad("augment.weights", &bad, format!("every new weight is at most c = {}", self.c), "weights exceed c")
    }

    /// `cuts(γ̄)` spreads the minima of the parts of `γ̄^V`, and `max supp γ̄^V ≤ rk γ̄`.
    fn check_spread(&self) -> Check {
        let dv = &self.dual_v;
        let bad: Vec<IndexId> = self
            .thetas
            .par_iter()
            .filter(|t| {
                let Ok(a) = self.merged.analyze(t.id) else { return true };
                let mins: Vec<u32> = t.shadow.iter().map(|(_, x)| dv.min_support(*x)).collect();
                let top = t.shadow.iter().map(|(_, x)| dv.max_support(*x)).max().unwrap();
                !is_spread(&mins, &a.cuts) || top > t.rank
            })
            .map(|t| t.id)
            .collect();
        first_bad("augment.spread", &bad, "cuts spread the shadow minima".into(), "elements whose cuts do not spread their shadow")
    }

    /// `π∘ψ = id`, `ψ_m = J̄_m J_m^{-1}` isometric on `F_m`, and `‖x‖ ≤ ‖ψx‖ ≤ max(1, c_X)‖x‖`.
    fn check_psi(&self, samples: usize, seed: u64) -> Report {
        let mut rep = Report::new();
        let mut bad_pi = Vec::new();
        let mut bad_bounds = Vec::new();
        let cx = Rat::max_of(&Rat::one(), &self.c_x());
        let len_base = self.base.gamma_len(self.built);
        for (i, sv) in self.spanning.iter().enumerate() {
            let x = sv.vector.restrict(|g| (g as usize) < len_base);
            let px = self.psi(&x);
            if self.pi(&px) != x {
                bad_pi.push(i);
            }
            let (nx, npx) = (x.linf_norm(), px.linf_norm());
            if npx < nx || npx > &cx * &nx {
                bad_bounds.push(i);
            }
        }
        rep.push(first_bad("augment.psi-restriction", &bad_pi, format!("π(ψ(x)) = x on {} spanning vectors", self.spanning.len()), "spanning vectors break π∘ψ = id"));
        rep.push(first_bad(
            "augment.psi-bounds",
            &bad_bounds,
            format!("‖x‖ ≤ ‖ψ(x)‖ ≤ {cx}·‖x‖ on the spanning set"),
            "spanning vectors out of bounds",
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bad_iso: Vec<(u32, String)> = Vec::new();
        let mut exhaustive = true;
        for m in 1..=self.built {
            let d: Vec<IndexId> = self.base.delta(m).collect();
            let patterns: Vec<Vec<i64>> = if d.len() <= 10 {
                (0..1usize << d.len()).map(|k| (0..d.len()).map(|i| if k >> i & 1 == 1 { -1 } else { 1 }).collect()).collect()
            } else {
                exhaustive = false;
                (0..samples).map(|_| (0..d.len()).map(|_| rng.gen_range(-1..=1)).collect()).collect()
            };
            for p in patterns {
                if p.iter().all(|v| *v == 0) {
                    continue;
                }
                let u = FinVec::from_entries(self.base.universe(), d.iter().zip(&p).map(|(g, v)| (*g, Rat::int(*v))));
                let x = self.base.extend(&u, m).restrict(|g| self.base.rank(g) <= self.built);
                let px = self.psi(&x);
                let jbar = self.merged.extend(&self.lift(&u), m);
                if px != jbar || px.linf_norm() != Rat::one() {
                    bad_iso.push((m, format!("{p:?}")));
                    break;
                }
            }
        }
        rep.push(if !bad_iso.is_empty() {
            Check::fail("augment.psi-isometry", format!("ψ_m fails on {} stages", bad_iso.len()), json!(bad_iso))
        } else {
            Check::new(
                "augment.psi-isometry",
                if exhaustive { Verdict::Pass } else { Verdict::PassAtBudget },
                format!("ψ_m = J̄_m J_m^-1 is isometric on F_m for m ≤ {}", self.built),
            )
        });
        rep
    }

    fn check_admission(&self) -> Check {
        let fdd = self.options.mode == AugmentMode::WithFdd;
        let mut bad = Vec::new();
        for (i, (sv, p)) in self.spanning.iter().zip(&self.psi).enumerate() {
            let nx = sv.vector.linf_norm();
            for t in &self.thetas {
                let v = &p[t.id as usize];
                if (fdd && !v.is_zero()) || (t.class.is_type1() && v.abs() > nx) {
                    bad.push((i, t.id));
                }
            }
        }
        let what = if fdd { "c*_γ̄(ψ(x)) = 0" } else { "|c*_γ̄(ψ(x))| ≤ ‖x‖ on (1,·)" };
        first_bad("augment.admission", &bad, format!("{what} for all new elements and {} spanning vectors", self.spanning.len()), "pairs break admission")
    }

    /// Referenced `b*` belong to materialised dense sets; entries lie in their balls.
    fn check_ledger(&self) -> Check {
        let mut bad: Vec<(IndexId, &str)> = Vec::new();
        for (i, e) in self.ledger.iter().enumerate() {
            let inside = e.bstar.support().all(|j| {
                let r = self.merged.rank(j);
                r > e.lo && r <= e.hi
            });
            if !inside || e.bstar.l1_norm() > Rat::one() || e.distance > e.tolerance {
                bad.push((i as IndexId, "entry outside its ball or tolerance"));
            }
        }
        for t in &self.thetas {
            let e = self.merged.element(t.id);
            let (k, b) = match (&e.kind, t.class) {
                (GammaKind::Type0 { bstar, .. }, ThetaClass::ZeroOne) => (0, bstar),
                (GammaKind::Type1 { k, bstar, .. }, ThetaClass::OneOne) => (*k, bstar),
                _ => continue,
            };
            if !self.dense(k, t.rank - 1).contains(&b) {
                bad.push((t.id, "b* not in the materialised B_(k,n]"));
            }
        }
        first_bad("augment.dense-ledger", &bad, format!("{} ledger entries back every (·,1) element", self.ledger.len()), "ledger violations")
    }

    /// Constants of the merged build for `θ`, and `M̄ ≤ max(M, 1/(1-2c))`.
    pub fn check_constants(&self, theta: &Rat) -> (Constants, Report) {
        let (k, mut rep) = self.merged.verify_constants(theta);
        let half = Rat::new(1, 2);
        rep.push(if self.c >= half {
            Check::new("augment.m-bound", Verdict::NotApplicable, format!("c = {} ≥ 1/2", self.c))
        } else {
            let bound = Rat::max_of(&self.base_m, &(Rat::one() - &self.c * Rat::int(2)).recip());
            if k.m_stage <= bound {
                Check::pass("augment.m-bound", format!("M̄ = {} ≤ max(M, 1/(1-2c)) = {bound}", k.m_stage))
            } else {
                Check::fail("augment.m-bound", format!("M̄ = {} > {bound}", k.m_stage), json!(k.m_stage.to_string()))
            }
        });
        (k, rep)
    }

    /// Manifest: V, mode, per-stage sizes and the dense-set ledger.
    pub fn manifest(&self) -> serde_json::Value {
        json!({
            "schema": AUGMENT_SCHEMA,
            "v": { "family": format!("{:?}", self.dual_v.spec.family), "c": self.c.to_string(), "interleaved": self.dual_v.interleaved, "members": self.dual_v.len() },
            "options": self.options,
            "stages": self.built,
            "base_sizes": (1..=self.built).map(|n| self.base.delta(n).len()).collect::<Vec<_>>(),
            "theta_sizes": self.theta_sizes(),
            "thetas": self.thetas,
            "ledger": self.ledger,
            "log": self.log,
        })
    }
}

/// An open window `(p, q)` of stages holding block `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub p: u32,
    pub q: u32,
}

/// The element realising a coefficient pattern and every element used on the way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Construction {
    pub gamma: IndexId,
    pub rank: u32,
    pub steps: Vec<(ThetaClass, IndexId, u32)>,
}

/// `q_n + n < p_{n+1}` and `p_n < q_n`.
pub fn check_windows(w: &[Window]) -> Result<(), AugmentError> {
    for (i, win) in w.iter().enumerate() {
        if win.p + 1 >= win.q {
            return Err(AugmentError::Windows(i + 1));
        }
        if let Some(next) = w.get(i + 1) {
            if win.q + (i as u32 + 1) >= next.p {
                return Err(AugmentError::Windows(i + 1));
            }
        }
    }
    Ok(())
}

impl AugmentedBuild {
    fn find(&self, rank: u32, class: ThetaClass, kind: GammaKind, steps: &mut Vec<(ThetaClass, IndexId, u32)>) -> Result<IndexId, AugmentError> {
        let id = *self.lookup.get(&(rank, class, kind)).ok_or(AugmentError::MissingTheta { class, stage: rank })?;
        steps.push((class, id, rank));
        Ok(id)
    }

    /// Finds `γ̄` with `P*_{(p_n,q_n)} e*_γ̄ = cβ_n P*_{(p_n,q_n)} z̃_n` for the member `w*` of `D^V`
    /// (supported on the window tops `q_n`) with signs `σ_n`.
    pub fn construct(&self, windows: &[Window], ztilde: &[FinVec], member: usize, signs: &[i32]) -> Result<Construction, AugmentError> {
        check_windows(windows)?;
        let tops: Vec<u32> = windows.iter().map(|w| w.q).collect();
        if member >= self.dual_v.len() || self.dual_v.members[member].support() != tops || ztilde.len() != windows.len() || signs.len() != windows.len() {
            return Err(AugmentError::Pattern);
        }
        let mut steps = Vec::new();
        let (gamma, rank) = self.construct_rec(windows, ztilde, signs, member, 0, &mut steps)?;
        Ok(Construction { gamma, rank, steps })
    }

    fn signed(&self, z: &FinVec, s: i32) -> FinVec {
        let z = z.with_universe(self.merged.universe());
        if s < 0 {
            z.neg()
        } else {
            z
        }
    }

    fn construct_rec(
        &self,
        w: &[Window],
        zt: &[FinVec],
        signs: &[i32],
        member: usize,
        offset: usize,
        steps: &mut Vec<(ThetaClass, IndexId, u32)>,
    ) -> Result<(IndexId, u32), AugmentError> {
        let dv = &self.dual_v;
        let c = &self.c;
        if dv.members[member].is_atom() {
            let r = dv.members[member].decomposition[0].0.clone();
            let kind = GammaKind::Type0 { beta: &r * c, bstar: self.signed(&zt[offset], signs[offset]) };
            let id = self.find(w[offset].q, ThetaClass::ZeroOne, kind, steps)?;
            return Ok((id, w[offset].q));
        }
        let dec = dv.members[member].decomposition.clone();
        let mut n_prev = offset;
        let mut prev: Option<(IndexId, u32)> = None;
        for (r, part) in dec {
            let size = dv.members[part].functional.len();
            let n_j = n_prev + size;
            let last = n_j - 1;
            let (class, kind, rank) = if size == 1 {
                let b = self.signed(&zt[last], signs[last]);
                match prev {
                    None => (ThetaClass::ZeroOne, GammaKind::Type0 { beta: &r * c, bstar: b }, w[last].q),
                    Some((xi, k)) => (ThetaClass::OneOne, GammaKind::Type1 { alpha: Rat::one(), k, xi, beta: &r * c, bstar: b }, w[last].q),
                }
            } else {
                let (eta, _) = self.construct_rec(w, zt, signs, part, n_prev, steps)?;
                let e = self.merged.unit(eta);
                match prev {
                    None => {
                        let rank = w.get(n_j).map(|x| x.p).ok_or(AugmentError::Pattern)?;
                        (ThetaClass::ZeroTwo, GammaKind::Type0 { beta: r.clone(), bstar: e }, rank)
                    }
                    Some((xi, k)) => {
                        let rank = w[last].q + size as u32 + 1;
                        (ThetaClass::OneTwo, GammaKind::Type1 { alpha: Rat::one(), k, xi, beta: r.clone(), bstar: e }, rank)
                    }
                }
            };
            let id = self.find(rank, class, kind, steps)?;
            prev = Some((id, rank));
            n_prev = n_j;
        }
        Ok(prev.unwrap())
    }

    /// Both identities for a construction: the projections onto every window and
    /// `e*_γ̄(ψ(x)) = Σ cβ_n z*_n(ψ(x))` on the spanning set.
    pub fn verify_construction(&self, windows: &[Window], ztilde: &[FinVec], member: usize, signs: &[i32], con: &Construction) -> Report {
        let mut rep = Report::new();
        let w = &self.dual_v.members[member].functional;
        let e = self.merged.unit(con.gamma);
        let zstars: Vec<FinVec> = windows.iter().zip(ztilde).map(|(win, z)| self.merged.project(&z.with_universe(self.merged.universe()), win.p, win.q - 1)).collect();
        let mut bad = Vec::new();
        for (n, win) in windows.iter().enumerate() {
            let beta = w.get(win.q) * Rat::int(signs[n].signum() as i64);
            let lhs = self.merged.project(&e, win.p, win.q - 1);
            let rhs = zstars[n].scale(&(&self.c * &beta));
            if lhs != rhs {
                bad.push(n + 1);
            }
        }
        rep.push(first_bad(
            "pattern.window-projections",
            &bad,
            format!("P*_(p_n,q_n) e*_γ̄ = cβ_n z*_n for all {} windows", windows.len()),
            "windows differ",
        ));
        let mut mismatch = Vec::new();
        for (i, p) in self.psi.iter().enumerate() {
            let lhs = p[con.gamma as usize].clone();
            let rhs: Rat = windows
                .iter()
                .enumerate()
                .map(|(n, win)| {
                    let beta = w.get(win.q) * Rat::int(signs[n].signum() as i64);
                    let v: Rat = zstars[n].entries().iter().map(|(j, a)| a * &p[*j as usize]).sum();
                    &self.c * &beta * v
                })
                .sum();
            if lhs != rhs {
                mismatch.push(i);
            }
        }
        let name = "pattern.spanning-identity";
        rep.push(if mismatch.is_empty() {
            Check::pass(name, format!("e*_γ̄(ψ(x)) = Σ cβ_n z*_n(ψ(x)) on {} spanning vectors", self.spanning.len()))
        } else if self.options.mode == AugmentMode::WithFdd {
            Check::fail(name, format!("{} spanning vectors break the identity", mismatch.len()), json!(mismatch))
        } else {
            Check::new(name, Verdict::NotApplicable, format!("{} spanning vectors differ; the identity needs z̃_n to annihilate ψ(X)", mismatch.len()))
        });
        rep
    }
}

/// Outcome of [`certify_lower_estimate`]; rationals are exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerEstimateCertificate {
    pub schema: String,
    pub verdict: Verdict,
    pub windows: Vec<Window>,
    pub alphas: Vec<Rat>,
    /// The functionals `z̃_n` registered for the windows.
    pub ztilde: Vec<FinVec>,
    /// `z̃_n(z_n)` for the normalised blocks.
    pub block_values: Vec<Rat>,
    /// Finite-stage lower bounds for `dist(z_n, ψ(X))`.
    pub delta: Vec<Rat>,
    pub delta0: Rat,
    pub delta0_prime: Rat,
    pub m_bar: Rat,
    pub v_norm: Rat,
    /// `Σ α_j β_j` for the chosen `w*`.
    pub pairing: Rat,
    pub member: Option<FinVec>,
    pub gamma: Option<IndexId>,
    pub value: Rat,
    pub bound: Rat,
    pub report: Report,
}

/// Interleaved mode: the running bound `|e*_γ̄_j(ψ(x))| ≤ cK‖x‖ ≤ ‖x‖` along a construction.
pub fn check_running_bound(aug: &AugmentedBuild, con: &Construction, k: &Rat) -> Check {
    let ck = &aug.c * k;
    if ck > Rat::one() {
        return Check::new("pattern.running-bound", Verdict::NotApplicable, format!("cK = {ck} > 1"));
    }
    let mut bad = Vec::new();
    for (i, (sv, p)) in aug.spanning.iter().zip(&aug.psi).enumerate() {
        let bound = &ck * &sv.vector.linf_norm();
        for (_, id, _) in &con.steps {
            if p[*id as usize].abs() > bound {
                bad.push((i, *id));
            }
        }
    }
    first_bad("pattern.running-bound", &bad, format!("|e*_γ̄_j(ψ(x))| ≤ cK‖x‖ with cK = {ck}"), "chain elements exceed cK‖x‖")
}

/// Maximises `f·obj` over `‖f‖₁ ≤ 1` on `coords` with `f·row = 0` for each row.
fn l1_ball_lp(coords: &[IndexId], obj: &FinVec, rows: &[&[Rat]], universe: &Universe) -> (Rat, FinVec) {
    let n = coords.len();
    if n == 0 {
        return (Rat::zero(), FinVec::zero(universe));
    }
    let mut c = Vec::with_capacity(2 * n);
    c.extend(coords.iter().map(|&g| obj.get(g)));
    c.extend(coords.iter().map(|&g| -obj.get(g)));
    let mut a = vec![vec![Rat::one(); 2 * n]];
    let mut b = vec![Rat::one()];
    for row in rows {
        let vals: Vec<Rat> = coords.iter().map(|&g| row[g as usize].clone()).collect();
        if vals.iter().all(|v| v.is_zero()) {
            continue;
        }
        let mut r: Vec<Rat> = vals.clone();
        r.extend(vals.iter().map(|v| -v));
        let neg: Vec<Rat> = r.iter().map(|v| -v).collect();
        a.push(r);
        a.push(neg);
        b.push(Rat::zero());
        b.push(Rat::zero());
    }
    let (v, x) = simplex::maximize_point(&c, &a, &b).expect("bounded by the ℓ₁ ball");
    let f = FinVec::from_entries(universe, coords.iter().enumerate().map(|(i, &g)| (g, &x[i] - &x[n + i])));
    (v, f)
}

/// Certifies `e*_γ̄(Σ α_j z_j) ≥ c(1-ε)δ₀′/(2M̄)·‖Σ α_j v_{q_j}‖` for the blocks produced by
/// `blocks(aug, n)`: a vector on `Γ̄_{q_n - 1}` vanishing on `Γ̄_{p_n}`, built as soon as
/// stage `q_n - 1` exists. Each `z̃_n` is an exact optimum over `B_{ℓ₁(Γ̄_{q_n-1} \ Γ̄_{p_n})}`
/// (annihilating `ψ(X)` in FDD mode) and is registered in the dense sets before stage `q_n`.
pub fn certify_lower_estimate(
    aug: &mut AugmentedBuild,
    windows: &[Window],
    blocks: &dyn Fn(&AugmentedBuild, usize) -> FinVec,
    alphas: &[Rat],
    running_k: Option<&Rat>,
) -> Result<LowerEstimateCertificate, AugmentError> {
    check_windows(windows)?;
    if alphas.len() != windows.len() || windows.is_empty() {
        return Err(AugmentError::Input("one coefficient per window".into()));
    }
    let fdd = aug.options.mode == AugmentMode::WithFdd;
    let mut seeds = Vec::new();
    let mut ztilde = Vec::new();
    for (n, win) in windows.iter().enumerate() {
        aug.build_through(win.q - 1)?;
        let u = blocks(aug, n).with_universe(aug.merged.universe());
        let lo = aug.merged.gamma_len(win.p) as IndexId;
        let hi = aug.merged.gamma_len(win.q - 1) as IndexId;
        if u.is_zero() || u.support().any(|g| g < lo || g >= hi) {
            return Err(AugmentError::Input(format!("block {} must be a nonzero vector on Γ̄_(q-1) \\ Γ̄_p", n + 1)));
        }
        let coords: Vec<IndexId> = (lo..hi).collect();
        let rows: Vec<&[Rat]> = if fdd {
            aug.spanning.iter().zip(&aug.psi).filter(|(sv, _)| sv.stage.unwrap() < win.q).map(|(_, p)| p.as_slice()).collect()
        } else {
            Vec::new()
        };
        let (_, z) = l1_ball_lp(&coords, &u, &rows, aug.merged.universe());
        if !z.is_zero() {
            aug.register(win.p, win.q - 1, &z, &format!("block {}", n + 1))?;
        }
        seeds.push(u);
        ztilde.push(z);
    }
    let last = windows.last().unwrap().q + windows.len() as u32;
    aug.build_through(last)?;

    // Normalised blocks over the final build, and δ₀ by LP duality on the finite stage.
    let u = aug.merged.universe().clone();
    let mut zs = Vec::new();
    let mut deltas = Vec::new();
    let mut block_values = Vec::new();
    let psi_rows: Vec<&[Rat]> = aug.psi.iter().map(|p| p.as_slice()).collect();
    let full: Vec<IndexId> = (0..aug.merged.len() as IndexId).collect();
    for (n, (seed, win)) in seeds.iter().zip(windows).enumerate() {
        let z = aug.merged.extend(seed, win.q - 1);
        let z = z.scale(&z.linf_norm().recip());
        let (d, _) = l1_ball_lp(&full, &z, &psi_rows, &u);
        block_values.push(ztilde[n].dot(&z));
        deltas.push(d);
        zs.push(z);
    }
    let delta0 = deltas.iter().min().unwrap().clone();
    let eps = aug.options.eps.clone();
    let delta0_prime = &delta0 / (Rat::one() + &eps);
    let k = aug.merged.compute_constants(&(&aug.c * Rat::int(2)));
    let m_bar = k.m_stage;
    let tops: Vec<(u32, Rat)> = windows.iter().zip(alphas).map(|(w, a)| (w.q, a.clone())).collect();
    let v_norm = aug.dual_v.v_norm(&tops);
    let bound = &aug.c * (Rat::one() - &eps) * &delta0_prime / (&m_bar * Rat::int(2)) * &v_norm;

    let mut rep = Report::new();
    let mut cert = LowerEstimateCertificate {
        schema: CERTIFICATE_SCHEMA.to_string(),
        verdict: Verdict::NotApplicable,
        windows: windows.to_vec(),
        alphas: alphas.to_vec(),
        ztilde: ztilde.clone(),
        block_values,
        delta: deltas,
        delta0: delta0.clone(),
        delta0_prime,
        m_bar,
        v_norm,
        pairing: Rat::zero(),
        member: None,
        gamma: None,
        value: Rat::zero(),
        bound: bound.clone(),
        report: Report::new(),
    };
    if !delta0.is_positive() {
        rep.push(Check::new("certificate.delta", Verdict::NotApplicable, "a block lies in ψ(X) on the built stages"));
        cert.report = rep;
        return Ok(cert);
    }

    // w* ∈ D^V on a subset of the tops maximising Σ |α_j| w*(v_{q_j}).
    let top_set: HashMap<u32, usize> = windows.iter().enumerate().map(|(i, w)| (w.q, i)).collect();
    let mut best: Option<(Rat, usize)> = None;
    for (i, m) in aug.dual_v.members.iter().enumerate() {
        if !m.functional.support().all(|j| top_set.contains_key(&j)) {
            continue;
        }
        let s: Rat = m.functional.entries().iter().map(|(j, b)| b * &alphas[top_set[j]].abs()).sum();
        if best.as_ref().is_none_or(|(v, _)| s > *v) {
            best = Some((s, i));
        }
    }
    let Some((pairing, member)) = best else {
        rep.push(Check::new("certificate.pattern", Verdict::NotApplicable, "no member of D^V lives on the window tops"));
        cert.report = rep;
        return Ok(cert);
    };
    let norming = pairing >= (Rat::one() - &eps) * &cert.v_norm;
    rep.push(Check::new(
        "certificate.norming",
        if norming { Verdict::Pass } else { Verdict::Inconclusive },
        format!("Σ α_j β_j = {pairing} against (1-ε)‖Σ α_j v_q_j‖ = {}", (Rat::one() - &eps) * &cert.v_norm),
    ));
    let used: Vec<usize> = aug.dual_v.members[member].functional.support().map(|j| top_set[&j]).collect();
    let sub_w: Vec<Window> = used.iter().map(|&i| windows[i]).collect();
    let sub_z: Vec<FinVec> = used.iter().map(|&i| ztilde[i].clone()).collect();
    let signs: Vec<i32> = used.iter().map(|&i| if alphas[i].is_negative() { -1 } else { 1 }).collect();
    let con = aug.construct(&sub_w, &sub_z, member, &signs)?;
    rep.extend(aug.verify_construction(&sub_w, &sub_z, member, &signs, &con));
    if let Some(kc) = running_k {
        rep.push(check_running_bound(aug, &con, kc));
    }
    let value: Rat = zs.iter().zip(alphas).map(|(z, a)| a * &z.get(con.gamma)).sum();
    let ok = value >= bound;
    rep.push(if ok {
        Check::pass("certificate.bound", format!("e*_γ̄(Σ α_j z_j) = {value} ≥ {bound}"))
    } else {
        Check::fail("certificate.bound", format!("e*_γ̄(Σ α_j z_j) = {value} < {bound}"), json!({ "value": value, "bound": bound }))
    });
    cert.verdict = if rep.has_failures() { Verdict::Fail } else { Verdict::Pass };
    cert.pairing = pairing;
    cert.member = Some(aug.dual_v.members[member].functional.clone());
    cert.gamma = Some(con.gamma);
    cert.value = value;
    cert.report = rep;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::RegularFamily;
    use crate::rat::q;
    use crate::seed::SeedSpace;
    use crate::theorem_a::{TheoremABuild, TheoremAOptions};

    fn schreier(c: Rat) -> TsirelsonSpec {
        TsirelsonSpec::new(RegularFamily::schreier_n(1), c).unwrap()
    }

    #[test]
    fn dual_v_shape() {
        let dv = DualV::build(&schreier(q(1, 2)), 2, &[2, 3, 4], 10_000, false).unwrap();
        assert!(dv.members.iter().all(|m| m.functional.entries().iter().all(|(_, a)| a.is_positive())));
        let a = dv.atom_at(3).unwrap();
        assert!(dv.in_gamma(&[(Rat::one(), a)]));
        assert!(dv.in_gamma(&[(q(1, 2), dv.atom_at(2).unwrap())]));
        let dvi = DualV::build(&schreier(q(1, 2)), 1, &[1, 2, 3], 10_000, true).unwrap();
        assert!(dvi.atom_at(4).is_some() && dvi.atom_at(3).is_none());
        assert_eq!(dvi.index_of(7), Some(4));
    }

    #[test]
    fn general_augmentation_verifies() {
        let base = TheoremABuild::from_seed(&SeedSpace::scalar_c0(), TheoremAOptions::with_stage_bound(7)).unwrap();
        let dv = DualV::build(&schreier(q(1, 16)), 2, &(1..=7).collect::<Vec<_>>(), 100_000, false).unwrap();
        let opts = AugmentOptions { dense: DensePolicy::TopUnits { per_stage: 2 }, theta_cap: 40, ..Default::default() };
        let mut aug = AugmentedBuild::new(&base.bd, dv, Vec::new(), opts).unwrap();
        aug.build_all().unwrap();
        assert!(!aug.thetas.is_empty());
        let rep = aug.verify(20, 1);
        assert!(!rep.has_failures(), "{}", rep.render());
        assert!(aug.build_through(8).is_err());
    }
}
