//! The embedding construction: a seed space with a finite-dimensional
//! decomposition is realised inside a Bourgain–Delbaen space. Elements of `Γ`
//! are initial segments `(r_1 x*_1, …, r_j x*_j)` of special c-decompositions
//! of members of the coded norming set `D`, ranked by the well-order of their
//! block ranges.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bd::{BDStageSet, BdError, GammaKind};
use crate::cdecomp::{build_norming_set_d, norming_factor, NormingSetD};
use crate::family::longest_initial_segment_chain;
use crate::rat::Rat;
use crate::seed::SeedSpace;
use crate::vector::{FinVec, IndexId, Universe};
use crate::verdict::{Check, Report, Verdict};

/// Position of `[a, b]` in the order `[n₁,n₂] < [m₁,m₂]` iff `n₂ < m₂`, or `n₂ = m₂` and `n₁ > m₁`.
pub fn interval_rank(a: u32, b: u32) -> u32 {
    assert!(1 <= a && a <= b, "interval [{a}, {b}]");
    b * (b - 1) / 2 + (b - a + 1)
}

/// Inverse of [`interval_rank`].
pub fn interval_of_rank(n: u32) -> (u32, u32) {
    assert!(n >= 1);
    let b = block_of_rank(n);
    let offset = n - m_sequence(b);
    (b - offset, b)
}

/// `m_1 = 1`, `m_{j+1} = m_j + j`: the rank of `[j, j]`.
pub fn m_sequence(j: u32) -> u32 {
    assert!(j >= 1);
    j * (j - 1) / 2 + 1
}

/// The `i` with `m_i ≤ n < m_{i+1}`.
pub fn block_of_rank(n: u32) -> u32 {
    let mut i = 1;
    while m_sequence(i + 1) <= n {
        i += 1;
    }
    i
}

/// Largest `j` with `m_j ≤ n`.
pub fn blocks_below_rank(n: u32) -> u32 {
    block_of_rank(n)
}

/// A tuple `(r_i, index of x*_i in D)`.
pub type Tuple = Vec<(Rat, usize)>;

/// Which recoding produced an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodingCase {
    /// `(r x*)` with `x*` supported on one block; `c*_γ = 0`.
    Single,
    /// `(r_1 x*_1)` with `x*_1` on several blocks.
    SplitFirst,
    /// `(r_1 x*_1, r_2 x*_2)` with `x*_1` on one block.
    Pair,
    /// Everything else: `ξ` drops the last part.
    Tail,
}

/// An element of `Γ` with its coding data: `c*_γ = α e*_ξ + β e*_η`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedGamma {
    pub id: IndexId,
    pub tuple: Tuple,
    pub rank: u32,
    pub interval: (u32, u32),
    pub case: CodingCase,
    pub xi: Option<IndexId>,
    pub eta: Option<IndexId>,
    pub alpha: Rat,
    pub beta: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremAOptions {
    pub stage_bound: u32,
    /// Extra blocks of `D` beyond the last block with `m_j ≤ N`; prefixes of members
    /// reaching into them can still have rank `≤ N`.
    pub lookahead: u32,
    /// Per-rank cap on `|Δ_n|`.
    pub rank_cap: Option<usize>,
    /// Size cap passed to the construction of `D`.
    pub d_cap: usize,
}

impl Default for TheoremAOptions {
    fn default() -> Self {
        TheoremAOptions { stage_bound: 8, lookahead: 1, rank_cap: None, d_cap: 2_000_000 }
    }
}

impl TheoremAOptions {
    pub fn with_stage_bound(stage_bound: u32) -> Self {
        TheoremAOptions { stage_bound, ..Default::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TheoremAError {
    #[error("stage bound must be at least 1")]
    StageBound,
    #[error("D covers blocks [1, {have}] but the build needs [1, {need}]")]
    ShortD { have: u32, need: u32 },
    #[error(transparent)]
    Bd(#[from] BdError),
    #[error("x reaches block {block}, whose rank m = {rank} exceeds the stage bound {bound}")]
    OutsideBuild { block: u32, rank: u32, bound: u32 },
}

/// A frozen build with its coding table.
#[derive(Debug, Clone)]
pub struct TheoremABuild {
    pub seed: SeedSpace,
    pub d: NormingSetD,
    pub options: TheoremAOptions,
    /// Largest `j` with `m_j ≤ N`.
    pub block_bound: u32,
    pub bd: BDStageSet,
    pub coding: Vec<CodedGamma>,
    /// Some candidate was dropped (rank cap, or `D` itself was capped).
    pub pruned: bool,
    pub prune_log: Vec<String>,
    /// Functional `Σ r_i x*_i` of each element.
    pub values: Vec<FinVec>,
    index: HashMap<Tuple, IndexId>,
}

fn interval_of(d: &NormingSetD, t: &[(Rat, usize)]) -> (u32, u32) {
    (d.members[t[0].1].min_block(), d.members[t.last().unwrap().1].max_block())
}

/// `(case, ξ, η, α, β)` for a tuple; the references are tuples.
fn classify(d: &NormingSetD, t: &[(Rat, usize)]) -> (CodingCase, Option<Tuple>, Option<Tuple>, Rat, Rat) {
    let first = &d.members[t[0].1];
    let l = t.len();
    if l == 1 && first.is_atom() {
        return (CodingCase::Single, None, None, Rat::zero(), Rat::zero());
    }
    if l == 1 {
        let dec = &first.decomposition;
        let m = dec.len();
        let (s_m, y_m) = dec[m - 1].clone();
        let xi = dec[..m - 1].to_vec();
        let eta = d.members[y_m].decomposition.clone();
        let r1 = t[0].0.clone();
        let beta = &r1 * &s_m;
        return (CodingCase::SplitFirst, Some(xi), Some(eta), r1, beta);
    }
    let eta = d.members[t[l - 1].1].decomposition.clone();
    let r_last = t[l - 1].0.clone();
    if l == 2 && first.is_atom() {
        let xi = vec![(Rat::one(), t[0].1)];
        return (CodingCase::Pair, Some(xi), Some(eta), t[0].0.clone(), r_last);
    }
    (CodingCase::Tail, Some(t[..l - 1].to_vec()), Some(eta), Rat::one(), r_last)
}

impl TheoremABuild {
    /// Builds `D` over the needed blocks and then the stage set.
    pub fn from_seed(seed: &SeedSpace, options: TheoremAOptions) -> Result<TheoremABuild, TheoremAError> {
        if options.stage_bound == 0 {
            return Err(TheoremAError::StageBound);
        }
        let need = blocks_below_rank(options.stage_bound) + options.lookahead;
        let d = build_norming_set_d(seed, need, options.d_cap);
        build_theorem_a(seed, d, options)
    }

    pub fn len(&self) -> usize {
        self.coding.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coding.is_empty()
    }

    pub fn stage_bound(&self) -> u32 {
        self.options.stage_bound
    }

    pub fn lookup(&self, t: &[(Rat, usize)]) -> Option<IndexId> {
        self.index.get(t).copied()
    }

    /// `(1-ε)`-ball factor used by the lower embedding bound.
    pub fn lower_factor(&self) -> Rat {
        Rat::one() - &self.seed.eps
    }
}

/// Builds `Δ_1, …, Δ_N` from the prefixes of special decompositions of `D`.
pub fn build_theorem_a(seed: &SeedSpace, d: NormingSetD, options: TheoremAOptions) -> Result<TheoremABuild, TheoremAError> {
    let n_max = options.stage_bound;
    if n_max == 0 {
        return Err(TheoremAError::StageBound);
    }
    let block_bound = blocks_below_rank(n_max);
    if d.block_bound < block_bound {
        return Err(TheoremAError::ShortD { have: d.block_bound, need: block_bound });
    }
    let mut prune_log = Vec::new();
    let mut pruned = d.pruned;
    if d.pruned {
        prune_log.push(format!("D stopped at its size cap with {} members", d.len()));
    }

    // Candidate prefixes of rank ≤ N, in (rank, tuple) order.
    let mut candidates: BTreeMap<(u32, Tuple), (u32, u32)> = BTreeMap::new();
    for m in &d.members {
        for j in 1..=m.decomposition.len() {
            let t = &m.decomposition[..j];
            let iv = interval_of(&d, t);
            let rank = interval_rank(iv.0, iv.1);
            if rank > n_max {
                break;
            }
            candidates.entry((rank, t.to_vec())).or_insert(iv);
        }
    }

    let universe = Universe::new("gamma");
    let mut bd = BDStageSet::new(&universe);
    let mut coding: Vec<CodedGamma> = Vec::new();
    let mut values: Vec<FinVec> = Vec::new();
    let mut index: HashMap<Tuple, IndexId> = HashMap::new();
    let mut per_rank: BTreeMap<u32, usize> = BTreeMap::new();
    let mut dropped_cap = 0usize;
    let mut dropped_dep = 0usize;
    for ((rank, t), iv) in candidates {
        let count = per_rank.entry(rank).or_insert(0);
        if options.rank_cap.is_some_and(|cap| *count >= cap) {
            dropped_cap += 1;
            continue;
        }
        let (case, xi_t, eta_t, alpha, beta) = classify(&d, &t);
        let xi = xi_t.as_ref().map(|x| index.get(x).copied());
        let eta = eta_t.as_ref().map(|x| index.get(x).copied());
        if matches!(xi, Some(None)) || matches!(eta, Some(None)) {
            dropped_dep += 1;
            continue;
        }
        let (xi, eta) = (xi.flatten(), eta.flatten());
        let e = |g: Option<IndexId>| FinVec::unit(&universe, g.unwrap());
        let (kind, free) = match case {
            CodingCase::Single if rank == 1 => (GammaKind::Initial, format!("{} d{}", t[0].0, t[0].1)),
            CodingCase::Single => (
                GammaKind::Type0 { beta: Rat::zero(), bstar: FinVec::zero(&universe) },
                format!("{} d{}", t[0].0, t[0].1),
            ),
            CodingCase::SplitFirst => {
                let s_m = &beta / &alpha;
                let half = Rat::new(1, 2);
                let bstar = e(xi).axpy(&s_m, &e(eta)).scale(&half);
                (GammaKind::Type0 { beta: &alpha * Rat::int(2), bstar }, String::new())
            }
            CodingCase::Pair | CodingCase::Tail => {
                let k = bd.rank(xi.unwrap());
                (
                    GammaKind::Type1 { alpha: alpha.clone(), k, xi: xi.unwrap(), beta: beta.clone(), bstar: e(eta) },
                    String::new(),
                )
            }
        };
        let id = bd.push(rank, kind, free)?;
        *count += 1;
        let value = t
            .iter()
            .fold(FinVec::zero(&seed.universe()), |acc, (r, i)| acc.axpy(r, &d.members[*i].functional));
        index.insert(t.clone(), id);
        coding.push(CodedGamma { id, tuple: t, rank, interval: iv, case, xi, eta, alpha, beta });
        values.push(value);
    }
    if dropped_cap > 0 {
        pruned = true;
        prune_log.push(format!("rank cap dropped {dropped_cap} elements"));
    }
    if dropped_dep > 0 {
        pruned = true;
        prune_log.push(format!("{dropped_dep} elements dropped with their pruned references"));
    }
    Ok(TheoremABuild { seed: seed.clone(), d, options, block_bound, bd, coding, pruned, prune_log, values, index })
}

fn fail_or_pass(name: &str, bad: &[IndexId], ok: String, what: &str) -> Check {
    if bad.is_empty() {
        Check::pass(name, ok)
    } else {
        let w: Vec<_> = bad.iter().take(20).collect();
        Check::fail(name, format!("{} elements {what}; first {}", bad.len(), bad[0]), json!(w))
    }
}

impl TheoremABuild {
    fn d_of(&self, g: IndexId) -> FinVec {
        self.bd.unit(g).sub(self.bd.cstar(g))
    }

    /// Every structural statement about the build, checked element by element.
    pub fn verify(&self) -> Report {
        let mut rep = self.bd.validate_schema();
        let n_max = self.options.stage_bound;
        let all: Vec<IndexId> = (0..self.len() as IndexId).collect();

        let bad: Vec<IndexId> = all
            .iter()
            .copied()
            .filter(|&g| {
                let c = &self.coding[g as usize];
                let i0 = c.interval.1;
                c.rank != interval_rank(c.interval.0, c.interval.1)
                    || interval_of_rank(c.rank) != c.interval
                    || !(m_sequence(i0) <= c.rank && c.rank < m_sequence(i0 + 1))
            })
            .collect();
        rep.push(fail_or_pass("theorem-a.ranks", &bad, format!("rank and block of range agree for {} elements", self.len()), "with inconsistent ranks"));

        let empty: Vec<u32> = (1..=n_max).filter(|&n| self.bd.delta(n).is_empty()).collect();
        rep.push(if empty.is_empty() {
            let sizes: Vec<usize> = (1..=n_max).map(|n| self.bd.delta(n).len()).collect();
            Check::pass("theorem-a.nonempty-stages", format!("|Δ_n| = {sizes:?}"))
        } else {
            // A stage may only stay empty if no member of D has a prefix with its block range.
            let wanted: Vec<u32> = empty
                .iter()
                .copied()
                .filter(|&n| {
                    let range = interval_of_rank(n);
                    (0..self.d.len()).any(|i| {
                        let m = &self.d.members[i];
                        (m.min_block(), m.max_block()) == range
                            || (1..=m.decomposition.len()).any(|l| interval_of(&self.d, &m.decomposition[..l]) == range)
                    })
                })
                .collect();
            if wanted.is_empty() {
                Check::new(
                    "theorem-a.nonempty-stages",
                    Verdict::NotApplicable,
                    format!("stages {empty:?} are empty: no member of D has a prefix with their block ranges"),
                )
            } else {
                Check::fail("theorem-a.nonempty-stages", format!("stages {wanted:?} are empty although D has prefixes for them"), json!(wanted))
            }
        });

        let bad: Vec<IndexId> = all
            .par_iter()
            .copied()
            .filter(|&g| {
                let c = &self.coding[g as usize];
                let mut want = FinVec::zero(self.bd.universe());
                if let Some(x) = c.xi {
                    want = want.axpy(&c.alpha, &self.bd.unit(x));
                }
                if let Some(y) = c.eta {
                    want = want.axpy(&c.beta, &self.bd.unit(y));
                }
                &want != self.bd.cstar(g)
            })
            .collect();
        rep.push(fail_or_pass("theorem-a.cstar-cases", &bad, "c*_γ = α e*_ξ + β e*_η for every element".into(), "with a recoded c* differing from the case formula"));

        let bad: Vec<IndexId> = all
            .par_iter()
            .copied()
            .filter(|&g| {
                let c = &self.coding[g as usize];
                let a = self.bd.basis().to_d(&self.bd.unit(g)).unwrap();
                let floor = m_sequence(c.interval.0);
                let low = a.support().any(|h| self.bd.rank(h) < floor);
                low
            })
            .collect();
        rep.push(fail_or_pass("theorem-a.min-support", &bad, "min supp e*_γ in d* coordinates ≥ m_{min ran γ}".into(), "supported below m_{min ran γ}"));

        let bad: Vec<IndexId> = all
            .par_iter()
            .copied()
            .filter(|&g| match &self.bd.element(g).kind {
                GammaKind::Type1 { k, bstar, .. } => &self.bd.project(bstar, *k, self.bd.rank(g) - 1) != bstar,
                _ => false,
            })
            .collect();
        rep.push(fail_or_pass("theorem-a.projection", &bad, "P*_{(k,n]} e*_η = e*_η for every type-1 element".into(), "where the projection moves e*_η"));

        let bad: Vec<IndexId> = all
            .par_iter()
            .copied()
            .filter(|&g| {
                let c = &self.coding[g as usize];
                if c.case == CodingCase::Single {
                    return false;
                }
                let want = self.values[c.xi.unwrap() as usize].scale(&c.alpha).axpy(&c.beta, &self.values[c.eta.unwrap() as usize]);
                want != self.values[g as usize]
            })
            .collect();
        rep.push(fail_or_pass("theorem-a.coefficients", &bad, "Σ r_i x*_i = α·val(ξ) + β·val(η) for every non-single element".into(), "whose functional differs from the coefficient identity"));

        let theta = &self.seed.c * Rat::int(2);
        rep.push(match self.bd.small_weight_condition(&theta) {
            Ok(()) => Check::pass("theorem-a.weights", format!("weights obey the small-weight condition with θ = {theta}")),
            Err(g) => Check::fail("theorem-a.weights", format!("element {g} violates the condition with θ = {theta}"), json!(g)),
        });

        let bad: Vec<IndexId> = all.par_iter().copied().filter(|&g| self.analysis_expansion(g) != Some(self.bd.unit(g))).collect();
        rep.push(fail_or_pass("theorem-a.analysis", &bad, "Σ d*_{γ_j} + r_j e*_{η_j} reproduces e*_γ".into(), "whose prefix analysis fails"));
        rep.push(self.bd.verify_analyses());

        let mut bad_order = Vec::new();
        for j in 1..=self.block_bound {
            let mj = m_sequence(j);
            for c in &self.coding {
                let (a, b) = c.interval;
                if (c.rank < mj) != (b < j) || (c.rank > mj) != (b >= j && (a, b) != (j, j)) {
                    bad_order.push(c.id);
                }
            }
        }
        rep.push(fail_or_pass("theorem-a.partial-order", &bad_order, "ranks around every m_j match the block ranges".into(), "out of order"));

        let cuts: Vec<Vec<u32>> = all.iter().map(|&g| self.bd.analyze(g).map(|a| a.cuts).unwrap_or_default()).collect();
        rep.push(Check::pass(
            "theorem-a.cuts-chain",
            format!("longest chain of initial segments among cuts sets: {}", longest_initial_segment_chain(&cuts)),
        ));

        let detail = format!(
            "Γ holds prefixes of rank ≤ {n_max} of members of D over blocks [1, {}]{}",
            self.d.block_bound,
            if self.pruned { format!("; pruned: {}", self.prune_log.join("; ")) } else { String::new() }
        );
        rep.push(Check::new("theorem-a.completeness", Verdict::AtCap, detail));
        rep
    }

    /// `Σ_{j} d*_{γ_j} + r_j e*_{η_j}` with the first term adjusted for single-block or split `x*_1`.
    fn analysis_expansion(&self, g: IndexId) -> Option<FinVec> {
        let c = &self.coding[g as usize];
        let t = &c.tuple;
        let mut acc = FinVec::zero(self.bd.universe());
        let first = &self.d.members[t[0].1];
        if t.len() == 1 {
            return Some(self.bd.unit(g));
        }
        if first.is_atom() {
            let x1 = self.lookup(&[(Rat::one(), t[0].1)])?;
            acc = acc.axpy(&t[0].0, &self.bd.unit(x1));
        } else {
            let g1 = self.lookup(&t[..1])?;
            let c1 = &self.coding[g1 as usize];
            acc = acc.add(&self.d_of(g1));
            acc = acc.axpy(&c1.alpha, &self.bd.unit(c1.xi?));
            acc = acc.axpy(&c1.beta, &self.bd.unit(c1.eta?));
        }
        for j in 2..=t.len() {
            let gj = self.lookup(&t[..j])?;
            let eta = self.lookup(&self.d.members[t[j - 1].1].decomposition)?;
            acc = acc.add(&self.d_of(gj));
            acc = acc.axpy(&t[j - 1].0, &self.bd.unit(eta));
        }
        Some(acc)
    }

    fn check_support(&self, x: &FinVec) -> Result<(), TheoremAError> {
        if let Some(&b) = SeedSpace::blocks_of(x).last() {
            if b > self.block_bound {
                return Err(TheoremAError::OutsideBuild { block: b, rank: m_sequence(b), bound: self.options.stage_bound });
            }
        }
        Ok(())
    }

    /// `φ(x) = Σ_i J_{m_i} φ_i(P_i x)` with `φ_i(x)(r x*) = r x*(x)`, in one upward pass.
    pub fn embed_phi(&self, x: &FinVec) -> Result<FinVec, TheoremAError> {
        self.check_support(x)?;
        let mut y: Vec<Rat> = Vec::with_capacity(self.len());
        for c in &self.coding {
            let v = if c.case == CodingCase::Single {
                let (r, i) = &c.tuple[0];
                r * &self.d.members[*i].functional.dot(x)
            } else {
                self.bd.cstar(c.id).entries().iter().map(|(j, a)| a * &y[*j as usize]).sum()
            };
            y.push(v);
        }
        Ok(FinVec::from_entries(self.bd.universe(), y.into_iter().enumerate().map(|(i, v)| (i as IndexId, v))))
    }

    /// The same map as the literal sum of extensions `J_{m_i}`.
    pub fn embed_phi_by_blocks(&self, x: &FinVec) -> Result<FinVec, TheoremAError> {
        self.check_support(x)?;
        let mut acc = FinVec::zero(self.bd.universe());
        for b in SeedSpace::blocks_of(x) {
            let xb = SeedSpace::restrict_blocks(x, b, b);
            let m = m_sequence(b);
            let phi_b = FinVec::from_entries(
                self.bd.universe(),
                self.bd.delta(m).map(|g| {
                    let (r, i) = &self.coding[g as usize].tuple[0];
                    (g, r * &self.d.members[*i].functional.dot(&xb))
                }),
            );
            acc = acc.add(&self.bd.extend(&phi_b, m));
        }
        Ok(acc)
    }

    /// A random vector supported in blocks `[1, top]` with entries in `{-4, …, 4}/4`.
    pub fn random_vector(&self, rng: &mut ChaCha8Rng, top: u32) -> FinVec {
        let top = top.min(self.block_bound).max(1);
        loop {
            let mut entries = Vec::new();
            for b in 1..=top {
                if rng.gen_bool(0.7) {
                    for l in 0..self.seed.dim(b) {
                        entries.push((SeedSpace::coord(b, l), Rat::new(rng.gen_range(-4..=4), 4)));
                    }
                }
            }
            let x = FinVec::from_entries(&self.seed.universe(), entries);
            if !x.is_zero() {
                return x;
            }
        }
    }

    /// Checks `φ` on sampled vectors in blocks `[1, sample_blocks]` and on block units.
    pub fn verify_embedding(&self, samples: usize, sample_blocks: u32, seed: u64) -> EmbeddingReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<FinVec> = (0..samples).map(|_| self.random_vector(&mut rng, sample_blocks)).collect();
        let lower = self.lower_factor();
        let outcomes: Vec<SampleOutcome> = xs.par_iter().map(|x| self.embedding_sample(x, &lower)).collect();
        let mut rep = Report::new();

        let identity_bad: Vec<usize> = outcomes.iter().enumerate().filter(|(_, o)| !o.identity).map(|(i, _)| i).collect();
        rep.push(if identity_bad.is_empty() {
            Check::pass("embedding.identity", format!("e*_γ(φ(x)) = Σ r_j x*_j(x) for all γ on {samples} samples"))
        } else {
            Check::fail("embedding.identity", format!("{} samples break the identity", identity_bad.len()), json!(self.sample_witness(&xs, &identity_bad)))
        });
        let upper_bad: Vec<usize> = outcomes.iter().enumerate().filter(|(_, o)| !o.upper).map(|(i, _)| i).collect();
        rep.push(if upper_bad.is_empty() {
            Check::pass("embedding.upper", format!("‖φ(x)‖ ≤ ‖x‖ on {samples} samples"))
        } else {
            Check::fail("embedding.upper", format!("{} samples exceed ‖x‖", upper_bad.len()), json!(self.sample_witness(&xs, &upper_bad)))
        });

        let witnessed = outcomes.iter().filter(|o| o.lower == LowerOutcome::Witnessed).count();
        let beyond: Vec<(usize, u32)> = outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, o)| match o.lower {
                LowerOutcome::Beyond(rank) => Some((i, rank)),
                _ => None,
            })
            .collect();
        let lower_bad: Vec<usize> = outcomes.iter().enumerate().filter(|(_, o)| o.lower == LowerOutcome::Fail).map(|(i, _)| i).collect();
        rep.push(if !lower_bad.is_empty() {
            Check::fail("embedding.lower", format!("{} samples have no (1-ε)-norming member in D", lower_bad.len()), json!(self.sample_witness(&xs, &lower_bad)))
        } else if beyond.is_empty() {
            Check::pass("embedding.lower", format!("(1-ε)‖x‖ ≤ ‖φ(x)‖ witnessed on all {samples} samples"))
        } else {
            let first_stage = beyond.iter().map(|(_, r)| *r).min().unwrap();
            Check::new(
                "embedding.lower",
                Verdict::Inconclusive,
                format!("{witnessed}/{samples} witnessed; {} need a functional first built at stage {first_stage}", beyond.len()),
            )
            .with_witness(json!(beyond.iter().take(20).collect::<Vec<_>>()))
        });

        rep.push(self.verify_block_units());
        EmbeddingReport { report: rep, samples, witnessed, inconclusive: beyond.len() }
    }

    fn sample_witness(&self, xs: &[FinVec], idx: &[usize]) -> serde_json::Value {
        json!(idx.iter().take(5).map(|&i| serde_json::to_value(&xs[i]).unwrap()).collect::<Vec<_>>())
    }

    fn embedding_sample(&self, x: &FinVec, lower: &Rat) -> SampleOutcome {
        let phi = self.embed_phi(x).expect("sample inside the build");
        let identity = self.values.iter().enumerate().all(|(g, v)| phi.get(g as IndexId) == v.dot(x));
        let norm = self.seed.norm(x);
        let image = phi.linf_norm();
        let upper = image <= norm;
        let target = lower * &norm;
        let lower = if image >= target {
            LowerOutcome::Witnessed
        } else {
            // The best member of D; its full tuple is the element that would witness the bound.
            let best = self.d.members.iter().max_by(|a, b| a.functional.dot(x).abs().cmp(&b.functional.dot(x).abs()));
            match best {
                Some(m) if m.functional.dot(x).abs() >= target => {
                    let iv = interval_of(&self.d, &m.decomposition);
                    LowerOutcome::Beyond(interval_rank(iv.0, iv.1))
                }
                _ => LowerOutcome::Fail,
            }
        };
        SampleOutcome { identity, upper, lower }
    }

    /// Unit vectors of each block: `‖φ(x)‖ ≥ (1-ε/4)/(1+ε/4)·‖x‖` and `≤ ‖x‖`.
    pub fn verify_block_units(&self) -> Check {
        let eps4 = &self.seed.eps / Rat::int(4);
        let factor = (Rat::one() - &eps4) / norming_factor(&self.seed);
        let mut bad = Vec::new();
        let mut count = 0;
        for b in 1..=self.block_bound {
            for l in 0..self.seed.dim(b) {
                let x = FinVec::unit(&self.seed.universe(), SeedSpace::coord(b, l));
                let norm = self.seed.norm(&x);
                let image = self.embed_phi(&x).unwrap().linf_norm();
                count += 1;
                if image > norm || image < &factor * &norm {
                    bad.push((b, l));
                }
            }
        }
        if bad.is_empty() {
            Check::pass("embedding.block-units", format!("{count} block unit vectors within [{factor}, 1]·‖x‖"))
        } else {
            Check::fail("embedding.block-units", format!("{} unit vectors out of range", bad.len()), json!(bad))
        }
    }

    /// Coding table: tuple, rank, case and the recoded element.
    pub fn coding_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .coding
            .iter()
            .map(|c| {
                json!({
                    "id": c.id,
                    "rank": c.rank,
                    "interval": [c.interval.0, c.interval.1],
                    "case": c.case,
                    "tuple": c.tuple.iter().map(|(r, i)| json!([r.to_string(), i])).collect::<Vec<_>>(),
                    "recoded": self.bd.element(c.id),
                })
            })
            .collect();
        json!(rows)
    }

    /// Per-stage cardinalities.
    pub fn stage_sizes(&self) -> Vec<usize> {
        (1..=self.options.stage_bound).map(|n| self.bd.delta(n).len()).collect()
    }

    /// Elements whose tuple is a full special decomposition of a member of `D`.
    pub fn full_members(&self) -> HashSet<usize> {
        let mut out = HashSet::new();
        for (i, m) in self.d.members.iter().enumerate() {
            if self.index.contains_key(&m.decomposition) {
                out.insert(i);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LowerOutcome {
    Witnessed,
    /// The witnessing member's element has this rank, beyond the build.
    Beyond(u32),
    Fail,
}

struct SampleOutcome {
    identity: bool,
    upper: bool,
    lower: LowerOutcome,
}

#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    pub report: Report,
    pub samples: usize,
    pub witnessed: usize,
    pub inconclusive: usize,
}

impl EmbeddingReport {
    pub fn witnessed_fraction(&self) -> f64 {
        self.witnessed as f64 / self.samples.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    #[test]
    fn interval_order() {
        assert_eq!(interval_rank(1, 2), 3);
        assert_eq!(interval_rank(2, 3), 5);
        assert_eq!(interval_rank(1, 1), 1);
        let ms: Vec<u32> = (1..=6).map(m_sequence).collect();
        assert_eq!(ms, vec![1, 2, 4, 7, 11, 16]);
        for n in 1..200 {
            let (a, b) = interval_of_rank(n);
            assert_eq!(interval_rank(a, b), n);
        }
        // Listed order 1, 2, [1,2], 3, [2,3], [1,3], 4
        let list: Vec<(u32, u32)> = (1..=7).map(interval_of_rank).collect();
        assert_eq!(list, vec![(1, 1), (2, 2), (1, 2), (3, 3), (2, 3), (1, 3), (4, 4)]);
    }

    #[test]
    fn scalar_build_verifies() {
        let seed = SeedSpace::scalar_c0();
        let b = TheoremABuild::from_seed(&seed, TheoremAOptions::with_stage_bound(7)).unwrap();
        let rep = b.verify();
        assert!(!rep.has_failures(), "{}", rep.render());
        for g in b.bd.delta(1) {
            assert!(matches!(b.bd.element(g).kind, GammaKind::Initial));
        }
        for j in 2..=4 {
            for g in b.bd.delta(m_sequence(j)) {
                assert!(b.bd.cstar(g).is_zero());
                assert!(matches!(&b.bd.element(g).kind, GammaKind::Type0 { beta, bstar } if beta.is_zero() && bstar.is_zero()));
            }
        }
    }

    #[test]
    fn phi_matches_sum_of_extensions() {
        let seed = SeedSpace::three_block();
        let b = TheoremABuild::from_seed(&seed, TheoremAOptions::with_stage_bound(6)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = b.random_vector(&mut rng, 3);
            assert_eq!(b.embed_phi(&x).unwrap(), b.embed_phi_by_blocks(&x).unwrap());
        }
        let zero = FinVec::zero(&seed.universe());
        assert!(b.embed_phi(&zero).unwrap().is_zero());
        let far = FinVec::unit(&seed.universe(), SeedSpace::coord(4, 0));
        assert!(b.embed_phi(&far).is_err());
    }

    #[test]
    fn single_coordinate_values() {
        let seed = SeedSpace::three_block();
        let b = TheoremABuild::from_seed(&seed, TheoremAOptions::with_stage_bound(6)).unwrap();
        let x = seed.from_block(2, &[q(1, 2), q(-1, 1)]);
        let phi = b.embed_phi(&x).unwrap();
        for g in b.bd.delta(2) {
            let (r, i) = &b.coding[g as usize].tuple[0];
            assert_eq!(phi.get(g), r * &b.d.members[*i].functional.dot(&x));
        }
    }
}
