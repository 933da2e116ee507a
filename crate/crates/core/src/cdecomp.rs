//! Optimal c-decompositions, the coded norming set `D` of a seed space and the
//! subsequential upper estimate checker.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::rat::Rat;
use crate::seed::{SeedKind, SeedSpace};
use crate::tsirelson::{build_dual_norming_set, tsirelson_dual_norm, TsirelsonSpec};
use crate::vector::{FinVec, IndexId, Universe};
use crate::verdict::{Check, Report, Verdict};

pub const NORMING_SET_SCHEMA: &str = "bdspace/norming-set/v1";

/// A norm on vectors whose coordinates are grouped into FDD blocks.
pub trait BlockNorm: Sync {
    fn block_of(&self, i: IndexId) -> u32;
    fn norm(&self, x: &FinVec) -> Rat;
}

/// `ℓ₁` on coordinates, one coordinate per block.
pub struct CoordL1;
/// `ℓ∞` on coordinates, one coordinate per block.
pub struct CoordLinf;
/// A Tsirelson norm on coordinates.
pub struct CoordTsirelson(pub TsirelsonSpec);
/// The norm of a seed space.
pub struct SeedPrimal<'a>(pub &'a SeedSpace);
/// The dual norm of a seed space.
pub struct SeedDual<'a>(pub &'a SeedSpace);

impl BlockNorm for CoordL1 {
    fn block_of(&self, i: IndexId) -> u32 {
        i
    }
    fn norm(&self, x: &FinVec) -> Rat {
        x.l1_norm()
    }
}

impl BlockNorm for CoordLinf {
    fn block_of(&self, i: IndexId) -> u32 {
        i
    }
    fn norm(&self, x: &FinVec) -> Rat {
        x.linf_norm()
    }
}

impl BlockNorm for CoordTsirelson {
    fn block_of(&self, i: IndexId) -> u32 {
        i
    }
    fn norm(&self, x: &FinVec) -> Rat {
        self.0.norm(x)
    }
}

impl BlockNorm for SeedPrimal<'_> {
    fn block_of(&self, i: IndexId) -> u32 {
        SeedSpace::block_of(i)
    }
    fn norm(&self, x: &FinVec) -> Rat {
        self.0.norm(x)
    }
}

impl BlockNorm for SeedDual<'_> {
    fn block_of(&self, i: IndexId) -> u32 {
        SeedSpace::block_of(i)
    }
    fn norm(&self, x: &FinVec) -> Rat {
        self.0.dual_norm(x)
    }
}

/// Sorted distinct blocks met by `x`.
pub fn support_blocks(x: &FinVec, bn: &dyn BlockNorm) -> Vec<u32> {
    let mut b: Vec<u32> = x.support().map(|i| bn.block_of(i)).collect();
    b.dedup();
    b
}

/// `P_{[lo, hi]} x`.
pub fn project_blocks(x: &FinVec, bn: &dyn BlockNorm, lo: u32, hi: u32) -> FinVec {
    x.restrict(|i| {
        let b = bn.block_of(i);
        b >= lo && b <= hi
    })
}

/// A successive block sequence summing to `parent`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CDecomposition {
    pub parent: FinVec,
    pub blocks: Vec<FinVec>,
}

impl CDecomposition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `(min, max)` block of each piece.
    pub fn ranges(&self, bn: &dyn BlockNorm) -> Vec<(u32, u32)> {
        self.blocks
            .iter()
            .map(|b| {
                let s = support_blocks(b, bn);
                (s[0], *s.last().unwrap())
            })
            .collect()
    }

    /// Sum, successiveness and the `|supp| = 1 or ‖x_i‖ ≤ c` condition.
    pub fn is_c_decomposition(&self, c: &Rat, bn: &dyn BlockNorm) -> bool {
        if self.blocks.iter().any(|b| b.is_zero()) {
            return false;
        }
        let sum = self.blocks.iter().fold(FinVec::zero(self.parent.universe()), |a, b| a.add(b));
        if sum != self.parent {
            return false;
        }
        let r = self.ranges(bn);
        if r.windows(2).any(|w| w[0].1 >= w[1].0) {
            return false;
        }
        self.blocks.iter().zip(&r).all(|(b, (lo, hi))| lo == hi || bn.norm(b) <= *c)
    }

    /// `‖x_{2j-1} + x_{2j}‖ > c` for `j ≤ ⌊ℓ/2⌋`.
    pub fn adjacent_pairs_exceed(&self, c: &Rat, bn: &dyn BlockNorm) -> bool {
        self.blocks.chunks_exact(2).all(|p| bn.norm(&p[0].add(&p[1])) > *c)
    }
}

/// The optimal c-decomposition: greedy breakpoints `n_{j+1} = n_j + 1` if
/// `‖P_{n_j}x‖ > c`, else the least `n` with `‖P_{[n_j,n]}x‖ > c`, else the end.
/// A piece that would be zero (a breakpoint falling in a gap of the support) is dropped.
pub fn optimal_c_decomposition(x: &FinVec, c: &Rat, bn: &dyn BlockNorm) -> CDecomposition {
    let bs = support_blocks(x, bn);
    let mut blocks = Vec::new();
    let mut start = 0usize;
    while start < bs.len() {
        let single = project_blocks(x, bn, bs[start], bs[start]);
        if bn.norm(&single) > *c {
            blocks.push(single);
            start += 1;
            continue;
        }
        let exceed = (start + 1..bs.len()).find(|&e| bn.norm(&project_blocks(x, bn, bs[start], bs[e])) > *c);
        match exceed {
            Some(e) => {
                blocks.push(project_blocks(x, bn, bs[start], bs[e - 1]));
                start = e;
            }
            None => {
                blocks.push(project_blocks(x, bn, bs[start], *bs.last().unwrap()));
                break;
            }
        }
    }
    CDecomposition { parent: x.clone(), blocks }
}

/// Where the members of a norming set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DOrigin {
    /// Net combinations `H` and the `h ↦ h̃` recursion.
    NetRecursion,
    /// The canonical dual norming set of a Tsirelson seed.
    Tsirelson,
}

/// A member of `D` with its special c-decomposition `(r_i, x*_i)`; atoms carry `(1, itself)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DMember {
    pub functional: FinVec,
    pub level: u32,
    pub blocks: Vec<u32>,
    pub decomposition: Vec<(Rat, usize)>,
}

impl DMember {
    pub fn min_block(&self) -> u32 {
        self.blocks[0]
    }

    pub fn max_block(&self) -> u32 {
        *self.blocks.last().unwrap()
    }

    pub fn is_atom(&self) -> bool {
        self.blocks.len() == 1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormingSetD {
    pub schema: String,
    pub origin: DOrigin,
    /// Members are supported in blocks `[1, block_bound]`.
    pub block_bound: u32,
    /// The size cap stopped the construction early.
    pub pruned: bool,
    pub members: Vec<DMember>,
    /// Every produced pair `(h, index of h̃)`.
    pub h_pairs: Vec<(FinVec, usize)>,
    #[serde(skip)]
    index: HashMap<FinVec, usize>,
}

impl NormingSetD {
    pub fn position(&self, f: &FinVec) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn reindex(&mut self) {
        self.index = self.members.iter().enumerate().map(|(i, m)| (m.functional.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `max_{d ∈ ±D} d(x)`.
    pub fn norming_value(&self, x: &FinVec) -> Rat {
        self.members.iter().map(|m| m.functional.dot(x).abs()).max().unwrap_or_else(Rat::zero)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("norming set serializes")
    }

    pub fn from_json(text: &str) -> Result<NormingSetD, serde_json::Error> {
        let mut d: NormingSetD = serde_json::from_str(text)?;
        d.reindex();
        Ok(d)
    }

    fn push(&mut self, functional: FinVec, level: u32, decomposition: Option<Vec<(Rat, usize)>>) -> usize {
        let idx = self.members.len();
        let blocks = SeedSpace::blocks_of(&functional);
        let decomposition = decomposition.unwrap_or_else(|| vec![(Rat::one(), idx)]);
        self.index.insert(functional.clone(), idx);
        self.members.push(DMember { functional, level, blocks, decomposition });
        idx
    }
}

/// `1 + ε/4`, or 1 in the unconditional variant.
pub fn norming_factor(seed: &SeedSpace) -> Rat {
    if seed.unconditional {
        Rat::one()
    } else {
        Rat::one() + &seed.eps / Rat::int(4)
    }
}

/// The supports used for `H`: intervals, or arbitrary sets in the unconditional variant,
/// ordered by range length.
fn h_supports(seed: &SeedSpace, bound: u32) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::new();
    if seed.unconditional {
        for mask in 1u64..(1u64 << bound) {
            out.push((0..bound).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect());
        }
    } else {
        for m in 1..=bound {
            for n in m..=bound {
                out.push((m..=n).collect());
            }
        }
    }
    out.sort_by_key(|s| (s.last().unwrap() - s[0], s.clone()));
    out
}

/// The net combinations `H` over blocks `[1, bound]`, deduplicated, in a fixed order.
pub fn enumerate_h(seed: &SeedSpace, bound: u32) -> Vec<FinVec> {
    let kappa = norming_factor(seed);
    let u = seed.universe();
    let mut seen: HashSet<FinVec> = HashSet::new();
    let mut out = Vec::new();
    for supp in h_supports(seed, bound) {
        let choices: Vec<Vec<FinVec>> = supp
            .iter()
            .map(|&b| {
                let net = seed.dual_net(b);
                seed.generators.iter().flat_map(|a| net.iter().map(move |f| f.scale(a))).collect()
            })
            .collect();
        let mut acc = vec![FinVec::zero(&u)];
        for opts in &choices {
            acc = acc.iter().flat_map(|v| opts.iter().map(move |o| v.add(o))).collect();
        }
        for v in acc {
            let h = v.scale(&(&seed.dual_norm(&v) * &kappa).recip());
            if seen.insert(h.clone()) {
                out.push(h);
            }
        }
    }
    out
}

/// Builds `D` over blocks `[1, block_bound]`, stopping (dependency-closed) at `size_cap` members.
pub fn build_norming_set_d(seed: &SeedSpace, block_bound: u32, size_cap: usize) -> NormingSetD {
    let mut d = NormingSetD {
        schema: NORMING_SET_SCHEMA.to_string(),
        origin: DOrigin::NetRecursion,
        block_bound,
        pruned: false,
        members: Vec::new(),
        h_pairs: Vec::new(),
        index: HashMap::new(),
    };
    if let SeedKind::Tsirelson { spec } = &seed.kind {
        d.origin = DOrigin::Tsirelson;
        tsirelson_members(seed, spec, &mut d, size_cap);
        return d;
    }
    let kappa = norming_factor(seed);
    let c_inner = &seed.c / &kappa;
    let dual = SeedDual(seed);
    let hs = enumerate_h(seed, block_bound);
    let mut memo: HashMap<FinVec, usize> = HashMap::new();
    for level in 1..=block_bound {
        let batch: Vec<&FinVec> = hs
            .iter()
            .filter(|h| {
                let b = SeedSpace::blocks_of(h);
                b.last().unwrap() - b[0] + 1 == level
            })
            .collect();
        // h ↦ (parts, h̃); parts refer to lower levels only, so a level runs in parallel.
        let results: Vec<Option<(Vec<(Rat, usize)>, FinVec)>> = batch
            .par_iter()
            .map(|h| {
                if level == 1 {
                    return Some((Vec::new(), (*h).clone()));
                }
                let dec = optimal_c_decomposition(h, &c_inner, &dual);
                let mut parts = Vec::with_capacity(dec.len());
                let mut tilde = FinVec::zero(h.universe());
                for z in &dec.blocks {
                    let nz = seed.dual_norm(z);
                    let s = &nz * &kappa;
                    let hi = z.scale(&s.recip());
                    let top = *SeedSpace::blocks_of(&hi).last().unwrap();
                    let r = seed.round_to_net(&s, top);
                    let idx = *memo.get(&hi)?;
                    tilde = tilde.axpy(&r, &d.members[idx].functional);
                    parts.push((r, idx));
                }
                Some((parts, tilde))
            })
            .collect();
        for (h, res) in batch.into_iter().zip(results) {
            let Some((parts, tilde)) = res else {
                d.pruned = true;
                continue;
            };
            let idx = match d.position(&tilde) {
                Some(i) => i,
                None => {
                    if d.members.len() >= size_cap {
                        d.pruned = true;
                        continue;
                    }
                    d.push(tilde, level, (level > 1).then_some(parts))
                }
            };
            memo.insert(h.clone(), idx);
            d.h_pairs.push((h.clone(), idx));
        }
    }
    d
}

fn tsirelson_members(seed: &SeedSpace, spec: &TsirelsonSpec, d: &mut NormingSetD, cap: usize) {
    let bound = d.block_bound;
    let mut depth = bound.saturating_sub(1);
    let ds = loop {
        match build_dual_norming_set(spec, depth, bound, cap) {
            Ok(ds) => break ds,
            Err(_) => {
                d.pruned = true;
                depth -= 1;
            }
        }
    };
    let u = seed.universe();
    for (i, m) in ds.members.iter().enumerate() {
        let f = m.functional.reindex(&u, |j| SeedSpace::coord(j, 0));
        let dec = (m.level > 0).then(|| ds.decomposition(i));
        let idx = d.push(f, m.level + 1, dec);
        debug_assert_eq!(idx, i);
    }
}

fn witness_vec(v: &FinVec) -> serde_json::Value {
    serde_json::to_value(v).unwrap()
}

/// Checks the properties of `D`: atoms, the norm band, `‖h̃ - h‖ ≤ Σ ε_j`,
/// the recorded special decompositions and `(1-ε)`-norming on every block interval.
pub fn verify_norming_set_d(seed: &SeedSpace, d: &NormingSetD) -> Report {
    let mut rep = Report::new();
    let kappa = norming_factor(seed);
    let dual = SeedDual(seed);
    let tsirelson = d.origin == DOrigin::Tsirelson;

    // Atoms: D ∩ E*_m is the scaled net.
    let mut bad_atoms = Vec::new();
    for m in 1..=d.block_bound {
        let mut want: Vec<FinVec> = seed.dual_net(m).iter().map(|f| f.scale(&kappa.recip())).collect();
        let mut have: Vec<FinVec> =
            d.members.iter().filter(|x| x.blocks == [m]).map(|x| x.functional.clone()).collect();
        want.sort_by_key(|f| format!("{f:?}"));
        have.sort_by_key(|f| format!("{f:?}"));
        if want != have {
            bad_atoms.push(m);
        }
    }
    rep.push(if bad_atoms.is_empty() {
        Check::pass("norming-set.atoms", format!("D ∩ E*_m is the scaled net for m ≤ {}", d.block_bound))
    } else {
        Check::fail("norming-set.atoms", "atom set differs from the scaled net", json!({ "blocks": bad_atoms }))
    });

    // Norm band.
    let norms: Vec<Rat> = d.members.par_iter().map(|m| seed.dual_norm(&m.functional)).collect();
    let half = Rat::new(1, 2);
    let over = norms.iter().position(|n| *n > Rat::one());
    let under = norms.iter().position(|n| *n < half);
    let min = norms.iter().min().cloned().unwrap_or_else(Rat::zero);
    rep.push(match (over, under) {
        (Some(i), _) => Check::fail("norming-set.band", "member of norm above 1", witness_vec(&d.members[i].functional)),
        (None, Some(i)) if !tsirelson => {
            Check::fail("norming-set.band", "member of norm below 1/2", witness_vec(&d.members[i].functional))
        }
        (None, Some(_)) => Check::new(
            "norming-set.band",
            Verdict::NotApplicable,
            format!("all norms ≤ 1; lower band 1/2 does not hold for the Tsirelson norming set (min {min})"),
        ),
        (None, None) => Check::pass("norming-set.band", format!("1/2 ≤ ‖d‖ ≤ 1 on {} members (min {min})", norms.len())),
    });

    // ‖h̃ - h‖ ≤ Σ_{j ∈ supp} ε_j.
    if tsirelson {
        rep.push(Check::new("norming-set.approximation", Verdict::NotApplicable, "no net combinations"));
    } else {
        let bad = d.h_pairs.par_iter().find_any(|(h, i)| {
            let diff = d.members[*i].functional.sub(h);
            let budget: Rat = SeedSpace::blocks_of(h).iter().map(|&j| seed.eps_i(j)).sum();
            seed.dual_norm(&diff) > budget
        });
        rep.push(match bad {
            None => Check::pass("norming-set.approximation", format!("{} pairs within Σ ε_j", d.h_pairs.len())),
            Some((h, _)) => Check::fail("norming-set.approximation", "‖h̃ - h‖ exceeds Σ ε_j", witness_vec(h)),
        });
    }

    // Recorded decompositions.
    let bad = d.members.par_iter().enumerate().find_any(|(idx, m)| !decomposition_ok(seed, d, *idx, m, &dual));
    rep.push(match bad {
        None => Check::pass("norming-set.decompositions", "every recorded special decomposition is a c-decomposition into earlier members"),
        Some((_, m)) => Check::fail("norming-set.decompositions", "invalid special decomposition", witness_vec(&m.functional)),
    });
    if !tsirelson {
        let c_inner = &seed.c / &kappa;
        let bad = d.h_pairs.par_iter().find_any(|(h, i)| {
            let m = &d.members[*i];
            if m.is_atom() {
                return false;
            }
            let opt = optimal_c_decomposition(h, &c_inner, &dual);
            let want: Vec<Vec<u32>> = opt.blocks.iter().map(SeedSpace::blocks_of).collect();
            let got: Vec<Vec<u32>> = m.decomposition.iter().map(|(_, p)| d.members[*p].blocks.clone()).collect();
            want != got
        });
        rep.push(match bad {
            None => Check::pass("norming-set.decomposition-supports", "part supports follow the optimal c/(1+ε/4)-decomposition of h"),
            Some((h, _)) => Check::fail("norming-set.decomposition-supports", "part supports differ from the optimal decomposition", witness_vec(h)),
        });
    }

    rep.push(check_norming(seed, d));
    rep
}

fn decomposition_ok(seed: &SeedSpace, d: &NormingSetD, idx: usize, m: &DMember, dual: &SeedDual) -> bool {
    if m.decomposition == [(Rat::one(), idx)] {
        return m.is_atom();
    }
    if m.decomposition.len() < 2 {
        return false;
    }
    let pieces: Vec<FinVec> = m.decomposition.iter().map(|(r, p)| d.members[*p].functional.scale(r)).collect();
    let dec = CDecomposition { parent: m.functional.clone(), blocks: pieces };
    if !dec.is_c_decomposition(&seed.c, dual) {
        return false;
    }
    m.decomposition.iter().all(|(r, p)| {
        let part = &d.members[*p];
        part.level < m.level
            && (d.origin == DOrigin::Tsirelson || seed.in_net(r, part.max_block()))
    })
}

/// `(1-ε)`-norming of `⊕_{j=m}^n E_j` for `m ≤ n ≤ block_bound`.
fn check_norming(seed: &SeedSpace, d: &NormingSetD) -> Check {
    let name = "norming-set.norming";
    let b = d.block_bound;
    if let SeedKind::Tsirelson { spec } = &seed.kind {
        // Interval indicator vectors and units, against the exact norm.
        let u = seed.universe();
        let mut tried = 0;
        for m in 1..=b {
            for n in m..=b {
                let x = FinVec::from_entries(&u, (m..=n).map(|j| (SeedSpace::coord(j, 0), Rat::one())));
                let norm = spec.norm(&x.reindex(&Universe::naturals(), SeedSpace::block_of));
                tried += 1;
                if d.norming_value(&x) < (Rat::one() - &seed.eps) * &norm {
                    let v = if d.pruned { Verdict::AtCap } else { Verdict::Fail };
                    return Check::new(name, v, "interval indicator not (1-ε)-normed").with_witness(witness_vec(&x));
                }
            }
        }
        return Check::new(name, Verdict::PassAtBudget, format!("{tried} interval indicators normed"));
    }
    let kappa = norming_factor(seed);
    let lookup: HashMap<&FinVec, usize> = d.h_pairs.iter().map(|(h, i)| (h, *i)).collect();
    let mut intervals = Vec::new();
    for m in 1..=b {
        for n in m..=b {
            intervals.push((m, n));
        }
    }
    let failure = intervals.par_iter().find_map_any(|&(m, n)| {
        for g in seed.dual_extremes(m, n) {
            let h = g.scale(&kappa.recip());
            let close = |f: &FinVec| seed.dual_norm(&g.sub(f)) <= seed.eps;
            let fast = lookup.get(&h).is_some_and(|&i| close(&d.members[i].functional));
            let slow = || {
                d.members.iter().any(|x| {
                    x.min_block() >= m && x.max_block() <= n && (close(&x.functional) || close(&x.functional.neg()))
                })
            };
            if !fast && !slow() {
                return Some(((m, n), g));
            }
        }
        None
    });
    match failure {
        None => Check::pass(name, format!("every extreme dual functional on every interval within [1,{b}] is ε-close to D")),
        Some(((m, n), g)) => {
            let v = if d.pruned { Verdict::AtCap } else { Verdict::Fail };
            Check::new(name, v, format!("extreme functional on [{m},{n}] has no ε-close member")).with_witness(witness_vec(&g))
        }
    }
}

/// The dual norm used for `Σ a_i v*_i` in the subsequential upper estimate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VDual {
    /// `V = c₀`, so `V*` is `ℓ₁`.
    L1,
    /// `V = ℓ₁`, so `V*` is `ℓ∞`.
    Linf,
    /// `V = T_{A,c}`.
    Tsirelson { spec: TsirelsonSpec },
}

impl VDual {
    pub fn norm(&self, a: &FinVec) -> Rat {
        match self {
            VDual::L1 => a.l1_norm(),
            VDual::Linf => a.linf_norm(),
            VDual::Tsirelson { spec } => tsirelson_dual_norm(a, spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperEstimateCertificate {
    pub verdict: Verdict,
    pub constant: Rat,
    /// Largest value seen; the best constant for this budget.
    pub max_value: Rat,
    pub evaluations: usize,
    /// `(functional index, cuts, value)` of the first violation.
    pub witness: Option<(usize, Vec<u32>, Rat)>,
}

/// Evaluates `‖Σ_i ‖z*∘P_{[n_i,n_{i+1})}‖ v*_{n_i}‖_{V*}` over cut sequences:
/// all refinements at support boundaries when at most `cut_budget`, else seeded samples.
pub fn check_subsequential_upper(
    norming: &[FinVec],
    bn: &dyn BlockNorm,
    v: &VDual,
    constant: &Rat,
    cut_budget: usize,
    seed: u64,
) -> UpperEstimateCertificate {
    let results: Vec<(Rat, usize, Option<(Vec<u32>, Rat)>)> = norming
        .par_iter()
        .enumerate()
        .map(|(k, z)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9));
            let bs = support_blocks(z, bn);
            if bs.is_empty() {
                return (Rat::zero(), 0, None);
            }
            let lo = bs[0];
            let hi = *bs.last().unwrap() + 1;
            let mut interior: Vec<u32> = bs.iter().flat_map(|&b| [b, b + 1]).filter(|&p| p > lo && p < hi).collect();
            interior.dedup();
            let starts: Vec<u32> = if lo > 1 { vec![1, lo] } else { vec![lo] };
            let p = interior.len();
            let exhaustive = p < 20 && (1usize << p) * starts.len() <= cut_budget;
            let masks: Vec<u64> = if exhaustive {
                (0..1u64 << p).collect()
            } else {
                let mut m: Vec<u64> = vec![0, (1u64 << p.min(63)) - 1];
                m.extend((0..cut_budget / starts.len()).map(|_| rng.gen::<u64>() & ((1u64 << p.min(63)) - 1)));
                m
            };
            let mut best = Rat::zero();
            let mut count = 0;
            for &s in &starts {
                for &mask in &masks {
                    let mut cuts = vec![s];
                    cuts.extend((0..p).filter(|i| mask >> i & 1 == 1).map(|i| interior[i]));
                    cuts.push(hi);
                    let a = FinVec::from_entries(
                        &Universe::naturals(),
                        cuts.windows(2).map(|w| (w[0], bn.norm(&project_blocks(z, bn, w[0], w[1] - 1)))),
                    );
                    let val = v.norm(&a);
                    count += 1;
                    if val > *constant {
                        return (val.clone(), count, Some((cuts, val)));
                    }
                    if val > best {
                        best = val;
                    }
                }
            }
            (best, count, None)
        })
        .collect();
    let mut max_value = Rat::zero();
    let mut evaluations = 0;
    let mut witness = None;
    for (k, (best, count, w)) in results.into_iter().enumerate() {
        evaluations += count;
        if best > max_value {
            max_value = best;
        }
        if witness.is_none() {
            witness = w.map(|(cuts, val)| (k, cuts, val));
        }
    }
    let verdict = if witness.is_some() { Verdict::Fail } else { Verdict::PassAtBudget };
    UpperEstimateCertificate { verdict, constant: constant.clone(), max_value, evaluations, witness }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn nat(e: &[(u32, Rat)]) -> FinVec {
        FinVec::from_entries(&Universe::naturals(), e.iter().cloned())
    }

    #[test]
    fn greedy_example() {
        let x = nat(&[(1, q(3, 10)), (2, q(3, 10)), (3, q(4, 5))]);
        let d = optimal_c_decomposition(&x, &q(1, 2), &CoordL1);
        assert_eq!(d.blocks, vec![nat(&[(1, q(3, 10))]), nat(&[(2, q(3, 10))]), nat(&[(3, q(4, 5))])]);
        assert!(d.is_c_decomposition(&q(1, 2), &CoordL1));
        assert!(d.adjacent_pairs_exceed(&q(1, 2), &CoordL1));
    }

    #[test]
    fn trivial_cases() {
        let x = nat(&[(4, q(7, 1))]);
        assert_eq!(optimal_c_decomposition(&x, &q(1, 2), &CoordL1).blocks, vec![x.clone()]);
        let y = nat(&[(1, q(1, 10)), (2, q(1, 10)), (5, q(1, 10))]);
        assert_eq!(optimal_c_decomposition(&y, &q(1, 2), &CoordL1).blocks, vec![y.clone()]);
    }

    #[test]
    fn gap_after_a_large_coordinate() {
        let x = nat(&[(1, q(9, 10)), (3, q(9, 10)), (4, q(1, 10))]);
        let d = optimal_c_decomposition(&x, &q(1, 2), &CoordL1);
        assert_eq!(d.len(), 3);
        assert!(d.is_c_decomposition(&q(1, 2), &CoordL1));
        assert!(d.adjacent_pairs_exceed(&q(1, 2), &CoordL1));
    }

    #[test]
    fn upper_estimate_examples() {
        let one = check_subsequential_upper(&[nat(&[(3, q(1, 1))])], &CoordLinf, &VDual::L1, &Rat::one(), 100, 1);
        assert_eq!(one.verdict, Verdict::PassAtBudget);
        let z = nat(&[(1, q(1, 1)), (2, q(1, 1))]);
        let two = check_subsequential_upper(&[z], &CoordLinf, &VDual::L1, &Rat::one(), 100, 1);
        assert_eq!(two.verdict, Verdict::Fail);
        assert_eq!(two.witness.unwrap().1, vec![1, 2, 3]);
    }

    #[test]
    fn norming_set_of_scalar_c0() {
        let seed = SeedSpace::scalar_c0();
        let d = build_norming_set_d(&seed, 3, 10_000);
        assert!(!d.pruned);
        let rep = verify_norming_set_d(&seed, &d);
        assert!(!rep.has_failures(), "{}", rep.render());
        let kappa = norming_factor(&seed);
        let atom = FinVec::from_entries(&seed.universe(), [(SeedSpace::coord(1, 0), kappa.recip())]);
        assert!(d.position(&atom).is_some());
    }
}
