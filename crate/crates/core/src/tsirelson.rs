//! Tsirelson norms `T_{A,c}`, their canonical dual norming sets and
//! bounded-search domination certificates.
//!
//! The norm is the fixed point of
//! `‖x‖ = max(‖x‖_∞, c · sup Σ_i ‖E_i x‖)` over `A`-admissible `E_1 < … < E_k`.
//! Since the norm is 1-unconditional and monotone under restriction, the sets
//! can be taken to be intervals of the support: each `E_i` grows until the next
//! minimum, the last one runs to the end, and a minimum that is not a support
//! point can be moved up to one (a spread, so admissibility is kept). The
//! evaluator is therefore a dynamic program over intervals of the support.
//! A single set never helps because `c‖Ex‖ ≤ c‖x‖ < ‖x‖`.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::family::RegularFamily;
use crate::rat::Rat;
use crate::vector::{FinVec, IndexId, Universe};
use crate::verdict::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TsirelsonError {
    #[error("Tsirelson constant must satisfy 0 < c < 1, got {0}")]
    BadConstant(Rat),
    #[error("coordinates are 1-based; index 0 found")]
    ZeroIndex,
    #[error("member cap {cap} exceeded while building level {level}")]
    CapExceeded { cap: usize, level: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TsirelsonSpec {
    pub family: RegularFamily,
    pub c: Rat,
}

impl TsirelsonSpec {
    pub fn new(family: RegularFamily, c: Rat) -> Result<TsirelsonSpec, TsirelsonError> {
        if !c.is_positive() || c >= Rat::one() {
            return Err(TsirelsonError::BadConstant(c));
        }
        Ok(TsirelsonSpec { family, c })
    }

    pub fn norm(&self, x: &FinVec) -> Rat {
        tsirelson_norm(x, self)
    }

    /// Norm of `Σ a_i t_{m_i}`.
    pub fn norm_of_combination(&self, coeffs: &[Rat], indices: &[u32]) -> Rat {
        let v = FinVec::from_entries(&Universe::naturals(), indices.iter().copied().zip(coeffs.iter().cloned()));
        tsirelson_norm(&v, self)
    }
}

type NormKey = (TsirelsonSpec, Vec<(IndexId, Rat)>);

thread_local! {
    static NORM_CACHE: RefCell<HashMap<NormKey, Rat>> = RefCell::new(HashMap::new());
    static ORACLE_CACHE: RefCell<HashMap<NormKey, Rat>> = RefCell::new(HashMap::new());
}

/// Clears the per-thread norm caches.
pub fn clear_norm_caches() {
    NORM_CACHE.with(|c| c.borrow_mut().clear());
    ORACLE_CACHE.with(|c| c.borrow_mut().clear());
}

/// Exact `‖x‖_{A,c}`. Coordinates are the (1-based) indices of `x`.
pub fn tsirelson_norm(x: &FinVec, spec: &TsirelsonSpec) -> Rat {
    let abs: Vec<(IndexId, Rat)> = x.entries().iter().map(|(i, v)| (*i, v.abs())).collect();
    assert!(abs.first().map_or(true, |e| e.0 >= 1), "{}", TsirelsonError::ZeroIndex);
    norm_abs(&abs, spec)
}

fn cached(spec: &TsirelsonSpec, v: &[(IndexId, Rat)]) -> Option<Rat> {
    NORM_CACHE.with(|c| c.borrow().get(&(spec.clone(), v.to_vec())).cloned())
}

fn norm_abs(v: &[(IndexId, Rat)], spec: &TsirelsonSpec) -> Rat {
    let s = v.len();
    if s == 0 {
        return Rat::zero();
    }
    if s == 1 {
        return v[0].1.clone();
    }
    if let Some(hit) = cached(spec, v) {
        return hit;
    }
    let pos: Vec<u32> = v.iter().map(|e| e.0).collect();
    // table[i][j - i] = norm of the restriction to support positions i..=j
    let mut table: Vec<Vec<Rat>> = (0..s).map(|i| Vec::with_capacity(s - i)).collect();
    for len in 1..=s {
        for i in 0..=(s - len) {
            let j = i + len - 1;
            let val = if len == 1 {
                v[i].1.clone()
            } else if let Some(hit) = cached(spec, &v[i..=j]) {
                hit
            } else {
                let linf = v[i..=j].iter().map(|e| &e.1).max().unwrap().clone();
                let mut best = Rat::zero();
                let mut mins = Vec::with_capacity(len);
                for t1 in i..j {
                    mins.push(pos[t1]);
                    chains(&table, &pos, spec, t1, j, Rat::zero(), &mut mins, &mut best);
                    mins.pop();
                }
                let val = Rat::max_of(&linf, &(&spec.c * &best));
                NORM_CACHE.with(|c| c.borrow_mut().insert((spec.clone(), v[i..=j].to_vec()), val.clone()));
                val
            };
            table[i].push(val);
        }
    }
    table[0][s - 1].clone()
}

/// Extends an admissible chain of set starts whose last start is `t`.
#[allow(clippy::too_many_arguments)]
fn chains(
    table: &[Vec<Rat>],
    pos: &[u32],
    spec: &TsirelsonSpec,
    t: usize,
    j: usize,
    acc: Rat,
    mins: &mut Vec<u32>,
    best: &mut Rat,
) {
    if mins.len() >= 2 {
        let total = &acc + &table[t][j - t];
        if total > *best {
            *best = total;
        }
    }
    for u in (t + 1)..=j {
        mins.push(pos[u]);
        if spec.family.contains_sorted(mins) {
            let acc2 = &acc + &table[t][u - 1 - t];
            chains(table, pos, spec, u, j, acc2, mins, best);
        }
        mins.pop();
    }
}

/// Independent oracle: maximizes over all successive sequences of nonempty
/// subsets of the support with admissible minima, recursing on the restrictions.
/// Exponential; intended for small supports only.
pub fn brute_force_norm(x: &FinVec, spec: &TsirelsonSpec) -> Rat {
    let v: Vec<(IndexId, Rat)> = x.entries().to_vec();
    oracle(&v, spec)
}

fn oracle(v: &[(IndexId, Rat)], spec: &TsirelsonSpec) -> Rat {
    if v.is_empty() {
        return Rat::zero();
    }
    let key = (spec.clone(), v.to_vec());
    if let Some(hit) = ORACLE_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return hit;
    }
    let linf = v.iter().map(|e| e.1.abs()).max().unwrap();
    let mut best = Rat::zero();
    let mut sets: Vec<Vec<(IndexId, Rat)>> = Vec::new();
    assign(v, 0, spec, &mut sets, &mut best);
    let val = Rat::max_of(&linf, &(&spec.c * &best));
    ORACLE_CACHE.with(|c| c.borrow_mut().insert(key, val.clone()));
    val
}

/// Each support point is skipped, appended to the current set, or opens a new set.
fn assign(
    v: &[(IndexId, Rat)],
    p: usize,
    spec: &TsirelsonSpec,
    sets: &mut Vec<Vec<(IndexId, Rat)>>,
    best: &mut Rat,
) {
    if p == v.len() {
        if sets.len() >= 2 {
            let total: Rat = sets.iter().map(|s| oracle(s, spec)).sum();
            if total > *best {
                *best = total;
            }
        }
        return;
    }
    assign(v, p + 1, spec, sets, best);
    if let Some(last) = sets.last_mut() {
        last.push(v[p].clone());
        assign(v, p + 1, spec, sets, best);
        sets.last_mut().unwrap().pop();
    }
    let mut mins: Vec<u32> = sets.iter().map(|s| s[0].0).collect();
    mins.push(v[p].0);
    if spec.family.contains_sorted(&mins) {
        sets.push(vec![v[p].clone()]);
        assign(v, p + 1, spec, sets, best);
        sets.pop();
    }
}

/// One member of the canonical dual norming set, with its construction trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualMember {
    pub functional: FinVec,
    pub level: u32,
    /// Indices (into the member list) of the constituents; empty on level 0.
    pub parts: Vec<usize>,
}

impl DualMember {
    pub fn min_support(&self) -> u32 {
        self.functional.min_index().unwrap()
    }

    pub fn max_support(&self) -> u32 {
        self.functional.max_index().unwrap()
    }
}

/// `D_0 = {±e*_j}`, `D_{n+1} = {c Σ x*_i : k ≥ 2, successive, admissible minima}`, truncated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualNormingSet {
    pub spec: TsirelsonSpec,
    pub depth: u32,
    pub support_bound: u32,
    pub members: Vec<DualMember>,
    #[serde(skip)]
    index: HashMap<FinVec, usize>,
}

impl DualNormingSet {
    pub fn position(&self, f: &FinVec) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn contains(&self, f: &FinVec) -> bool {
        self.index.contains_key(f)
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.members.iter().enumerate().map(|(i, m)| (m.functional.clone(), i)).collect();
    }

    /// `max_f ⟨f, x⟩`, a lower bound for the norm of `x`.
    pub fn norming_value(&self, x: &FinVec) -> Rat {
        self.members.iter().map(|m| m.functional.dot(x)).max().unwrap_or_else(Rat::zero)
    }

    /// Special decomposition `(r_i, part_i)` of a member: `(1, itself)` on level 0, `(c, x*_i)` above.
    pub fn decomposition(&self, idx: usize) -> Vec<(Rat, usize)> {
        let m = &self.members[idx];
        if m.parts.is_empty() {
            vec![(Rat::one(), idx)]
        } else {
            m.parts.iter().map(|&p| (self.spec.c.clone(), p)).collect()
        }
    }
}

pub fn build_dual_norming_set(
    spec: &TsirelsonSpec,
    depth: u32,
    support_bound: u32,
    cap: usize,
) -> Result<DualNormingSet, TsirelsonError> {
    let support: Vec<u32> = (1..=support_bound).collect();
    build_dual_norming_set_on(spec, depth, &support, cap)
}

/// The same set with every member supported inside `support`.
pub fn build_dual_norming_set_on(
    spec: &TsirelsonSpec,
    depth: u32,
    support: &[u32],
    cap: usize,
) -> Result<DualNormingSet, TsirelsonError> {
    let u = Universe::naturals();
    let mut members: Vec<DualMember> = Vec::new();
    let mut index: HashMap<FinVec, usize> = HashMap::new();
    let support_bound = support.iter().copied().max().unwrap_or(0);
    for &j in support {
        for sign in [1, -1] {
            let f = FinVec::from_entries(&u, [(j, Rat::int(sign))]);
            index.insert(f.clone(), members.len());
            members.push(DualMember { functional: f, level: 0, parts: Vec::new() });
        }
    }
    for level in 1..=depth {
        let snapshot = members.len();
        let mut order: Vec<usize> = (0..snapshot).collect();
        order.sort_by_key(|&i| (members[i].min_support(), i));
        let mut fresh: Vec<DualMember> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut mins: Vec<u32> = Vec::new();
        grow_level(spec, &members, &order, level, &mut stack, &mut mins, &mut |parts| {
            let f = parts
                .iter()
                .fold(FinVec::zero(&u), |acc, &p| acc.add(&members[p].functional))
                .scale(&spec.c);
            if index.contains_key(&f) || fresh.iter().any(|m| m.functional == f) {
                return true;
            }
            fresh.push(DualMember { functional: f, level, parts: parts.to_vec() });
            snapshot + fresh.len() <= cap
        });
        for m in fresh {
            if members.len() >= cap {
                return Err(TsirelsonError::CapExceeded { cap, level });
            }
            index.insert(m.functional.clone(), members.len());
            members.push(m);
        }
    }
    Ok(DualNormingSet { spec: spec.clone(), depth, support_bound, members, index })
}

/// Enumerates successive sequences of at least two earlier members with admissible minima.
/// The callback returns `false` to stop.
fn grow_level(
    spec: &TsirelsonSpec,
    members: &[DualMember],
    order: &[usize],
    level: u32,
    stack: &mut Vec<usize>,
    mins: &mut Vec<u32>,
    emit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let floor = stack.last().map_or(0, |&p| members[p].max_support());
    for &i in order {
        let m = &members[i];
        if m.min_support() <= floor || m.level >= level {
            continue;
        }
        mins.push(m.min_support());
        if spec.family.contains_sorted(mins) {
            stack.push(i);
            if stack.len() >= 2 && !emit(stack) {
                return false;
            }
            if !grow_level(spec, members, order, level, stack, mins, emit) {
                return false;
            }
            stack.pop();
        }
        mins.pop();
    }
    true
}

/// Outcome of a bounded domination search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationCertificate {
    pub verdict: Verdict,
    pub constant: Rat,
    /// Coefficients violating the estimate, when found.
    pub witness: Option<Vec<Rat>>,
    pub witness_lhs: Option<Rat>,
    pub witness_rhs: Option<Rat>,
    /// Number of coefficient vectors tried, per family.
    pub tried: Vec<(String, usize)>,
}

/// Searches for `a` with `dominated(a) > constant · dominating(a)`.
///
/// Coefficient families: unit vectors, sign patterns (all of them up to length
/// 10, else sampled), the extra directions supplied by the caller, and seeded
/// random rational vectors. PASS here is a bounded-search statement only.
pub fn search_domination(
    n: usize,
    dominated: &dyn Fn(&[Rat]) -> Rat,
    dominating: &dyn Fn(&[Rat]) -> Rat,
    constant: &Rat,
    extra: &[Vec<Rat>],
    trial_budget: usize,
    seed: u64,
) -> DominationCertificate {
    let mut tried: Vec<(String, usize)> = Vec::new();
    let check = |a: &[Rat]| -> Option<(Rat, Rat)> {
        let l = dominated(a);
        let r = dominating(a);
        if l > constant * &r {
            Some((l, r))
        } else {
            None
        }
    };
    let fail = |a: Vec<Rat>, (l, r): (Rat, Rat), tried: Vec<(String, usize)>| DominationCertificate {
        verdict: Verdict::Fail,
        constant: constant.clone(),
        witness: Some(a),
        witness_lhs: Some(l),
        witness_rhs: Some(r),
        tried,
    };
    let mut count = 0;
    for i in 0..n {
        let mut a = vec![Rat::zero(); n];
        a[i] = Rat::one();
        count += 1;
        if let Some(w) = check(&a) {
            tried.push(("unit".into(), count));
            return fail(a, w, tried);
        }
    }
    tried.push(("unit".into(), count));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns: Vec<u64> = if n <= 10 {
        (0..(1u64 << n)).collect()
    } else {
        (0..trial_budget.min(1024)).map(|_| rng.gen::<u64>()).collect()
    };
    count = 0;
    for p in patterns {
        let a: Vec<Rat> = (0..n).map(|i| if p >> (i % 64) & 1 == 1 { -Rat::one() } else { Rat::one() }).collect();
        count += 1;
        if let Some(w) = check(&a) {
            tried.push(("signs".into(), count));
            return fail(a, w, tried);
        }
    }
    tried.push(("signs".into(), count));
    count = 0;
    for a in extra {
        count += 1;
        if let Some(w) = check(a) {
            tried.push(("norming".into(), count));
            return fail(a.clone(), w, tried);
        }
    }
    tried.push(("norming".into(), count));
    count = 0;
    for _ in 0..trial_budget {
        let a: Vec<Rat> = (0..n).map(|_| Rat::new(rng.gen_range(-8..=8), rng.gen_range(1..=8))).collect();
        count += 1;
        if let Some(w) = check(&a) {
            tried.push(("random".into(), count));
            return fail(a, w, tried);
        }
    }
    tried.push(("random".into(), count));
    DominationCertificate {
        verdict: Verdict::PassAtBudget,
        constant: constant.clone(),
        witness: None,
        witness_lhs: None,
        witness_rhs: None,
        tried,
    }
}

/// Is `(z_i)` `C`-dominated by `(t_{m_i})`: `‖Σ a_i z_i‖_T ≤ C ‖Σ a_i t_{m_i}‖_T`?
/// The blocks `z_i` are vectors of `T` itself.
pub fn certify_domination(
    lhs: &[FinVec],
    rhs_indices: &[u32],
    spec: &TsirelsonSpec,
    constant: &Rat,
    trial_budget: usize,
) -> DominationCertificate {
    let n = lhs.len().min(rhs_indices.len());
    let u = Universe::naturals();
    let dominated = |a: &[Rat]| {
        let v = lhs.iter().zip(a).fold(FinVec::zero(&u), |acc, (z, c)| acc.axpy(c, z));
        spec.norm(&v)
    };
    let dominating = |a: &[Rat]| spec.norm_of_combination(a, &rhs_indices[..n]);
    search_domination(n, &dominated, &dominating, constant, &[], trial_budget, 0x7451)
}

/// Exact dual norm `‖a‖_{T*} = max{a(x) : ‖x‖ ≤ 1}`.
///
/// On the support `F` of `a` the unit ball of `T` is cut out by the positive
/// members of the canonical norming set supported in `F`; only pointwise
/// maximal members are kept, then a linear program gives the value.
pub fn tsirelson_dual_norm(a: &FinVec, spec: &TsirelsonSpec) -> Rat {
    let pos: Vec<u32> = a.support().collect();
    let k = pos.len();
    if k == 0 {
        return Rat::zero();
    }
    // Maximal positive members by support mask, built over increasing support size.
    let mut by_mask: HashMap<u32, Vec<Vec<Rat>>> = HashMap::new();
    let mut masks: Vec<u32> = (1..(1u32 << k)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let elems: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let mut found: Vec<Vec<Rat>> = Vec::new();
        if elems.len() == 1 {
            let mut v = vec![Rat::zero(); k];
            v[elems[0]] = Rat::one();
            found.push(v);
        } else {
            // Cut points between consecutive elements; at least one cut.
            let p = elems.len();
            for cuts in 1u32..(1 << (p - 1)) {
                let mut groups: Vec<u32> = Vec::new();
                let mut cur = 0u32;
                for (idx, &e) in elems.iter().enumerate() {
                    cur |= 1 << e;
                    if idx + 1 == p || cuts >> idx & 1 == 1 {
                        groups.push(cur);
                        cur = 0;
                    }
                }
                let mins: Vec<u32> = groups.iter().map(|g| pos[g.trailing_zeros() as usize]).collect();
                if !spec.family.contains_sorted(&mins) {
                    continue;
                }
                let mut acc: Vec<Vec<Rat>> = vec![vec![Rat::zero(); k]];
                for g in &groups {
                    let parts = &by_mask[g];
                    let mut next = Vec::with_capacity(acc.len() * parts.len());
                    for base in &acc {
                        for part in parts {
                            next.push(base.iter().zip(part).map(|(x, y)| x + &(&spec.c * y)).collect());
                        }
                    }
                    acc = next;
                }
                found.extend(acc);
            }
        }
        by_mask.insert(mask, maximal_only(found));
    }
    let all: Vec<Vec<Rat>> = maximal_only(by_mask.into_values().flatten().collect());
    let obj: Vec<Rat> = a.entries().iter().map(|(_, v)| v.abs()).collect();
    let b = vec![Rat::one(); all.len()];
    crate::simplex::maximize(&obj, &all, &b).expect("the unit ball of T is bounded")
}

fn maximal_only(mut v: Vec<Vec<Rat>>) -> Vec<Vec<Rat>> {
    v.sort();
    v.dedup();
    let dominated = |x: &Vec<Rat>, y: &Vec<Rat>| x != y && x.iter().zip(y).all(|(a, b)| a <= b);
    let keep: Vec<bool> = v.iter().map(|x| !v.iter().any(|y| dominated(x, y))).collect();
    v.into_iter().zip(keep).filter_map(|(x, k)| k.then_some(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn s1half() -> TsirelsonSpec {
        TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 2)).unwrap()
    }

    fn nat(entries: &[(u32, Rat)]) -> FinVec {
        FinVec::from_entries(&Universe::naturals(), entries.iter().cloned())
    }

    #[test]
    fn small_norms() {
        let t = s1half();
        assert_eq!(t.norm(&nat(&[(1, Rat::one())])), Rat::one());
        assert_eq!(t.norm(&nat(&[(1, Rat::one()), (2, Rat::one())])), Rat::one());
        assert_eq!(t.norm(&nat(&[(3, Rat::one()), (4, Rat::one()), (5, Rat::one())])), q(3, 2));
        assert_eq!(brute_force_norm(&nat(&[(3, Rat::one()), (4, Rat::one()), (5, Rat::one())]), &t), q(3, 2));
    }

    #[test]
    fn rejects_bad_constant() {
        assert!(TsirelsonSpec::new(RegularFamily::schreier_n(1), Rat::one()).is_err());
    }

    #[test]
    fn dual_set_levels() {
        let t = s1half();
        let d0 = build_dual_norming_set(&t, 0, 3, 1000).unwrap();
        assert_eq!(d0.members.len(), 6);
        let d1 = build_dual_norming_set(&t, 1, 3, 1000).unwrap();
        assert!(d1.contains(&nat(&[(2, q(1, 2)), (3, q(1, 2))])));
        assert!(!d1.contains(&nat(&[(1, q(1, 2)), (2, q(1, 2))])));
    }

    #[test]
    fn domination_examples() {
        let t = s1half();
        let idx = [2u32, 4, 6];
        let basis: Vec<FinVec> = idx.iter().map(|&i| nat(&[(i, Rat::one())])).collect();
        let c = certify_domination(&basis, &idx, &t, &Rat::one(), 50);
        assert_eq!(c.verdict, Verdict::PassAtBudget);
        let doubled: Vec<FinVec> = basis.iter().map(|b| b.scale(&Rat::int(2))).collect();
        let c = certify_domination(&doubled, &idx, &t, &Rat::one(), 50);
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.witness.unwrap(), vec![Rat::one(), Rat::zero(), Rat::zero()]);
    }

    #[test]
    fn dual_norm_values() {
        let t = s1half();
        let u = Universe::naturals();
        let f = |e: &[(u32, i64)]| FinVec::from_entries(&u, e.iter().map(|&(i, v)| (i, Rat::int(v))));
        assert_eq!(tsirelson_dual_norm(&f(&[(1, 1), (2, 1)]), &t), q(2, 1));
        assert_eq!(tsirelson_dual_norm(&f(&[(2, 1), (3, -1)]), &t), q(2, 1));
        assert_eq!(tsirelson_dual_norm(&f(&[(2, 1), (3, 1), (4, 1)]), &t), q(3, 1));
        assert_eq!(tsirelson_dual_norm(&f(&[(5, 3)]), &t), q(3, 1));
        // Pairing never exceeds the product of norms, on a grid of primal vectors.
        let a = FinVec::from_entries(&u, [(2, q(1, 2)), (3, q(1, 1)), (5, q(-1, 3))]);
        let d = tsirelson_dual_norm(&a, &t);
        for m in 0..27u32 {
            let x = FinVec::from_entries(
                &u,
                [2u32, 3, 5].iter().enumerate().map(|(k, &i)| (i, Rat::int((m / 3u32.pow(k as u32) % 3) as i64 - 1))),
            );
            assert!(a.dot(&x).abs() <= &d * &t.norm(&x));
        }
    }
}
