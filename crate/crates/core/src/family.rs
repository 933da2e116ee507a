//! Regular families of finite subsets of ℕ: Schreier families below ω^ω and
//! the closures built from them.
//!
//! Schreier recursion used throughout:
//! - `S_0` holds the sets with at most one element;
//! - `F ∈ S_{β+1}` iff `F = F_1 ∪ … ∪ F_n` with `n ≤ min F`, successive `F_i ∈ S_β`;
//! - for a limit `α = γ + ω^k` (`k ≥ 1`), `F ∈ S_α` iff `F ∈ S_{γ + ω^{k-1}·min F}`.
//!
//! So `S_ω = {F : F ∈ S_{min F}}`. Membership in a successor family is decided by
//! the greedy longest-prefix split, which is optimal for hereditary families.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Ordinal below ω^ω in Cantor normal form: terms `ω^k·m`, exponents strictly decreasing, `m ≥ 1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ordinal(Vec<(u32, u32)>);

impl Ordinal {
    pub fn zero() -> Ordinal {
        Ordinal(Vec::new())
    }

    pub fn finite(m: u32) -> Ordinal {
        Ordinal::from_terms(vec![(0, m)])
    }

    pub fn omega() -> Ordinal {
        Ordinal::from_terms(vec![(1, 1)])
    }

    /// Normalizes arbitrary terms (ordinal addition absorbs smaller leading terms).
    pub fn from_terms(terms: Vec<(u32, u32)>) -> Ordinal {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for (k, m) in terms {
            if m == 0 {
                continue;
            }
            while let Some(&(lk, _)) = out.last() {
                if lk < k {
                    out.pop();
                } else {
                    break;
                }
            }
            match out.last_mut() {
                Some((lk, lm)) if *lk == k => *lm += m,
                _ => out.push((k, m)),
            }
        }
        Ordinal(out)
    }

    pub fn terms(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn split_last(&self) -> Option<(Vec<(u32, u32)>, u32)> {
        let (&(k, m), rest) = self.0.split_last()?;
        let mut prefix = rest.to_vec();
        if m > 1 {
            prefix.push((k, m - 1));
        }
        Some((prefix, k))
    }

    /// `Some(β)` when `self = β + 1`.
    pub fn predecessor(&self) -> Option<Ordinal> {
        match self.split_last() {
            Some((prefix, 0)) => Some(Ordinal(prefix)),
            _ => None,
        }
    }

    /// `α[n] = γ + ω^{k-1}·n` for a limit `α = γ + ω^k`.
    pub fn fundamental(&self, n: u32) -> Option<Ordinal> {
        match self.split_last() {
            Some((mut prefix, k)) if k > 0 => {
                prefix.push((k - 1, n));
                Some(Ordinal::from_terms(prefix))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(k, m)| match (k, m) {
                (0, m) => m.to_string(),
                (1, 1) => "w".into(),
                (1, m) => format!("w*{m}"),
                (k, 1) => format!("w^{k}"),
                (k, m) => format!("w^{k}*{m}"),
            })
            .collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("cannot parse family descriptor {0:?}")]
    Parse(String),
    #[error("blocks are not successive at position {0}")]
    NotSuccessive(usize),
    #[error("empty block at position {0}")]
    EmptyBlock(usize),
}

impl FromStr for Ordinal {
    type Err = FamilyError;

    /// Accepts sums like `w^2*3+w+4`.
    fn from_str(s: &str) -> Result<Ordinal, FamilyError> {
        let err = || FamilyError::Parse(s.to_string());
        let mut terms = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            let (base, m) = match part.split_once('*') {
                Some((b, m)) => (b.trim(), m.trim().parse::<u32>().map_err(|_| err())?),
                None => (part, 1),
            };
            if base.starts_with('w') {
                let k = match base.strip_prefix("w^") {
                    Some(k) => k.parse::<u32>().map_err(|_| err())?,
                    None if base == "w" => 1,
                    None => return Err(err()),
                };
                terms.push((k, m));
            } else {
                let n = base.parse::<u32>().map_err(|_| err())?;
                terms.push((0, n * m));
            }
        }
        Ok(Ordinal::from_terms(terms))
    }
}

/// Finite description of a regular family.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegularFamily {
    /// The Schreier family `S_α`.
    Schreier { cnf: Ordinal },
    /// `{{n} ∪ B₁ ∪ B₂ : n ∈ ℕ, B₁, B₂ ∈ base} ∪ {∅}`.
    SingletonPlusPair { base: Box<RegularFamily> },
    /// The smallest regular family containing the listed sets.
    ExplicitFinite { sets: Vec<Vec<u32>> },
    /// Union of families.
    MaxUnion { parts: Vec<RegularFamily> },
}

impl fmt::Debug for RegularFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegularFamily::Schreier { cnf } => write!(f, "schreier:{cnf}"),
            RegularFamily::SingletonPlusPair { base } => write!(f, "pair({base:?})"),
            RegularFamily::ExplicitFinite { sets } => write!(f, "explicit({sets:?})"),
            RegularFamily::MaxUnion { parts } => write!(f, "union({parts:?})"),
        }
    }
}

impl FromStr for RegularFamily {
    type Err = FamilyError;

    /// `schreier:<ordinal>` or `pair:<ordinal>` (the singleton-plus-pair closure of a Schreier family).
    fn from_str(s: &str) -> Result<RegularFamily, FamilyError> {
        let s = s.trim();
        if let Some(o) = s.strip_prefix("schreier:") {
            return Ok(RegularFamily::schreier(o.parse()?));
        }
        if let Some(o) = s.strip_prefix("pair:") {
            return Ok(RegularFamily::SingletonPlusPair { base: Box::new(RegularFamily::schreier(o.parse()?)) });
        }
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|_| FamilyError::Parse(s.to_string()));
        }
        Err(FamilyError::Parse(s.to_string()))
    }
}

thread_local! {
    static SCHREIER_MEMO: RefCell<HashMap<(Ordinal, Vec<u32>), bool>> = RefCell::new(HashMap::new());
    static PAIR_MEMO: RefCell<HashMap<(RegularFamily, Vec<u32>), bool>> = RefCell::new(HashMap::new());
}

fn sorted_set(f: &[u32]) -> Vec<u32> {
    let mut v = f.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn schreier_member(alpha: &Ordinal, f: &[u32]) -> bool {
    if f.len() <= 1 {
        return true;
    }
    if alpha.is_zero() {
        return false;
    }
    // Finite orders have a closed form for the first level.
    if alpha.terms() == [(0, 1)] {
        return f.len() as u32 <= f[0];
    }
    let key = (alpha.clone(), f.to_vec());
    if let Some(hit) = SCHREIER_MEMO.with(|m| m.borrow().get(&key).copied()) {
        return hit;
    }
    let ans = if let Some(beta) = alpha.predecessor() {
        let mut pieces = 0u32;
        let mut start = 0;
        let mut ok = true;
        while start < f.len() {
            pieces += 1;
            if pieces > f[0] {
                ok = false;
                break;
            }
            let mut end = start + 1;
            while end < f.len() && schreier_member(&beta, &f[start..end + 1]) {
                end += 1;
            }
            start = end;
        }
        ok
    } else {
        let a = alpha.fundamental(f[0]).expect("limit ordinal");
        schreier_member(&a, f)
    };
    SCHREIER_MEMO.with(|m| m.borrow_mut().insert(key, ans));
    ans
}

fn pair_member(fam: &RegularFamily, base: &RegularFamily, f: &[u32]) -> bool {
    if f.len() <= 1 {
        return true;
    }
    let key = (fam.clone(), f.to_vec());
    if let Some(hit) = PAIR_MEMO.with(|m| m.borrow().get(&key).copied()) {
        return hit;
    }
    let mut ans = false;
    'outer: for skip in 0..f.len() {
        let rest: Vec<u32> = f.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, x)| *x).collect();
        let r = rest.len();
        // Fix the first element of `rest` in B₁ to halve the search.
        for mask in 0u64..(1u64 << r.saturating_sub(1)) {
            let mut b1 = vec![rest[0]];
            let mut b2 = Vec::new();
            for (i, x) in rest.iter().enumerate().skip(1) {
                if mask >> (i - 1) & 1 == 1 {
                    b2.push(*x);
                } else {
                    b1.push(*x);
                }
            }
            if base.contains_sorted(&b1) && base.contains_sorted(&b2) {
                ans = true;
                break 'outer;
            }
        }
    }
    PAIR_MEMO.with(|m| m.borrow_mut().insert(key, ans));
    ans
}

impl RegularFamily {
    pub fn schreier(cnf: Ordinal) -> RegularFamily {
        RegularFamily::Schreier { cnf }
    }

    /// `S_n` for finite `n`.
    pub fn schreier_n(n: u32) -> RegularFamily {
        RegularFamily::schreier(Ordinal::finite(n))
    }

    /// Membership; `f` need not be sorted.
    pub fn is_member(&self, f: &[u32]) -> bool {
        self.contains_sorted(&sorted_set(f))
    }

    /// Membership for a strictly increasing slice.
    pub fn contains_sorted(&self, f: &[u32]) -> bool {
        debug_assert!(f.windows(2).all(|w| w[0] < w[1]));
        if f.len() <= 1 {
            return true;
        }
        match self {
            RegularFamily::Schreier { cnf } => schreier_member(cnf, f),
            RegularFamily::SingletonPlusPair { base } => pair_member(self, base, f),
            RegularFamily::ExplicitFinite { sets } => sets.iter().any(|l| {
                let l = sorted_set(l);
                f.len() <= l.len() && f.iter().zip(l.iter()).all(|(a, b)| a >= b)
            }),
            RegularFamily::MaxUnion { parts } => parts.iter().any(|p| p.contains_sorted(f)),
        }
    }

    /// Whether successive blocks have their minima in the family.
    pub fn is_admissible(&self, blocks: &[Vec<u32>]) -> Result<bool, FamilyError> {
        let mut mins = Vec::with_capacity(blocks.len());
        let mut last_max: Option<u32> = None;
        for (i, b) in blocks.iter().enumerate() {
            let b = sorted_set(b);
            let (&lo, &hi) = match (b.first(), b.last()) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => return Err(FamilyError::EmptyBlock(i)),
            };
            if let Some(m) = last_max {
                if lo <= m {
                    return Err(FamilyError::NotSuccessive(i));
                }
            }
            last_max = Some(hi);
            mins.push(lo);
        }
        Ok(self.contains_sorted(&mins))
    }

    /// All members contained in `[1, n]`, in lexicographic order of their sorted lists.
    pub fn members_within(&self, n: u32) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new()];
        let mut cur = Vec::new();
        self.extend_members(&mut cur, 1, n, &mut out);
        out
    }

    fn extend_members(&self, cur: &mut Vec<u32>, from: u32, n: u32, out: &mut Vec<Vec<u32>>) {
        for x in from..=n {
            cur.push(x);
            if self.contains_sorted(cur) {
                out.push(cur.clone());
                self.extend_members(cur, x + 1, n, out);
            }
            cur.pop();
        }
    }
}

/// `|A| = |B|` and, after sorting, `b_i ≥ a_i`.
pub fn is_spread(a: &[u32], b: &[u32]) -> bool {
    let (a, b) = (sorted_set(a), sorted_set(b));
    a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| y >= x)
}

/// `g` is a proper initial segment of `f`: `f ∩ [1, max g] = g` and `f` is longer.
pub fn is_proper_initial_segment(g: &[u32], f: &[u32]) -> bool {
    let (g, f) = (sorted_set(g), sorted_set(f));
    if g.is_empty() || f.len() <= g.len() {
        return false;
    }
    f[..g.len()] == g[..] && f[g.len()] > *g.last().unwrap()
}

/// Finite-scale compactness surrogate: true iff no nonempty member is a proper
/// initial segment of another member lying in `[1, bound]`.
pub fn chain_compactness_probe(members: &[Vec<u32>], bound: u32) -> bool {
    let sets: Vec<Vec<u32>> = members.iter().map(|m| sorted_set(m)).collect();
    !sets.iter().any(|g| {
        sets.iter().any(|f| f.last().is_some_and(|&m| m <= bound) && is_proper_initial_segment(g, f))
    })
}

/// Length of the longest chain `G_1 ⊏ G_2 ⊏ …` of proper initial segments among the members.
pub fn longest_initial_segment_chain(members: &[Vec<u32>]) -> usize {
    let mut sets: Vec<Vec<u32>> = members.iter().map(|m| sorted_set(m)).filter(|s| !s.is_empty()).collect();
    sets.sort();
    sets.dedup();
    sets.sort_by_key(|s| s.len());
    let mut best = vec![1usize; sets.len()];
    for i in 0..sets.len() {
        for j in 0..i {
            if is_proper_initial_segment(&sets[j], &sets[i]) {
                best[i] = best[i].max(best[j] + 1);
            }
        }
    }
    best.into_iter().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1() -> RegularFamily {
        RegularFamily::schreier_n(1)
    }

    #[test]
    fn schreier_one() {
        assert!(s1().is_member(&[1]));
        assert!(!s1().is_member(&[1, 2]));
        assert!(s1().is_member(&[3, 5, 7]));
        assert!(s1().is_member(&[]));
    }

    #[test]
    fn schreier_two_and_omega() {
        let s2 = RegularFamily::schreier_n(2);
        // Greedy pieces {2,3},{4,5,6,7},{8,9}: three pieces exceed min 2.
        assert!(s2.is_member(&[2, 3, 4, 5]));
        assert!(s2.is_member(&[2, 3, 4, 5, 6]));
        assert!(!s2.is_member(&[2, 3, 4, 5, 6, 7, 8, 9]));
        assert!(!s2.is_member(&[1, 2]));
        let w = RegularFamily::schreier(Ordinal::omega());
        assert!(w.is_member(&[3, 4, 5, 6, 7, 8]));
        assert!(!w.is_member(&[1, 2]));
        assert!(w.is_member(&[2, 3, 4, 5]));
    }

    #[test]
    fn admissibility() {
        assert!(s1().is_admissible(&[vec![2], vec![3]]).unwrap());
        assert!(!s1().is_admissible(&[vec![1], vec![2]]).unwrap());
        assert!(s1().is_admissible(&[vec![3, 4], vec![5], vec![9, 10]]).unwrap());
        assert_eq!(s1().is_admissible(&[vec![3, 4], vec![4]]), Err(FamilyError::NotSuccessive(1)));
    }

    #[test]
    fn spreads() {
        assert!(is_spread(&[1, 2], &[3, 7]));
        assert!(!is_spread(&[2, 5], &[2, 4]));
        assert!(is_spread(&[], &[]));
    }

    #[test]
    fn probe() {
        assert!(!chain_compactness_probe(&[vec![1], vec![1, 3]], 5));
        assert!(chain_compactness_probe(&[vec![1], vec![2, 3]], 5));
        assert_eq!(longest_initial_segment_chain(&[vec![1], vec![1, 3], vec![1, 3, 4], vec![2]]), 3);
    }

    #[test]
    fn ordinal_parsing() {
        let o: Ordinal = "w^2*3+w+4".parse().unwrap();
        assert_eq!(o.terms(), &[(2, 3), (1, 1), (0, 4)]);
        assert_eq!(o.to_string(), "w^2*3+w+4");
        assert_eq!(Ordinal::from_terms(vec![(0, 2), (1, 1)]), Ordinal::omega());
        assert_eq!(Ordinal::finite(3).predecessor(), Some(Ordinal::finite(2)));
        assert_eq!(Ordinal::omega().fundamental(5), Some(Ordinal::finite(5)));
        let f: RegularFamily = "schreier:1".parse().unwrap();
        assert_eq!(f, s1());
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"kind":"schreier","cnf":[[0,1]]}"#);
    }

    #[test]
    fn explicit_and_pair() {
        let e = RegularFamily::ExplicitFinite { sets: vec![vec![2, 4, 6]] };
        assert!(e.is_member(&[3, 9]));
        assert!(!e.is_member(&[1, 9]));
        assert!(!e.is_member(&[2, 4, 6, 8]));
        let p = RegularFamily::SingletonPlusPair { base: Box::new(s1()) };
        assert!(p.is_member(&[1, 2]));
        assert!(p.is_member(&[1, 2, 3, 4, 5]));
        assert!(p.is_member(&[1, 2, 3, 4]));
        assert!(!p.is_member(&[1, 2, 3, 4, 5, 6, 7, 8]));
    }
}
