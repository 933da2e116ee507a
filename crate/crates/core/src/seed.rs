//! Seed spaces: a Banach space with a bimonotone FDD given by computable data.
//!
//! Each block `E_i` is a polytope-normed space described by a finite
//! 1-norming set of functionals, so primal norms are finite maxima; the
//! vertices of its unit ball give the dual norms the same way. Blocks are
//! glued by a sup (c₀) or sum (ℓ₁) outer norm, both bimonotone. Templates
//! repeat periodically, so the FDD is infinite. A Tsirelson seed `T_{A,c}`
//! with one-dimensional blocks is also available.
//!
//! Coordinates of block `i` (1-based) and local index `k` are encoded as
//! `(i << 6) | k`, so index order is block order.

use serde::{Deserialize, Serialize};

use crate::rat::Rat;
use crate::tsirelson::{tsirelson_dual_norm, TsirelsonSpec};
use crate::vector::{FinVec, IndexId, Universe};

pub const SEED_SCHEMA: &str = "bdspace/seed/v1";
const LOCAL_BITS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeedError {
    #[error("parameter violation: {0}")]
    Parameter(String),
    #[error("block template {0}: {1}")]
    Template(String, String),
    #[error("schema tag {0:?} is not {SEED_SCHEMA}")]
    Schema(String),
}

/// One block space `E`: `‖x‖ = max_f |f(x)|` over `norming`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTemplate {
    pub name: String,
    pub dim: u32,
    pub norming: Vec<Vec<Rat>>,
    /// Vertices of the unit ball (up to sign); derived when omitted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<Vec<Rat>>,
    /// Finite subset of the dual unit sphere used as the net; defaults to `±norming`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dual_net: Vec<Vec<Rat>>,
}

fn dotv(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves a square system exactly; `None` when singular.
fn solve(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] * &inv;
                for k in col..n {
                    let t = &f * &a[col][k];
                    a[r][k] -= &t;
                }
                let t = &f * &b[col];
                b[r] -= &t;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Keeps one of `v`, `-v`: the one whose first nonzero entry is positive.
fn canonical_sign(v: Vec<Rat>) -> Vec<Rat> {
    match v.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => v.iter().map(|y| -y).collect(),
        _ => v,
    }
}

/// Vertices (up to sign) of `{x : |f(x)| ≤ 1 for f in norming}` by exact enumeration.
pub fn polytope_vertices(norming: &[Vec<Rat>], dim: usize) -> Vec<Vec<Rat>> {
    let mut signed: Vec<Vec<Rat>> = Vec::new();
    for f in norming {
        signed.push(f.clone());
        signed.push(f.iter().map(|x| -x).collect());
    }
    let mut out: Vec<Vec<Rat>> = Vec::new();
    for combo in combinations(signed.len(), dim) {
        let a: Vec<Vec<Rat>> = combo.iter().map(|&i| signed[i].clone()).collect();
        let Some(x) = solve(a, vec![Rat::one(); dim]) else { continue };
        if norming.iter().all(|f| dotv(f, &x).abs() <= Rat::one()) {
            let x = canonical_sign(x);
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    out.sort();
    out
}

impl BlockTemplate {
    pub fn scalar() -> BlockTemplate {
        BlockTemplate::new("R", 1, vec![vec![Rat::one()]])
    }

    pub fn linf(d: u32) -> BlockTemplate {
        let norming = (0..d)
            .map(|j| (0..d).map(|k| if k == j { Rat::one() } else { Rat::zero() }).collect())
            .collect();
        BlockTemplate::new(&format!("linf{d}"), d, norming)
    }

    pub fn l1(d: u32) -> BlockTemplate {
        let norming = (0..(1u32 << (d - 1)))
            .map(|m| {
                (0..d)
                    .map(|k| if k > 0 && (m >> (k - 1)) & 1 == 1 { -Rat::one() } else { Rat::one() })
                    .collect()
            })
            .collect();
        BlockTemplate::new(&format!("l1_{d}"), d, norming)
    }

    pub fn new(name: &str, dim: u32, norming: Vec<Vec<Rat>>) -> BlockTemplate {
        let mut t = BlockTemplate { name: name.to_string(), dim, norming, vertices: Vec::new(), dual_net: Vec::new() };
        t.complete();
        t
    }

    /// Fills in derived vertices and the default net.
    pub fn complete(&mut self) {
        if self.vertices.is_empty() {
            self.vertices = polytope_vertices(&self.norming, self.dim as usize);
        }
        if self.dual_net.is_empty() {
            let mut net: Vec<Vec<Rat>> = Vec::new();
            for f in &self.norming {
                for s in [Rat::one(), -Rat::one()] {
                    let g: Vec<Rat> = f.iter().map(|x| x * &s).collect();
                    if !net.contains(&g) {
                        net.push(g);
                    }
                }
            }
            self.dual_net = net;
        }
    }

    pub fn norm(&self, x: &[Rat]) -> Rat {
        self.norming.iter().map(|f| dotv(f, x).abs()).max().unwrap_or_else(Rat::zero)
    }

    pub fn dual_norm(&self, f: &[Rat]) -> Rat {
        self.vertices.iter().map(|v| dotv(f, v).abs()).max().unwrap_or_else(Rat::zero)
    }

    pub fn validate(&self) -> Result<(), SeedError> {
        let err = |m: &str| SeedError::Template(self.name.clone(), m.to_string());
        if self.dim == 0 || self.dim > (1 << LOCAL_BITS) {
            return Err(err("dimension out of range"));
        }
        let d = self.dim as usize;
        if self.norming.iter().chain(&self.vertices).chain(&self.dual_net).any(|v| v.len() != d) {
            return Err(err("vector of wrong length"));
        }
        if self.vertices.is_empty() {
            return Err(err("unbounded or empty unit ball"));
        }
        for v in &self.vertices {
            if self.norm(v) != Rat::one() {
                return Err(err("a vertex does not have norm one"));
            }
        }
        for f in self.norming.iter().chain(&self.dual_net) {
            if self.dual_norm(f) != Rat::one() {
                return Err(err("a norming or net functional does not have dual norm one"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterNorm {
    /// `‖x‖ = max_i ‖x_i‖`; the dual is the ℓ₁-sum.
    Sup,
    /// `‖x‖ = Σ_i ‖x_i‖`; the dual is the sup-sum.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedKind {
    Blocks { templates: Vec<BlockTemplate>, outer: OuterNorm },
    Tsirelson { spec: TsirelsonSpec },
}

/// `ε_i = first · ratio^{i-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsRule {
    pub first: Rat,
    pub ratio: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpace {
    pub schema: String,
    #[serde(flatten)]
    pub kind: SeedKind,
    pub c: Rat,
    pub eps: Rat,
    pub eps_rule: EpsRule,
    /// Coefficients allowed in the net combinations; a subset of every `R_i`, must contain 1.
    pub generators: Vec<Rat>,
    /// Use the 1-unconditional variant (arbitrary finite supports, no `1/(1+ε/4)` factor).
    #[serde(default)]
    pub unconditional: bool,
}

impl SeedSpace {
    pub fn blocks(templates: Vec<BlockTemplate>, outer: OuterNorm) -> SeedSpace {
        SeedSpace {
            schema: SEED_SCHEMA.to_string(),
            kind: SeedKind::Blocks { templates, outer },
            c: Rat::new(1, 16),
            eps: Rat::new(1, 32),
            eps_rule: EpsRule { first: Rat::new(1, 512), ratio: Rat::new(1, 4) },
            generators: vec![Rat::one(), Rat::new(1, 64)],
            unconditional: false,
        }
    }

    /// Blocks `ℝ`, `ℓ∞²`, `ℓ₁²` repeated, glued by the ℓ₁-sum.
    pub fn three_block() -> SeedSpace {
        SeedSpace::blocks(
            vec![BlockTemplate::scalar(), BlockTemplate::linf(2), BlockTemplate::l1(2)],
            OuterNorm::Sum,
        )
    }

    /// `c₀` with one-dimensional blocks and a single generator.
    pub fn scalar_c0() -> SeedSpace {
        let mut s = SeedSpace::blocks(vec![BlockTemplate::scalar()], OuterNorm::Sup);
        s.generators = vec![Rat::one()];
        s
    }

    /// `T_{A,c}` with its canonical dual norming set.
    pub fn tsirelson(spec: TsirelsonSpec) -> SeedSpace {
        let mut s = SeedSpace::blocks(Vec::new(), OuterNorm::Sup);
        s.c = spec.c.clone();
        s.kind = SeedKind::Tsirelson { spec };
        s.unconditional = true;
        s.generators = vec![Rat::one()];
        s
    }

    pub fn from_json(text: &str) -> Result<SeedSpace, SeedError> {
        let mut s: SeedSpace =
            serde_json::from_str(text).map_err(|e| SeedError::Parameter(format!("seed JSON: {e}")))?;
        if s.schema != SEED_SCHEMA {
            return Err(SeedError::Schema(s.schema));
        }
        if let SeedKind::Blocks { templates, .. } = &mut s.kind {
            for t in templates.iter_mut() {
                t.complete();
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("seed serializes")
    }

    pub fn is_tsirelson(&self) -> bool {
        matches!(self.kind, SeedKind::Tsirelson { .. })
    }

    pub fn tsirelson_spec(&self) -> Option<&TsirelsonSpec> {
        match &self.kind {
            SeedKind::Tsirelson { spec } => Some(spec),
            _ => None,
        }
    }

    /// Checks the parameter constraints on `c`, `ε`, `(ε_i)` and the nets.
    pub fn validate(&self) -> Result<(), SeedError> {
        let p = |m: String| Err(SeedError::Parameter(m));
        let sixteenth = Rat::new(1, 16);
        if self.is_tsirelson() {
            if !(self.c.is_positive() && self.c < Rat::one()) {
                return p(format!("c = {} must lie in (0, 1)", self.c));
            }
        } else if !(self.c.is_positive() && self.c <= sixteenth) {
            return p(format!("c = {} must satisfy 0 < c ≤ 1/16", self.c));
        }
        if !(self.eps.is_positive() && self.eps < self.c) {
            return p(format!("ε = {} must satisfy 0 < ε < c", self.eps));
        }
        let EpsRule { first, ratio } = &self.eps_rule;
        if !first.is_positive() || !ratio.is_positive() || *ratio >= Rat::one() {
            return p("ε_i rule needs ε_1 > 0 and 0 < ratio < 1".into());
        }
        let total = first / (Rat::one() - ratio);
        if total >= &self.eps / Rat::int(8) {
            return p(format!("Σ ε_i = {} is not below ε/8 = {}", total, &self.eps / Rat::int(8)));
        }
        // Σ_{i>n} ε_i = ε_n · ratio/(1 - ratio) must stay below ε_n / 2.
        if ratio / (Rat::one() - ratio) >= Rat::new(1, 2) {
            return p(format!("tail sums Σ_(i>n) ε_i are not below ε_n/2 for ratio {ratio}"));
        }
        if !self.generators.contains(&Rat::one()) {
            return p("generator coefficients must contain 1".into());
        }
        if self.generators.iter().any(|g| !g.is_positive() || *g > Rat::one()) {
            return p("generator coefficients must lie in (0, 1]".into());
        }
        if let SeedKind::Blocks { templates, .. } = &self.kind {
            if templates.is_empty() {
                return p("no block templates".into());
            }
            for t in templates {
                t.validate()?;
            }
        }
        Ok(())
    }

    pub fn universe(&self) -> Universe {
        Universe::new("X")
    }

    pub fn template(&self, block: u32) -> Option<&BlockTemplate> {
        match &self.kind {
            SeedKind::Blocks { templates, .. } => Some(&templates[(block as usize - 1) % templates.len()]),
            SeedKind::Tsirelson { .. } => None,
        }
    }

    pub fn dim(&self, block: u32) -> u32 {
        self.template(block).map_or(1, |t| t.dim)
    }

    pub fn coord(block: u32, local: u32) -> IndexId {
        (block << LOCAL_BITS) | local
    }

    pub fn block_of(coord: IndexId) -> u32 {
        coord >> LOCAL_BITS
    }

    pub fn local_of(coord: IndexId) -> u32 {
        coord & ((1 << LOCAL_BITS) - 1)
    }

    pub fn eps_i(&self, i: u32) -> Rat {
        &self.eps_rule.first * self.eps_rule.ratio.pow(i - 1)
    }

    /// Denominator of the dyadic net `R_i = {k/K_i : 1 ≤ k ≤ K_i}`, spacing at most `ε_i/8`.
    pub fn net_denominator(&self, i: u32) -> i64 {
        let target = Rat::int(8) / self.eps_i(i);
        let mut k: i64 = 1;
        while Rat::int(k) < target {
            k *= 2;
        }
        k
    }

    pub fn in_net(&self, r: &Rat, i: u32) -> bool {
        let k = Rat::int(self.net_denominator(i));
        r.is_positive() && *r <= Rat::one() && (r * &k).is_integer()
    }

    /// Smallest net point `r ∈ R_i` with `r ≥ s - ε_i/4`.
    pub fn round_to_net(&self, s: &Rat, i: u32) -> Rat {
        let k = Rat::int(self.net_denominator(i));
        let lo = s - self.eps_i(i) / Rat::int(4);
        let r = (&lo * &k).ceil() / &k;
        if r.is_positive() {
            Rat::min_of(&r, &Rat::one())
        } else {
            k.recip()
        }
    }

    /// The coordinates of block `i` as a dense vector.
    pub fn block_part(x: &FinVec, block: u32, dim: u32) -> Vec<Rat> {
        let mut v = vec![Rat::zero(); dim as usize];
        for (c, a) in x.entries() {
            if SeedSpace::block_of(*c) == block {
                v[SeedSpace::local_of(*c) as usize] = a.clone();
            }
        }
        v
    }

    pub fn from_block(&self, block: u32, v: &[Rat]) -> FinVec {
        FinVec::from_entries(
            &self.universe(),
            v.iter().enumerate().map(|(k, a)| (SeedSpace::coord(block, k as u32), a.clone())),
        )
    }

    /// Sorted distinct blocks met by `x`.
    pub fn blocks_of(x: &FinVec) -> Vec<u32> {
        let mut b: Vec<u32> = x.support().map(SeedSpace::block_of).collect();
        b.dedup();
        b
    }

    pub fn restrict_blocks(x: &FinVec, lo: u32, hi: u32) -> FinVec {
        x.restrict(|c| {
            let b = SeedSpace::block_of(c);
            b >= lo && b <= hi
        })
    }

    fn block_norms(&self, x: &FinVec, dual: bool) -> Vec<Rat> {
        SeedSpace::blocks_of(x)
            .into_iter()
            .map(|b| {
                let t = self.template(b).expect("block seed");
                let v = SeedSpace::block_part(x, b, t.dim);
                if dual {
                    t.dual_norm(&v)
                } else {
                    t.norm(&v)
                }
            })
            .collect()
    }

    fn to_naturals(x: &FinVec) -> FinVec {
        x.reindex(&Universe::naturals(), SeedSpace::block_of)
    }

    /// Primal norm of `x ∈ X`.
    pub fn norm(&self, x: &FinVec) -> Rat {
        match &self.kind {
            SeedKind::Tsirelson { spec } => spec.norm(&SeedSpace::to_naturals(x)),
            SeedKind::Blocks { outer, .. } => {
                let n = self.block_norms(x, false);
                match outer {
                    OuterNorm::Sup => n.into_iter().max().unwrap_or_else(Rat::zero),
                    OuterNorm::Sum => n.into_iter().sum(),
                }
            }
        }
    }

    /// Dual norm of a functional on `X`.
    pub fn dual_norm(&self, f: &FinVec) -> Rat {
        match &self.kind {
            SeedKind::Tsirelson { spec } => tsirelson_dual_norm(&SeedSpace::to_naturals(f), spec),
            SeedKind::Blocks { outer, .. } => {
                let n = self.block_norms(f, true);
                match outer {
                    OuterNorm::Sup => n.into_iter().sum(),
                    OuterNorm::Sum => n.into_iter().max().unwrap_or_else(Rat::zero),
                }
            }
        }
    }

    /// The net `Ã*_i` as functionals on `X`.
    pub fn dual_net(&self, block: u32) -> Vec<FinVec> {
        match self.template(block) {
            Some(t) => t.dual_net.iter().map(|f| self.from_block(block, f)).collect(),
            None => [Rat::one(), -Rat::one()]
                .iter()
                .map(|s| FinVec::from_entries(&self.universe(), [(SeedSpace::coord(block, 0), s.clone())]))
                .collect(),
        }
    }

    /// Extreme points of the dual unit ball of `⊕_{j=m}^n E_j` (up to sign for the sup-sum case).
    pub fn dual_extremes(&self, m: u32, n: u32) -> Vec<FinVec> {
        let (templates_outer, u) = match &self.kind {
            SeedKind::Blocks { outer, .. } => (*outer, self.universe()),
            SeedKind::Tsirelson { .. } => return Vec::new(),
        };
        let per_block: Vec<Vec<FinVec>> = (m..=n)
            .map(|b| self.template(b).unwrap().norming.iter().map(|f| self.from_block(b, f)).collect())
            .collect();
        match templates_outer {
            OuterNorm::Sup => per_block.into_iter().flatten().collect(),
            OuterNorm::Sum => {
                let mut acc = vec![FinVec::zero(&u)];
                for (k, fs) in per_block.iter().enumerate() {
                    let mut next = Vec::new();
                    for a in &acc {
                        for f in fs {
                            next.push(a.add(f));
                            if k > 0 {
                                next.push(a.sub(f));
                            }
                        }
                    }
                    acc = next;
                }
                acc
            }
        }
    }

    /// Primal vertices of the unit ball of a single block, as vectors in `X`.
    pub fn block_vertices(&self, block: u32) -> Vec<FinVec> {
        match self.template(block) {
            Some(t) => t.vertices.iter().map(|v| self.from_block(block, v)).collect(),
            None => vec![FinVec::from_entries(&self.universe(), [(SeedSpace::coord(block, 0), Rat::one())])],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    #[test]
    fn vertices_of_standard_blocks() {
        let linf = BlockTemplate::linf(2);
        assert_eq!(linf.vertices.len(), 2);
        let l1 = BlockTemplate::l1(2);
        assert_eq!(l1.vertices, vec![vec![Rat::zero(), Rat::one()], vec![Rat::one(), Rat::zero()]]);
        assert_eq!(l1.norm(&[q(1, 2), q(-1, 3)]), q(5, 6));
        assert_eq!(l1.dual_norm(&[q(1, 2), q(-1, 3)]), q(1, 2));
        linf.validate().unwrap();
        l1.validate().unwrap();
    }

    #[test]
    fn default_parameters_are_valid() {
        SeedSpace::three_block().validate().unwrap();
        SeedSpace::scalar_c0().validate().unwrap();
    }

    #[test]
    fn rejects_large_eps_sum() {
        let mut s = SeedSpace::three_block();
        s.eps_rule.first = q(1, 256);
        let e = s.validate().unwrap_err();
        assert!(e.to_string().contains("not below ε/8"));
    }

    #[test]
    fn net_rounding_is_within_a_quarter_eps() {
        let s = SeedSpace::three_block();
        for i in 1..5 {
            for x in [q(1, 3), q(1, 64), q(63, 64), Rat::one(), q(1, 1000)] {
                let r = s.round_to_net(&x, i);
                assert!(s.in_net(&r, i));
                assert!((&r - &x).abs() <= s.eps_i(i) / Rat::int(4));
                assert!(r <= Rat::max_of(&x, &(Rat::int(s.net_denominator(i)).recip())));
            }
        }
    }

    #[test]
    fn norms_of_sum_seed() {
        let s = SeedSpace::three_block();
        let x = FinVec::from_entries(
            &s.universe(),
            [(SeedSpace::coord(1, 0), q(-1, 2)), (SeedSpace::coord(2, 1), q(1, 3)), (SeedSpace::coord(3, 0), q(1, 4))],
        );
        assert_eq!(s.norm(&x), q(1, 2) + q(1, 3) + q(1, 4));
        assert_eq!(s.dual_norm(&x), q(1, 2));
        assert_eq!(s.dual_extremes(1, 2).len(), 4);
    }
}
