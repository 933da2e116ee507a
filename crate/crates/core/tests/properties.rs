//! Randomised invariants of the exact arithmetic, the norms and the builds.

use std::sync::OnceLock;

use bdspace::augment::{AugmentOptions, AugmentedBuild, DualV};
use bdspace::bd::BDStageSet;
use bdspace::cdecomp::{optimal_c_decomposition, CoordL1, CoordLinf, CoordTsirelson};
use bdspace::family::{is_spread, RegularFamily};
use bdspace::pipeline::spanning_set;
use bdspace::seed::SeedSpace;
use bdspace::theorem_a::{TheoremABuild, TheoremAOptions};
use bdspace::tsirelson::{brute_force_norm, tsirelson_dual_norm, TsirelsonSpec};
use bdspace::{q, FinVec, Rat, Universe};
use proptest::prelude::*;

fn rat() -> impl Strategy<Value = Rat> {
    (-40i64..=40, 1i64..=24).prop_map(|(n, d)| q(n, d))
}

fn big_rat() -> impl Strategy<Value = Rat> {
    (any::<i64>(), 1i64..=i64::MAX).prop_map(|(n, d)| q(n, d))
}

/// Entries on distinct coordinates in `[1, top]`.
fn vector(top: u32, max_len: usize) -> impl Strategy<Value = FinVec> {
    proptest::collection::btree_map(1..=top, rat(), 0..=max_len)
        .prop_map(|m| FinVec::from_entries(&Universe::naturals(), m.into_iter()))
}

fn spec(c: Rat) -> TsirelsonSpec {
    TsirelsonSpec::new(RegularFamily::schreier_n(1), c).unwrap()
}

fn constant() -> impl Strategy<Value = Rat> {
    prop_oneof![Just(q(1, 2)), Just(q(1, 4)), Just(q(1, 3)), Just(q(1, 16))]
}

struct Fixture {
    build: TheoremABuild,
    aug: AugmentedBuild,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let build = TheoremABuild::from_seed(&SeedSpace::three_block(), TheoremAOptions::with_stage_bound(5)).unwrap();
        let dv = DualV::build(&spec(q(1, 16)), 2, &[1, 2, 3, 4, 5], 10_000, false).unwrap();
        let options = AugmentOptions { theta_cap: 32, ..Default::default() };
        let mut aug = AugmentedBuild::new(&build.bd, dv, spanning_set(&build), options).unwrap();
        aug.build_all().unwrap();
        Fixture { build, aug }
    })
}

fn stage_vector(bd: &BDStageSet, m: u32, raw: &[Rat]) -> FinVec {
    let len = bd.gamma_len(m);
    FinVec::from_entries(bd.universe(), raw.iter().enumerate().map(|(i, a)| ((i % len) as u32, a.clone())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rat_field_laws(a in big_rat(), b in big_rat(), c in big_rat()) {
        prop_assert_eq!(&(&a + &b) - &b, a.clone());
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        if !b.is_zero() {
            prop_assert_eq!(&(&a / &b) * &b, a.clone());
        }
        prop_assert_eq!((&a + &b).cmp(&(&a + &c)), b.cmp(&c));
    }

    #[test]
    fn rat_text_round_trip(a in big_rat()) {
        prop_assert_eq!(a.to_string().parse::<Rat>().unwrap(), a.clone());
        let json = serde_json::to_string(&a).unwrap();
        prop_assert_eq!(serde_json::from_str::<Rat>(&json).unwrap(), a);
    }

    #[test]
    fn finvec_linear_and_serde(x in vector(20, 8), y in vector(20, 8), a in rat()) {
        prop_assert_eq!(x.add(&y).sub(&y), x.clone());
        prop_assert_eq!(x.axpy(&a, &y), x.add(&y.scale(&a)));
        prop_assert_eq!(x.add(&y).dot(&y), &x.dot(&y) + &y.dot(&y));
        prop_assert!(x.linf_norm() <= x.l1_norm());
        let back: FinVec = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn tsirelson_matches_oracle(x in vector(12, 6), c in constant()) {
        let s = spec(c);
        prop_assert_eq!(s.norm(&x), brute_force_norm(&x.abs(), &s));
    }

    #[test]
    fn tsirelson_bounds_and_unconditionality(x in vector(30, 9), c in constant(), flips in any::<u32>()) {
        let s = spec(c);
        let n = s.norm(&x);
        prop_assert!(x.linf_norm() <= n && n <= x.l1_norm());
        let signed = FinVec::from_entries(x.universe(), x.entries().iter().enumerate().map(|(k, (i, a))| (*i, if flips >> (k % 32) & 1 == 1 { -a } else { a.clone() })));
        prop_assert_eq!(s.norm(&signed), n.clone());
        let scaled = x.scale(&q(-3, 2));
        prop_assert_eq!(s.norm(&scaled), &n * &q(3, 2));
    }

    #[test]
    fn tsirelson_spreading_does_not_decrease(x in vector(12, 6), shifts in proptest::collection::vec(0u32..4, 6), c in constant()) {
        let s = spec(c);
        let mut acc = 0;
        let spread = FinVec::from_entries(x.universe(), x.entries().iter().zip(&shifts).map(|((i, a), d)| {
            acc += d;
            (i + acc, a.clone())
        }));
        prop_assert!(s.norm(&x) <= s.norm(&spread));
    }

    #[test]
    fn tsirelson_dual_norm_dominates_pairings(a in vector(8, 4), x in vector(8, 5)) {
        let s = spec(q(1, 2));
        let nx = s.norm(&x);
        prop_assume!(!nx.is_zero());
        prop_assert!(a.dot(&x).abs() <= &tsirelson_dual_norm(&a, &s) * &nx);
    }

    #[test]
    fn c_decomposition_invariants(x in vector(25, 12), c in constant(), which in 0usize..3) {
        let ts = CoordTsirelson(spec(q(1, 2)));
        let bn: &dyn bdspace::cdecomp::BlockNorm = match which { 0 => &CoordL1, 1 => &CoordLinf, _ => &ts };
        let d = optimal_c_decomposition(&x, &c, bn);
        let sum = d.blocks.iter().fold(FinVec::zero(x.universe()), |s, b| s.add(b));
        prop_assert_eq!(&sum, &x);
        if !x.is_zero() {
            prop_assert!(d.is_c_decomposition(&c, bn));
        }
        prop_assert!(d.adjacent_pairs_exceed(&c, bn));
    }

    #[test]
    fn schreier_hereditary_and_spreading(f in proptest::collection::btree_set(1u32..40, 0..7), drop in any::<u8>(), up in 0u32..5, n in 1u32..3) {
        let fam = RegularFamily::schreier_n(n);
        let f: Vec<u32> = f.into_iter().collect();
        if fam.is_member(&f) {
            let sub: Vec<u32> = f.iter().enumerate().filter(|(k, _)| drop >> (k % 8) & 1 == 0).map(|(_, v)| *v).collect();
            prop_assert!(fam.is_member(&sub));
            let g: Vec<u32> = f.iter().map(|v| v + up).collect();
            prop_assert!(is_spread(&f, &g));
            prop_assert!(fam.is_member(&g));
        }
    }

    #[test]
    fn extension_restricts_and_is_bounded(m in 1u32..=5, raw in proptest::collection::vec(rat(), 1..10)) {
        let bd = &fixture().build.bd;
        let x = stage_vector(bd, m, &raw);
        let y = bd.extend(&x, m);
        let len = bd.gamma_len(m) as u32;
        prop_assert_eq!(y.restrict(|g| g < len), x.clone());
        prop_assert!(y.linf_norm() <= &q(2, 1) * &x.linf_norm());
        for n in m..=bd.stage_bound() {
            let rn = bd.apply_jm(&x, m, n);
            prop_assert_eq!(bd.extend(&rn, n), y.clone());
        }
    }

    #[test]
    fn psi_is_a_linear_right_inverse_of_pi(m in 1u32..=5, raw in proptest::collection::vec(rat(), 1..8), raw2 in proptest::collection::vec(rat(), 1..8), a in rat()) {
        let f = fixture();
        let x = f.build.bd.extend(&stage_vector(&f.build.bd, m, &raw), m);
        let z = f.build.bd.extend(&stage_vector(&f.build.bd, m, &raw2), m);
        prop_assert_eq!(f.aug.pi(&f.aug.psi(&x)), x.clone());
        prop_assert_eq!(f.aug.psi(&x.axpy(&a, &z)), f.aug.psi(&x).axpy(&a, &f.aug.psi(&z)));
    }
}

#[test]
fn stage_set_json_round_trip() {
    let bd = &fixture().build.bd;
    let text = bd.to_json();
    let back = BDStageSet::from_json(&text).unwrap();
    assert_eq!(back.to_json(), text);
    assert!(bd.verify_analyses().verdict == bdspace::Verdict::Pass);
}
