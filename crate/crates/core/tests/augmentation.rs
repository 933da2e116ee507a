//! Augmented builds: window rules, construction failures and the
//! interleaved lower estimate.

use bdspace::augment::{
    certify_lower_estimate, check_windows, AugmentError, AugmentMode, AugmentOptions, AugmentedBuild, DensePolicy, DualV, ThetaClass, Window,
};
use bdspace::family::RegularFamily;
use bdspace::pipeline::{preset, spanning_set};
use bdspace::seed::SeedSpace;
use bdspace::theorem_a::{TheoremABuild, TheoremAOptions};
use bdspace::tsirelson::TsirelsonSpec;
use bdspace::{q, FinVec, Rat, Verdict};

fn spec(c: Rat) -> TsirelsonSpec {
    TsirelsonSpec::new(RegularFamily::schreier_n(1), c).unwrap()
}

#[test]
fn window_gaps() {
    assert!(check_windows(&[Window { p: 2, q: 4 }, Window { p: 6, q: 9 }]).is_ok());
    assert!(matches!(check_windows(&[Window { p: 2, q: 3 }]), Err(AugmentError::Windows(1))));
    // q_1 + 1 < p_2 fails for p_2 = 5.
    assert!(matches!(check_windows(&[Window { p: 2, q: 4 }, Window { p: 5, q: 9 }]), Err(AugmentError::Windows(1))));
    assert!(matches!(
        check_windows(&[Window { p: 1, q: 3 }, Window { p: 5, q: 7 }, Window { p: 8, q: 10 }]),
        Err(AugmentError::Windows(2))
    ));
}

#[test]
fn dual_v_members_are_nonnegative_and_normalised() {
    let dv = DualV::build(&spec(q(1, 2)), 2, &[4, 9, 15], 10_000, false).unwrap();
    assert_eq!(dv.len(), 9);
    for m in &dv.members {
        assert!(m.functional.entries().iter().all(|(_, a)| a.is_positive()));
        assert!(m.functional.linf_norm() <= Rat::one());
        if !m.is_atom() {
            assert!(m.decomposition.iter().all(|(r, _)| *r == q(1, 2)));
        }
    }
    assert_eq!(dv.v_norm(&[(4, Rat::one()), (9, Rat::one())]), Rat::one());
}

#[test]
fn construction_rejects_foreign_patterns() {
    let base = TheoremABuild::from_seed(&SeedSpace::scalar_c0(), TheoremAOptions::with_stage_bound(9)).unwrap();
    let dv = DualV::build(&spec(q(1, 2)), 2, &[4, 9], 10_000, false).unwrap();
    let options = AugmentOptions { mode: AugmentMode::WithFdd, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(&base), options).unwrap();
    aug.build_all().unwrap();
    let w = [Window { p: 2, q: 4 }, Window { p: 6, q: 9 }];
    let z = vec![FinVec::zero(aug.merged.universe()); 2];
    let atom = aug.dual_v.atom_at(4).unwrap();
    // An atom at q_1 is not supported on both window tops.
    assert!(matches!(aug.construct(&w, &z, atom, &[1, 1]), Err(AugmentError::Pattern)));
    // Nothing was registered for these windows, so no (0,1) element exists.
    let pair = (0..aug.dual_v.len()).find(|&i| aug.dual_v.members[i].support() == vec![4, 9]).unwrap();
    assert!(matches!(aug.construct(&w, &z, pair, &[1, 1]), Err(AugmentError::MissingTheta { .. })));
}

#[test]
fn single_block_certificate_reaches_c() {
    let base = TheoremABuild::from_seed(&SeedSpace::scalar_c0(), TheoremAOptions::with_stage_bound(8)).unwrap();
    let dv = DualV::build(&spec(q(1, 2)), 1, &[3, 5], 1000, false).unwrap();
    let options = AugmentOptions { dense: DensePolicy::TopUnits { per_stage: 1 }, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, Vec::new(), options).unwrap();
    let unit = |a: &AugmentedBuild, _: usize| {
        let t = a.thetas.iter().find(|t| t.class == ThetaClass::ZeroOne && t.rank == 3).unwrap();
        a.merged.unit(t.id)
    };
    let cert = certify_lower_estimate(&mut aug, &[Window { p: 2, q: 5 }], &unit, &[Rat::one()], None).unwrap();
    assert_eq!(cert.delta0, Rat::one());
    assert_eq!(cert.value, q(1, 2));
    assert_eq!(cert.verdict, Verdict::Pass);
}

#[test]
fn interleaved_certificate_with_running_bound() {
    let base = TheoremABuild::from_seed(&preset("scalar-l1").unwrap(), TheoremAOptions::with_stage_bound(13)).unwrap();
    let dv = DualV::build(&spec(q(1, 16)), 2, &[3, 5], 100_000, true).unwrap();
    let options = AugmentOptions { theta_cap: 10_000, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(&base), options).unwrap();
    let windows = [Window { p: 2, q: 4 }, Window { p: 7, q: 11 }];
    let stages = [3u32, 9];
    let blocks = move |a: &AugmentedBuild, i: usize| a.merged.unit(a.base_to_merged[a.base.delta(stages[i]).start as usize]);
    let cert = certify_lower_estimate(&mut aug, &windows, &blocks, &[Rat::one(), q(-1, 2)], Some(&Rat::one())).unwrap();
    assert_eq!(cert.verdict, Verdict::Pass, "{}", cert.report.render());
    assert!(cert.value >= cert.bound);
    let running = cert.report.checks.iter().find(|c| c.name == "pattern.running-bound").unwrap();
    assert_eq!(running.verdict, Verdict::Pass);
}

#[test]
fn augmented_three_block_verifies() {
    let base = TheoremABuild::from_seed(&SeedSpace::three_block(), TheoremAOptions::with_stage_bound(6)).unwrap();
    let dv = DualV::build(&spec(q(1, 16)), 2, &[1, 2, 3, 4, 5, 6], 100_000, false).unwrap();
    let options = AugmentOptions { dense: DensePolicy::TopUnits { per_stage: 3 }, theta_cap: 64, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(&base), options).unwrap();
    aug.build_all().unwrap();
    let sizes = aug.theta_sizes();
    assert_eq!(sizes.len(), 6);
    assert!(sizes.iter().skip(1).all(|&s| s > 0));
    let rep = aug.verify(30, 2);
    assert!(!rep.has_failures(), "{}", rep.render());
    for sv in &aug.spanning {
        let p = aug.psi(&sv.vector);
        assert_eq!(aug.pi(&p), sv.vector);
        assert!(sv.vector.linf_norm() <= p.linf_norm());
    }
}
