//! Lower-estimate certificates: the exact value e*_γ̄(Σ a_j z_j) against
//! c(1-ε)δ₀′/(2M̄)·‖Σ a_j v_(q_j)‖.

use bdspace::augment::{certify_lower_estimate, AugmentMode, AugmentOptions, AugmentedBuild, DensePolicy, DualV, ThetaClass, Window};
use bdspace::family::RegularFamily;
use bdspace::pipeline::spanning_set;
use bdspace::seed::SeedSpace;
use bdspace::theorem_a::{TheoremABuild, TheoremAOptions};
use bdspace::tsirelson::TsirelsonSpec;
use bdspace::{q, Rat};

fn main() {
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 2)).unwrap();

    // A single block: the coordinate vector of a (0,1) element, far from ψ(X) = 0.
    let base = TheoremABuild::from_seed(&SeedSpace::scalar_c0(), TheoremAOptions::with_stage_bound(8)).unwrap();
    let dv = DualV::build(&spec, 1, &[3, 5], 1000, false).unwrap();
    let options = AugmentOptions { dense: DensePolicy::TopUnits { per_stage: 1 }, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, Vec::new(), options).unwrap();
    let unit = |a: &AugmentedBuild, _: usize| {
        let t = a.thetas.iter().find(|t| t.class == ThetaClass::ZeroOne && t.rank == 3).expect("a (0,1) element at stage 3");
        a.merged.unit(t.id)
    };
    let cert = certify_lower_estimate(&mut aug, &[Window { p: 2, q: 5 }], &unit, &[Rat::one()], None).unwrap();
    println!("single block: δ₀ = {}, value {} ≥ bound {}: {}", cert.delta0, cert.value, cert.bound, cert.verdict);

    // Three blocks of the scalar c₀ build, FDD mode.
    let base = TheoremABuild::from_seed(&SeedSpace::scalar_c0(), TheoremAOptions::with_stage_bound(18)).unwrap();
    let windows = [Window { p: 2, q: 4 }, Window { p: 6, q: 9 }, Window { p: 12, q: 15 }];
    let dv = DualV::build(&spec, 2, &[4, 9, 15], 100_000, false).unwrap();
    let options = AugmentOptions { mode: AugmentMode::WithFdd, theta_cap: 10_000, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(&base), options).unwrap();
    let stages = [3u32, 8, 13];
    let blocks = move |a: &AugmentedBuild, i: usize| a.merged.unit(a.base_to_merged[a.base.delta(stages[i]).start as usize]);
    let cert = certify_lower_estimate(&mut aug, &windows, &blocks, &[Rat::one(), q(-1, 2), q(1, 3)], None).unwrap();
    println!("three blocks: δ = {:?}", cert.delta.iter().map(|d| d.to_string()).collect::<Vec<_>>());
    println!("‖Σ a_j v_q_j‖ = {}, M̄ = {}", cert.v_norm, cert.m_bar);
    print!("{}", cert.report.render());
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "value": cert.value, "bound": cert.bound, "verdict": cert.verdict })).unwrap());
}
