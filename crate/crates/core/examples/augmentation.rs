//! Augmenting the three-block Theorem-A build by the coded norming set of
//! V = T(S1, 1/16): Θ sizes, ψ and the merged constants.

use bdspace::augment::{AugmentOptions, AugmentedBuild, DensePolicy, DualV};
use bdspace::family::RegularFamily;
use bdspace::pipeline::spanning_set;
use bdspace::seed::SeedSpace;
use bdspace::theorem_a::{TheoremABuild, TheoremAOptions};
use bdspace::tsirelson::TsirelsonSpec;
use bdspace::q;

fn main() {
    let n = 6;
    let base = TheoremABuild::from_seed(&SeedSpace::three_block(), TheoremAOptions::with_stage_bound(n)).unwrap();
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 16)).unwrap();
    let dv = DualV::build(&spec, 2, &(1..=n).collect::<Vec<_>>(), 100_000, false).unwrap();
    println!("D^V: {} nonnegative members", dv.len());
    let options = AugmentOptions { dense: DensePolicy::TopUnits { per_stage: 3 }, theta_cap: 64, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(&base), options).unwrap();
    aug.build_all().unwrap();
    println!("|Δ_n| = {:?}", base.stage_sizes());
    println!("|Θ_n| = {:?}", aug.theta_sizes());
    for l in &aug.log {
        println!("  {l}");
    }
    let x = &aug.spanning[0].vector;
    let px = aug.psi(x);
    println!("‖x‖ = {}, ‖ψ(x)‖ = {}, π(ψ(x)) = x: {}", x.linf_norm(), px.linf_norm(), aug.pi(&px) == *x);
    print!("{}", aug.verify(50, 3).render());
}
