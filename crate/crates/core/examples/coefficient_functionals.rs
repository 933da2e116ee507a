//! Realising coefficient patterns of V* by single elements of an augmented
//! build: for every member w* of D^V on the window tops, an element γ̄ with
//! P*_(p_n,q_n) e*_γ̄ = cβ_n z*_n on each window.

use bdspace::augment::{certify_lower_estimate, AugmentMode, AugmentOptions, AugmentedBuild, DualV, Window};
use bdspace::family::RegularFamily;
use bdspace::pipeline::spanning_set;
use bdspace::seed::SeedSpace;
use bdspace::theorem_a::{TheoremABuild, TheoremAOptions};
use bdspace::tsirelson::TsirelsonSpec;
use bdspace::{q, FinVec, Rat};

fn main() {
    let base = TheoremABuild::from_seed(&SeedSpace::scalar_c0(), TheoremAOptions::with_stage_bound(18)).unwrap();
    let windows = [Window { p: 2, q: 4 }, Window { p: 6, q: 9 }, Window { p: 12, q: 15 }];
    let tops: Vec<u32> = windows.iter().map(|w| w.q).collect();
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 2)).unwrap();
    let dv = DualV::build(&spec, 2, &tops, 100_000, false).unwrap();
    let options = AugmentOptions { mode: AugmentMode::WithFdd, theta_cap: 10_000, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(&base), options).unwrap();

    // Blocks at the stages 3, 8, 13, which carry no FDD block of the base.
    let stages = [3u32, 8, 13];
    let blocks = move |a: &AugmentedBuild, i: usize| a.merged.unit(a.base_to_merged[a.base.delta(stages[i]).start as usize]);
    let cert = certify_lower_estimate(&mut aug, &windows, &blocks, &[Rat::one(), Rat::one(), Rat::one()], None).unwrap();
    println!("z̃ registered for {} windows; |Θ_n| = {:?}", cert.ztilde.len(), aug.theta_sizes());

    for (i, m) in aug.dual_v.members.iter().enumerate() {
        let idx: Vec<usize> = m.support().iter().map(|s| tops.iter().position(|t| t == s).unwrap()).collect();
        let w: Vec<Window> = idx.iter().map(|&k| windows[k]).collect();
        let z: Vec<FinVec> = idx.iter().map(|&k| cert.ztilde[k].clone()).collect();
        for sign in [1, -1] {
            let signs = vec![sign; w.len()];
            let con = aug.construct(&w, &z, i, &signs).unwrap();
            let rep = aug.verify_construction(&w, &z, i, &signs, &con);
            let chain: Vec<String> = con.steps.iter().map(|(c, _, r)| format!("{c}@{r}")).collect();
            println!("w* = {:?} σ = {sign:+}: γ̄ = {} via {}  {}", m.functional.entries(), con.gamma, chain.join(" "), rep.verdict());
        }
    }
}
