//! The interleaved variant: V indices placed at the stages m_j, blocks in
//! windows (m_p, m_q), and the running bound cK‖x‖ ≤ ‖x‖ along the chain.

use bdspace::augment::{certify_lower_estimate, AugmentOptions, AugmentedBuild, DualV, Window};
use bdspace::family::RegularFamily;
use bdspace::pipeline::{preset, spanning_set};
use bdspace::theorem_a::{m_sequence, TheoremABuild, TheoremAOptions};
use bdspace::tsirelson::TsirelsonSpec;
use bdspace::{q, Rat};

fn main() {
    let seed = preset("scalar-l1").unwrap();
    let base = TheoremABuild::from_seed(&seed, TheoremAOptions::with_stage_bound(13)).unwrap();
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 16)).unwrap();
    let dv = DualV::build(&spec, 2, &[3, 5], 100_000, true).unwrap();
    let windows = [Window { p: m_sequence(2), q: m_sequence(3) }, Window { p: m_sequence(4), q: m_sequence(5) }];
    println!("windows in stage terms: {windows:?}");
    let options = AugmentOptions { theta_cap: 10_000, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(&base), options).unwrap();
    let stages = [3u32, 9];
    let blocks = move |a: &AugmentedBuild, i: usize| a.merged.unit(a.base_to_merged[a.base.delta(stages[i]).start as usize]);
    let cert = certify_lower_estimate(&mut aug, &windows, &blocks, &[Rat::one(), Rat::one()], Some(&Rat::one())).unwrap();
    print!("{}", cert.report.render());
    println!("verdict {}", cert.verdict);
}
