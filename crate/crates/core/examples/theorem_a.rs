//! The Theorem-A construction from the three-block seed: build, verify,
//! and the embedding φ of the seed space.

use bdspace::seed::SeedSpace;
use bdspace::theorem_a::{TheoremABuild, TheoremAOptions};

fn main() {
    let n: u32 = std::env::args().nth(1).map_or(6, |s| s.parse().expect("stage bound"));
    let build = TheoremABuild::from_seed(&SeedSpace::three_block(), TheoremAOptions::with_stage_bound(n)).unwrap();
    println!("stage bound {n}: {} elements, |Δ_n| = {:?}", build.bd.len(), build.stage_sizes());
    print!("{}", build.verify().render());
    let e = build.verify_embedding(100, build.block_bound.min(3), 1);
    print!("{}", e.report.render());
    println!("lower bound witnessed on {}/{} samples", e.witnessed, e.samples);
}
