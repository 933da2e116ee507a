//! The norming set D of a seed space with its special c-decompositions.

use bdspace::cdecomp::{build_norming_set_d, norming_factor, verify_norming_set_d};
use bdspace::seed::SeedSpace;

fn main() {
    let seed = SeedSpace::three_block();
    let d = build_norming_set_d(&seed, 4, 2_000_000);
    println!("D over blocks [1,4]: {} members, pruned: {}", d.len(), d.pruned);
    println!("norming factor: {}", norming_factor(&seed));
    let m = d.members.iter().find(|m| m.decomposition.len() > 2).unwrap();
    println!("a member on blocks {:?} with {} parts", m.blocks, m.decomposition.len());
    print!("{}", verify_norming_set_d(&seed, &d).render());
}
