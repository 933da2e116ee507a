//! Bounded searches for domination between block sequences and basis
//! subsequences of a Tsirelson space.

use bdspace::family::RegularFamily;
use bdspace::tsirelson::{certify_domination, TsirelsonSpec};
use bdspace::{q, FinVec, Universe};

fn main() {
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 2)).unwrap();
    let u = Universe::naturals();
    // Normalised blocks z_i on [2i, 2i+1].
    let blocks: Vec<FinVec> = (1..=4u32)
        .map(|i| {
            let z = FinVec::from_entries(&u, [(2 * i, q(1, 1)), (2 * i + 1, q(1, 1))]);
            z.scale(&spec.norm(&z).recip())
        })
        .collect();
    let mins: Vec<u32> = (1..=4).map(|i| 2 * i).collect();
    for c in [q(1, 1), q(2, 1)] {
        let cert = certify_domination(&blocks, &mins, &spec, &c, 2000);
        println!("‖Σ a_i z_i‖ ≤ {c}·‖Σ a_i e_(min z_i)‖: {} (tried {:?})", cert.verdict, cert.tried);
    }
}
