//! Optimal c-decompositions of functionals.

use bdspace::cdecomp::{optimal_c_decomposition, CoordL1, CoordTsirelson};
use bdspace::family::RegularFamily;
use bdspace::pipeline::format_blocks;
use bdspace::tsirelson::TsirelsonSpec;
use bdspace::{q, FinVec, Universe};

fn main() {
    let u = Universe::naturals();
    let x = FinVec::from_entries(&u, [(1, q(3, 10)), (2, q(3, 10)), (3, q(4, 5))]);
    let d = optimal_c_decomposition(&x, &q(1, 2), &CoordL1);
    println!("ℓ1, c = 1/2: {}  c-decomposition: {}", format_blocks(&d), d.is_c_decomposition(&q(1, 2), &CoordL1));
    println!("adjacent pairs exceed c: {}", d.adjacent_pairs_exceed(&q(1, 2), &CoordL1));

    let t = CoordTsirelson(TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 2)).unwrap());
    let y = FinVec::from_entries(&u, (1..=8).map(|i| (i, q(1, 8))));
    let d = optimal_c_decomposition(&y, &q(1, 4), &t);
    println!("Tsirelson, c = 1/4: {}", format_blocks(&d));
}
