//! Tsirelson norms: the fast recursion, the brute-force oracle, the dual
//! norming set and the exact dual norm.

use bdspace::family::RegularFamily;
use bdspace::tsirelson::{brute_force_norm, build_dual_norming_set, tsirelson_dual_norm, TsirelsonSpec};
use bdspace::{q, FinVec, Universe};

fn main() {
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 2)).unwrap();
    let u = Universe::naturals();
    let x = FinVec::from_entries(&u, [(3, q(1, 1)), (4, q(1, 1)), (5, q(1, 1))]);
    println!("‖e3+e4+e5‖ = {} (oracle {})", spec.norm(&x), brute_force_norm(&x, &spec));

    let y = FinVec::from_entries(&u, [(2, q(1, 1)), (3, q(-1, 2)), (5, q(1, 2)), (6, q(1, 1)), (8, q(-1, 1))]);
    println!("‖y‖ = {} (oracle {})", spec.norm(&y), brute_force_norm(&y, &spec));

    let d = build_dual_norming_set(&spec, 2, 6, 100_000).unwrap();
    println!("canonical norming set on [1,6], depth 2: {} members; value on y: {}", d.members.len(), d.norming_value(&y));

    let a = FinVec::from_entries(&u, [(3, q(1, 1)), (4, q(1, 1))]);
    println!("‖e*3+e*4‖_T* = {}", tsirelson_dual_norm(&a, &spec));
}
