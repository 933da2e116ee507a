//! Membership and admissibility in Schreier families.

use bdspace::family::{is_spread, RegularFamily};

fn main() {
    let s1 = RegularFamily::schreier_n(1);
    let s2: RegularFamily = "schreier:2".parse().unwrap();
    for f in [vec![3, 4, 5], vec![2, 4, 5], vec![2, 3, 7, 9, 10]] {
        println!("{f:?}: S1 {} S2 {}", s1.is_member(&f), s2.is_member(&f));
    }
    let blocks = vec![vec![2, 3], vec![5], vec![8, 9]];
    println!("{blocks:?} S1-admissible: {:?}", s1.is_admissible(&blocks));
    println!("S1 members within [1,5]: {}", s1.members_within(5).len());
    println!("[4,6,9] spreads [2,3,5]: {}", is_spread(&[2, 3, 5], &[4, 6, 9]));
    let omega: RegularFamily = "schreier:w".parse().unwrap();
    println!("{omega:?}: [3,4,5,6,7,8] member {}", omega.is_member(&[3, 4, 5, 6, 7, 8]));
}
