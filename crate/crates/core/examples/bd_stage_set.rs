//! A small Bourgain–Delbaen stage set built by hand: constants, the
//! extension operators and the analysis of an element.

use bdspace::bd::{BDStageSet, GammaKind};
use bdspace::{q, FinVec, Rat, Universe};

fn main() {
    let mut bd = BDStageSet::new(&Universe::new("gamma"));
    let a = bd.push(1, GammaKind::Initial, "a").unwrap();
    let b = bd.push(1, GammaKind::Initial, "b").unwrap();
    let half = FinVec::from_entries(bd.universe(), [(a, q(1, 2)), (b, q(-1, 2))]);
    let g = bd.push(2, GammaKind::Type0 { beta: q(1, 8), bstar: half }, "g").unwrap();
    bd.push(2, GammaKind::Type0 { beta: Rat::zero(), bstar: FinVec::zero(bd.universe()) }, "h").unwrap();
    let gb = bd.unit(g);
    bd.push(3, GammaKind::Type1 { alpha: Rat::one(), k: 1, xi: a, beta: q(1, 8), bstar: gb }, "t").unwrap();

    println!("c* of the type-1 element: {:?}", bd.cstar(4).entries());
    let (k, rep) = bd.verify_constants(&q(1, 8));
    println!("M = {}", k.m_stage);
    print!("{}", rep.render());
    for m in 1..=3 {
        println!("{}", bd.verify_isometry(m, 100, m as u64).detail);
    }
    let x = FinVec::from_entries(bd.universe(), [(a, Rat::one()), (b, Rat::one())]);
    println!("J_1(e_a + e_b) = {:?}", bd.extend(&x, 1).entries());
    let an = bd.analyze(4).unwrap();
    println!("cuts of the type-1 element: {:?}", an.cuts);
    print!("{}", bd.validate_schema().render());
}
