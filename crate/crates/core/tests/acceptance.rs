//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Lines are written straight to stdout so they survive output capture.

use std::io::Write;
use std::time::{Duration, Instant};

use bdspace::augment::{certify_lower_estimate, AugmentMode, AugmentOptions, AugmentedBuild, DensePolicy, DualV, ThetaClass, Window};
use bdspace::bd::BDStageSet;
use bdspace::cdecomp::{optimal_c_decomposition, verify_norming_set_d, BlockNorm, CoordL1, CoordLinf, SeedDual};
use bdspace::family::RegularFamily;
use bdspace::pipeline::{run_build, spanning_set, BuildConfig, SeedSource};
use bdspace::seed::SeedSpace;
use bdspace::theorem_a::{TheoremABuild, TheoremAOptions};
use bdspace::tsirelson::{brute_force_norm, TsirelsonSpec};
use bdspace::{q, FinVec, Rat, Report, Universe, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    ok: bool,
    detail: String,
}

fn line(n: usize, name: &str, o: &Outcome, t: Duration) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n} {:<4} {name}: {} ({:.1}s)", if o.ok { "PASS" } else { "FAIL" }, o.detail, t.as_secs_f64()).unwrap();
}

/// Soft verdicts are acceptable; the caller lists which.
fn report_ok(rep: &Report, allowed: &[Verdict]) -> Result<(), String> {
    for c in &rep.checks {
        if c.verdict != Verdict::Pass && !allowed.contains(&c.verdict) {
            return Err(format!("{} {}: {}", c.verdict, c.name, c.detail));
        }
    }
    Ok(())
}

fn three_block(n: u32) -> TheoremABuild {
    TheoremABuild::from_seed(&SeedSpace::three_block(), TheoremAOptions::with_stage_bound(n)).unwrap()
}

fn augmented(base: &TheoremABuild) -> AugmentedBuild {
    let n = base.bd.stage_bound();
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 16)).unwrap();
    let dv = DualV::build(&spec, 2, &(1..=n).collect::<Vec<_>>(), 100_000, false).unwrap();
    let options = AugmentOptions { dense: DensePolicy::TopUnits { per_stage: 3 }, theta_cap: 64, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(base), options).unwrap();
    aug.build_all().unwrap();
    aug
}

fn criterion_1() -> Outcome {
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 2)).unwrap();
    let u = Universe::naturals();
    let values = [q(1, 1), q(-1, 1), q(1, 2), q(-1, 2)];
    let supports: Vec<Vec<u32>> = (1u32..1 << 9)
        .map(|mask| (1..=9).filter(|i| mask >> (i - 1) & 1 == 1).collect::<Vec<u32>>())
        .filter(|s| s.len() <= 7)
        .collect();
    // The oracle depends on |x| only; evaluate it once per magnitude pattern.
    let results: Vec<(usize, Option<String>)> = supports
        .par_iter()
        .map(|s| {
            let k = s.len();
            let mut count = 0;
            for code in 0..1usize << (2 * k) {
                let x = FinVec::from_entries(&u, s.iter().enumerate().map(|(i, &j)| (j, values[(code >> (2 * i)) & 3].clone())));
                let fast = spec.norm(&x);
                let oracle = brute_force_norm(&x.abs(), &spec);
                count += 1;
                if fast != oracle {
                    return (count, Some(format!("{:?}: memoized {fast}, oracle {oracle}", x.entries())));
                }
            }
            (count, None)
        })
        .collect();
    let total: usize = results.iter().map(|r| r.0).sum();
    if let Some(bad) = results.iter().find_map(|r| r.1.clone()) {
        return Outcome { ok: false, detail: bad };
    }
    let e345 = spec.norm(&FinVec::from_entries(&u, (3..=5).map(|i| (i, Rat::one()))));
    Outcome { ok: e345 == q(3, 2), detail: format!("{total} vectors agree with the oracle; ‖e3+e4+e5‖ = {e345}") }
}

fn criterion_2(base: &TheoremABuild, big: &TheoremABuild, aug: &AugmentedBuild) -> Outcome {
    let theta = q(1, 8);
    let mut detail = Vec::new();
    for b in [base, big] {
        let (k, rep) = b.bd.verify_constants(&theta);
        if let Err(e) = report_ok(&rep, &[]) {
            return Outcome { ok: false, detail: e };
        }
        detail.push(format!("N={} M={}", b.bd.stage_bound(), k.m_stage));
    }
    let rep = aug.verify(100, 11);
    if let Err(e) = report_ok(&rep, &[Verdict::PassAtBudget]) {
        return Outcome { ok: false, detail: e };
    }
    let (k, _) = aug.merged.verify_constants(&theta);
    let ok = k.m_stage <= Rat::int(2);
    detail.push(format!("augmented M̄={}", k.m_stage));
    Outcome { ok, detail: format!("θ = 1/8, M ≤ 2: {}", detail.join(", ")) }
}

fn criterion_3(sets: &[(&str, &BDStageSet)]) -> Outcome {
    let mut counts = (0, 0);
    for (name, bd) in sets {
        for m in 1..=bd.stage_bound() {
            let c = bd.verify_isometry(m, 1000, 100 + m as u64);
            match c.verdict {
                Verdict::Pass => counts.0 += 1,
                Verdict::PassAtBudget => counts.1 += 1,
                _ => return Outcome { ok: false, detail: format!("{name}: {} {}", c.name, c.detail) },
            }
        }
    }
    Outcome { ok: true, detail: format!("{} stages exhaustive, {} stages on 1000 samples", counts.0, counts.1) }
}

fn criterion_4(sets: &[(&str, &BDStageSet)]) -> Outcome {
    let mut detail = Vec::new();
    for (name, bd) in sets {
        let n = bd.stage_bound();
        let (k, _) = bd.verify_constants(&q(1, 8));
        let rep = bd.verify_dual_norms(n, &k.m_stage, 100, usize::MAX, 5);
        if let Err(e) = report_ok(&rep, &[]) {
            return Outcome { ok: false, detail: format!("{name}: {e}") };
        }
        detail.push(format!("{name} |Γ_{n}| = {}", bd.gamma_len(n)));
    }
    Outcome { ok: true, detail: format!("100 functionals each, exact: {}", detail.join(", ")) }
}

fn criterion_5(b: &TheoremABuild) -> Outcome {
    let rep = verify_norming_set_d(&b.seed, &b.d);
    match report_ok(&rep, &[]) {
        Ok(()) => Outcome { ok: true, detail: format!("{} members of D, {} checks", b.d.len(), rep.checks.len()) },
        Err(e) => Outcome { ok: false, detail: e },
    }
}

fn criterion_6(big: &TheoremABuild) -> Outcome {
    let e = big.verify_embedding(100, 3, 17);
    let soft = report_ok(&e.report, &[Verdict::Inconclusive]);
    let frac = e.witnessed_fraction();
    Outcome {
        ok: soft.is_ok() && frac >= 0.9,
        detail: format!("{}/{} witnessed at N = 8{}", e.witnessed, e.samples, soft.err().map(|s| format!("; {s}")).unwrap_or_default()),
    }
}

fn criterion_7() -> Outcome {
    let spec = TsirelsonSpec::new(RegularFamily::schreier_n(1), q(1, 2)).unwrap();
    let base = TheoremABuild::from_seed(&SeedSpace::scalar_c0(), TheoremAOptions::with_stage_bound(18)).unwrap();
    let windows = [Window { p: 2, q: 4 }, Window { p: 6, q: 9 }, Window { p: 12, q: 15 }];
    let tops: Vec<u32> = windows.iter().map(|w| w.q).collect();
    let dv = DualV::build(&spec, 2, &tops, 100_000, false).unwrap();
    let options = AugmentOptions { mode: AugmentMode::WithFdd, theta_cap: 10_000, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, spanning_set(&base), options).unwrap();
    let stages = [3u32, 8, 13];
    let blocks = move |a: &AugmentedBuild, i: usize| a.merged.unit(a.base_to_merged[a.base.delta(stages[i]).start as usize]);
    let cert = match certify_lower_estimate(&mut aug, &windows, &blocks, &[Rat::one(), Rat::one(), Rat::one()], None) {
        Ok(c) => c,
        Err(e) => return Outcome { ok: false, detail: e.to_string() },
    };
    if cert.verdict != Verdict::Pass {
        return Outcome { ok: false, detail: format!("three-window certificate {}", cert.verdict) };
    }
    let mut lengths = [0usize; 4];
    for (i, m) in aug.dual_v.members.iter().enumerate() {
        let idx: Vec<usize> = m.support().iter().map(|s| tops.iter().position(|t| t == s).unwrap()).collect();
        let w: Vec<Window> = idx.iter().map(|&k| windows[k]).collect();
        let z: Vec<FinVec> = idx.iter().map(|&k| cert.ztilde[k].clone()).collect();
        for sign in [1, -1] {
            let signs = vec![sign; w.len()];
            let con = match aug.construct(&w, &z, i, &signs) {
                Ok(c) => c,
                Err(e) => return Outcome { ok: false, detail: format!("member {i}: {e}") },
            };
            let rep = aug.verify_construction(&w, &z, i, &signs, &con);
            if let Err(e) = report_ok(&rep, &[]) {
                return Outcome { ok: false, detail: format!("member {i}: {e}") };
            }
        }
        lengths[w.len()] += 1;
    }
    if lengths[1] == 0 || lengths[2] == 0 || lengths[3] == 0 {
        return Outcome { ok: false, detail: format!("members by N: {:?}", &lengths[1..]) };
    }

    // Single block against a (0,1) unit vector.
    let base = TheoremABuild::from_seed(&SeedSpace::scalar_c0(), TheoremAOptions::with_stage_bound(8)).unwrap();
    let dv = DualV::build(&spec, 1, &[3, 5], 1000, false).unwrap();
    let options = AugmentOptions { dense: DensePolicy::TopUnits { per_stage: 1 }, ..Default::default() };
    let mut aug = AugmentedBuild::new(&base.bd, dv, Vec::new(), options).unwrap();
    let unit = |a: &AugmentedBuild, _: usize| {
        let t = a.thetas.iter().find(|t| t.class == ThetaClass::ZeroOne && t.rank == 3).expect("a (0,1) element at stage 3");
        a.merged.unit(t.id)
    };
    let single = match certify_lower_estimate(&mut aug, &[Window { p: 2, q: 5 }], &unit, &[Rat::one()], None) {
        Ok(c) => c,
        Err(e) => return Outcome { ok: false, detail: e.to_string() },
    };
    Outcome {
        ok: single.verdict == Verdict::Pass && single.value >= single.bound,
        detail: format!(
            "members constructed for N=1,2,3: {:?}, both identities exact; single block value {} ≥ c(1-ε)δ₀′/2M̄ = {}",
            &lengths[1..],
            single.value,
            single.bound
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u = Universe::naturals();
    let seed = SeedSpace::three_block();
    let su = seed.universe();
    let norms: Vec<(&str, Box<dyn BlockNorm>)> =
        vec![("ℓ1", Box::new(CoordL1)), ("ℓ∞", Box::new(CoordLinf)), ("three-block dual", Box::new(SeedDual(&seed)))];
    let mut count = 0;
    for (name, bn) in &norms {
        for _ in 0..1000 {
            let c = q(rng.gen_range(1..=3), rng.gen_range(4..=8));
            let k = rng.gen_range(1..=10);
            let x = if *name == "three-block dual" {
                let b = rng.gen_range(1..=5u32);
                FinVec::from_entries(&su, (0..k).map(|_| {
                    let blk = rng.gen_range(1..=b);
                    let loc = rng.gen_range(0..seed.dim(blk));
                    (SeedSpace::coord(blk, loc), q(rng.gen_range(-4..=4), rng.gen_range(1..=4)))
                }))
            } else {
                FinVec::from_entries(&u, (0..k).map(|_| (rng.gen_range(1..=15), q(rng.gen_range(-4..=4), rng.gen_range(1..=4)))))
            };
            let d = optimal_c_decomposition(&x, &c, bn.as_ref());
            let sum = d.blocks.iter().fold(FinVec::zero(x.universe()), |a, b| a.add(b));
            if sum != x || !(x.is_zero() || d.is_c_decomposition(&c, bn.as_ref())) || !d.adjacent_pairs_exceed(&c, bn.as_ref()) {
                return Outcome { ok: false, detail: format!("{name}: {:?} at c = {c}", x.entries()) };
            }
            count += 1;
        }
    }
    Outcome { ok: true, detail: format!("{count} functionals over ℓ1, ℓ∞ and a bimonotone seed dual") }
}

fn criterion_9() -> Outcome {
    let mut cfg = BuildConfig::new(SeedSource::Preset("three-block".into()), 6);
    cfg.samples = 10;
    let dir = tempfile::tempdir().unwrap();
    let seed = cfg.seed_space(dir.path()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_build(&cfg, &seed, &a).unwrap();
    run_build(&cfg, &seed, &b).unwrap();
    let mut files = Vec::new();
    collect(&a, &a, &mut files);
    for f in &files {
        if std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).unwrap() {
            return Outcome { ok: false, detail: format!("{} differs", f.display()) };
        }
    }
    let ok = !files.is_empty() && { let mut g = Vec::new(); collect(&b, &b, &mut g); g.len() == files.len() };
    Outcome { ok, detail: format!("{} files byte-identical", files.len()) }
}

fn collect(root: &std::path::Path, dir: &std::path::Path, out: &mut Vec<std::path::PathBuf>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect(root, &p, out);
        } else {
            out.push(p.strip_prefix(root).unwrap().to_path_buf());
        }
    }
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    let mut run = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        line(n, name, &o, t.elapsed());
        if !o.ok {
            failed.push(n);
        }
    };
    run(1, "tsirelson oracle equivalence", &mut criterion_1);
    let base = three_block(6);
    let big = three_block(8);
    let aug = augmented(&base);
    let sets = [("three-block N=6", &base.bd), ("three-block N=8", &big.bd), ("augmented N=6", &aug.merged)];
    run(2, "stage constants", &mut || criterion_2(&base, &big, &aug));
    run(3, "J_m isometry on Δ_m", &mut || criterion_3(&sets));
    run(4, "dual norms and factored representation", &mut || criterion_4(&sets));
    run(5, "norming set D", &mut || criterion_5(&big));
    run(6, "embedding", &mut || criterion_6(&big));
    run(7, "coefficient patterns and lower estimate", &mut criterion_7);
    run(8, "optimal c-decompositions", &mut criterion_8);
    run(9, "deterministic builds", &mut criterion_9);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
