//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mgc_core::abgrp::{rank_profile, slice_actions, FgAbGroup};
use mgc_core::chainres::{equivariant_resolution, lift_chain_map, DEFAULT_ORDER_BUDGET};
use mgc_core::cmod::{completion_tower, fitting_mod_prime_power, truncate, CModule, Flavor, DEFAULT_DEPTH_CAP, DEFAULT_PRECISION};
use mgc_core::fuzz::{random_p_group, random_zero_slice_hom, rng};
use mgc_core::homfun::{dimension_bound, homology_lambda_gamma};
use mgc_core::linalg::{smith_normal_form, FpMatrix, IntMatrix, ModMatrix};
use mgc_core::specseq::fuzz_second_page;
use mgc_core::verify::{
    chain_formula_agreement, dwyer_filtration, fg_model, lcs_quotients, prufer_remark, rational_verify, verify_epimorphism, zoo, zoo_member, Ring,
};
use num_bigint::BigInt;
use rand::Rng;

const PRIMES: [u32; 3] = [2, 3, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn group(name: &str) -> mgc_core::verify::GroupSpec {
    zoo_member(name).expect("zoo member")
}

// 1
fn snf_fuzz() -> Outcome {
    let mut g = rng(1);
    let mut bad = 0;
    for _ in 0..1000 {
        let (r, c) = (g.gen_range(1..=6), g.gen_range(1..=6));
        let m = IntMatrix::from_fn(r, c, |_, _| BigInt::from(g.gen_range(-100..=100)));
        let s = smith_normal_form(&m);
        let mut ok = s.u.mul(&m).mul(&s.v) == s.d_matrix(r, c);
        ok &= s.u.mul(&s.u_inv) == IntMatrix::identity(r) && s.v.mul(&s.v_inv) == IntMatrix::identity(c);
        for w in s.diag.windows(2) {
            ok &= if w[0] == BigInt::from(0) { w[1] == BigInt::from(0) } else { &w[1] % &w[0] == BigInt::from(0) };
        }
        if r == c {
            let prod: BigInt = s.diag.iter().product();
            ok &= m.det().magnitude() == prod.magnitude();
        }
        bad += usize::from(!ok);
    }
    for _ in 0..500 {
        let p = [2u64, 3, 5][g.gen_range(0..3)];
        let n = g.gen_range(1..=4);
        let (r, c) = (g.gen_range(1..=6), g.gen_range(1..=6));
        let q = p.pow(n) as i128;
        let m = ModMatrix::from_fn(p, n, r, c, |_, _| g.gen_range(0..q));
        let s = smith_normal_form(&m);
        let mut ok = s.u.mul(&m).mul(&s.v) == s.d_matrix(r, c);
        ok &= s.u.mul(&s.u_inv) == ModMatrix::identity(p, n, r) && s.v.mul(&s.v_inv) == ModMatrix::identity(p, n, c);
        let vals: Vec<u32> = s.diag.iter().map(|&d| if d == 0 { n } else { m.valuation(d) }).collect();
        ok &= vals.windows(2).all(|w| w[0] <= w[1]);
        ok &= s.diag.iter().zip(&vals).all(|(&d, &v)| d == 0 || d == p.pow(v));
        bad += usize::from(!ok);
    }
    outcome(bad == 0, format!("1000 over Z, 500 over Z/p^N, {bad} failures"))
}

// 2
fn cyclic_dims() -> Outcome {
    let mut seen = Vec::new();
    let mut ok = true;
    for p in [3u32, 5] {
        for k in 1..=3 {
            let a = FgAbGroup::new(vec![BigInt::from(p).pow(k)], 0);
            let (v, w) = slice_actions(&a, p);
            let h = homology_lambda_gamma(&v, &w, 10).expect("odd p");
            ok &= h.dims().iter().all(|&d| d == 1);
            seen.push(format!("Z/{}^{k}", p));
        }
    }
    outcome(ok, format!("H_n = 1 for n <= 10 on {}", seen.join(", ")))
}

// 3
fn zero_map_fuzz() -> Outcome {
    let mut g = rng(3);
    let mut failures = 0;
    let mut total = 0;
    for p in [3u32, 5] {
        for _ in 0..100 {
            let f = random_zero_slice_hom(&mut g, p, 2);
            let src = equivariant_resolution(&f.source, p, 6, DEFAULT_ORDER_BUDGET).expect("small group");
            let dst = equivariant_resolution(&f.target, p, 6, DEFAULT_ORDER_BUDGET).expect("small group");
            let lift = lift_chain_map(&f, &src, &dst).expect("chain map lifts");
            // H_n(f) = 0 iff cycles land in boundaries; in the top degree the
            // boundaries are only known when the complex is minimal
            let minimal = dst.differentials.iter().all(|d| d.is_zero());
            let zero = (1..=6).all(|n| {
                let cycles = src.differentials[n].kernel();
                let img = lift.phi[n].mul(&cycles);
                let bnd = if n < dst.nmax {
                    dst.differentials[n + 1].image()
                } else if minimal {
                    FpMatrix::zeros(p, dst.dims[n], 0)
                } else {
                    return false;
                };
                (0..img.cols()).all(|j| bnd.contains_col(&img.col(j)))
            });
            failures += usize::from(!zero);
            total += 1;
        }
    }
    outcome(failures == 0, format!("{total} maps at p = 3, 5; {failures} nonzero in degrees 1..6"))
}

// 4
fn dimension_bound_fuzz() -> Outcome {
    let mut g = rng(4);
    let mut bad = 0;
    let mut tight = 0;
    for _ in 0..200 {
        let p = [3u32, 5][g.gen_range(0..2)];
        let a = random_p_group(&mut g, p, 3);
        let big_d = rank_profile(&a, p).big_d;
        let (v, w) = slice_actions(&a, p);
        let h = homology_lambda_gamma(&v, &w, 6).expect("odd p");
        for (n, &d) in h.dims().iter().enumerate() {
            bad += usize::from(d > dimension_bound(n, big_d));
            tight += usize::from(n >= 2 && d == dimension_bound(n, big_d));
        }
    }
    let a = FgAbGroup::new(vec![BigInt::from(9), BigInt::from(9)], 0);
    let big_d = rank_profile(&a, 3).big_d;
    let (v, w) = slice_actions(&a, 3);
    let h2 = homology_lambda_gamma(&v, &w, 2).expect("odd p").dim(2);
    let sharp = h2 == 3 && dimension_bound(2, big_d) == 3;
    outcome(
        bad == 0 && sharp,
        format!("200 groups, {bad} violations, {tight} tight degrees >= 2; (Z/9)^2 at p = 3: H_2 = {h2}, bound {}", dimension_bound(2, big_d)),
    )
}

// 5
fn completion_identity() -> Outcome {
    let mut ok = true;
    let mut idx = Vec::new();
    for g in zoo() {
        for p in PRIMES {
            let ip = completion_tower(&g.module, Flavor::Ip(p), p, DEFAULT_PRECISION, DEFAULT_DEPTH_CAP);
            let mixed = completion_tower(&g.module, Flavor::Mixed(p, DEFAULT_PRECISION), p, DEFAULT_PRECISION, DEFAULT_DEPTH_CAP);
            match (ip, mixed) {
                (Ok(a), Ok(b)) => {
                    ok &= a.report.truncated == b.report.truncated;
                    idx.push(format!("{}@{p}:{}/{}", g.name, a.report.index, b.report.index));
                }
                _ => {
                    ok = false;
                    idx.push(format!("{}@{p}:unstable", g.name));
                }
            }
        }
    }
    outcome(ok, format!("indices I_p/mixed {}", idx.join(" ")))
}

// 6
fn fitting_split() -> Outcome {
    let n = DEFAULT_PRECISION;
    let mut ok = true;
    let mut fails = Vec::new();
    for g in zoo() {
        for p in PRIMES {
            let (pm, split) = fitting_mod_prime_power(&g.module, p, n);
            let counted = pm.sub_log_size(&split.image) + pm.sub_log_size(&split.kernel) == pm.log_size();
            let both = pm.sub_log_size(&pm.submodule(&split.image.hstack(&split.kernel))) == pm.log_size();
            let mut kernel = pm.sub_exponents(&split.kernel);
            kernel.sort_unstable();
            let tower = completion_tower(&g.module, Flavor::Ip(p), p, n, DEFAULT_DEPTH_CAP).map(|t| t.report.truncated);
            let matches = tower.as_ref().is_ok_and(|t| *t == kernel);
            if !(counted && both && matches) {
                ok = false;
                fails.push(format!("{}@{p}", g.name));
            }
        }
    }
    outcome(ok, format!("8 modules x 3 primes at N = {n}; mismatches: {}", if fails.is_empty() { "none".into() } else { fails.join(" ") }))
}

// 7
fn two_routes() -> Outcome {
    let mut ok = true;
    let mut cells = Vec::new();
    for g in zoo() {
        for p in PRIMES {
            let d = dwyer_filtration(&g, p, Ring::Z, 6);
            let e = verify_epimorphism(&g, Ring::Z, p, 6);
            match (d, e) {
                (Ok(d), Ok(e)) if e.degrees.len() > 2 => {
                    let h2 = e.degrees[2].dim_ghat;
                    ok &= d.limit == Some((h2, h2));
                    cells.push(format!("{}@{p}:{h2}", g.name));
                }
                _ => {
                    ok = false;
                    cells.push(format!("{}@{p}:missing", g.name));
                }
            }
        }
    }
    outcome(ok, format!("H_2 of the completion {}", cells.join(" ")))
}

// 8
fn epimorphism_theorem() -> Outcome {
    let mut ok = true;
    let mut runs = 0;
    for g in zoo().into_iter().filter(|g| g.tame == Some(true)) {
        for p in PRIMES {
            for ring in [Ring::Z, Ring::Zp] {
                let r = verify_epimorphism(&g, ring, p, 6);
                ok &= r.as_ref().is_ok_and(|r| r.verified() && r.degrees.len() == 7);
                runs += 1;
            }
        }
    }
    let torus = verify_epimorphism(&group("torus_p3"), Ring::Zp, 3, 6).expect("torus_p3");
    let iso = torus.iso_case && torus.degrees.iter().all(|d| d.dim_g == d.dim_ghat);
    let exit = Command::new(env!("CARGO_BIN_EXE_mgc")).args(["verify-epi", "torus_p3", "-R", "Zp", "-p", "3"]).output().map(|o| o.status.success());
    let exit_ok = exit.as_ref().is_ok_and(|&s| s);
    outcome(ok && iso && exit_ok, format!("{runs} runs (R = Z, Z/p), torus_p3 at 3 iso in all degrees: {iso}, CLI exit 0: {exit_ok}"))
}

// 9
fn chain_formula() -> Outcome {
    let mut ok = true;
    let mut cases = 0;
    let mut cases_two = 0;
    let mut members: Vec<(String, FgAbGroup)> = ["heisenberg", "sol", "torus_p3", "finite9", "klein"]
        .iter()
        .map(|n| (n.to_string(), fg_model(&group(n).module).expect("finitely generated").0))
        .collect();
    for k in 1..=4 {
        let t = truncate(&group("klein").module, Flavor::I, k);
        members.push((format!("klein/I^{k}"), t.group));
    }
    for p in [3u32, 5] {
        for (_, m) in &members {
            let r = chain_formula_agreement(m, p, 6);
            ok &= r.is_ok_and(|r| r.formula.is_some() && r.agrees());
            cases += 1;
        }
    }
    let trivial = |orders: &[i64]| CModule::finite(orders, &IntMatrix::identity(orders.len())).expect("finite module");
    let products = [
        CModule::finite(&[2], &IntMatrix::from_rows(&[vec![-1]])).expect("finite module"),
        trivial(&[2]),
        trivial(&[4]),
        trivial(&[2, 4]),
    ];
    for m in &products {
        let (g, _) = fg_model(m).expect("finite");
        let r = chain_formula_agreement(&g, 2, 6);
        ok &= r.is_ok_and(|r| r.kunneth.is_some() && r.agrees());
        cases_two += 1;
    }
    // lattices have no 2-torsion, so the formula applies at p = 2 as well
    for n in ["heisenberg", "sol", "torus_p3", "klein"] {
        let (g, _) = fg_model(&group(n).module).expect("lattice");
        let r = chain_formula_agreement(&g, 2, 6);
        ok &= r.is_ok_and(|r| r.formula.is_some() && r.agrees());
        cases_two += 1;
    }
    outcome(ok, format!("{cases} cases at p = 3, 5 against the formula; {cases_two} at p = 2 against product and lattice formulas"))
}

// 10
fn dwyer_exactness() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in PRIMES {
        let h = dwyer_filtration(&group("heisenberg"), p, Ring::Z, 6).expect("heisenberg");
        let phi: Vec<(usize, usize)> = h.stages.iter().map(|s| s.phi).collect();
        let first = phi.first() == Some(&(2, 2)) && phi.get(1) == Some(&(0, 0));
        let limit = h.limit.map(|l| l.0);
        let ses = limit.is_some_and(|l| h.h2 == phi.last().map_or(0, |x| x.0) + l);
        ok &= first && ses && h.verified();
        notes.push(format!("heisenberg@{p} phi {:?} limit {:?}", phi.iter().take(3).map(|x| x.0).collect::<Vec<_>>(), limit));
    }
    for (name, ps) in [("klein", &PRIMES[..]), ("torus_p3", &[3u32][..])] {
        for &p in ps {
            let d = dwyer_filtration(&group(name), p, Ring::Z, 6).expect("zoo");
            let zero = d.stages.iter().all(|s| s.phi == (0, 0));
            ok &= zero && d.verified();
            notes.push(format!("{name}@{p} phi = 0: {zero}"));
        }
    }
    outcome(ok, notes.join("; "))
}

// 11
fn spectral_fuzz() -> Outcome {
    let s = fuzz_second_page(0, 200, 3, 3);
    let ok = s.accepted.len() == 200 && s.violations.is_empty() && !s.witnesses.is_empty();
    let w = s.witnesses.first().map_or("none".to_string(), |r| format!("seed {} at degree {}", r.seed, r.n + 1));
    outcome(
        ok,
        format!("{} tried, {} accepted, {} violations, {} witnesses (first: {w})", s.tried, s.accepted.len(), s.violations.len(), s.witnesses.len()),
    )
}

// 12
fn rational_theorem() -> Outcome {
    let mut ok = true;
    let mut idx = Vec::new();
    for g in zoo() {
        match rational_verify(&g, 6) {
            Ok(r) => {
                ok &= r.verified() && r.prenilpotence_index.is_some();
                idx.push(format!("{}:{}", g.name, r.prenilpotence_index.map_or("-".into(), |i| i.to_string())));
            }
            Err(_) => {
                ok = false;
                idx.push(format!("{}:error", g.name));
            }
        }
    }
    outcome(ok, format!("prenilpotence indices {}", idx.join(" ")))
}

// 13
fn klein_series() -> Outcome {
    let q = lcs_quotients(&group("klein"), Ring::Z, 8).expect("klein");
    let ok = q.len() == 7 && q.iter().all(|l| l.index == Some(BigInt::from(2).pow(l.i as u32 - 1)));
    let idx: Vec<String> = q.iter().map(|l| l.index.as_ref().map_or("inf".into(), |x| x.to_string())).collect();
    outcome(ok, format!("[M : M n gamma_i] for i = 2..8: {}", idx.join(",")))
}

// 14
fn prufer() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [3u32, 5] {
        let r = prufer_remark(p, 6).expect("cyclic groups");
        ok &= r.colimit_dim() >= 1 && r.stabilized_at.is_some_and(|s| s <= 3) && r.completion_zero;
        notes.push(format!("p = {p}: colimit {} from stage {:?}, completion zero {}", r.colimit_dim(), r.stabilized_at, r.completion_zero));
    }
    outcome(ok, notes.join("; "))
}

fn main() -> ExitCode {
    type Criterion = (usize, &'static str, fn() -> Outcome, Option<u64>);
    let criteria: [Criterion; 14] = [
        (1, "Smith normal form fuzz", snf_fuzz, Some(10)),
        (2, "homology of cyclic p-groups", cyclic_dims, Some(1)),
        (3, "zero slice maps induce zero", zero_map_fuzz, None),
        (4, "dimension bound", dimension_bound_fuzz, None),
        (5, "I_p and mixed towers agree", completion_identity, Some(30)),
        (6, "Fitting splitting", fitting_split, None),
        (7, "two routes to H_2 of the completion", two_routes, Some(60)),
        (8, "epimorphism on mod-p homology", epimorphism_theorem, None),
        (9, "chain complex against formulas", chain_formula, None),
        (10, "Dwyer filtration exactness", dwyer_exactness, None),
        (11, "second-page comparison fuzz", spectral_fuzz, Some(60)),
        (12, "rational epimorphism", rational_theorem, None),
        (13, "Klein bottle lower central series", klein_series, None),
        (14, "Z/p^inf colimit against completion", prufer, None),
    ];
    let mut failed = 0;
    for (k, name, run, limit) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|s| took < Duration::from_secs(s));
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        let budget = limit.map_or(String::new(), |s| format!(" / {s}s"));
        println!(
            "criterion {k:>2} {}: {name} [{:.2}s{budget}] {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            o.detail
        );
        if !in_time {
            println!("             over the time budget");
        }
    }
    println!("{} of 14 criteria passed", 14 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
