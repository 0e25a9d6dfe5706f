use mgc_core::abgrp::{from_relation_matrix, rank_profile, AbHom, FgAbGroup};
use mgc_core::cmod::{completion_tower, CModule, Flavor};
use mgc_core::fuzz::{random_fp_matrix, random_invertible, random_p_group, rng};
use mgc_core::homfun::{dimension_bound, homology_dims, homology_lambda_gamma, induced_map, two_column_semidirect};
use mgc_core::linalg::{charpoly_rational, smith_normal_form, stable_fitting, FpMatrix, IntMatrix, ModMatrix, PModule, QMatrix};
use mgc_core::verify::chain_formula_agreement;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

fn int_matrix(max: usize, bound: i64) -> impl Strategy<Value = IntMatrix> {
    (0..=max, 0..=max).prop_flat_map(move |(r, c)| {
        prop::collection::vec(-bound..=bound, r * c).prop_map(move |v| {
            let rows: Vec<Vec<i64>> = (0..r).map(|i| v[i * c..(i + 1) * c].to_vec()).collect();
            if r == 0 {
                IntMatrix::zeros(0, c)
            } else {
                IntMatrix::from_rows(&rows)
            }
        })
    })
}

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5])
}

fn mod_matrix(max: usize) -> impl Strategy<Value = ModMatrix> {
    (prime(), 1u32..=4, 0..=max, 0..=max, any::<u64>()).prop_map(|(p, n, r, c, seed)| {
        let mut g = rng(seed);
        let q = p.pow(n) as i128;
        ModMatrix::from_fn(p, n, r, c, |_, _| g.gen_range(0..q))
    })
}

fn unimodular(seed: u64, n: usize) -> IntMatrix {
    let mut g = rng(seed);
    let mut m = IntMatrix::identity(n);
    for _ in 0..3 * n {
        let (i, j) = (g.gen_range(0..n), g.gen_range(0..n));
        if i != j {
            let k: i64 = g.gen_range(-2..=2);
            let mut e = IntMatrix::identity(n);
            e[(i, j)] = BigInt::from(k);
            m = e.mul(&m);
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn snf_over_z(m in int_matrix(6, 100)) {
        let s = smith_normal_form(&m);
        let (r, c) = (m.rows(), m.cols());
        prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.d_matrix(r, c));
        prop_assert_eq!(s.u.mul(&s.u_inv), IntMatrix::identity(r));
        prop_assert_eq!(s.v.mul(&s.v_inv), IntMatrix::identity(c));
        for w in s.diag.windows(2) {
            prop_assert!(!w[0].is_negative());
            let divides = if w[0].is_zero() { w[1].is_zero() } else { (&w[1] % &w[0]).is_zero() };
            prop_assert!(divides);
        }
        if r == c {
            let prod: BigInt = s.diag.iter().product();
            prop_assert_eq!(m.det().abs(), prod.abs());
        }
    }

    #[test]
    fn snf_over_prime_powers(m in mod_matrix(5)) {
        let s = smith_normal_form(&m);
        let (r, c) = (m.rows(), m.cols());
        let (p, n) = (m.p(), m.exponent());
        prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.d_matrix(r, c));
        prop_assert_eq!(s.u.mul(&s.u_inv), ModMatrix::identity(p, n, r));
        prop_assert_eq!(s.v.mul(&s.v_inv), ModMatrix::identity(p, n, c));
        let vals: Vec<u32> = s.diag.iter().map(|&d| if d == 0 { n } else { m.valuation(d) }).collect();
        for (d, v) in s.diag.iter().zip(&vals) {
            prop_assert!(*d == 0 || *d == p.pow(*v));
        }
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn howell_depends_only_on_the_span(m in mod_matrix(4), seed in any::<u64>()) {
        let (p, n) = (m.p(), m.exponent());
        let c = m.cols();
        let mut g = rng(seed);
        // invertible mod p, hence mod p^N
        let x = random_invertible(&mut g, p as u32, c);
        let xq = ModMatrix::from_fn(p, n, c, c, |i, j| i128::from(x[(i, j)]));
        let y = ModMatrix::from_fn(p, n, c, 2, |_, _| g.gen_range(0..p.pow(n) as i128));
        let h = m.howell();
        prop_assert_eq!(&m.mul(&xq).howell(), &h);
        prop_assert_eq!(&m.hstack(&m.mul(&y)).howell(), &h);
        prop_assert_eq!(&h.howell(), &h);
        for j in 0..c {
            prop_assert!(h.howell_contains(&m.col(j)));
        }
    }

    #[test]
    fn fitting_splits(p in prime(), n in 1u32..=3, k in 1usize..=4, seed in any::<u64>()) {
        let mut g = rng(seed);
        let b = ModMatrix::from_fn(p, n, k, k, |_, _| g.gen_range(0..p.pow(n) as i128));
        let f = stable_fitting(&b);
        let free = PModule::free(p, n, k);
        prop_assert_eq!(f.projection.mul(&f.projection), f.projection.clone());
        prop_assert_eq!(f.projection.mul(&b), b.mul(&f.projection));
        prop_assert_eq!(free.sub_log_size(&f.image) + free.sub_log_size(&f.kernel), n * k as u32);
        // the two parts meet trivially
        let both = free.submodule(&f.image.hstack(&f.kernel));
        prop_assert_eq!(free.sub_log_size(&both), n * k as u32);
    }

    #[test]
    fn charpoly_of_unimodular(seed in any::<u64>(), n in 1usize..=4) {
        let a = unimodular(seed, n);
        let r = charpoly_rational(&QMatrix::from_int(&a), true).unwrap();
        let (inv, inv_ok) = r.inverse.clone().unwrap();
        prop_assert!(r.integral && inv_ok);
        let c = &r.coeffs[0] * &inv[0];
        prop_assert!(c.abs().is_one());
    }

    #[test]
    fn relation_matrix_respects_sums(a in int_matrix(3, 12), b in int_matrix(3, 12)) {
        let ga = from_relation_matrix(a.rows(), &a).group;
        let gb = from_relation_matrix(b.rows(), &b).group;
        let joint = from_relation_matrix(a.rows() + b.rows(), &IntMatrix::block_diag(&[a, b])).group;
        prop_assert_eq!(joint, FgAbGroup::direct_sum(&[ga, gb]).group);
    }

    #[test]
    fn rank_profile_monotone(seed in any::<u64>(), p in prop::sample::select(vec![2u32, 3, 5])) {
        let mut g = rng(seed);
        let a = random_p_group(&mut g, p, 3);
        let k = g.gen_range(0..=2);
        let gens = IntMatrix::from_fn(a.ngens(), k, |_, _| BigInt::from(g.gen_range(-20..=20)));
        let full = rank_profile(&a, p).big_d;
        prop_assert!(rank_profile(&a.subgroup(&gens), p).big_d <= full);
        prop_assert!(rank_profile(&a.quotient(&gens).group, p).big_d <= full);
    }

    #[test]
    fn dimension_bound_holds(v in 0usize..=4, w in 0usize..=4) {
        let dims = homology_dims(v, w, 6);
        for (n, d) in dims.iter().enumerate() {
            prop_assert!(*d <= dimension_bound(n, v + w));
        }
    }

    #[test]
    fn induced_maps_compose(seed in any::<u64>(), p in prop::sample::select(vec![3u32, 5])) {
        let mut g = rng(seed);
        let dims: Vec<(usize, usize)> = (0..3).map(|_| (g.gen_range(0..=3), g.gen_range(0..=2))).collect();
        let h: Vec<_> = dims
            .iter()
            .map(|&(v, w)| homology_lambda_gamma(&FpMatrix::identity(p, v), &FpMatrix::identity(p, w), 5).unwrap())
            .collect();
        let (f1v, f1w) = (random_fp_matrix(&mut g, p, dims[1].0, dims[0].0), random_fp_matrix(&mut g, p, dims[1].1, dims[0].1));
        let (f2v, f2w) = (random_fp_matrix(&mut g, p, dims[2].0, dims[1].0), random_fp_matrix(&mut g, p, dims[2].1, dims[1].1));
        let a = induced_map(&h[0], &h[1], &f1v, &f1w).unwrap();
        let b = induced_map(&h[1], &h[2], &f2v, &f2w).unwrap();
        let ab = induced_map(&h[0], &h[2], &f2v.mul(&f1v), &f2w.mul(&f1w)).unwrap();
        prop_assert_eq!(a.compose(&b), ab);
    }

    #[test]
    fn slice_isomorphisms_give_homology_isomorphisms(seed in any::<u64>(), p in prop::sample::select(vec![3u32, 5])) {
        let mut g = rng(seed);
        let (v, w) = (g.gen_range(0..=3), g.gen_range(0..=2));
        let src = homology_lambda_gamma(&random_invertible(&mut g, p, v), &random_invertible(&mut g, p, w), 6).unwrap();
        let (fv, fw) = (random_invertible(&mut g, p, v), random_invertible(&mut g, p, w));
        let dst = homology_lambda_gamma(&fv.mul(&src.actions[1]).mul(&fv.inverse().unwrap()), &FpMatrix::identity(p, w), 6).unwrap();
        let f = induced_map(&src, &dst, &fv, &fw).unwrap();
        prop_assert_eq!(src.dims(), dst.dims());
        for b in &f.blocks {
            prop_assert_eq!(b.rank(), b.rows());
        }
    }

    #[test]
    fn two_column_totals(seed in any::<u64>(), p in prop::sample::select(vec![3u32, 5, 7])) {
        let mut g = rng(seed);
        let (v, w) = (g.gen_range(0..=3), g.gen_range(0..=2));
        let h = homology_lambda_gamma(&random_invertible(&mut g, p, v), &random_invertible(&mut g, p, w), 6).unwrap();
        let r = two_column_semidirect(&h, None);
        for d in &r.degrees {
            prop_assert_eq!(d.total, d.coinvariants + d.invariants);
        }
    }
}

/// Automorphism of `⊕ Z/p^{e_i}`: units on the diagonal, multiples of `p`
/// (scaled to respect the relations) elsewhere.
fn random_automorphism(g: &mut impl Rng, grp: &FgAbGroup, p: u32) -> IntMatrix {
    let k = grp.ngens();
    let order = |i: usize| grp.order_of_gen(i);
    IntMatrix::from_fn(k, k, |i, j| {
        if i == j {
            let mut u: i64 = g.gen_range(1..i64::from(p));
            if g.gen_bool(0.5) {
                u += i64::from(p);
            }
            BigInt::from(u)
        } else {
            let (oi, oj) = (order(i), order(j));
            let scale = if oj.is_zero() || oi.is_zero() || oi <= oj { BigInt::one() } else { &oi / &oj };
            let x = if oj.is_zero() && !oi.is_zero() { BigInt::zero() } else { BigInt::from(g.gen_range(0..i64::from(p))) };
            x * scale * BigInt::from(p)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_route_matches_formula(seed in any::<u64>(), p in prop::sample::select(vec![3u32, 5])) {
        let mut g = rng(seed);
        let k = g.gen_range(1..=2);
        let mut exps: Vec<u32> = (0..k).map(|_| g.gen_range(1..=2)).collect();
        exps.sort_unstable();
        let grp = FgAbGroup::new(exps.iter().map(|&e| BigInt::from(p).pow(e)).collect(), 0);
        let a = random_automorphism(&mut g, &grp, p);
        let m = grp.with_action(a).unwrap();
        let r = chain_formula_agreement(&m, p, 4).unwrap();
        prop_assert!(r.formula.is_some());
        prop_assert!(r.agrees(), "{:?}", r);
    }

    #[test]
    fn towers_have_surjective_bounded_slices(seed in any::<u64>(), p in prop::sample::select(vec![2u32, 3, 5])) {
        let a = unimodular(seed, 2);
        let m = CModule::lattice(a).unwrap();
        let t = completion_tower(&m, Flavor::Ip(p), p, 6, 24).unwrap();
        for d in 1..t.stages.len() {
            let (v, _) = t.slice_composite(d + 1, d);
            prop_assert_eq!(v.rank(), v.rows());
            prop_assert!(rank_profile(t.stage(d), p).big_d <= 2);
        }
        // once the factors stop moving they stay put
        let idx = t.report.index;
        for d in idx..t.stages.len() {
            prop_assert_eq!(mgc_core::cmod::truncated_factors(t.stage(d), p, 6), t.report.truncated.clone());
        }
    }
}

#[test]
fn ill_formed_homs_are_rejected() {
    let z2 = FgAbGroup::new(vec![BigInt::from(2)], 0);
    let z4 = FgAbGroup::new(vec![BigInt::from(4)], 0);
    assert!(AbHom::new(z2.clone(), z4.clone(), IntMatrix::from_rows(&[vec![1]])).is_err());
    assert!(AbHom::new(z2, z4, IntMatrix::from_rows(&[vec![2]])).is_ok());
}
