//! Seeded random generators shared by tests, the acceptance suite and the CLI.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use num_bigint::BigInt;

use crate::abgrp::{AbHom, FgAbGroup};
use crate::linalg::{FpMatrix, IntMatrix};

pub use rand::SeedableRng;
pub type FuzzRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FuzzRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_fp_matrix<R: Rng>(rng: &mut R, p: u32, rows: usize, cols: usize) -> FpMatrix {
    FpMatrix::from_fn(p, rows, cols, |_, _| i64::from(rng.gen_range(0..p)))
}

/// Random element of `GL_n(F_p)` (rejection sampling).
pub fn random_invertible<R: Rng>(rng: &mut R, p: u32, n: usize) -> FpMatrix {
    loop {
        let m = random_fp_matrix(rng, p, n, n);
        if m.rank() == n {
            return m;
        }
    }
}

pub fn random_int_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, bound: i64) -> IntMatrix {
    IntMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-bound..=bound).into())
}

/// Random `(v, w)` slice dimensions with `w ≤ v ≤ max`.
pub fn random_slice_dims<R: Rng>(rng: &mut R, max: usize) -> (usize, usize) {
    let v = rng.gen_range(0..=max);
    (v, rng.gen_range(0..=v))
}

/// Random pair of actions on slices of the given dimensions.
pub fn random_slice_actions<R: Rng>(rng: &mut R, p: u32, v: usize, w: usize) -> (FpMatrix, FpMatrix) {
    (random_invertible(rng, p, v), random_invertible(rng, p, w))
}

pub fn random_vec<R: Rng>(rng: &mut R, p: u32, n: usize) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..p)).collect()
}

/// Small p-group, sometimes with one `Z` summand.
pub fn random_p_group<R: Rng>(rng: &mut R, p: u32, max_exp: u32) -> FgAbGroup {
    let k = rng.gen_range(1..=2);
    let mut exps: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=max_exp)).collect();
    exps.sort_unstable();
    let free = usize::from(rng.gen_bool(0.25));
    FgAbGroup::new(exps.into_iter().map(|e| BigInt::from(p).pow(e)).collect(), free)
}

/// `p·g : A → B` for a random homomorphism `g`; both slice maps vanish.
pub fn random_zero_slice_hom<R: Rng>(rng: &mut R, p: u32, max_exp: u32) -> AbHom {
    let a = random_p_group(rng, p, max_exp);
    let b = random_p_group(rng, p, max_exp);
    let pb = BigInt::from(p);
    let m = IntMatrix::from_fn(b.ngens(), a.ngens(), |i, j| {
        let (src, dst) = (a.order_of_gen(j), b.order_of_gen(i));
        let x = BigInt::from(rng.gen_range(0..p * p));
        let base = if src == BigInt::from(0) {
            x
        } else if dst == BigInt::from(0) {
            BigInt::from(0)
        } else if dst > src {
            x * (&dst / &src)
        } else {
            x
        };
        base * &pb
    });
    AbHom::new(a, b, m).expect("well-defined by construction")
}
