//! Mod-p homology of abelian groups with a t-action through the
//! `Λ(A/p) ⊗ Γ(pA)` model, induced maps, and the two-column assembly for
//! `M ⋊ C`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::abgrp::{induced_on_slices, AbError, AbHom};
use crate::linalg::FpMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error("Λ⊗Γ model is not used at p = 2 when the p-torsion slice is nonzero")]
    UnsupportedAtTwo,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Ab(#[from] AbError),
}

/// Increasing `a`-subsets of `0..n`, lexicographic.
pub fn subsets(n: usize, a: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(a);
    fn rec(start: usize, n: usize, a: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == a {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < a - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, a, cur, out);
            cur.pop();
        }
    }
    rec(0, n, a, &mut cur, &mut out);
    out
}

/// Exponent vectors of degree `b` in `n` variables, lexicographically descending.
pub fn monomials(n: usize, b: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let n = cur.len();
        if i + 1 == n {
            cur[i] = left;
            out.push(cur.clone());
            cur[i] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    if n == 0 {
        if b == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, b as u32, &mut cur, &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// `Λ^a(f)` from `a×a` minors.
pub fn exterior_power(f: &FpMatrix, a: usize) -> FpMatrix {
    let rs = subsets(f.rows(), a);
    let cs = subsets(f.cols(), a);
    let mut out = FpMatrix::zeros(f.p(), rs.len(), cs.len());
    for (i, r) in rs.iter().enumerate() {
        for (j, c) in cs.iter().enumerate() {
            out[(i, j)] = f.submatrix(r, c).det();
        }
    }
    out
}

/// `Sym^b(g)`: a monomial `x^α` goes to `Π_j (g x_j)^{α_j}`.
pub fn symmetric_power(g: &FpMatrix, b: usize) -> FpMatrix {
    let p = g.p() as u64;
    let src = monomials(g.cols(), b);
    let dst = monomials(g.rows(), b);
    let index: BTreeMap<&Vec<u32>, usize> = dst.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut out = FpMatrix::zeros(g.p(), dst.len(), src.len());
    for (j, alpha) in src.iter().enumerate() {
        let mut poly: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        poly.insert(vec![0; g.rows()], 1 % p);
        for (var, &e) in alpha.iter().enumerate() {
            for _ in 0..e {
                let mut next: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
                for (mono, c) in &poly {
                    for i in 0..g.rows() {
                        let gi = g[(i, var)] as u64;
                        if gi == 0 {
                            continue;
                        }
                        let mut m2 = mono.clone();
                        m2[i] += 1;
                        let slot = next.entry(m2).or_insert(0);
                        *slot = (*slot + c * gi) % p;
                    }
                }
                poly = next;
            }
        }
        for (mono, c) in poly {
            if c != 0 {
                out[(index[&mono], j)] = c as u32;
            }
        }
    }
    out
}

/// `Γ^b(f)` as the transpose of `Sym^b(f^T)`.
pub fn divided_power(f: &FpMatrix, b: usize) -> FpMatrix {
    symmetric_power(&f.transpose(), b).transpose()
}

/// Basis element `v_S ⊗ w^[α]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisLabel {
    pub exterior: Vec<usize>,
    pub divided: Vec<u32>,
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.exterior.iter().map(|i| alloc::format!("v{}", i)).collect();
        for (i, &e) in self.divided.iter().enumerate() {
            if e > 0 {
                parts.push(alloc::format!("w{}^[{}]", i, e));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("·"))
        }
    }
}

/// `(a, b)` with `a + 2b = n`, in the block order used everywhere below.
fn blocks(n: usize, v: usize) -> Vec<(usize, usize)> {
    (0..=n / 2).map(|b| (n - 2 * b, b)).filter(|&(a, _)| a <= v).collect()
}

/// Formula dimensions of `H_n`, `n ≤ nmax`.
pub fn homology_dims(v: usize, w: usize, nmax: usize) -> Vec<usize> {
    (0..=nmax)
        .map(|n| {
            blocks(n, v)
                .into_iter()
                .map(|(a, b)| binomial(v, a) * if w == 0 { usize::from(b == 0) } else { binomial(w + b - 1, b) })
                .sum()
        })
        .collect()
}

/// `(n+1)^(D-1)` (and 1 when `D = 0`).
pub fn dimension_bound(n: usize, big_d: usize) -> usize {
    if big_d == 0 {
        1
    } else {
        (n + 1).pow(big_d as u32 - 1)
    }
}

/// Graded `Z/p[t^±]`-module `H_*(A, Z/p)`, degrees `0..=nmax`.
#[derive(Clone, Debug)]
pub struct GradedCModule {
    pub p: u32,
    pub nmax: usize,
    pub v_dim: usize,
    pub w_dim: usize,
    pub actions: Vec<FpMatrix>,
    pub labels: Vec<Vec<BasisLabel>>,
}

impl GradedCModule {
    pub fn dim(&self, n: usize) -> usize {
        self.actions[n].rows()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a.rows()).collect()
    }

    /// The t-action on `H_*` of a trivial-coefficient group (degree 0 only).
    pub fn trivial(p: u32, nmax: usize) -> Self {
        homology_lambda_gamma(&FpMatrix::zeros(p, 0, 0), &FpMatrix::zeros(p, 0, 0), nmax).expect("trivial group")
    }
}

/// A graded linear map, one matrix per degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedMap {
    pub p: u32,
    pub blocks: Vec<FpMatrix>,
}

impl GradedMap {
    pub fn compose(&self, after: &GradedMap) -> GradedMap {
        GradedMap { p: self.p, blocks: self.blocks.iter().zip(&after.blocks).map(|(f, g)| g.mul(f)).collect() }
    }

    pub fn is_zero_from(&self, n0: usize) -> bool {
        self.blocks.iter().skip(n0).all(|b| b.is_zero())
    }

    pub fn is_surjective(&self, n: usize) -> bool {
        self.blocks[n].rank() == self.blocks[n].rows()
    }
}

fn lambda_gamma_map(fv: &FpMatrix, fw: &FpMatrix, nmax: usize) -> Vec<FpMatrix> {
    let p = fv.p();
    (0..=nmax)
        .map(|n| {
            // the block shapes have to follow both source and target ranges
            let src: Vec<(usize, usize)> = blocks(n, fv.cols());
            let dst: Vec<(usize, usize)> = blocks(n, fv.rows());
            let mut parts = Vec::new();
            for b in 0..=n / 2 {
                let a = n - 2 * b;
                let (in_src, in_dst) = (src.contains(&(a, b)), dst.contains(&(a, b)));
                let l = exterior_power(fv, a);
                let g = divided_power(fw, b);
                let k = l.kron(&g);
                let rows = if in_dst { k.rows() } else { 0 };
                let cols = if in_src { k.cols() } else { 0 };
                let all_r: Vec<usize> = (0..rows).collect();
                let all_c: Vec<usize> = (0..cols).collect();
                parts.push(k.submatrix(&all_r, &all_c));
            }
            FpMatrix::block_diag(p, &parts)
        })
        .collect()
}

/// `H_n = ⊕_{a+2b=n} Λ^a V ⊗ Γ^b W` with the functorially induced action.
pub fn homology_lambda_gamma(v_action: &FpMatrix, w_action: &FpMatrix, nmax: usize) -> Result<GradedCModule, HomError> {
    let p = v_action.p();
    if !v_action.is_square() || !w_action.is_square() || w_action.p() != p {
        return Err(HomError::ShapeMismatch(String::from("slice actions must be square over the same field")));
    }
    let (v, w) = (v_action.rows(), w_action.rows());
    if p == 2 && w > 0 {
        return Err(HomError::UnsupportedAtTwo);
    }
    let actions = lambda_gamma_map(v_action, w_action, nmax);
    let labels = (0..=nmax)
        .map(|n| {
            let mut out = Vec::new();
            for (a, b) in blocks(n, v) {
                for s in subsets(v, a) {
                    for m in monomials(w, b) {
                        out.push(BasisLabel { exterior: s.clone(), divided: m });
                    }
                }
            }
            out
        })
        .collect::<Vec<_>>();
    let dims = homology_dims(v, w, nmax);
    for n in 0..=nmax {
        debug_assert_eq!(actions[n].rows(), dims[n]);
        debug_assert_eq!(labels[n].len(), dims[n]);
    }
    Ok(GradedCModule { p, nmax, v_dim: v, w_dim: w, actions, labels })
}

/// `Λ^a(fV) ⊗ Γ^b(fW)` per degree between two graded modules.
pub fn induced_map(src: &GradedCModule, dst: &GradedCModule, fv: &FpMatrix, fw: &FpMatrix) -> Result<GradedMap, HomError> {
    if (fv.rows(), fv.cols()) != (dst.v_dim, src.v_dim) || (fw.rows(), fw.cols()) != (dst.w_dim, src.w_dim) {
        return Err(HomError::ShapeMismatch(alloc::format!(
            "slice maps {}x{} and {}x{} do not fit V {}→{}, W {}→{}",
            fv.rows(),
            fv.cols(),
            fw.rows(),
            fw.cols(),
            src.v_dim,
            dst.v_dim,
            src.w_dim,
            dst.w_dim
        )));
    }
    if src.p != dst.p || fv.p() != src.p || fw.p() != src.p {
        return Err(HomError::ShapeMismatch(String::from("different primes")));
    }
    if src.p == 2 && (src.w_dim > 0 || dst.w_dim > 0) {
        return Err(HomError::UnsupportedAtTwo);
    }
    let nmax = src.nmax.min(dst.nmax);
    Ok(GradedMap { p: src.p, blocks: lambda_gamma_map(fv, fw, nmax) })
}

/// Solves `f s = id`, `t_src s = s t_dst` for a section `s`.
pub fn equivariant_section(f: &FpMatrix, t_src: &FpMatrix, t_dst: &FpMatrix) -> Option<FpMatrix> {
    let p = f.p();
    let (m, n) = (f.cols(), f.rows());
    if n == 0 {
        return Some(FpMatrix::zeros(p, m, 0));
    }
    // column-major vec(s); vec(A X B) = (B^T ⊗ A) vec(X)
    let eq1 = FpMatrix::identity(p, n).kron(f);
    let eq2 = FpMatrix::identity(p, n).kron(t_src).sub(&t_dst.transpose().kron(&FpMatrix::identity(p, m)));
    let sys = eq1.vstack(&eq2);
    let mut rhs = FpMatrix::zeros(p, sys.rows(), 1);
    for j in 0..n {
        rhs[(j * n + j, 0)] = 1;
    }
    let x = sys.solve(&rhs)?;
    let s = FpMatrix::from_fn(p, m, n, |i, j| x[(j * m + i, 0)] as i64);
    debug_assert!(f.mul(&s).is_identity());
    Some(s)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoColumnDegree {
    pub n: usize,
    /// `dim H_0(C, H_n(M))`
    pub coinvariants: usize,
    /// `dim H_1(C, H_{n-1}(M))`
    pub invariants: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonDegree {
    pub n: usize,
    pub coinvariants_surjective: bool,
    pub invariants_surjective: bool,
    /// both outer maps onto, hence the middle one by the four lemma
    pub certified_surjective: bool,
    /// bounds for the kernel dimension of the middle map
    pub kernel_interval: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoColumnReport {
    pub degrees: Vec<TwoColumnDegree>,
    pub comparison: Option<Vec<ComparisonDegree>>,
}

impl TwoColumnReport {
    pub fn totals(&self) -> Vec<usize> {
        self.degrees.iter().map(|d| d.total).collect()
    }
}

fn coinvariant_dim(t: &FpMatrix) -> usize {
    t.rows() - t.sub(&FpMatrix::identity(t.p(), t.rows())).rank()
}

/// Two-column assembly of `H_*(M ⋊ C)`; with a comparison map also the
/// surjectivity certificate and the kernel interval per degree.
pub fn two_column_semidirect(h: &GradedCModule, comparison: Option<(&GradedCModule, &GradedMap)>) -> TwoColumnReport {
    let nmax = h.nmax;
    let coinv: Vec<usize> = h.actions.iter().map(coinvariant_dim).collect();
    let degrees = (0..=nmax)
        .map(|n| {
            let c = coinv[n];
            let i = if n == 0 { 0 } else { coinv[n - 1] };
            TwoColumnDegree { n, coinvariants: c, invariants: i, total: c + i }
        })
        .collect();
    let comparison = comparison.map(|(target, f)| compare(h, target, f));
    TwoColumnReport { degrees, comparison }
}

/// Outer-map data for one degree: `(rank, ker, coker)` on coinvariants and invariants.
fn outer_maps(h: &GradedCModule, target: &GradedCModule, f: &GradedMap, n: usize) -> ((usize, usize, usize), (usize, usize, usize)) {
    let p = h.p;
    let (t, t2, fm) = (&h.actions[n], &target.actions[n], &f.blocks[n]);
    debug_assert_eq!(fm.mul(t), t2.mul(fm), "comparison map must be t-equivariant");
    let a2 = t2.sub(&FpMatrix::identity(p, t2.rows()));
    let r_a2 = a2.rank();
    let rank1 = fm.hstack(&a2).rank() - r_a2;
    let coinv_src = coinvariant_dim(t);
    let coinv_dst = t2.rows() - r_a2;
    let c = (rank1, coinv_src - rank1, coinv_dst - rank1);
    let k = t.sub(&FpMatrix::identity(p, t.rows())).kernel();
    let k2 = a2.kernel().cols();
    let rank3 = fm.mul(&k).rank();
    let i = (rank3, k.cols() - rank3, k2 - rank3);
    (c, i)
}

fn compare(h: &GradedCModule, target: &GradedCModule, f: &GradedMap) -> Vec<ComparisonDegree> {
    let nmax = h.nmax.min(target.nmax).min(f.blocks.len() - 1);
    (0..=nmax)
        .map(|n| {
            let (c, _) = outer_maps(h, target, f, n);
            let inv = if n == 0 { (0, 0, 0) } else { outer_maps(h, target, f, n - 1).1 };
            // 0 → H_0(C,H_n) → H_n(G) → H_1(C,H_{n-1}) → 0 on both sides; snake lemma
            let lower = c.1 + inv.1.saturating_sub(c.2);
            let upper = c.1 + inv.1;
            ComparisonDegree {
                n,
                coinvariants_surjective: c.2 == 0,
                invariants_surjective: inv.2 == 0,
                certified_surjective: c.2 == 0 && inv.2 == 0,
                kernel_interval: (lower, upper),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct H2Certificate {
    /// `H_1` map (the map on `A/p`)
    pub h1_map: FpMatrix,
    pub lambda2: FpMatrix,
    pub torsion_map: FpMatrix,
    pub surjective: bool,
    pub kernel_interval: (usize, usize),
}

/// Degree-2 data from the natural sequence `Λ²(A/p) ↣ H_2(A) ↠ pA`, valid at every p.
pub fn h2_certificates(f: &AbHom, p: u32) -> Result<H2Certificate, HomError> {
    let (fv, fw) = induced_on_slices(f, p)?;
    Ok(h2_from_slices(&fv, &fw))
}

pub fn h2_from_slices(fv: &FpMatrix, fw: &FpMatrix) -> H2Certificate {
    let l2 = exterior_power(fv, 2);
    let r1 = l2.rank();
    let r3 = fw.rank();
    let (ker1, coker1) = (l2.cols() - r1, l2.rows() - r1);
    let (ker3, coker3) = (fw.cols() - r3, fw.rows() - r3);
    H2Certificate {
        h1_map: fv.clone(),
        lambda2: l2,
        torsion_map: fw.clone(),
        surjective: coker1 == 0 && coker3 == 0,
        kernel_interval: (ker1 + ker3.saturating_sub(coker1), ker1 + ker3),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(p: u32, rows: &[Vec<i64>]) -> FpMatrix {
        FpMatrix::from_rows(p, rows)
    }

    #[test]
    fn cyclic_group_dims() {
        let h = homology_lambda_gamma(&fp(3, &[vec![1]]), &fp(3, &[vec![1]]), 6).unwrap();
        assert_eq!(h.dims(), vec![1; 7]);
        let h = homology_lambda_gamma(&fp(2, &[vec![1]]), &FpMatrix::zeros(2, 0, 0), 4).unwrap();
        assert_eq!(h.dims(), vec![1, 1, 0, 0, 0]);
    }

    #[test]
    fn tight_bound_example() {
        let id = FpMatrix::identity(3, 2);
        let h = homology_lambda_gamma(&id, &id, 3).unwrap();
        assert_eq!(h.dim(2), 3);
        assert_eq!(dimension_bound(2, 2), 3);
    }

    #[test]
    fn unsupported_at_two() {
        let one = fp(2, &[vec![1]]);
        assert_eq!(homology_lambda_gamma(&one, &one, 3).unwrap_err(), HomError::UnsupportedAtTwo);
    }

    #[test]
    fn divided_power_of_scalar() {
        // Γ^b(c) = c^b on a line
        let g = divided_power(&fp(5, &[vec![2]]), 3);
        assert_eq!(g[(0, 0)], 3);
        // Λ^2 of a 2x2 matrix is its determinant
        let l = exterior_power(&fp(7, &[vec![1, 2], vec![3, 4]]), 2);
        assert_eq!(l[(0, 0)], 5);
    }

    #[test]
    fn two_column_examples() {
        let klein = homology_lambda_gamma(&fp(2, &[vec![1]]), &FpMatrix::zeros(2, 0, 0), 3).unwrap();
        assert_eq!(two_column_semidirect(&klein, None).totals(), vec![1, 2, 1, 0]);
        let torus = homology_lambda_gamma(&fp(3, &[vec![1, 0], vec![0, 1]]), &FpMatrix::zeros(3, 0, 0), 3).unwrap();
        assert_eq!(two_column_semidirect(&torus, None).totals(), vec![1, 3, 3, 1]);
    }

    #[test]
    fn zero_and_identity_maps() {
        let h = homology_lambda_gamma(&FpMatrix::identity(5, 1), &FpMatrix::identity(5, 1), 5).unwrap();
        let z = induced_map(&h, &h, &FpMatrix::zeros(5, 1, 1), &FpMatrix::zeros(5, 1, 1)).unwrap();
        assert!(z.is_zero_from(1));
        let id = induced_map(&h, &h, &FpMatrix::identity(5, 1), &FpMatrix::identity(5, 1)).unwrap();
        assert!(id.blocks.iter().all(|b| b.is_identity()));
        let bad = induced_map(&h, &h, &FpMatrix::zeros(5, 2, 1), &FpMatrix::zeros(5, 1, 1));
        assert!(matches!(bad, Err(HomError::ShapeMismatch(_))));
    }

    #[test]
    fn section_search() {
        let f = fp(3, &[vec![1, 0]]);
        let t = fp(3, &[vec![1, 0], vec![0, 2]]);
        let s = equivariant_section(&f, &t, &fp(3, &[vec![1]])).unwrap();
        assert!(f.mul(&s).is_identity());
        // no equivariant section when the target eigenvalue is missing upstairs
        assert!(equivariant_section(&f, &fp(3, &[vec![1, 0], vec![0, 1]]), &fp(3, &[vec![2]])).is_none());
    }

    #[test]
    fn h2_identity() {
        let c = h2_from_slices(&FpMatrix::identity(3, 2), &FpMatrix::identity(3, 1));
        assert!(c.surjective);
        assert_eq!(c.kernel_interval, (0, 0));
    }
}
