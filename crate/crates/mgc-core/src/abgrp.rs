//! Finitely generated abelian groups in invariant-factor form, homomorphisms
//! between them and the two mod-p slices `A/p` and `pA` (the p-torsion).

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::linalg::{smith_normal_form, FpMatrix, IntMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbError {
    #[error("matrix does not send relations of the source into relations of the target")]
    IllFormedHom,
    #[error("action matrix is not an automorphism of the group")]
    NotAnAutomorphism,
}

/// `Z/d_1 ⊕ … ⊕ Z/d_k ⊕ Z^r` with `d_1 | … | d_k`, `d_i ≥ 2`, torsion
/// generators first. The optional action records the image of each
/// generator (columns).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FgAbGroup {
    torsion: Vec<BigInt>,
    free_rank: usize,
    action: Option<IntMatrix>,
}

/// A presented group together with coordinate changes to and from the
/// original generators.
#[derive(Clone, Debug)]
pub struct Presented {
    pub group: FgAbGroup,
    /// new coordinates = `proj * old coordinates` (then normalized)
    pub proj: IntMatrix,
    /// column `j` is an old-coordinate lift of new generator `j`
    pub lift: IntMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankProfile {
    pub d_q: usize,
    pub d_p: usize,
    pub big_d: usize,
    pub dim_mod_p: usize,
}

impl FgAbGroup {
    pub fn new(torsion: Vec<BigInt>, free_rank: usize) -> Self {
        for w in torsion.windows(2) {
            assert!(w[1].is_multiple_of(&w[0]), "torsion factors must form a divisibility chain");
        }
        assert!(torsion.iter().all(|d| *d >= BigInt::from(2)), "torsion factors must be at least 2");
        FgAbGroup { torsion, free_rank, action: None }
    }

    pub fn free(rank: usize) -> Self {
        Self::new(Vec::new(), rank)
    }

    pub fn trivial() -> Self {
        Self::free(0)
    }

    /// Any list of cyclic orders (0 meaning Z); normalized through SNF.
    pub fn from_cyclic_orders(orders: &[i64]) -> Self {
        let n = orders.len();
        let rel = IntMatrix::from_fn(n, n, |i, j| if i == j { BigInt::from(orders[i]) } else { BigInt::zero() });
        from_relation_matrix(n, &rel).group
    }

    pub fn torsion(&self) -> &[BigInt] {
        &self.torsion
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn ngens(&self) -> usize {
        self.torsion.len() + self.free_rank
    }

    pub fn is_trivial(&self) -> bool {
        self.ngens() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    /// Order of generator `i` (0 for free generators).
    pub fn order_of_gen(&self, i: usize) -> BigInt {
        self.torsion.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Group order, `None` if infinite.
    pub fn order(&self) -> Option<BigInt> {
        self.is_finite().then(|| self.torsion.iter().product())
    }

    pub fn action(&self) -> Option<&IntMatrix> {
        self.action.as_ref()
    }

    pub fn action_or_identity(&self) -> IntMatrix {
        self.action.clone().unwrap_or_else(|| IntMatrix::identity(self.ngens()))
    }

    /// Attaches an automorphism; validates well-definedness and bijectivity.
    pub fn with_action(mut self, a: IntMatrix) -> Result<Self, AbError> {
        assert_eq!((a.rows(), a.cols()), (self.ngens(), self.ngens()), "action shape");
        let a = self.normalize_matrix(&a);
        if !self.respects(&self, &a) || !self.is_automorphism(&a) {
            return Err(AbError::NotAnAutomorphism);
        }
        self.action = Some(a);
        Ok(self)
    }

    pub fn without_action(&self) -> Self {
        FgAbGroup { torsion: self.torsion.clone(), free_rank: self.free_rank, action: None }
    }

    /// Reduces torsion coordinates into `[0, d_i)`.
    pub fn normalize(&self, x: &[BigInt]) -> Vec<BigInt> {
        x.iter()
            .enumerate()
            .map(|(i, v)| if i < self.torsion.len() { v.mod_floor(&self.torsion[i]) } else { v.clone() })
            .collect()
    }

    /// Normalizes every column of a matrix whose rows are coordinates here.
    pub fn normalize_matrix(&self, m: &IntMatrix) -> IntMatrix {
        IntMatrix::from_fn(m.rows(), m.cols(), |i, j| {
            if i < self.torsion.len() {
                m[(i, j)].mod_floor(&self.torsion[i])
            } else {
                m[(i, j)].clone()
            }
        })
    }

    pub fn is_zero_elem(&self, x: &[BigInt]) -> bool {
        self.normalize(x).iter().all(|v| v.is_zero())
    }

    /// Whether `m` (columns = images of our generators in `target`) is well defined.
    pub fn respects(&self, target: &FgAbGroup, m: &IntMatrix) -> bool {
        if m.rows() != target.ngens() || m.cols() != self.ngens() {
            return false;
        }
        (0..self.torsion.len()).all(|j| {
            let col: Vec<BigInt> = m.col(j).iter().map(|x| x * &self.torsion[j]).collect();
            target.is_zero_elem(&col)
        })
    }

    fn is_automorphism(&self, a: &IntMatrix) -> bool {
        // free block must be unimodular; torsion block invertible mod the
        // torsion subgroup (checked by counting the image of each prime slice)
        let k = self.torsion.len();
        let r = self.free_rank;
        let free: Vec<usize> = (k..k + r).collect();
        let fb = a.submatrix(&free, &free);
        if r > 0 && fb.det().abs() != BigInt::one() {
            return false;
        }
        if k == 0 {
            return true;
        }
        // torsion part: the map is injective on a finite group iff its
        // relation lattice has the same index
        let tors: Vec<usize> = (0..k).collect();
        let tb = a.submatrix(&tors, &tors);
        let d = IntMatrix::from_diag(&self.torsion);
        let img = tb.hstack(&d);
        let s = smith_normal_form(&img);
        let idx: BigInt = s.diag.iter().filter(|x| !x.is_zero()).product();
        s.rank() == k && idx.abs() == BigInt::one()
    }

    /// Quotient by the subgroup generated by the columns of `gens`.
    pub fn quotient(&self, gens: &IntMatrix) -> Presented {
        assert_eq!(gens.rows(), self.ngens());
        let rel = IntMatrix::from_diag(&self.torsion_padded()).hstack(gens);
        let mut pres = from_relation_matrix(self.ngens(), &rel);
        if let Some(a) = &self.action {
            let na = pres.proj.mul(a).mul(&pres.lift);
            let na = pres.group.normalize_matrix(&na);
            pres.group.action = Some(na);
        }
        pres
    }

    fn torsion_padded(&self) -> Vec<BigInt> {
        let mut d = self.torsion.clone();
        d.extend(core::iter::repeat_n(BigInt::zero(), self.free_rank));
        d
    }

    /// Isomorphism type of the subgroup generated by the columns of `gens`.
    pub fn subgroup(&self, gens: &IntMatrix) -> FgAbGroup {
        let m = gens.cols();
        let rel = gens.hstack(&IntMatrix::from_diag(&self.torsion_padded()));
        let ker = rel.integer_kernel();
        let top: Vec<usize> = (0..m).collect();
        let cols: Vec<usize> = (0..ker.cols()).collect();
        let k = ker.submatrix(&top, &cols);
        from_relation_matrix(m, &k).group
    }

    pub fn direct_sum(parts: &[FgAbGroup]) -> Presented {
        let orders: Vec<BigInt> = parts.iter().flat_map(|g| g.torsion_padded()).collect();
        let n = orders.len();
        let rel = IntMatrix::from_diag(&orders);
        let mut pres = from_relation_matrix(n, &rel);
        if parts.iter().any(|g| g.action.is_some()) {
            let blocks: Vec<IntMatrix> = parts.iter().map(|g| g.action_or_identity()).collect();
            let a = IntMatrix::block_diag(&blocks);
            let na = pres.proj.mul(&a).mul(&pres.lift);
            pres.group.action = Some(pres.group.normalize_matrix(&na));
        }
        pres
    }

    /// Indices of generators surviving in `A/p` (free ones and torsion with `p | d`).
    pub fn slice_v_gens(&self, p: u32) -> Vec<usize> {
        let pb = BigInt::from(p);
        (0..self.ngens()).filter(|&i| i >= self.torsion.len() || self.torsion[i].is_multiple_of(&pb)).collect()
    }

    /// Indices of torsion generators contributing to the p-torsion.
    pub fn slice_w_gens(&self, p: u32) -> Vec<usize> {
        let pb = BigInt::from(p);
        (0..self.torsion.len()).filter(|&i| self.torsion[i].is_multiple_of(&pb)).collect()
    }

    /// Quotient by the prime-to-p torsion: kept generators and the new group.
    /// Each kept torsion factor `d` becomes its p-part `p^v`.
    pub fn p_primary(&self, p: u32) -> (FgAbGroup, Vec<usize>) {
        let pb = BigInt::from(p);
        let mut keep = Vec::new();
        let mut tors = Vec::new();
        for (i, d) in self.torsion.iter().enumerate() {
            let mut pv = BigInt::one();
            let mut rest = d.clone();
            while rest.is_multiple_of(&pb) {
                rest /= &pb;
                pv *= &pb;
            }
            if pv > BigInt::one() {
                keep.push(i);
                tors.push(pv);
            }
        }
        let k = self.torsion.len();
        keep.extend(k..k + self.free_rank);
        let mut g = FgAbGroup { torsion: tors, free_rank: self.free_rank, action: None };
        // divisibility chain survives taking p-parts of a chain
        if let Some(a) = &self.action {
            let sub = a.submatrix(&keep, &keep);
            g.action = Some(g.normalize_matrix(&sub));
        }
        (g, keep)
    }
}

impl IntMatrix {
    /// Basis (columns) of the integer kernel, from the SNF column transform.
    pub fn integer_kernel(&self) -> IntMatrix {
        let s = smith_normal_form(self);
        let r = s.rank();
        let rows: Vec<usize> = (0..self.cols()).collect();
        let cols: Vec<usize> = (r..self.cols()).collect();
        s.v.submatrix(&rows, &cols)
    }
}

/// `Z^gens / (column span of relations)` in invariant-factor form.
pub fn from_relation_matrix(gens: usize, relations: &IntMatrix) -> Presented {
    assert_eq!(relations.rows(), gens, "relation matrix must have one row per generator");
    let s = smith_normal_form(relations);
    let mut tors_idx = Vec::new();
    let mut free_idx = Vec::new();
    let mut torsion = Vec::new();
    for i in 0..gens {
        let d = s.diag.get(i).cloned().unwrap_or_else(BigInt::zero);
        if d.is_zero() {
            free_idx.push(i);
        } else if d.abs() != BigInt::one() {
            tors_idx.push(i);
            torsion.push(d.abs());
        }
    }
    let free_rank = free_idx.len();
    let keep: Vec<usize> = tors_idx.iter().chain(free_idx.iter()).copied().collect();
    let all: Vec<usize> = (0..gens).collect();
    let proj = s.u.submatrix(&keep, &all);
    let lift = s.u_inv.submatrix(&all, &keep);
    let group = FgAbGroup { torsion, free_rank, action: None };
    let proj = group.normalize_matrix(&proj);
    Presented { group, proj, lift }
}

pub fn rank_profile(a: &FgAbGroup, p: u32) -> RankProfile {
    let d_q = a.free_rank;
    let d_p = a.slice_w_gens(p).len();
    let dim_mod_p = a.slice_v_gens(p).len();
    let big_d = d_q + d_p;
    assert!(dim_mod_p <= big_d);
    RankProfile { d_q, d_p, big_d, dim_mod_p }
}

/// A homomorphism `source → target`; columns are images of source generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbHom {
    pub source: FgAbGroup,
    pub target: FgAbGroup,
    pub matrix: IntMatrix,
}

impl AbHom {
    pub fn new(source: FgAbGroup, target: FgAbGroup, matrix: IntMatrix) -> Result<Self, AbError> {
        if !source.respects(&target, &matrix) {
            return Err(AbError::IllFormedHom);
        }
        let matrix = target.normalize_matrix(&matrix);
        Ok(AbHom { source, target, matrix })
    }

    pub fn identity(g: &FgAbGroup) -> Self {
        AbHom { source: g.clone(), target: g.clone(), matrix: IntMatrix::identity(g.ngens()) }
    }

    pub fn compose(&self, after: &AbHom) -> AbHom {
        let m = after.target.normalize_matrix(&after.matrix.mul(&self.matrix));
        AbHom { source: self.source.clone(), target: after.target.clone(), matrix: m }
    }

    pub fn apply(&self, x: &[BigInt]) -> Vec<BigInt> {
        self.target.normalize(&self.matrix.mul_vec(x))
    }
}

fn mod_p(x: &BigInt, p: u32) -> i64 {
    x.mod_floor(&BigInt::from(p)).to_i64().unwrap()
}

/// Matrices of `A/p → B/p` and `pA → pB` over Z/p in the standard slice
/// bases (generator images for `A/p`, `(d/p)·e` for the p-torsion).
pub fn induced_on_slices(f: &AbHom, p: u32) -> Result<(FpMatrix, FpMatrix), AbError> {
    if !f.source.respects(&f.target, &f.matrix) {
        return Err(AbError::IllFormedHom);
    }
    Ok(slice_matrices(&f.source, &f.target, &f.matrix, p))
}

pub(crate) fn slice_matrices(src: &FgAbGroup, dst: &FgAbGroup, m: &IntMatrix, p: u32) -> (FpMatrix, FpMatrix) {
    let sv = src.slice_v_gens(p);
    let tv = dst.slice_v_gens(p);
    let v = FpMatrix::from_fn(p, tv.len(), sv.len(), |i, j| mod_p(&m[(tv[i], sv[j])], p));
    let sw = src.slice_w_gens(p);
    let tw = dst.slice_w_gens(p);
    let pb = BigInt::from(p);
    let mut w = FpMatrix::zeros(p, tw.len(), sw.len());
    for (j, &g) in sw.iter().enumerate() {
        let scale = &src.torsion[g] / &pb;
        let img: Vec<BigInt> = m.col(g).iter().map(|x| x * &scale).collect();
        let img = dst.normalize(&img);
        for (i, &h) in tw.iter().enumerate() {
            let unit = &dst.torsion[h] / &pb;
            debug_assert!(img[h].is_multiple_of(&unit));
            w[(i, j)] = mod_p(&(&img[h] / &unit), p) as u32;
        }
    }
    (v, w)
}

/// Action of the group's automorphism on both slices.
pub fn slice_actions(a: &FgAbGroup, p: u32) -> (FpMatrix, FpMatrix) {
    slice_matrices(a, a, &a.action_or_identity(), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn relation_matrix_examples() {
        let p = from_relation_matrix(2, &IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]));
        assert_eq!(p.group.torsion(), &bi(&[2, 4])[..]);
        assert_eq!(p.group.free_rank(), 0);
        let p = from_relation_matrix(3, &IntMatrix::zeros(3, 0));
        assert_eq!((p.group.torsion().len(), p.group.free_rank()), (0, 3));
        let p = from_relation_matrix(1, &IntMatrix::zeros(1, 1));
        assert_eq!(p.group.free_rank(), 1);
    }

    #[test]
    fn rank_profile_examples() {
        let g = FgAbGroup::new(bi(&[2, 4]), 0);
        let r = rank_profile(&g, 2);
        assert_eq!((r.d_q, r.d_p, r.big_d, r.dim_mod_p), (0, 2, 2, 2));
        let r = rank_profile(&FgAbGroup::free(2), 5);
        assert_eq!((r.d_q, r.d_p, r.big_d, r.dim_mod_p), (2, 0, 2, 2));
        let r = rank_profile(&FgAbGroup::new(bi(&[6]), 0), 3);
        assert_eq!((r.d_q, r.d_p, r.big_d, r.dim_mod_p), (0, 1, 1, 1));
    }

    #[test]
    fn slice_examples() {
        let a = FgAbGroup::new(bi(&[9]), 0);
        let times3 = AbHom::new(a.clone(), a.clone(), IntMatrix::from_rows(&[vec![3]])).unwrap();
        let (v, w) = induced_on_slices(&times3, 3).unwrap();
        assert!(v.is_zero() && w.is_zero());
        let id = AbHom::identity(&a);
        let (v, w) = induced_on_slices(&id, 3).unwrap();
        assert!(v.is_identity() && w.is_identity());
        let z = FgAbGroup::free(1);
        let proj = AbHom::new(z, FgAbGroup::new(bi(&[27]), 0), IntMatrix::from_rows(&[vec![1]])).unwrap();
        let (v, w) = induced_on_slices(&proj, 3).unwrap();
        assert!(v.is_identity());
        assert_eq!((w.rows(), w.cols()), (1, 0));
    }

    #[test]
    fn ill_formed_hom_rejected() {
        let a = FgAbGroup::new(bi(&[2]), 0);
        let b = FgAbGroup::new(bi(&[3]), 0);
        let err = AbHom::new(a, b, IntMatrix::from_rows(&[vec![1]]));
        assert_eq!(err, Err(AbError::IllFormedHom));
    }

    #[test]
    fn action_validation() {
        let g = FgAbGroup::new(bi(&[9]), 0);
        assert!(g.clone().with_action(IntMatrix::from_rows(&[vec![4]])).is_ok());
        assert_eq!(g.with_action(IntMatrix::from_rows(&[vec![3]])), Err(AbError::NotAnAutomorphism));
        let z2 = FgAbGroup::free(2);
        assert!(z2.clone().with_action(IntMatrix::from_rows(&[vec![1, 3], vec![3, 10]])).is_ok());
        assert!(z2.with_action(IntMatrix::from_rows(&[vec![2, 0], vec![0, 1]])).is_err());
    }

    #[test]
    fn quotient_and_subgroup() {
        let z = FgAbGroup::free(1).with_action(IntMatrix::from_rows(&[vec![-1]])).unwrap();
        let q = z.quotient(&IntMatrix::from_rows(&[vec![8]]));
        assert_eq!(q.group.torsion(), &bi(&[8])[..]);
        assert_eq!(q.group.action().unwrap(), &IntMatrix::from_rows(&[vec![7]]));
        let a = FgAbGroup::new(bi(&[4]), 1);
        let s = a.subgroup(&IntMatrix::from_rows(&[vec![2], vec![0]]));
        assert_eq!(s.torsion(), &bi(&[2])[..]);
    }
}
