//! Chain-level oracle: free resolutions of `Z/p` over `F_p[M]` for
//! `M = ⊕ Z/p^e ⊕ Z^r`, lifts of automorphisms and homomorphisms through
//! contracting homotopies, and Wang mapping cones for `M ⋊ C`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::abgrp::{AbHom, FgAbGroup};
use crate::linalg::{FpMatrix, IntMatrix};

pub const DEFAULT_ORDER_BUDGET: u64 = 4096;
pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("lifting failed: {0}")]
    LiftFailure(String),
    #[error("size budget exceeded: torsion order {order} (budget {budget}), degree {nmax} (max {max_degree})")]
    SizeExceeded { order: BigInt, budget: u64, nmax: usize, max_degree: usize },
    #[error("map does not intertwine the two actions")]
    NotEquivariant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// tensor product of periodic resolutions (with Koszul factors for free summands)
    TensorOfCyclic,
    /// Koszul complex of a lattice
    Koszul,
}

/// Basis element of the free resolution: group element and multi-index.
type Key = (Vec<i64>, Vec<u8>);
/// Sparse element with coefficients in `Z/p`.
type Elem = BTreeMap<Key, u32>;

fn add_to(e: &mut Elem, k: Key, c: u64, p: u32) {
    let c = (c % p as u64) as u32;
    if c == 0 {
        return;
    }
    let slot = e.entry(k.clone()).or_insert(0);
    *slot = ((*slot as u64 + c as u64) % p as u64) as u32;
    if *slot == 0 {
        e.remove(&k);
    }
}

fn neg(c: u32, p: u32) -> u64 {
    ((p - c % p) % p) as u64
}

/// `F_p[M]`-free resolution of `Z/p`, `M = Z/d_1 ⊕ … ⊕ Z^r` with `d_j` powers of `p`.
#[derive(Clone, Debug)]
struct Resolution {
    p: u32,
    /// `Some(d)` for a cyclic factor, `None` for `Z`
    orders: Vec<Option<i64>>,
    basis: Vec<Vec<Vec<u8>>>,
    index: Vec<BTreeMap<Vec<u8>, usize>>,
}

impl Resolution {
    fn new(p: u32, orders: Vec<Option<i64>>, top: usize) -> Self {
        let mut basis = Vec::new();
        let mut index = Vec::new();
        for n in 0..=top {
            let mut b = Vec::new();
            multi_indices(&orders, n, &mut Vec::new(), &mut b);
            index.push(b.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect());
            basis.push(b);
        }
        Resolution { p, orders, basis, index }
    }

    fn normalize(&self, g: &mut [i64]) {
        for (x, o) in g.iter_mut().zip(&self.orders) {
            if let Some(d) = o {
                *x = x.rem_euclid(*d);
            }
        }
    }

    fn identity(&self) -> Vec<i64> {
        vec![0; self.orders.len()]
    }

    fn generator(&self, n: usize, i: usize) -> Elem {
        let mut e = Elem::new();
        e.insert((self.identity(), self.basis[n][i].clone()), 1 % self.p);
        e
    }

    fn d(&self, x: &Elem) -> Elem {
        let p = self.p;
        let mut out = Elem::new();
        for ((g, k), &c) in x {
            let mut deg_before = 0u32;
            for j in 0..k.len() {
                let kj = k[j];
                if kj > 0 {
                    let sgn = if deg_before % 2 == 1 { neg(c, p) } else { c as u64 };
                    let mut k2 = k.clone();
                    k2[j] -= 1;
                    match self.orders[j] {
                        Some(d) if kj % 2 == 0 => {
                            for l in 0..d {
                                let mut g2 = g.clone();
                                g2[j] += l;
                                self.normalize(&mut g2);
                                add_to(&mut out, (g2, k2.clone()), sgn, p);
                            }
                        }
                        _ => {
                            let mut g2 = g.clone();
                            g2[j] += 1;
                            self.normalize(&mut g2);
                            add_to(&mut out, (g2, k2.clone()), sgn, p);
                            add_to(&mut out, (g.clone(), k2), neg(sgn as u32, p), p);
                        }
                    }
                }
                deg_before += kj as u32;
            }
        }
        out
    }

    /// Contracting homotopy `h = s⊗1 + ηε⊗h'` over the factors.
    fn s(&self, x: &Elem) -> Elem {
        let p = self.p;
        let mut out = Elem::new();
        for ((g0, k), &c) in x {
            let mut g = g0.clone();
            for j in 0..k.len() {
                let m = g[j];
                let mut k2 = k.clone();
                k2[j] += 1;
                match self.orders[j] {
                    Some(d) => {
                        if k[j] % 2 == 0 {
                            for l in 0..m {
                                let mut g2 = g.clone();
                                g2[j] = l;
                                add_to(&mut out, (g2, k2.clone()), c as u64, p);
                            }
                        } else if m == d - 1 {
                            let mut g2 = g.clone();
                            g2[j] = 0;
                            add_to(&mut out, (g2, k2.clone()), c as u64, p);
                        }
                    }
                    None => {
                        if k[j] == 0 {
                            let (range, coef) = if m >= 0 { (0..m, c as u64) } else { (m..0, neg(c, p)) };
                            for l in range {
                                let mut g2 = g.clone();
                                g2[j] = l;
                                add_to(&mut out, (g2, k2.clone()), coef, p);
                            }
                        }
                    }
                }
                if k[j] != 0 {
                    break;
                }
                g[j] = 0;
            }
        }
        out
    }

    /// Coefficients summed over group elements, per basis index of degree `n`.
    fn collapse(&self, x: &Elem, n: usize) -> Vec<u32> {
        let mut v = vec![0u32; self.basis[n].len()];
        for ((_, k), &c) in x {
            let i = self.index[n][k];
            v[i] = ((v[i] as u64 + c as u64) % self.p as u64) as u32;
        }
        v
    }
}

fn multi_indices(orders: &[Option<i64>], n: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    let j = cur.len();
    if j == orders.len() {
        if n == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let max = if orders[j].is_none() { n.min(1) } else { n };
    for k in (0..=max).rev() {
        cur.push(k as u8);
        multi_indices(orders, n - k, cur, out);
        cur.pop();
    }
}

/// Integer matrix of a homomorphism between resolution groups.
#[derive(Clone, Debug)]
struct GroupMap {
    m: Vec<Vec<i64>>,
}

impl GroupMap {
    fn apply(&self, target: &Resolution, g: &[i64]) -> Vec<i64> {
        let mut out: Vec<i64> = self.m.iter().map(|row| row.iter().zip(g).map(|(a, b)| a * b).sum()).collect();
        target.normalize(&mut out);
        out
    }

    fn compose(&self, after: &GroupMap) -> GroupMap {
        let r = after.m.len();
        let c = self.m.first().map_or(0, |row| row.len());
        let inner = self.m.len();
        let m = (0..r).map(|i| (0..c).map(|j| (0..inner).map(|k| after.m[i][k] * self.m[k][j]).sum()).collect()).collect();
        GroupMap { m }
    }
}

/// Applies a family of basis images `images[n][i]` semilinearly along `hom`.
fn apply_semilinear(src: &Resolution, dst: &Resolution, hom: &GroupMap, images: &[Elem], n: usize, x: &Elem) -> Elem {
    let p = dst.p;
    let mut out = Elem::new();
    for ((g, k), &c) in x {
        let ag = hom.apply(dst, g);
        let img = &images[src.index[n][k]];
        for ((h, k2), &c2) in img {
            let mut gh: Vec<i64> = ag.iter().zip(h).map(|(a, b)| a + b).collect();
            dst.normalize(&mut gh);
            add_to(&mut out, (gh, k2.clone()), c as u64 * c2 as u64, p);
        }
    }
    out
}

fn sub_elem(a: &Elem, b: &Elem, p: u32) -> Elem {
    let mut out = a.clone();
    for (k, &c) in b {
        add_to(&mut out, k.clone(), neg(c, p), p);
    }
    out
}

/// Lifts `hom` to a chain map through the contracting homotopy of `dst`.
fn lift_map(src: &Resolution, dst: &Resolution, hom: &GroupMap, top: usize) -> Result<Vec<Vec<Elem>>, ChainError> {
    let mut maps: Vec<Vec<Elem>> = vec![vec![dst.generator(0, 0)]];
    for n in 1..=top {
        let mut level = Vec::with_capacity(src.basis[n].len());
        for i in 0..src.basis[n].len() {
            let de = src.d(&src.generator(n, i));
            let y = apply_semilinear(src, dst, hom, &maps[n - 1], n - 1, &de);
            let x = dst.s(&y);
            if dst.d(&x) != y {
                return Err(ChainError::LiftFailure(alloc::format!("degree {} generator {}", n, i)));
            }
            level.push(x);
        }
        maps.push(level);
    }
    Ok(maps)
}

/// Finite-dimensional complex `F ⊗ Z/p` with the lifted action.
#[derive(Clone, Debug)]
pub struct CoeffComplex {
    pub p: u32,
    pub nmax: usize,
    pub provenance: Provenance,
    /// the p-primary quotient actually resolved
    pub group: FgAbGroup,
    /// generators of the input group kept in `group`
    pub kept: Vec<usize>,
    pub dims: Vec<usize>,
    /// `differentials[n]: C_n → C_{n-1}` (index 0 unused, empty)
    pub differentials: Vec<FpMatrix>,
    /// reduced chain map lifting the action, per degree
    pub tau: Vec<FpMatrix>,
    res: Resolution,
    action: GroupMap,
    tau_lift: Vec<Vec<Elem>>,
}

fn group_orders(g: &FgAbGroup) -> Vec<Option<i64>> {
    (0..g.ngens())
        .map(|i| {
            let d = g.order_of_gen(i);
            if d.is_zero() {
                None
            } else {
                Some(d.to_i64().expect("order fits"))
            }
        })
        .collect()
}

fn int_to_groupmap(m: &IntMatrix) -> GroupMap {
    GroupMap { m: (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].to_i64().expect("entry fits")).collect()).collect() }
}

/// Resolution and lifted action for `M` (finite or free part), reduced to its p-primary quotient.
pub fn equivariant_resolution(m: &FgAbGroup, p: u32, nmax: usize, budget: u64) -> Result<CoeffComplex, ChainError> {
    let (g, kept) = m.p_primary(p);
    let tors: BigInt = g.torsion().iter().product();
    if tors > BigInt::from(budget) || nmax > MAX_DEGREE {
        return Err(ChainError::SizeExceeded { order: tors, budget, nmax, max_degree: MAX_DEGREE });
    }
    let top = nmax + 1;
    let res = Resolution::new(p, group_orders(&g), top);
    let action = int_to_groupmap(&g.action_or_identity());
    for n in 1..=top {
        for i in 0..res.basis[n].len() {
            if !res.d(&res.d(&res.generator(n, i))).is_empty() {
                return Err(ChainError::LiftFailure(String::from("d∘d ≠ 0 on the resolution")));
            }
        }
    }
    let tau_lift = lift_map(&res, &res, &action, top)?;
    // dτ = τd on generators
    for n in 1..=top {
        for i in 0..res.basis[n].len() {
            let lhs = res.d(&tau_lift[n][i]);
            let rhs = apply_semilinear(&res, &res, &action, &tau_lift[n - 1], n - 1, &res.d(&res.generator(n, i)));
            if lhs != rhs {
                return Err(ChainError::LiftFailure(String::from("τ is not a chain map")));
            }
        }
    }
    let dims: Vec<usize> = res.basis.iter().map(|b| b.len()).collect();
    let mut differentials = vec![FpMatrix::zeros(p, 0, dims[0])];
    for n in 1..=top {
        let cols: Vec<Vec<u32>> = (0..dims[n]).map(|i| res.collapse(&res.d(&res.generator(n, i)), n - 1)).collect();
        differentials.push(FpMatrix::from_cols(p, dims[n - 1], &cols));
    }
    let tau = (0..=top)
        .map(|n| {
            let cols: Vec<Vec<u32>> = tau_lift[n].iter().map(|x| res.collapse(x, n)).collect();
            FpMatrix::from_cols(p, dims[n], &cols)
        })
        .collect();
    let provenance = if g.torsion().is_empty() { Provenance::Koszul } else { Provenance::TensorOfCyclic };
    Ok(CoeffComplex { p, nmax, provenance, group: g, kept, dims, differentials, tau, res, action, tau_lift })
}

impl CoeffComplex {
    pub fn d_squared_zero(&self) -> bool {
        (2..self.differentials.len()).all(|n| self.differentials[n - 1].mul(&self.differentials[n]).is_zero())
    }

    pub fn tau_is_chain_map(&self) -> bool {
        (1..self.differentials.len()).all(|n| self.differentials[n].mul(&self.tau[n]) == self.tau[n - 1].mul(&self.differentials[n]))
    }

    /// Multi-index labels of the basis in degree `n`.
    pub fn labels(&self, n: usize) -> &[Vec<u8>] {
        &self.res.basis[n]
    }
}

/// Homology of one degree: cycle representatives extending the boundaries.
#[derive(Clone, Debug)]
pub struct HomologyBasis {
    pub boundaries: FpMatrix,
    /// representatives of a basis of `Z/B`
    pub representatives: FpMatrix,
}

impl HomologyBasis {
    fn new(cycles: &FpMatrix, boundaries: &FpMatrix) -> Self {
        let p = cycles.p();
        let b = boundaries.image();
        let mut span = b.clone();
        let mut reps: Vec<Vec<u32>> = Vec::new();
        for j in 0..cycles.cols() {
            let c = cycles.col(j);
            if !span.contains_col(&c) {
                span = span.hstack(&FpMatrix::from_cols(p, cycles.rows(), core::slice::from_ref(&c)));
                reps.push(c);
            }
        }
        HomologyBasis { boundaries: b, representatives: FpMatrix::from_cols(p, cycles.rows(), &reps) }
    }

    pub fn dim(&self) -> usize {
        self.representatives.cols()
    }

    /// Coordinates of a cycle in the representative basis.
    fn coords(&self, z: &[u32]) -> Vec<u32> {
        let sys = self.representatives.hstack(&self.boundaries);
        let x = sys.solve(&FpMatrix::from_cols(sys.p(), sys.rows(), &[z.to_vec()])).expect("a cycle");
        (0..self.dim()).map(|i| x[(i, 0)]).collect()
    }
}

/// Homology of the cone of `τ - 1`, which computes `H_*(M ⋊ C, Z/p)`.
#[derive(Clone, Debug)]
pub struct WangCone {
    pub p: u32,
    pub nmax: usize,
    pub dims: Vec<usize>,
    pub homology: Vec<HomologyBasis>,
    /// `cone_differentials[n]: Cone_n → Cone_{n-1}`
    pub cone_differentials: Vec<FpMatrix>,
}

fn cone_differential(k: &CoeffComplex, n: usize) -> FpMatrix {
    let p = k.p;
    let rows = if n == 0 { 0 } else { k.dims[n - 1] + if n >= 2 { k.dims[n - 2] } else { 0 } };
    let cols = k.dims[n] + if n >= 1 { k.dims[n - 1] } else { 0 };
    let mut out = FpMatrix::zeros(p, rows, cols);
    if n == 0 {
        return out;
    }
    let d = &k.differentials[n];
    let t1 = k.tau[n - 1].sub(&FpMatrix::identity(p, k.dims[n - 1]));
    let (a, b) = (k.dims[n - 1], k.dims[n]);
    for i in 0..a {
        for j in 0..b {
            out[(i, j)] = d[(i, j)];
        }
        for j in 0..a {
            out[(i, b + j)] = t1[(i, j)];
        }
    }
    if n >= 2 {
        let d2 = &k.differentials[n - 1];
        for i in 0..k.dims[n - 2] {
            for j in 0..a {
                out[(a + i, b + j)] = (p - d2[(i, j)]) % p;
            }
        }
    }
    out
}

pub fn wang_cone_homology(k: &CoeffComplex) -> WangCone {
    let p = k.p;
    let diffs: Vec<FpMatrix> = (0..=k.nmax + 1).map(|n| cone_differential(k, n)).collect();
    let mut homology = Vec::new();
    for n in 0..=k.nmax {
        let cols = diffs[n].cols();
        let cycles = if n == 0 { FpMatrix::identity(p, cols) } else { diffs[n].kernel() };
        homology.push(HomologyBasis::new(&cycles, &diffs[n + 1]));
    }
    let dims = homology.iter().map(|h| h.dim()).collect();
    WangCone { p, nmax: k.nmax, dims, homology, cone_differentials: diffs }
}

/// Exact induced map on `H_*(M ⋊ C)` from a coefficient map.
#[derive(Clone, Debug)]
pub struct ConeMap {
    /// reduced `φ` per degree
    pub phi: Vec<FpMatrix>,
    /// reduced homotopy `h_n: C_n → C'_{n+1}`
    pub homotopy: Vec<FpMatrix>,
    /// induced map on cone homology per degree, in the representative bases
    pub on_homology: Vec<FpMatrix>,
}

impl ConeMap {
    pub fn kernel_dim(&self, n: usize) -> usize {
        self.on_homology[n].cols() - self.on_homology[n].rank()
    }

    pub fn is_surjective(&self, n: usize) -> bool {
        self.on_homology[n].rank() == self.on_homology[n].rows()
    }
}

/// Chain map `φ` over `f`, homotopy `h` with `τ'φ − φτ = dh + hd`, and the
/// cone map `(x, y) ↦ (φx − hy, φy)`.
pub fn lift_chain_map(f: &AbHom, src: &CoeffComplex, dst: &CoeffComplex) -> Result<ConeMap, ChainError> {
    let p = src.p;
    let a = f.source.action_or_identity();
    let a2 = f.target.action_or_identity();
    let lhs = f.target.normalize_matrix(&f.matrix.mul(&a));
    let rhs = f.target.normalize_matrix(&a2.mul(&f.matrix));
    if lhs != rhs {
        return Err(ChainError::NotEquivariant);
    }
    // restrict to the p-primary quotients
    let fm = IntMatrix::from_fn(dst.kept.len(), src.kept.len(), |i, j| f.matrix[(dst.kept[i], src.kept[j])].clone());
    let fm = dst.group.normalize_matrix(&fm);
    let hom = int_to_groupmap(&fm);
    let top = src.nmax.min(dst.nmax) + 1;
    let (sr, dr) = (&src.res, &dst.res);
    let phi = lift_map(sr, dr, &hom, top)?;
    let fa = src.action.compose(&hom);
    let mut h: Vec<Vec<Elem>> = Vec::new();
    for n in 0..top {
        let mut level = Vec::new();
        for i in 0..sr.basis[n].len() {
            let t_phi = apply_semilinear(dr, dr, &dst.action, &dst.tau_lift[n], n, &phi[n][i]);
            let phi_t = apply_semilinear(sr, dr, &hom, &phi[n], n, &src.tau_lift[n][i]);
            let mut z = sub_elem(&t_phi, &phi_t, p);
            if n > 0 {
                let de = sr.d(&sr.generator(n, i));
                let hd = apply_semilinear(sr, dr, &fa, &h[n - 1], n - 1, &de);
                z = sub_elem(&z, &hd, p);
            }
            let x = dr.s(&z);
            if dr.d(&x) != z {
                return Err(ChainError::LiftFailure(alloc::format!("homotopy in degree {}", n)));
            }
            level.push(x);
        }
        h.push(level);
    }
    let collapse = |images: &[Elem], n_out: usize, rows: usize| {
        let cols: Vec<Vec<u32>> = images.iter().map(|x| dr.collapse(x, n_out)).collect();
        FpMatrix::from_cols(p, rows, &cols)
    };
    let phi_r: Vec<FpMatrix> = (0..=top).map(|n| collapse(&phi[n], n, dst.dims[n])).collect();
    let h_r: Vec<FpMatrix> = (0..top).map(|n| collapse(&h[n], n + 1, dst.dims[n + 1])).collect();
    // reduced identity τ'φ − φτ = dh + hd
    for n in 0..top {
        let lhs = dst.tau[n].mul(&phi_r[n]).sub(&phi_r[n].mul(&src.tau[n]));
        let mut rhs = dst.differentials[n + 1].mul(&h_r[n]);
        if n > 0 {
            rhs = rhs.add(&h_r[n - 1].mul(&src.differentials[n]));
        }
        if lhs != rhs {
            return Err(ChainError::LiftFailure(String::from("homotopy identity fails after reduction")));
        }
    }
    let cs = wang_cone_homology(src);
    let cd = wang_cone_homology(dst);
    let mut on_homology = Vec::new();
    for n in 0..=src.nmax.min(dst.nmax) {
        let psi = cone_map_matrix(p, &phi_r, &h_r, src, dst, n);
        let reps = &cs.homology[n].representatives;
        let img = psi.mul(reps);
        let cols: Vec<Vec<u32>> = (0..img.cols()).map(|j| cd.homology[n].coords(&img.col(j))).collect();
        on_homology.push(FpMatrix::from_cols(p, cd.homology[n].dim(), &cols));
    }
    Ok(ConeMap { phi: phi_r, homotopy: h_r, on_homology })
}

fn cone_map_matrix(p: u32, phi: &[FpMatrix], h: &[FpMatrix], src: &CoeffComplex, dst: &CoeffComplex, n: usize) -> FpMatrix {
    let (sa, sb) = (src.dims[n], if n > 0 { src.dims[n - 1] } else { 0 });
    let (da, db) = (dst.dims[n], if n > 0 { dst.dims[n - 1] } else { 0 });
    let mut out = FpMatrix::zeros(p, da + db, sa + sb);
    for i in 0..da {
        for j in 0..sa {
            out[(i, j)] = phi[n][(i, j)];
        }
    }
    if n > 0 {
        for i in 0..da {
            for j in 0..sb {
                out[(i, sa + j)] = (p - h[n - 1][(i, j)]) % p;
            }
        }
        for i in 0..db {
            for j in 0..sb {
                out[(da + i, sa + j)] = phi[n - 1][(i, j)];
            }
        }
    }
    out
}

/// Cone homology dims straight from a group with action.
pub fn cone_dims(m: &FgAbGroup, p: u32, nmax: usize) -> Result<Vec<usize>, ChainError> {
    Ok(wang_cone_homology(&equivariant_resolution(m, p, nmax, DEFAULT_ORDER_BUDGET)?).dims)
}

/// The order of the p-primary torsion that a resolution would need.
pub fn p_torsion_order(m: &FgAbGroup, p: u32) -> BigInt {
    let pb = BigInt::from(p);
    m.torsion()
        .iter()
        .map(|d| {
            let mut x = d.clone();
            let mut acc = BigInt::from(1);
            while x.is_multiple_of(&pb) {
                x /= &pb;
                acc *= &pb;
            }
            acc
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homfun::exterior_power;

    fn group(orders: &[i64], action: &[Vec<i64>]) -> FgAbGroup {
        FgAbGroup::new(orders.iter().filter(|&&d| d != 0).map(|&d| BigInt::from(d)).collect(), orders.iter().filter(|&&d| d == 0).count())
            .with_action(IntMatrix::from_rows(action))
            .unwrap()
    }

    #[test]
    fn cyclic_two() {
        let k = equivariant_resolution(&group(&[2], &[vec![1]]), 2, 4, 4096).unwrap();
        assert_eq!(k.dims, vec![1; 6]);
        assert!(k.differentials.iter().all(|d| d.is_zero()));
        assert!(k.d_squared_zero() && k.tau_is_chain_map());
    }

    #[test]
    fn koszul_lattice() {
        let k = equivariant_resolution(&group(&[0, 0], &[vec![1, 0], vec![0, 1]]), 5, 3, 4096).unwrap();
        assert_eq!(&k.dims[..4], &[1, 2, 1, 0]);
        assert_eq!(k.provenance, Provenance::Koszul);
        let a = IntMatrix::from_rows(&[vec![1, 3], vec![3, 10]]);
        let k = equivariant_resolution(&group(&[0, 0], &[vec![1, 3], vec![3, 10]]), 7, 2, 4096).unwrap();
        let a7 = FpMatrix::from_fn(7, 2, 2, |i, j| a[(i, j)].to_i64().unwrap());
        assert_eq!(k.tau[1], a7);
        assert_eq!(k.tau[2], exterior_power(&a7, 2));
    }

    #[test]
    fn z9_lift() {
        let k = equivariant_resolution(&group(&[9], &[vec![4]]), 3, 5, 4096).unwrap();
        assert_eq!(k.dims, vec![1; 7]);
        assert!(k.tau[0].is_identity());
        assert!(k.tau_is_chain_map());
    }

    #[test]
    fn cone_examples() {
        let klein2 = group(&[2], &[vec![1]]);
        assert_eq!(cone_dims(&klein2, 2, 4).unwrap(), vec![1, 2, 2, 2, 2]);
        let heis = group(&[0, 0], &[vec![1, 1], vec![0, 1]]);
        for p in [2, 3, 5] {
            assert_eq!(cone_dims(&heis, p, 3).unwrap()[2], 2);
        }
        assert_eq!(cone_dims(&group(&[0], &[vec![1]]), 3, 3).unwrap(), vec![1, 2, 1, 0]);
    }

    #[test]
    fn identity_lifts_to_identity() {
        let g = group(&[9], &[vec![4]]);
        let k = equivariant_resolution(&g, 3, 3, 4096).unwrap();
        let m = lift_chain_map(&AbHom::identity(&g), &k, &k).unwrap();
        assert!(m.on_homology.iter().all(|h| h.is_identity()));
    }

    #[test]
    fn heisenberg_to_abelianization_kills_h2() {
        let heis = group(&[0, 0], &[vec![1, 1], vec![0, 1]]);
        let ab = group(&[0], &[vec![1]]);
        let f = AbHom::new(heis.clone(), ab.clone(), IntMatrix::from_rows(&[vec![0, 1]])).unwrap();
        for p in [2, 3, 5] {
            let ks = equivariant_resolution(&heis, p, 3, 4096).unwrap();
            let kt = equivariant_resolution(&ab, p, 3, 4096).unwrap();
            let m = lift_chain_map(&f, &ks, &kt).unwrap();
            assert!(m.on_homology[2].is_zero(), "p={}", p);
            assert_eq!(m.kernel_dim(2), 2);
        }
    }

    #[test]
    fn budget() {
        let big = group(&[3i64.pow(8)], &[vec![1]]);
        assert!(matches!(equivariant_resolution(&big, 3, 2, 4096), Err(ChainError::SizeExceeded { .. })));
    }
}
