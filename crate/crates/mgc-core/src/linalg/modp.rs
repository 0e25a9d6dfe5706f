use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use super::{SmithNormalForm, SnfResult};

/// Dense matrix over the chain ring Z/p^N. The modulus must fit in 62 bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModMatrix {
    p: u64,
    n: u32,
    q: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

/// Inverse of a unit modulo `q` by extended Euclid.
fn unit_inverse(a: u64, q: u64) -> u64 {
    let (mut r0, mut r1) = (q as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    assert_eq!(r0, 1, "{a} is not a unit mod {q}");
    t0.rem_euclid(q as i128) as u64
}

impl ModMatrix {
    pub fn zeros(p: u64, n: u32, rows: usize, cols: usize) -> Self {
        let q = p.checked_pow(n).filter(|&q| q < (1 << 62)).expect("modulus p^N too large");
        ModMatrix { p, n, q, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u64, n: u32, k: usize) -> Self {
        let mut m = Self::zeros(p, n, k, k);
        for i in 0..k {
            m[(i, i)] = 1 % m.q;
        }
        m
    }

    pub fn from_fn(p: u64, n: u32, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i128) -> Self {
        let mut m = Self::zeros(p, n, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j).rem_euclid(m.q as i128) as u64;
            }
        }
        m
    }

    pub fn from_rows(p: u64, n: u32, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(p, n, r, c, |i, j| rows[i][j] as i128)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn col(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn from_cols(p: u64, n: u32, rows: usize, cols: &[Vec<u64>]) -> Self {
        let mut m = Self::zeros(p, n, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..rows {
                m[(i, j)] = c[i] % m.q;
            }
        }
        m
    }

    /// p-adic valuation of a residue; `N` for zero.
    pub fn valuation(&self, x: u64) -> u32 {
        if x == 0 {
            return self.n;
        }
        let mut v = 0;
        let mut y = x;
        while y.is_multiple_of(self.p) {
            y /= self.p;
            v += 1;
        }
        v
    }

    pub fn mul(&self, other: &ModMatrix) -> ModMatrix {
        assert_eq!(self.q, other.q);
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.p, self.n, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other[(k, j)];
                    if b != 0 {
                        out[(i, j)] = (out[(i, j)] + mulmod(a, b, self.q)) % self.q;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).fold(0u64, |s, j| (s + mulmod(self[(i, j)], v[j], self.q)) % self.q))
            .collect()
    }

    pub fn sub(&self, other: &ModMatrix) -> ModMatrix {
        assert_eq!((self.rows, self.cols, self.q), (other.rows, other.cols, other.q));
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o = (*o + self.q - b) % self.q;
        }
        out
    }

    pub fn scale(&self, k: u64) -> ModMatrix {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x = mulmod(*x, k % self.q, self.q);
        }
        out
    }

    pub fn pow(&self, e: u32) -> ModMatrix {
        assert_eq!(self.rows, self.cols);
        let mut acc = Self::identity(self.p, self.n, self.rows);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn hstack(&self, other: &ModMatrix) -> ModMatrix {
        assert_eq!((self.rows, self.q), (other.rows, other.q));
        let mut m = Self::zeros(self.p, self.n, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                m[(i, self.cols + j)] = other[(i, j)];
            }
        }
        m
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            for c in 0..self.cols {
                self.data.swap(i * self.cols + c, j * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i != j {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + i, r * self.cols + j);
            }
        }
    }

    /// row_i += k * row_j
    fn add_row(&mut self, i: usize, j: usize, k: u64) {
        for c in 0..self.cols {
            let v = mulmod(self[(j, c)], k, self.q);
            self[(i, c)] = (self[(i, c)] + v) % self.q;
        }
    }

    /// col_i += k * col_j
    fn add_col(&mut self, i: usize, j: usize, k: u64) {
        for r in 0..self.rows {
            let v = mulmod(self[(r, j)], k, self.q);
            self[(r, i)] = (self[(r, i)] + v) % self.q;
        }
    }

    fn scale_row(&mut self, i: usize, k: u64) {
        for c in 0..self.cols {
            self[(i, c)] = mulmod(self[(i, c)], k, self.q);
        }
    }

    fn scale_col(&mut self, j: usize, k: u64) {
        for r in 0..self.rows {
            self[(r, j)] = mulmod(self[(r, j)], k, self.q);
        }
    }

    fn neg(&self, x: u64) -> u64 {
        (self.q - x % self.q) % self.q
    }

    /// Canonical generating matrix (Howell form) of the column span.
    ///
    /// Columns come out in echelon order with strictly increasing pivot rows,
    /// pivots equal to `p^e`, entries of earlier columns in a pivot row reduced
    /// modulo that pivot. Two generating sets span the same submodule iff
    /// their Howell forms are equal.
    pub fn howell(&self) -> ModMatrix {
        let q = self.q;
        let mut pool: Vec<Vec<u64>> = (0..self.cols).map(|j| self.col(j)).filter(|c| c.iter().any(|&x| x != 0)).collect();
        let mut out: Vec<(usize, u32, Vec<u64>)> = Vec::new();
        for r in 0..self.rows {
            let mut best: Option<usize> = None;
            for (idx, c) in pool.iter().enumerate() {
                if c[r] == 0 {
                    continue;
                }
                match best {
                    Some(b) if self.valuation(pool[b][r]) <= self.valuation(c[r]) => {}
                    _ => best = Some(idx),
                }
            }
            let Some(b) = best else { continue };
            let mut piv = pool.remove(b);
            let e = self.valuation(piv[r]);
            let pe = self.p.pow(e);
            let unit = unit_inverse(piv[r] / pe, q);
            for x in piv.iter_mut() {
                *x = mulmod(*x, unit, q);
            }
            for c in pool.iter_mut() {
                if c[r] == 0 {
                    continue;
                }
                let w = c[r] / pe;
                for (x, y) in c.iter_mut().zip(&piv) {
                    *x = (*x + q - mulmod(w, *y, q)) % q;
                }
            }
            pool.retain(|c| c.iter().any(|&x| x != 0));
            let k = self.p.pow(self.n - e);
            let extra: Vec<u64> = piv.iter().map(|&x| mulmod(x, k, q)).collect();
            if extra.iter().any(|&x| x != 0) {
                pool.push(extra);
            }
            out.push((r, e, piv));
        }
        for j in 0..out.len() {
            let (r, e, piv) = (out[j].0, out[j].1, out[j].2.clone());
            let pe = self.p.pow(e);
            for i in 0..j {
                let w = out[i].2[r] / pe;
                if w == 0 {
                    continue;
                }
                for (x, y) in out[i].2.iter_mut().zip(&piv) {
                    *x = (*x + q - mulmod(w, *y, q)) % q;
                }
            }
        }
        let cols: Vec<Vec<u64>> = out.into_iter().map(|(_, _, c)| c).collect();
        ModMatrix::from_cols(self.p, self.n, self.rows, &cols)
    }

    /// `log_p` of the number of elements in the column span (input must be in
    /// Howell form).
    pub fn span_log_size(&self) -> u32 {
        (0..self.cols)
            .map(|j| {
                let piv = (0..self.rows).find(|&i| self[(i, j)] != 0).expect("zero column in Howell form");
                self.n - self.valuation(self[(piv, j)])
            })
            .sum()
    }

    /// Membership in the column span; `self` must be in Howell form.
    pub fn howell_contains(&self, v: &[u64]) -> bool {
        let q = self.q;
        let mut x: Vec<u64> = v.iter().map(|a| a % q).collect();
        for j in 0..self.cols {
            let r = (0..self.rows).find(|&i| self[(i, j)] != 0).expect("zero column in Howell form");
            let pe = self[(r, j)];
            if !x[r].is_multiple_of(pe) {
                return false;
            }
            let w = x[r] / pe;
            for i in 0..self.rows {
                x[i] = (x[i] + q - mulmod(w, self[(i, j)], q)) % q;
            }
        }
        x.iter().all(|&a| a == 0)
    }

    /// Generators of `{x : self * x = 0}`.
    pub fn kernel(&self) -> ModMatrix {
        let s = self.smith_normal_form();
        let mut gens = Vec::new();
        for j in 0..self.cols {
            let scale = if j < s.diag.len() { self.p.pow(self.n - self.valuation(s.diag[j])) % self.q } else { 1 % self.q };
            if scale == 0 {
                continue;
            }
            let c: Vec<u64> = s.v.col(j).iter().map(|&x| mulmod(x, scale, self.q)).collect();
            gens.push(c);
        }
        ModMatrix::from_cols(self.p, self.n, self.cols, &gens)
    }

    /// Some `x` with `self * x = b`, if one exists.
    pub fn solve(&self, b: &[u64]) -> Option<Vec<u64>> {
        assert_eq!(b.len(), self.rows);
        let s = self.smith_normal_form();
        let y = s.u.mul_vec(b);
        let mut z = vec![0u64; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0 {
                continue;
            }
            if i >= s.diag.len() {
                return None;
            }
            let d = s.diag[i];
            let vd = self.valuation(d);
            if vd == self.n || self.valuation(yi) < vd {
                return None;
            }
            z[i] = yi / self.p.pow(vd);
        }
        Some(s.v.mul_vec(&z))
    }
}

impl Index<(usize, usize)> for ModMatrix {
    type Output = u64;
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ModMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.p, self.n)?;
        let rows: Vec<&[u64]> = (0..self.rows).map(|i| &self.data[i * self.cols..(i + 1) * self.cols]).collect();
        write!(f, "{:?}", rows)
    }
}

impl SmithNormalForm for ModMatrix {
    type Elem = u64;

    /// Pivot: smallest p-valuation in the trailing block, ties row-major.
    /// Pivots are normalized to `p^e`; zero entries come last.
    fn smith_normal_form(&self) -> SnfResult<Self> {
        let (r, c) = (self.rows, self.cols);
        let (p, n) = (self.p, self.n);
        let mut a = self.clone();
        let mut u = Self::identity(p, n, r);
        let mut u_inv = Self::identity(p, n, r);
        let mut v = Self::identity(p, n, c);
        let mut v_inv = Self::identity(p, n, c);
        let steps = r.min(c);
        for s in 0..steps {
            let mut best: Option<(usize, usize, u32)> = None;
            for i in s..r {
                for j in s..c {
                    let x = a[(i, j)];
                    if x == 0 {
                        continue;
                    }
                    let vx = a.valuation(x);
                    if best.is_none_or(|(_, _, vb)| vx < vb) {
                        best = Some((i, j, vx));
                    }
                }
            }
            let Some((pi, pj, e)) = best else { break };
            a.swap_rows(s, pi);
            u.swap_rows(s, pi);
            u_inv.swap_cols(s, pi);
            a.swap_cols(s, pj);
            v.swap_cols(s, pj);
            v_inv.swap_rows(s, pj);
            let pe = p.pow(e);
            let unit = a[(s, s)] / pe;
            let inv = unit_inverse(unit, a.q);
            a.scale_row(s, inv);
            u.scale_row(s, inv);
            u_inv.scale_col(s, unit);
            for i in s + 1..r {
                if a[(i, s)] == 0 {
                    continue;
                }
                let w = a.neg(a[(i, s)] / pe);
                a.add_row(i, s, w);
                u.add_row(i, s, w);
                u_inv.add_col(s, i, a.neg(w));
            }
            for j in s + 1..c {
                if a[(s, j)] == 0 {
                    continue;
                }
                let w = a.neg(a[(s, j)] / pe);
                a.add_col(j, s, w);
                v.add_col(j, s, w);
                v_inv.add_row(s, j, a.neg(w));
            }
        }
        let diag = (0..steps).map(|i| a[(i, i)]).collect();
        SnfResult { u, u_inv, v, v_inv, diag }
    }
}

impl SnfResult<ModMatrix> {
    pub fn d_matrix(&self, rows: usize, cols: usize) -> ModMatrix {
        let mut d = ModMatrix::zeros(self.u.p, self.u.n, rows, cols);
        for (i, &x) in self.diag.iter().enumerate() {
            d[(i, i)] = x;
        }
        d
    }
}

/// A finite module over Z/p^N presented as `(Z/p^N)^k / R`, with `R` stored
/// in Howell form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PModule {
    pub rank: usize,
    pub relations: ModMatrix,
}

impl PModule {
    pub fn free(p: u64, n: u32, k: usize) -> Self {
        PModule { rank: k, relations: ModMatrix::zeros(p, n, k, 0) }
    }

    /// `⊕ Z/p^{e_j}` inside `(Z/p^N)^k`.
    pub fn cyclic_sum(p: u64, n: u32, exponents: &[u32]) -> Self {
        let k = exponents.len();
        let gens: Vec<Vec<u64>> = exponents
            .iter()
            .enumerate()
            .map(|(j, &e)| {
                let mut v = vec![0u64; k];
                v[j] = p.pow(e.min(n)) % p.pow(n);
                v
            })
            .collect();
        PModule { rank: k, relations: ModMatrix::from_cols(p, n, k, &gens).howell() }
    }

    pub fn p(&self) -> u64 {
        self.relations.p
    }

    pub fn exponent(&self) -> u32 {
        self.relations.n
    }

    pub fn log_size(&self) -> u32 {
        self.exponent() * self.rank as u32 - self.relations.span_log_size()
    }

    /// Canonical form of the submodule generated by the columns of `gens`
    /// (the relations are folded in, so equal submodules compare equal).
    pub fn submodule(&self, gens: &ModMatrix) -> ModMatrix {
        gens.hstack(&self.relations).howell()
    }

    pub fn sub_log_size(&self, canon: &ModMatrix) -> u32 {
        canon.span_log_size() - self.relations.span_log_size()
    }

    /// Invariant exponents of a submodule (canonical form), largest first,
    /// read off from `|p^j S|`.
    pub fn sub_exponents(&self, canon: &ModMatrix) -> Vec<u32> {
        let n = self.exponent();
        let mut sizes = Vec::new();
        for j in 0..=n {
            let scaled = canon.scale(self.p().pow(j) % canon.q);
            sizes.push(self.sub_log_size(&self.submodule(&scaled)));
        }
        // number of cyclic factors of exponent > j is |p^j S| / |p^{j+1} S|
        let n = n as usize;
        let mut exps = Vec::new();
        for j in (0..n).rev() {
            let more = sizes[j] - sizes[j + 1];
            let prev = if j + 1 < n { sizes[j + 1] - sizes[j + 2] } else { 0 };
            for _ in prev..more {
                exps.push(j as u32 + 1);
            }
        }
        exps
    }

    /// Whether `b` maps the relations into themselves.
    pub fn respects(&self, b: &ModMatrix) -> bool {
        let img = b.mul(&self.relations);
        (0..img.cols()).all(|j| self.relations.howell_contains(&img.col(j)))
    }
}

/// Fitting decomposition of an endomorphism of a finite Z/p^N-module.
#[derive(Clone, Debug)]
pub struct FittingSplit {
    /// Least `n` with `Im b^n = Im b^{n+1}` and `Ker b^n = Ker b^{n+1}`.
    pub exponent: u32,
    /// Canonical generators (relations included) of `Im b^n`.
    pub image: ModMatrix,
    /// Canonical generators (relations included) of `Ker b^n`.
    pub kernel: ModMatrix,
    /// Projection onto the image along the kernel.
    pub projection: ModMatrix,
}

pub fn stable_fitting(b: &ModMatrix) -> FittingSplit {
    assert_eq!(b.rows(), b.cols(), "stable_fitting needs a square matrix");
    stable_fitting_on(&PModule::free(b.p(), b.exponent(), b.rows()), b)
}

fn kernel_mod(m: &PModule, c: &ModMatrix) -> ModMatrix {
    // x with c x ∈ R: kernel of [c | R], first k coordinates
    let joint = c.hstack(&m.relations);
    let k = joint.kernel();
    let top = ModMatrix::from_fn(c.p(), c.exponent(), m.rank, k.cols(), |i, j| k[(i, j)] as i128);
    m.submodule(&top)
}

pub fn stable_fitting_on(m: &PModule, b: &ModMatrix) -> FittingSplit {
    assert_eq!(b.rows(), m.rank);
    assert!(m.respects(b), "endomorphism does not preserve the relations");
    let bound = m.exponent() * m.rank as u32 + 1;
    let mut pw = b.clone();
    let mut im = m.submodule(&pw);
    let mut ker = kernel_mod(m, &pw);
    let mut e = 1;
    loop {
        let next = pw.mul(b);
        let im2 = m.submodule(&next);
        let ker2 = kernel_mod(m, &next);
        if im2 == im && ker2 == ker {
            break;
        }
        assert!(e <= bound, "Fitting exponent exceeded N*size");
        pw = next;
        im = im2;
        ker = ker2;
        e += 1;
    }
    let projection = fitting_projection(m, &pw, &im);
    FittingSplit { exponent: e, image: im, kernel: ker, projection }
}

/// For `c = b^n`: `P x` is the unique `y ∈ Im c` with `c y ≡ c x`.
fn fitting_projection(m: &PModule, c: &ModMatrix, im: &ModMatrix) -> ModMatrix {
    let (p, n, k) = (c.p(), c.exponent(), m.rank);
    let cim = c.mul(im);
    let sys = cim.hstack(&m.relations);
    let mut cols = Vec::with_capacity(k);
    for j in 0..k {
        let rhs = c.col(j);
        let z = sys.solve(&rhs).expect("c x must lie in c(Im c)");
        let zi: Vec<u64> = z[..im.cols()].to_vec();
        cols.push(im.mul_vec(&zi));
    }
    ModMatrix::from_cols(p, n, k, &cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::smith_normal_form;

    #[test]
    fn snf_mod_examples() {
        let m = ModMatrix::from_rows(3, 2, &[vec![3, 1], vec![0, 3]]);
        let s = smith_normal_form(&m);
        assert_eq!(s.u.mul(&m).mul(&s.v), s.d_matrix(2, 2));
        assert_eq!(s.diag, vec![1, 0]);
        let m = ModMatrix::from_rows(2, 3, &[vec![2, 4], vec![6, 8]]);
        let s = smith_normal_form(&m);
        assert_eq!(s.u.mul(&m).mul(&s.v), s.d_matrix(2, 2));
        assert_eq!(s.diag, vec![2, 4]);
    }

    #[test]
    fn howell_is_canonical() {
        let a = ModMatrix::from_rows(3, 2, &[vec![3, 0], vec![1, 3]]);
        let b = ModMatrix::from_rows(3, 2, &[vec![3, 3], vec![1, 4]]);
        assert_eq!(a.howell(), b.howell());
        let h = a.howell();
        assert_eq!(h.span_log_size(), 2);
    }

    #[test]
    fn fitting_examples() {
        let zero = ModMatrix::zeros(3, 2, 2, 2);
        let f = stable_fitting(&zero);
        assert_eq!(f.exponent, 1);
        assert_eq!(f.image.cols(), 0);
        let three = ModMatrix::identity(3, 2, 2).scale(3);
        let f = stable_fitting(&three);
        assert_eq!(f.exponent, 2);
        assert_eq!(f.image.cols(), 0);
        assert_eq!(f.kernel.span_log_size(), 4);
        let inv = ModMatrix::from_rows(3, 2, &[vec![2, 1], vec![1, 1]]);
        let f = stable_fitting(&inv);
        assert_eq!(f.exponent, 1);
        assert_eq!(f.kernel.cols(), 0);
        assert_eq!(f.image.span_log_size(), 4);
    }

    #[test]
    fn sub_exponents_of_cyclic_sum() {
        let m = PModule::free(2, 4, 2);
        let g = ModMatrix::from_rows(2, 4, &[vec![2, 0], vec![0, 4]]);
        let s = m.submodule(&g);
        assert_eq!(m.sub_exponents(&s), vec![3, 2]);
        let q = PModule::cyclic_sum(3, 3, &[2, 1]);
        assert_eq!(q.log_size(), 3);
    }
}
