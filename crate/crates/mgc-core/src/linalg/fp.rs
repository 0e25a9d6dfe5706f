use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Dense matrix over the prime field Z/p, row-major, entries in `[0, p)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

pub(crate) fn pow_mod(a: u32, mut e: u32, p: u32) -> u32 {
    let mut base = a as u64 % p as u64;
    let mut acc = 1u64 % p as u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

impl FpMatrix {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        FpMatrix { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m[(i, i)] = 1 % p;
        }
        m
    }

    pub fn from_fn(p: u32, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j).rem_euclid(p as i64) as u32);
            }
        }
        FpMatrix { p, rows, cols, data }
    }

    pub fn from_rows(p: u32, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(p, r, c, |i, j| rows[i][j])
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..self.cols).all(|j| self[(i, j)] == u32::from(i == j)))
    }

    pub fn col(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn from_cols(p: u32, rows: usize, cols: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros(p, rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for i in 0..rows {
                m[(i, j)] = c[i] % p;
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.p, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.p, other.p);
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let p = self.p as u64;
        let mut acc = vec![0u64; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)] as u64;
                if a == 0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let out = &mut acc[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out.iter_mut().zip(row) {
                    *o = (*o + a * b as u64) % p;
                }
            }
        }
        FpMatrix { p: self.p, rows: self.rows, cols: other.cols, data: acc.into_iter().map(|x| x as u32).collect() }
    }

    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols);
        let p = self.p as u64;
        (0..self.rows)
            .map(|i| {
                let mut s = 0u64;
                for j in 0..self.cols {
                    s = (s + self[(i, j)] as u64 * v[j] as u64) % p;
                }
                s as u32
            })
            .collect()
    }

    pub fn add(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let p = self.p;
        FpMatrix {
            p,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| (a + b) % p).collect(),
        }
    }

    pub fn sub(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let p = self.p;
        FpMatrix {
            p,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| (a + p - b) % p).collect(),
        }
    }

    pub fn scale(&self, k: i64) -> FpMatrix {
        let p = self.p as u64;
        let k = k.rem_euclid(self.p as i64) as u64;
        FpMatrix {
            p: self.p,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| (a as u64 * k % p) as u32).collect(),
        }
    }

    pub fn hstack(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.rows, other.rows);
        let mut m = Self::zeros(self.p, self.rows, self.cols + other.cols);
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

    pub fn vstack(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        FpMatrix { p: self.p, rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn block_diag(p: u32, blocks: &[FpMatrix]) -> FpMatrix {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(p, r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> FpMatrix {
        let mut m = Self::zeros(self.p, rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (FpMatrix, Vec<usize>) {
        let p = self.p as u64;
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(pr) = (r..a.rows).find(|&i| a[(i, c)] != 0) else { continue };
            if pr != r {
                for j in 0..a.cols {
                    a.data.swap(pr * a.cols + j, r * a.cols + j);
                }
            }
            let inv = inv_mod(a[(r, c)], self.p) as u64;
            for j in c..a.cols {
                a[(r, j)] = (a[(r, j)] as u64 * inv % p) as u32;
            }
            for i in 0..a.rows {
                if i == r || a[(i, c)] == 0 {
                    continue;
                }
                let f = a[(i, c)] as u64;
                for j in c..a.cols {
                    let sub = f * a[(r, j)] as u64 % p;
                    a[(i, j)] = ((a[(i, j)] as u64 + p - sub) % p) as u32;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    pub fn rank(&self) -> usize {
        if self.rows <= self.cols {
            self.rref().1.len()
        } else {
            self.transpose().rref().1.len()
        }
    }

    /// Basis of the null space, one column per free variable.
    pub fn kernel(&self) -> FpMatrix {
        let (r, pivots) = self.rref();
        let p = self.p;
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = Self::zeros(p, self.cols, free.len());
        for (idx, &f) in free.iter().enumerate() {
            k[(f, idx)] = 1 % p;
            for (row, &pc) in pivots.iter().enumerate() {
                let v = r[(row, f)];
                k[(pc, idx)] = (p - v) % p;
            }
        }
        k
    }

    /// Echelonized basis of the column space (columns of the result).
    pub fn image(&self) -> FpMatrix {
        let (r, pivots) = self.transpose().rref();
        let rows: Vec<usize> = (0..pivots.len()).collect();
        let cols: Vec<usize> = (0..r.cols).collect();
        r.submatrix(&rows, &cols).transpose()
    }

    pub fn inverse(&self) -> Option<FpMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let aug = self.hstack(&Self::identity(self.p, n));
        let (r, pivots) = aug.rref();
        if pivots.len() < n || (n > 0 && pivots[n - 1] != n - 1) {
            return None;
        }
        let rows: Vec<usize> = (0..n).collect();
        let cols: Vec<usize> = (n..2 * n).collect();
        Some(r.submatrix(&rows, &cols))
    }

    /// Some `X` with `self * X = b`, if one exists.
    pub fn solve(&self, b: &FpMatrix) -> Option<FpMatrix> {
        assert_eq!(self.rows, b.rows);
        let aug = self.hstack(b);
        let (r, pivots) = aug.rref();
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Self::zeros(self.p, self.cols, b.cols);
        for (row, &pc) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(pc, j)] = r[(row, self.cols + j)];
            }
        }
        Some(x)
    }

    pub fn det(&self) -> u32 {
        assert!(self.is_square());
        let p = self.p as u64;
        let mut a = self.clone();
        let n = a.rows;
        let mut det = 1u64;
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| a[(i, c)] != 0) else { return 0 };
            if pr != c {
                for j in 0..n {
                    a.data.swap(pr * n + j, c * n + j);
                }
                det = (p - det) % p;
            }
            let piv = a[(c, c)] as u64;
            det = det * piv % p;
            let inv = inv_mod(a[(c, c)], self.p) as u64;
            for i in c + 1..n {
                if a[(i, c)] == 0 {
                    continue;
                }
                let f = a[(i, c)] as u64 * inv % p;
                for j in c..n {
                    let sub = f * a[(c, j)] as u64 % p;
                    a[(i, j)] = ((a[(i, j)] as u64 + p - sub) % p) as u32;
                }
            }
        }
        det as u32
    }

    /// Rows spanning the annihilator of the column space: `ann * v = 0` iff
    /// `v` lies in the column space.
    pub fn annihilator(&self) -> FpMatrix {
        self.transpose().kernel().transpose()
    }

    /// Basis of `{x : self * x ∈ colspace(sub)}`.
    pub fn preimage(&self, sub: &FpMatrix) -> FpMatrix {
        assert_eq!(self.rows, sub.rows);
        let ann = sub.annihilator();
        if ann.rows == 0 {
            return Self::identity(self.p, self.cols);
        }
        ann.mul(self).kernel()
    }

    /// Basis of `colspace(self) ∩ colspace(other)`.
    pub fn intersect(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.rows, other.rows);
        let joint = self.hstack(&other.scale(-1));
        let k = joint.kernel();
        let top: Vec<usize> = (0..self.cols).collect();
        let cols: Vec<usize> = (0..k.cols).collect();
        self.mul(&k.submatrix(&top, &cols)).image()
    }

    /// Kronecker product; row `(i, k)` sits at `i * other.rows + k`.
    pub fn kron(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.p, other.p);
        let p = self.p as u64;
        let mut out = FpMatrix::zeros(self.p, self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)] as u64;
                if a == 0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = (a * other[(k, l)] as u64 % p) as u32;
                    }
                }
            }
        }
        out
    }

    pub fn contains_col(&self, v: &[u32]) -> bool {
        let b = FpMatrix::from_cols(self.p, self.rows, &[v.to_vec()]);
        self.solve(&b).is_some()
    }
}

impl Index<(usize, usize)> for FpMatrix {
    type Output = u32;
    fn index(&self, (i, j): (usize, usize)) -> &u32 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for FpMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u32 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.p)?;
        let rows: Vec<&[u32]> = (0..self.rows).map(|i| &self.data[i * self.cols..(i + 1) * self.cols]).collect();
        write!(f, "{:?}", rows)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelImage {
    pub kernel: FpMatrix,
    pub image: FpMatrix,
    pub rank: usize,
}

/// Kernel and image bases of a linear map over Z/p, both echelonized.
pub fn kernel_image_mod_p(m: &FpMatrix) -> KernelImage {
    let image = m.image();
    let kernel = m.kernel();
    let rank = image.cols();
    debug_assert_eq!(rank + kernel.cols(), m.cols());
    KernelImage { kernel, image, rank }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_image_examples() {
        let z = FpMatrix::zeros(3, 2, 2);
        let ki = kernel_image_mod_p(&z);
        assert_eq!((ki.kernel.cols(), ki.image.cols()), (2, 0));
        let n = FpMatrix::from_rows(5, &[vec![0, 1], vec![0, 0]]);
        let ki = kernel_image_mod_p(&n);
        assert_eq!((ki.kernel.cols(), ki.rank), (1, 1));
        let id = FpMatrix::identity(2, 3);
        assert_eq!(kernel_image_mod_p(&id).kernel.cols(), 0);
    }

    #[test]
    fn inverse_and_solve() {
        let a = FpMatrix::from_rows(7, &[vec![2, 1], vec![1, 1]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).is_identity());
        assert_eq!(a.det(), 1);
        let s = FpMatrix::from_rows(3, &[vec![1, 2], vec![2, 4]]);
        assert!(s.inverse().is_none());
        assert_eq!(s.det(), 0);
    }

    #[test]
    fn subspace_ops() {
        let a = FpMatrix::from_rows(3, &[vec![1, 0], vec![0, 1], vec![0, 0]]);
        let b = FpMatrix::from_rows(3, &[vec![0, 1], vec![1, 0], vec![0, 1]]);
        assert_eq!(a.intersect(&b).cols(), 1);
        let f = FpMatrix::from_rows(3, &[vec![1, 0], vec![0, 0], vec![0, 0]]);
        assert_eq!(f.preimage(&FpMatrix::zeros(3, 3, 0)).cols(), 1);
    }
}
