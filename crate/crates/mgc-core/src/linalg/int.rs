use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{SmithNormalForm, SnfResult};

/// Dense integer matrix, row-major, arbitrary precision.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        IntMatrix { rows, cols, data }
    }

    /// Builds from `i64` rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| BigInt::from(rows[i][j]))
    }

    pub fn from_diag(d: &[BigInt]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, x) in d.iter().enumerate() {
            m[(i, i)] = x.clone();
        }
        m
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
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        use num_traits::ToPrimitive;
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_i64()).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> IntMatrix {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn pow(&self, e: u32) -> IntMatrix {
        assert!(self.is_square());
        let mut acc = IntMatrix::identity(self.rows);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `[self | other]`
    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols);
        Self::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)].clone()
            } else {
                other[(i - self.rows, j)].clone()
            }
        })
    }

    pub fn block_diag(blocks: &[IntMatrix]) -> IntMatrix {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = IntMatrix::zeros(r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)].clone();
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> IntMatrix {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)]) / &prev;
                    a[(i, j)] = v;
                }
            }
            prev = a[(k, k)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }

    pub(crate) fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    pub(crate) fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// row_i += k * row_j
    pub(crate) fn add_row_multiple(&mut self, i: usize, j: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let v = &self[(j, c)] * k;
            self[(i, c)] += v;
        }
    }

    /// col_i += k * col_j
    pub(crate) fn add_col_multiple(&mut self, i: usize, j: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let v = &self[(r, j)] * k;
            self[(r, i)] += v;
        }
    }

    pub(crate) fn negate_row(&mut self, i: usize) {
        for c in 0..self.cols {
            let v = -core::mem::take(&mut self[(i, c)]);
            self[(i, c)] = v;
        }
    }

    pub(crate) fn negate_col(&mut self, j: usize) {
        for r in 0..self.rows {
            let v = -core::mem::take(&mut self[(r, j)]);
            self[(r, j)] = v;
        }
    }

    /// Column Hermite normal form: a canonical generating matrix of the lattice
    /// spanned by the columns (zero columns dropped). Pivot rows strictly
    /// increase, pivots positive, entries left of a pivot reduced into `[0, pivot)`.
    pub fn column_hnf(&self) -> IntMatrix {
        let mut a = self.clone();
        let mut pivot_col = 0;
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        for r in 0..a.rows {
            if pivot_col >= a.cols {
                break;
            }
            loop {
                // smallest nonzero |entry| in row r among the unused columns
                let mut best: Option<usize> = None;
                for j in pivot_col..a.cols {
                    if a[(r, j)].is_zero() {
                        continue;
                    }
                    match best {
                        Some(b) if a[(r, b)].abs() <= a[(r, j)].abs() => {}
                        _ => best = Some(j),
                    }
                }
                let Some(b) = best else { break };
                a.swap_cols(pivot_col, b);
                let mut clean = true;
                for j in pivot_col + 1..a.cols {
                    if a[(r, j)].is_zero() {
                        continue;
                    }
                    let q = a[(r, j)].div_floor(&a[(r, pivot_col)]);
                    a.add_col_multiple(j, pivot_col, &-q);
                    if !a[(r, j)].is_zero() {
                        clean = false;
                    }
                }
                if clean {
                    if a[(r, pivot_col)].is_negative() {
                        a.negate_col(pivot_col);
                    }
                    pivots.push((r, pivot_col));
                    pivot_col += 1;
                    break;
                }
            }
        }
        for &(r, pc) in &pivots {
            for j in 0..pc {
                let q = a[(r, j)].div_floor(&a[(r, pc)]);
                a.add_col_multiple(j, pc, &-q);
            }
        }
        let keep: Vec<usize> = (0..pivot_col).collect();
        let all_rows: Vec<usize> = (0..a.rows).collect();
        a.submatrix(&all_rows, &keep)
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl SmithNormalForm for IntMatrix {
    type Elem = BigInt;

    fn smith_normal_form(&self) -> SnfResult<Self> {
        snf_int(self)
    }
}

struct Tracker {
    a: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
    v_inv: IntMatrix,
}

impl Tracker {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        self.u.swap_rows(i, j);
        self.u_inv.swap_cols(i, j);
    }
    fn swap_cols(&mut self, i: usize, j: usize) {
        self.a.swap_cols(i, j);
        self.v.swap_cols(i, j);
        self.v_inv.swap_rows(i, j);
    }
    fn add_row(&mut self, i: usize, j: usize, k: &BigInt) {
        self.a.add_row_multiple(i, j, k);
        self.u.add_row_multiple(i, j, k);
        self.u_inv.add_col_multiple(j, i, &-k);
    }
    fn add_col(&mut self, i: usize, j: usize, k: &BigInt) {
        self.a.add_col_multiple(i, j, k);
        self.v.add_col_multiple(i, j, k);
        self.v_inv.add_row_multiple(j, i, &-k);
    }
    fn negate_row(&mut self, i: usize) {
        self.a.negate_row(i);
        self.u.negate_row(i);
        self.u_inv.negate_col(i);
    }
}

fn snf_int(m: &IntMatrix) -> SnfResult<IntMatrix> {
    let (r, c) = (m.rows, m.cols);
    let mut t = Tracker {
        a: m.clone(),
        u: IntMatrix::identity(r),
        u_inv: IntMatrix::identity(r),
        v: IntMatrix::identity(c),
        v_inv: IntMatrix::identity(c),
    };
    let n = r.min(c);
    for s in 0..n {
        loop {
            // global minimum |entry| over the trailing block, row-major ties
            let mut best: Option<(usize, usize)> = None;
            for i in s..r {
                for j in s..c {
                    let x = &t.a[(i, j)];
                    if x.is_zero() {
                        continue;
                    }
                    match best {
                        Some((bi, bj)) if t.a[(bi, bj)].abs() <= x.abs() => {}
                        _ => best = Some((i, j)),
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            t.swap_rows(s, pi);
            t.swap_cols(s, pj);
            let mut clean = true;
            for i in s + 1..r {
                if t.a[(i, s)].is_zero() {
                    continue;
                }
                let q = t.a[(i, s)].div_floor(&t.a[(s, s)]);
                t.add_row(i, s, &-q);
                if !t.a[(i, s)].is_zero() {
                    clean = false;
                }
            }
            for j in s + 1..c {
                if t.a[(s, j)].is_zero() {
                    continue;
                }
                let q = t.a[(s, j)].div_floor(&t.a[(s, s)]);
                t.add_col(j, s, &-q);
                if !t.a[(s, j)].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility: fold an offending row into the pivot row
            let piv = t.a[(s, s)].clone();
            let bad = (s + 1..r).find(|&i| (s + 1..c).any(|j| !t.a[(i, j)].is_multiple_of(&piv)));
            match bad {
                Some(i) => t.add_row(s, i, &BigInt::one()),
                None => break,
            }
        }
        if t.a[(s, s)].is_negative() {
            t.negate_row(s);
        }
    }
    let diag = (0..n).map(|i| t.a[(i, i)].clone()).collect();
    SnfResult { u: t.u, u_inv: t.u_inv, v: t.v, v_inv: t.v_inv, diag }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::smith_normal_form;

    fn check(m: &IntMatrix) -> Vec<BigInt> {
        let s = smith_normal_form(m);
        let d = s.d_matrix(m.rows(), m.cols());
        assert_eq!(s.u.mul(m).mul(&s.v), d);
        assert_eq!(s.u.mul(&s.u_inv), IntMatrix::identity(m.rows()));
        assert_eq!(s.v.mul(&s.v_inv), IntMatrix::identity(m.cols()));
        s.diag
    }

    #[test]
    fn snf_small_examples() {
        let d = check(&IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]));
        assert_eq!(d, vec![BigInt::from(2), BigInt::from(4)]);
        let d = check(&IntMatrix::from_rows(&[vec![0, 3], vec![3, 9]]));
        assert_eq!(d, vec![BigInt::from(3), BigInt::from(3)]);
        let d = check(&IntMatrix::identity(2));
        assert_eq!(d, vec![BigInt::one(), BigInt::one()]);
    }

    #[test]
    fn snf_empty_and_zero() {
        let e = IntMatrix::zeros(0, 3);
        assert!(check(&e).is_empty());
        let z = IntMatrix::zeros(2, 3);
        assert_eq!(check(&z), vec![BigInt::zero(), BigInt::zero()]);
    }

    #[test]
    fn det_and_hnf() {
        let m = IntMatrix::from_rows(&[vec![1, 3], vec![3, 10]]);
        assert_eq!(m.det(), BigInt::one());
        let m = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]);
        assert_eq!(m.det(), BigInt::from(-8));
        let h = IntMatrix::from_rows(&[vec![4, 6]]).column_hnf();
        assert_eq!(h, IntMatrix::from_rows(&[vec![2]]));
        let a = IntMatrix::from_rows(&[vec![2, 0], vec![1, 3]]).column_hnf();
        let b = IntMatrix::from_rows(&[vec![2, 2], vec![1, 4]]).column_hnf();
        assert_eq!(a, b);
    }
}
