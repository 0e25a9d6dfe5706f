use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{IntMatrix, LinalgError};

/// Dense matrix over Q.
#[derive(Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigRational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        QMatrix { rows, cols, data }
    }

    pub fn from_int(m: &IntMatrix) -> Self {
        Self::from_fn(m.rows(), m.cols(), |i, j| BigRational::from_integer(m[(i, j)].clone()))
    }

    /// Entries given as `(numerator, denominator)` pairs.
    pub fn from_fractions(rows: &[Vec<(i64, i64)>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        Self::from_fn(r, c, |i, j| BigRational::new(BigInt::from(rows[i][j].0), BigInt::from(rows[i][j].1)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += v;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, k: &BigRational) -> QMatrix {
        QMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * k).collect() }
    }

    pub fn pow(&self, e: u32) -> QMatrix {
        let mut acc = QMatrix::identity(self.rows);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn transpose(&self) -> QMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> QMatrix {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    pub fn hstack(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn block_diag(blocks: &[QMatrix]) -> QMatrix {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = QMatrix::zeros(r, c);
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

    pub fn trace(&self) -> BigRational {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(pr) = (r..a.rows).find(|&i| !a[(i, c)].is_zero()) else { continue };
            if pr != r {
                for j in 0..a.cols {
                    a.data.swap(pr * a.cols + j, r * a.cols + j);
                }
            }
            let inv = a[(r, c)].recip();
            for j in c..a.cols {
                let v = &a[(r, j)] * &inv;
                a[(r, j)] = v;
            }
            for i in 0..a.rows {
                if i == r || a[(i, c)].is_zero() {
                    continue;
                }
                let f = a[(i, c)].clone();
                for j in c..a.cols {
                    let v = &f * &a[(r, j)];
                    a[(i, j)] -= v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn kernel(&self) -> QMatrix {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = QMatrix::zeros(self.cols, free.len());
        for (idx, &f) in free.iter().enumerate() {
            k[(f, idx)] = BigRational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                k[(pc, idx)] = -r[(row, f)].clone();
            }
        }
        k
    }

    pub fn image(&self) -> QMatrix {
        let (r, pivots) = self.transpose().rref();
        let rows: Vec<usize> = (0..pivots.len()).collect();
        let cols: Vec<usize> = (0..r.cols).collect();
        r.submatrix(&rows, &cols).transpose()
    }

    pub fn inverse(&self) -> Option<QMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let (r, pivots) = self.hstack(&QMatrix::identity(n)).rref();
        if pivots.len() < n || (n > 0 && pivots[n - 1] != n - 1) {
            return None;
        }
        let rows: Vec<usize> = (0..n).collect();
        let cols: Vec<usize> = (n..2 * n).collect();
        Some(r.submatrix(&rows, &cols))
    }

    /// Some `X` with `self * X = b`.
    pub fn solve(&self, b: &QMatrix) -> Option<QMatrix> {
        let (r, pivots) = self.hstack(b).rref();
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = QMatrix::zeros(self.cols, b.cols);
        for (row, &pc) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(pc, j)] = r[(row, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    pub fn det(&self) -> BigRational {
        assert_eq!(self.rows, self.cols);
        let mut a = self.clone();
        let n = a.rows;
        let mut det = BigRational::one();
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| !a[(i, c)].is_zero()) else { return BigRational::zero() };
            if pr != c {
                for j in 0..n {
                    a.data.swap(pr * n + j, c * n + j);
                }
                det = -det;
            }
            det *= a[(c, c)].clone();
            let inv = a[(c, c)].recip();
            for i in c + 1..n {
                if a[(i, c)].is_zero() {
                    continue;
                }
                let f = &a[(i, c)] * &inv;
                for j in c..n {
                    let v = &f * &a[(c, j)];
                    a[(i, j)] -= v;
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for QMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for QMatrix {
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

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharPolyReport {
    /// Monic characteristic polynomial, coefficients from degree 0 upwards.
    pub coeffs: Vec<BigRational>,
    pub integral: bool,
    /// Same data for the inverse matrix, when requested.
    pub inverse: Option<(Vec<BigRational>, bool)>,
}

fn is_integral(c: &[BigRational]) -> bool {
    c.iter().all(|x| x.is_integer())
}

/// Characteristic polynomial by Faddeev–LeVerrier.
pub fn charpoly_rational(m: &QMatrix, with_inverse: bool) -> Result<CharPolyReport, LinalgError> {
    assert_eq!(m.rows(), m.cols(), "charpoly needs a square matrix");
    let n = m.rows();
    let mut c = vec![BigRational::zero(); n + 1];
    c[n] = BigRational::one();
    let mut mk = QMatrix::zeros(n, n);
    for k in 1..=n {
        let mut next = m.mul(&mk);
        for i in 0..n {
            next[(i, i)] += c[n - k + 1].clone();
        }
        mk = next;
        let t = m.mul(&mk).trace();
        c[n - k] = -t / BigRational::from_integer(BigInt::from(k as u64));
    }
    let integral = is_integral(&c);
    let inverse = if with_inverse {
        if c[0].is_zero() {
            return Err(LinalgError::SingularMatrix);
        }
        let c0 = c[0].clone();
        let inv: Vec<BigRational> = (0..=n).map(|i| &c[n - i] / &c0).collect();
        let ok = is_integral(&inv);
        Some((inv, ok))
    } else {
        None
    };
    Ok(CharPolyReport { coeffs: c, integral, inverse })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn charpoly_examples() {
        let r = charpoly_rational(&QMatrix::from_fractions(&[vec![(2, 1)]]), true).unwrap();
        assert_eq!(r.coeffs, vec![q(-2, 1), q(1, 1)]);
        assert!(r.integral);
        let r = charpoly_rational(&QMatrix::from_int(&IntMatrix::from_rows(&[vec![1, 3], vec![3, 10]])), true).unwrap();
        assert_eq!(r.coeffs, vec![q(1, 1), q(-11, 1), q(1, 1)]);
        assert!(r.integral && r.inverse.as_ref().unwrap().1);
        let r = charpoly_rational(&QMatrix::from_fractions(&[vec![(2, 3)]]), true).unwrap();
        assert!(!r.integral);
        let (inv, ok) = r.inverse.unwrap();
        assert_eq!(inv, vec![q(-3, 2), q(1, 1)]);
        assert!(!ok);
    }

    #[test]
    fn singular_inverse_request() {
        let z = QMatrix::zeros(1, 1);
        assert_eq!(charpoly_rational(&z, true), Err(LinalgError::SingularMatrix));
        assert!(charpoly_rational(&z, false).is_ok());
    }
}
