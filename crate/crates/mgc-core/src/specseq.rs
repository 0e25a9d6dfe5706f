//! Spectral sequences of bounded first-quadrant double complexes over `Z/p`
//! (column filtration, homological grading) and the page-wise comparison
//! criterion for morphisms.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fuzz::random_invertible;
use crate::linalg::FpMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecSeqError {
    #[error("not a morphism of double complexes: {0}")]
    NotAMorphism(String),
    #[error("not a double complex: {0}")]
    NotADoubleComplex(String),
}

/// `dims[k][l]` for `0 ≤ k < width`, `0 ≤ l < height`; `dh[k][l]: (k,l) → (k-1,l)`,
/// `dv[k][l]: (k,l) → (k,l-1)` (zero-row matrices on the boundary).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleComplex {
    pub p: u32,
    pub dims: Vec<Vec<usize>>,
    pub dh: Vec<Vec<FpMatrix>>,
    pub dv: Vec<Vec<FpMatrix>>,
}

impl DoubleComplex {
    pub fn zero(p: u32, width: usize, height: usize) -> Self {
        Self::from_dims(p, vec![vec![0; height]; width])
    }

    /// All differentials zero.
    pub fn from_dims(p: u32, dims: Vec<Vec<usize>>) -> Self {
        let (w, h) = (dims.len(), dims.first().map_or(0, |c| c.len()));
        let dh = (0..w)
            .map(|k| (0..h).map(|l| FpMatrix::zeros(p, if k > 0 { dims[k - 1][l] } else { 0 }, dims[k][l])).collect())
            .collect();
        let dv = (0..w)
            .map(|k| (0..h).map(|l| FpMatrix::zeros(p, if l > 0 { dims[k][l - 1] } else { 0 }, dims[k][l])).collect())
            .collect();
        DoubleComplex { p, dims, dh, dv }
    }

    pub fn width(&self) -> usize {
        self.dims.len()
    }

    pub fn height(&self) -> usize {
        self.dims.first().map_or(0, |c| c.len())
    }

    pub fn dim(&self, k: isize, l: isize) -> usize {
        if k < 0 || l < 0 || k as usize >= self.width() || l as usize >= self.height() {
            0
        } else {
            self.dims[k as usize][l as usize]
        }
    }

    pub fn top_degree(&self) -> usize {
        (self.width() + self.height()).saturating_sub(2)
    }

    pub fn validate(&self) -> Result<(), SpecSeqError> {
        let (w, h) = (self.width(), self.height());
        for k in 0..w {
            for l in 0..h {
                if k >= 2 && !self.dh[k - 1][l].mul(&self.dh[k][l]).is_zero() {
                    return Err(SpecSeqError::NotADoubleComplex(alloc::format!("dh² ≠ 0 at ({},{})", k, l)));
                }
                if l >= 2 && !self.dv[k][l - 1].mul(&self.dv[k][l]).is_zero() {
                    return Err(SpecSeqError::NotADoubleComplex(alloc::format!("dv² ≠ 0 at ({},{})", k, l)));
                }
                if k >= 1 && l >= 1 {
                    let a = self.dh[k][l - 1].mul(&self.dv[k][l]);
                    let b = self.dv[k - 1][l].mul(&self.dh[k][l]);
                    if !a.add(&b).is_zero() {
                        return Err(SpecSeqError::NotADoubleComplex(alloc::format!("dh dv + dv dh ≠ 0 at ({},{})", k, l)));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(k, offset)` blocks of `Tot_n`, ordered by column.
    fn layout(&self, n: isize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        let mut off = 0;
        for k in 0..self.width() {
            let l = n - k as isize;
            let d = self.dim(k as isize, l);
            if d > 0 {
                out.push((k, off, d));
                off += d;
            }
        }
        out
    }

    pub fn total_dim(&self, n: isize) -> usize {
        self.layout(n).iter().map(|x| x.2).sum()
    }

    /// Column index of each basis vector of `Tot_n`.
    fn columns(&self, n: isize) -> Vec<usize> {
        self.layout(n).into_iter().flat_map(|(k, _, d)| core::iter::repeat_n(k, d)).collect()
    }

    /// `D = dh + dv : Tot_n → Tot_{n-1}`.
    pub fn total_differential(&self, n: isize) -> FpMatrix {
        let src = self.layout(n);
        let dst = self.layout(n - 1);
        let mut out = FpMatrix::zeros(self.p, self.total_dim(n - 1), self.total_dim(n));
        let find = |k: usize| dst.iter().find(|x| x.0 == k).map(|x| x.1);
        for &(k, so, d) in &src {
            let l = (n - k as isize) as usize;
            if k >= 1 {
                if let Some(to) = find(k - 1) {
                    let m = &self.dh[k][l];
                    for i in 0..m.rows() {
                        for j in 0..d {
                            out[(to + i, so + j)] = m[(i, j)];
                        }
                    }
                }
            }
            if l >= 1 {
                if let Some(to) = find(k) {
                    let m = &self.dv[k][l];
                    for i in 0..m.rows() {
                        for j in 0..d {
                            out[(to + i, so + j)] = m[(i, j)];
                        }
                    }
                }
            }
        }
        out
    }

    pub fn total_homology_dims(&self) -> Vec<usize> {
        (0..=self.top_degree() as isize)
            .map(|n| {
                let d = self.total_differential(n);
                let dn1 = self.total_differential(n + 1);
                self.total_dim(n) - d.rank() - dn1.rank()
            })
            .collect()
    }

    /// Dual complex: the transposed differentials, read homologically.
    /// Cohomological statements about `self` become homological ones here.
    pub fn dual_of_cochain(p: u32, dims: Vec<Vec<usize>>, dh_up: &[Vec<FpMatrix>], dv_up: &[Vec<FpMatrix>]) -> Self {
        // dh_up[k][l]: (k,l) → (k+1,l); transposes go (k+1,l) → (k,l)
        let mut dc = Self::from_dims(p, dims);
        for k in 1..dc.width() {
            for l in 0..dc.height() {
                dc.dh[k][l] = dh_up[k - 1][l].transpose();
            }
        }
        for k in 0..dc.width() {
            for l in 1..dc.height() {
                dc.dv[k][l] = dv_up[k][l - 1].transpose();
            }
        }
        dc
    }

    /// Sub-bicomplex of columns `≤ kmax`.
    pub fn column_truncation(&self, kmax: usize) -> Self {
        self.restrict(|k, _| k <= kmax)
    }

    /// Sub-bicomplex of rows `≤ lmax`.
    pub fn row_truncation(&self, lmax: usize) -> Self {
        self.restrict(|_, l| l <= lmax)
    }

    /// Keeps bidegrees where `keep` holds; differentials into dropped spots are cut.
    fn restrict(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let dims = (0..self.width()).map(|k| (0..self.height()).map(|l| if keep(k, l) { self.dims[k][l] } else { 0 }).collect()).collect();
        let mut dc = Self::from_dims(self.p, dims);
        for k in 0..self.width() {
            for l in 0..self.height() {
                if !keep(k, l) {
                    continue;
                }
                if k >= 1 && keep(k - 1, l) {
                    dc.dh[k][l] = self.dh[k][l].clone();
                }
                if l >= 1 && keep(k, l - 1) {
                    dc.dv[k][l] = self.dv[k][l].clone();
                }
            }
        }
        dc
    }

    /// Conjugates by a bigraded basis change `P`: `d' = P d P^{-1}`.
    pub fn conjugate(&self, change: &[Vec<FpMatrix>]) -> Self {
        let inv: Vec<Vec<FpMatrix>> = change.iter().map(|c| c.iter().map(|m| m.inverse().expect("invertible basis change")).collect()).collect();
        let mut dc = self.clone();
        for k in 0..self.width() {
            for l in 0..self.height() {
                if k >= 1 {
                    dc.dh[k][l] = change[k - 1][l].mul(&self.dh[k][l]).mul(&inv[k][l]);
                }
                if l >= 1 {
                    dc.dv[k][l] = change[k][l - 1].mul(&self.dv[k][l]).mul(&inv[k][l]);
                }
            }
        }
        dc
    }
}

/// Bigraded map `maps[k][l]: C_{k,l} → C'_{k,l}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleMorphism {
    pub source: DoubleComplex,
    pub target: DoubleComplex,
    pub maps: Vec<Vec<FpMatrix>>,
}

impl DoubleMorphism {
    pub fn identity(c: &DoubleComplex) -> Self {
        let maps = c.dims.iter().map(|col| col.iter().map(|&d| FpMatrix::identity(c.p, d)).collect()).collect();
        DoubleMorphism { source: c.clone(), target: c.clone(), maps }
    }

    pub fn validate(&self) -> Result<(), SpecSeqError> {
        let (s, t) = (&self.source, &self.target);
        if s.dims.len() != t.dims.len() || s.height() != t.height() {
            return Err(SpecSeqError::NotAMorphism(String::from("grids differ")));
        }
        for k in 0..s.width() {
            for l in 0..s.height() {
                let f = &self.maps[k][l];
                if (f.rows(), f.cols()) != (t.dims[k][l], s.dims[k][l]) {
                    return Err(SpecSeqError::NotAMorphism(alloc::format!("shape at ({},{})", k, l)));
                }
                if k >= 1 && t.dh[k][l].mul(f) != self.maps[k - 1][l].mul(&s.dh[k][l]) {
                    return Err(SpecSeqError::NotAMorphism(alloc::format!("dh at ({},{})", k, l)));
                }
                if l >= 1 && t.dv[k][l].mul(f) != self.maps[k][l - 1].mul(&s.dv[k][l]) {
                    return Err(SpecSeqError::NotAMorphism(alloc::format!("dv at ({},{})", k, l)));
                }
            }
        }
        Ok(())
    }

    fn total(&self, n: isize) -> FpMatrix {
        let (s, t) = (&self.source, &self.target);
        let mut out = FpMatrix::zeros(s.p, t.total_dim(n), s.total_dim(n));
        let tl = t.layout(n);
        for (k, so, d) in s.layout(n) {
            let Some(&(_, to, _)) = tl.iter().find(|x| x.0 == k) else { continue };
            let l = (n - k as isize) as usize;
            let f = &self.maps[k][l];
            for i in 0..f.rows() {
                for j in 0..d {
                    out[(to + i, so + j)] = f[(i, j)];
                }
            }
        }
        out
    }

    /// `P' f P^{-1}` after conjugating source by `P` and target by `P'`.
    pub fn conjugate(&self, src_change: &[Vec<FpMatrix>], dst_change: &[Vec<FpMatrix>]) -> Self {
        let maps = (0..self.maps.len())
            .map(|k| {
                (0..self.maps[k].len())
                    .map(|l| dst_change[k][l].mul(&self.maps[k][l]).mul(&src_change[k][l].inverse().expect("invertible")))
                    .collect()
            })
            .collect();
        DoubleMorphism { source: self.source.conjugate(src_change), target: self.target.conjugate(dst_change), maps }
    }
}

/// Subspace `{x ∈ F_k Tot_n : D x ∈ F_{k-r} Tot_{n-1}}` (columns are a basis).
fn z_space(dc: &DoubleComplex, r: isize, k: isize, n: isize) -> FpMatrix {
    let p = dc.p;
    let cols_n = dc.columns(n);
    let cols_n1 = dc.columns(n - 1);
    let inside: Vec<usize> = (0..cols_n.len()).filter(|&i| cols_n[i] as isize <= k).collect();
    let embed = FpMatrix::from_fn(p, cols_n.len(), inside.len(), |i, j| i64::from(inside[j] == i));
    let d = dc.total_differential(n);
    let outside: Vec<usize> = (0..cols_n1.len()).filter(|&i| cols_n1[i] as isize > k - r).collect();
    if outside.is_empty() {
        return embed;
    }
    let all: Vec<usize> = (0..d.cols()).collect();
    let proj = d.submatrix(&outside, &all);
    embed.mul(&proj.mul(&embed).kernel())
}

/// `E^r_{k,l}` as `Z / B` inside `Tot_{k+l}`.
#[derive(Clone, Debug)]
struct PageEntry {
    b: FpMatrix,
    /// representatives completing `b` to a basis of `z`
    reps: FpMatrix,
}

impl PageEntry {
    fn new(z: FpMatrix, b: FpMatrix) -> Self {
        let p = z.p();
        let b = b.image();
        let mut span = b.clone();
        let mut reps = Vec::new();
        for j in 0..z.cols() {
            let c = z.col(j);
            if !span.contains_col(&c) {
                span = span.hstack(&FpMatrix::from_cols(p, z.rows(), core::slice::from_ref(&c)));
                reps.push(c);
            }
        }
        PageEntry { reps: FpMatrix::from_cols(p, z.rows(), &reps), b }
    }

    fn dim(&self) -> usize {
        self.reps.cols()
    }

    fn coords(&self, x: &[u32]) -> Option<Vec<u32>> {
        let sys = self.reps.hstack(&self.b);
        let sol = sys.solve(&FpMatrix::from_cols(sys.p(), sys.rows(), &[x.to_vec()]))?;
        Some((0..self.dim()).map(|i| sol[(i, 0)]).collect())
    }
}

fn page_entry(dc: &DoubleComplex, r: isize, k: isize, l: isize) -> PageEntry {
    let n = k + l;
    let z = z_space(dc, r, k, n);
    let b1 = z_space(dc, r - 1, k - 1, n);
    let zz = z_space(dc, r - 1, k + r - 1, n + 1);
    let b2 = dc.total_differential(n + 1).mul(&zz);
    let b = if b1.rows() == 0 { b2 } else { b1.hstack(&b2) };
    PageEntry::new(z, b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectralPage {
    pub r: usize,
    pub dims: Vec<Vec<usize>>,
    /// `differentials[k][l]: E^r_{k,l} → E^r_{k-r,l+r-1}` (empty when off the grid)
    pub differentials: Vec<Vec<FpMatrix>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abutment {
    pub dims: Vec<usize>,
    /// `filtration[n][k] = dim F_k H_n`
    pub filtration: Vec<Vec<usize>>,
}

fn page(dc: &DoubleComplex, r: usize) -> (SpectralPage, Vec<Vec<PageEntry>>) {
    let (w, h) = (dc.width(), dc.height());
    let ri = r as isize;
    let entries: Vec<Vec<PageEntry>> =
        (0..w).map(|k| (0..h).map(|l| page_entry(dc, ri, k as isize, l as isize)).collect()).collect();
    let mut diffs = Vec::new();
    for k in 0..w {
        let mut col = Vec::new();
        for l in 0..h {
            let (tk, tl) = (k as isize - ri, l as isize + ri - 1);
            let src = &entries[k][l];
            if tk < 0 || tl < 0 || tl as usize >= h {
                col.push(FpMatrix::zeros(dc.p, 0, src.dim()));
                continue;
            }
            let dst = &entries[tk as usize][tl as usize];
            let d = dc.total_differential((k + l) as isize);
            let img = d.mul(&src.reps);
            let cols: Vec<Vec<u32>> = (0..img.cols()).map(|j| dst.coords(&img.col(j)).expect("d_r lands in Z^r")).collect();
            col.push(FpMatrix::from_cols(dc.p, dst.dim(), &cols));
        }
        diffs.push(col);
    }
    let dims = entries.iter().map(|c| c.iter().map(|e| e.dim()).collect()).collect();
    (SpectralPage { r, dims, differentials: diffs }, entries)
}

/// Pages `E^1 … E^rmax` and the filtered total homology.
pub fn pages_from_double_complex(dc: &DoubleComplex, rmax: usize) -> (Vec<SpectralPage>, Abutment) {
    let pages: Vec<SpectralPage> = (1..=rmax.max(1)).map(|r| page(dc, r).0).collect();
    let top = dc.top_degree() as isize;
    let mut dims = Vec::new();
    let mut filtration = Vec::new();
    for n in 0..=top {
        let d = dc.total_differential(n);
        let cycles = d.kernel();
        let bound = dc.total_differential(n + 1).image();
        let b = bound.cols();
        let cols = dc.columns(n);
        let mut filt = Vec::new();
        for k in 0..dc.width() {
            let zk = z_space(dc, n + 2, k as isize, n);
            let span = if b == 0 { zk } else { zk.hstack(&bound) };
            filt.push(span.rank() - b);
        }
        let _ = cols;
        dims.push(cycles.cols() - b);
        filtration.push(filt);
    }
    (pages, Abutment { dims, filtration })
}

/// `E^∞_{k,l}` dimensions from the filtration of total homology.
pub fn e_infinity_from_abutment(dc: &DoubleComplex, ab: &Abutment) -> Vec<Vec<usize>> {
    let (w, h) = (dc.width(), dc.height());
    let mut out = vec![vec![0; h]; w];
    for (n, filt) in ab.filtration.iter().enumerate() {
        for k in 0..w {
            let l = n as isize - k as isize;
            if l < 0 || l as usize >= h {
                continue;
            }
            let prev = if k == 0 { 0 } else { filt[k - 1] };
            out[k][l as usize] = filt[k] - prev;
        }
    }
    out
}

/// Induced map on `E^r` entries.
fn page_map(f: &DoubleMorphism, r: usize) -> Vec<Vec<FpMatrix>> {
    let (_, es) = page(&f.source, r);
    let (_, et) = page(&f.target, r);
    let (w, h) = (f.source.width(), f.source.height());
    (0..w)
        .map(|k| {
            (0..h)
                .map(|l| {
                    let ft = f.total((k + l) as isize);
                    let img = ft.mul(&es[k][l].reps);
                    let cols: Vec<Vec<u32>> =
                        (0..img.cols()).map(|j| et[k][l].coords(&img.col(j)).expect("morphism preserves Z^r")).collect();
                    FpMatrix::from_cols(f.source.p, et[k][l].dim(), &cols)
                })
                .collect()
        })
        .collect()
}

fn is_iso(m: &FpMatrix) -> bool {
    m.rows() == m.cols() && m.rank() == m.rows()
}

/// Induced map on total homology in degree `n`, as an iso test.
pub fn total_homology_iso(f: &DoubleMorphism, n: isize) -> bool {
    let (s, t) = (&f.source, &f.target);
    let hs = PageEntry::new(s.total_differential(n).kernel(), s.total_differential(n + 1));
    let ht = PageEntry::new(t.total_differential(n).kernel(), t.total_differential(n + 1));
    let img = f.total(n).mul(&hs.reps);
    let cols: Vec<Vec<u32>> = (0..img.cols()).map(|j| ht.coords(&img.col(j)).expect("cycles go to cycles")).collect();
    is_iso(&FpMatrix::from_cols(s.p, ht.dim(), &cols))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComparisonVerdict {
    pub r: usize,
    pub n: usize,
    /// `f^r_{k,l}` iso on the whole region `(r-1)k ≤ r(n-l)`
    pub hypothesis: bool,
    /// `φ_m` iso, `m = 0..=top`
    pub total_iso: Vec<bool>,
    /// hypothesis held but some `φ_m`, `m ≤ n`, is not iso
    pub violation: bool,
}

pub fn in_region(r: usize, n: usize, k: usize, l: usize) -> bool {
    (r as isize - 1) * k as isize <= r as isize * (n as isize - l as isize)
}

pub fn region_hypothesis(f: &DoubleMorphism, r: usize, n: usize) -> bool {
    let maps = page_map(f, r);
    (0..maps.len()).all(|k| (0..maps[k].len()).all(|l| !in_region(r, n, k, l) || is_iso(&maps[k][l])))
}

pub fn compare_morphism(f: &DoubleMorphism, r: usize, n: usize) -> Result<ComparisonVerdict, SpecSeqError> {
    f.source.validate()?;
    f.target.validate()?;
    f.validate()?;
    let hypothesis = region_hypothesis(f, r, n);
    let top = f.source.top_degree().max(n + 1);
    let total_iso: Vec<bool> = (0..=top as isize).map(|m| total_homology_iso(f, m)).collect();
    let violation = hypothesis && total_iso.iter().take(n + 1).any(|ok| !ok);
    Ok(ComparisonVerdict { r, n, hypothesis, total_iso, violation })
}

/// Cochain-level comparison: both complexes are given by their duals, and
/// `f_dual` is the transpose of the cochain map (so it runs target → source).
pub fn compare_morphism_cohomological(f_dual: &DoubleMorphism, r: usize, n: usize) -> Result<ComparisonVerdict, SpecSeqError> {
    compare_morphism(f_dual, r, n)
}

/// One indecomposable piece of a random bicomplex.
#[derive(Clone, Debug)]
enum Piece {
    Dot(usize, usize),
    Square(usize, usize),
    /// sources at `(k0+j, l0-j)`, `j < len`; optional first/last targets
    Zigzag { k0: usize, l0: usize, len: usize, first: bool, last: bool },
}

fn piece_cells(piece: &Piece) -> Vec<(usize, usize)> {
    match *piece {
        Piece::Dot(k, l) => vec![(k, l)],
        Piece::Square(k, l) => vec![(k, l), (k - 1, l), (k, l - 1), (k - 1, l - 1)],
        Piece::Zigzag { k0, l0, len, first, last } => {
            let mut v: Vec<(usize, usize)> = (0..len).map(|j| (k0 + j, l0 - j)).collect();
            for j in 0..=len {
                if (j == 0 && !first) || (j == len && !last) {
                    continue;
                }
                v.push((k0 + j - 1, l0 - j));
            }
            v
        }
    }
}

fn assemble(p: u32, w: usize, h: usize, pieces: &[Piece]) -> DoubleComplex {
    let mut dims = vec![vec![0usize; h]; w];
    // (piece, cell) → local index
    let mut idx: Vec<Vec<usize>> = Vec::new();
    for pc in pieces {
        idx.push(
            piece_cells(pc)
                .into_iter()
                .map(|(k, l)| {
                    dims[k][l] += 1;
                    dims[k][l] - 1
                })
                .collect(),
        );
    }
    let mut dc = DoubleComplex::from_dims(p, dims);
    let neg1 = p - 1;
    for (pc, ix) in pieces.iter().zip(&idx) {
        match *pc {
            Piece::Dot(..) => {}
            Piece::Square(k, l) => {
                // x at (k,l): dh x = a, dv x = b, dh b = c, dv a = -c
                dc.dh[k][l][(ix[1], ix[0])] = 1;
                dc.dv[k][l][(ix[2], ix[0])] = 1;
                dc.dh[k][l - 1][(ix[3], ix[2])] = 1;
                dc.dv[k - 1][l][(ix[3], ix[1])] = neg1;
            }
            Piece::Zigzag { k0, l0, len, first, last } => {
                let mut t = len;
                for j in 0..=len {
                    if (j == 0 && !first) || (j == len && !last) {
                        continue;
                    }
                    let target = ix[t];
                    t += 1;
                    // dh x_j = y_j, dv x_{j-1} = -y_j
                    if j < len {
                        let (k, l) = (k0 + j, l0 - j);
                        dc.dh[k][l][(target, ix[j])] = 1;
                    }
                    if j >= 1 {
                        let (k, l) = (k0 + j - 1, l0 - j + 1);
                        dc.dv[k][l][(target, ix[j - 1])] = neg1;
                    }
                }
            }
        }
    }
    dc
}

fn random_piece(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Piece {
    loop {
        let kind = rng.gen_range(0..3);
        let k = rng.gen_range(0..w);
        let l = rng.gen_range(0..h);
        match kind {
            0 => return Piece::Dot(k, l),
            1 if k >= 1 && l >= 1 => return Piece::Square(k, l),
            2 => {
                let max_len = (w - k).min(l + 1);
                if max_len == 0 {
                    continue;
                }
                let len = rng.gen_range(1..=max_len);
                let first = k >= 1 && rng.gen_bool(0.5);
                let last = l + 1 > len && rng.gen_bool(0.5);
                if len == 1 && !first && !last {
                    continue;
                }
                return Piece::Zigzag { k0: k, l0: l, len, first, last };
            }
            _ => {}
        }
    }
}

fn random_change(rng: &mut ChaCha8Rng, dc: &DoubleComplex) -> Vec<Vec<FpMatrix>> {
    dc.dims.iter().map(|col| col.iter().map(|&d| random_invertible(rng, dc.p, d)).collect()).collect()
}

/// Bigraded inclusion of the sub-bicomplex given by `keep` (coordinates kept as-is).
fn inclusion(sub: &DoubleComplex, full: &DoubleComplex) -> DoubleMorphism {
    let maps = (0..full.width())
        .map(|k| (0..full.height()).map(|l| FpMatrix::from_fn(full.p, full.dims[k][l], sub.dims[k][l], |i, j| i64::from(i == j))).collect())
        .collect();
    DoubleMorphism { source: sub.clone(), target: full.clone(), maps }
}

/// Quotient by a sub-bicomplex that is a union of whole bidegrees.
fn quotient(sub: &DoubleComplex, full: &DoubleComplex) -> DoubleMorphism {
    let dims: Vec<Vec<usize>> =
        (0..full.width()).map(|k| (0..full.height()).map(|l| if sub.dims[k][l] == 0 { full.dims[k][l] } else { 0 }).collect()).collect();
    let mut q = DoubleComplex::from_dims(full.p, dims.clone());
    for k in 0..full.width() {
        for l in 0..full.height() {
            if dims[k][l] == 0 {
                continue;
            }
            if k >= 1 && dims[k - 1][l] > 0 {
                q.dh[k][l] = full.dh[k][l].clone();
            }
            if l >= 1 && dims[k][l - 1] > 0 {
                q.dv[k][l] = full.dv[k][l].clone();
            }
        }
    }
    let maps = (0..full.width())
        .map(|k| (0..full.height()).map(|l| FpMatrix::from_fn(full.p, dims[k][l], full.dims[k][l], |i, j| i64::from(i == j))).collect())
        .collect();
    DoubleMorphism { source: full.clone(), target: q, maps }
}

/// Seeded random bicomplex of `size × size` built from dots, squares and
/// zigzags, then conjugated by a random basis change.
pub fn random_double_complex(seed: u64, size: usize, p: u32) -> DoubleComplex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pieces: Vec<Piece> = (0..rng.gen_range(1..=2 * size)).map(|_| random_piece(&mut rng, size, size)).collect();
    let dc = assemble(p, size, size, &pieces);
    let ch = random_change(&mut rng, &dc);
    dc.conjugate(&ch)
}

/// Seeded random morphism: summand inclusion, truncation inclusion or
/// truncation quotient, with random basis changes on both ends.
pub fn random_morphism(seed: u64, size: usize, p: u32) -> DoubleMorphism {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pieces: Vec<Piece> = (0..rng.gen_range(2..=2 * size + 1)).map(|_| random_piece(&mut rng, size, size)).collect();
    let full = assemble(p, size, size, &pieces);
    let f = match rng.gen_range(0..5) {
        0 => {
            pieces.shuffle(&mut rng);
            let keep = rng.gen_range(1..=pieces.len());
            // pieces are re-assembled so the kept ones come first in every bidegree
            let full = assemble(p, size, size, &pieces);
            let sub = assemble(p, size, size, &pieces[..keep]);
            inclusion(&sub, &full)
        }
        1 => inclusion(&full.column_truncation(rng.gen_range(0..size)), &full),
        2 => inclusion(&full.row_truncation(rng.gen_range(0..size)), &full),
        3 => quotient(&full.column_truncation(rng.gen_range(0..size)), &full),
        _ => quotient(&full.row_truncation(rng.gen_range(0..size)), &full),
    };
    let cs = random_change(&mut rng, &f.source);
    let ct = random_change(&mut rng, &f.target);
    f.conjugate(&cs, &ct)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzRecord {
    pub seed: u64,
    pub n: usize,
    pub verdict: ComparisonVerdict,
}

#[derive(Clone, Debug, Default)]
pub struct FuzzSummary {
    pub tried: usize,
    pub accepted: Vec<FuzzRecord>,
    pub violations: Vec<FuzzRecord>,
    /// hypothesis at `n`, `φ_{n+1}` not iso
    pub witnesses: Vec<FuzzRecord>,
}

/// Runs seeds from `start` until `count` morphisms satisfy the second-page
/// hypothesis for some `n` (largest such `n` below the top degree is used).
pub fn fuzz_second_page(start: u64, count: usize, size: usize, p: u32) -> FuzzSummary {
    let mut s = FuzzSummary::default();
    let mut seed = start;
    while s.accepted.len() < count && s.tried < 50 * count {
        let f = random_morphism(seed, size, p);
        s.tried += 1;
        let top = f.source.top_degree();
        let mut best = None;
        for n in 0..top {
            if region_hypothesis(&f, 2, n) {
                best = Some(n);
            } else {
                break;
            }
        }
        if let Some(n) = best {
            let verdict = compare_morphism(&f, 2, n).expect("generated morphisms are valid");
            let rec = FuzzRecord { seed, n, verdict };
            if rec.verdict.violation {
                s.violations.push(rec.clone());
            }
            if !rec.verdict.total_iso[n + 1] {
                s.witnesses.push(rec.clone());
            }
            s.accepted.push(rec);
        }
        seed += 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_complex() {
        let dc = DoubleComplex::from_dims(3, vec![vec![1]]);
        let (pages, ab) = pages_from_double_complex(&dc, 3);
        assert!(pages.iter().all(|pg| pg.dims == vec![vec![1]]));
        assert_eq!(ab.dims, vec![1]);
    }

    #[test]
    fn acyclic_column() {
        let mut dc = DoubleComplex::from_dims(2, vec![vec![1, 1]]);
        dc.dv[0][1] = FpMatrix::identity(2, 1);
        dc.validate().unwrap();
        let (pages, ab) = pages_from_double_complex(&dc, 3);
        assert!(pages[1].dims.iter().flatten().all(|&d| d == 0));
        assert!(ab.dims.iter().all(|&d| d == 0));
    }

    #[test]
    fn random_pages_converge() {
        for seed in 0..20 {
            let dc = random_double_complex(seed, 3, 3);
            dc.validate().unwrap();
            let (pages, ab) = pages_from_double_complex(&dc, 6);
            assert_eq!(ab.dims, dc.total_homology_dims());
            assert_eq!(pages.last().unwrap().dims, e_infinity_from_abutment(&dc, &ab));
            // page turning: E^{r+1} = H(E^r, d_r)
            for w in pages.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let r = a.r as isize;
                for k in 0..dc.width() {
                    for l in 0..dc.height() {
                        let out = a.differentials[k][l].rank();
                        let (sk, sl) = (k as isize + r, l as isize - r + 1);
                        let inc = if sk < dc.width() as isize && sl >= 0 && (sl as usize) < dc.height() {
                            a.differentials[sk as usize][sl as usize].rank()
                        } else {
                            0
                        };
                        assert_eq!(b.dims[k][l], a.dims[k][l] - out - inc, "seed {} r {} ({},{})", seed, r, k, l);
                    }
                }
            }
        }
    }

    #[test]
    fn identity_comparison() {
        let dc = random_double_complex(7, 3, 5);
        let v = compare_morphism(&DoubleMorphism::identity(&dc), 2, 3).unwrap();
        assert!(v.hypothesis && v.total_iso.iter().all(|&x| x) && !v.violation);
    }

    #[test]
    fn broken_morphism_rejected() {
        let dc = random_double_complex(11, 3, 3);
        let mut f = DoubleMorphism::identity(&dc);
        for col in f.maps.iter_mut() {
            for m in col.iter_mut() {
                *m = m.scale(0);
            }
        }
        // zero is a morphism; perturb one nonzero spot
        let spot = (0..3).flat_map(|k| (0..3).map(move |l| (k, l))).find(|&(k, l)| {
            dc.dims[k][l] > 0 && (k > 0 && !dc.dh[k][l].is_zero() || l > 0 && !dc.dv[k][l].is_zero())
        });
        if let Some((k, l)) = spot {
            f.maps[k][l] = FpMatrix::identity(3, dc.dims[k][l]);
            assert!(matches!(compare_morphism(&f, 2, 1), Err(SpecSeqError::NotAMorphism(_))));
        }
    }

    #[test]
    fn diagonal_region_is_too_small() {
        // iso on E^2 only for k + l ≤ n does not force φ_n to be iso
        let found = (0..400u64).any(|seed| {
            let f = random_morphism(seed, 3, 3);
            let maps = page_map(&f, 2);
            (0..f.source.top_degree()).any(|n| {
                let diag = (0..3).all(|k| (0..3).all(|l| k + l > n || is_iso(&maps[k][l])));
                diag && (0..=n as isize).any(|m| !total_homology_iso(&f, m))
            })
        });
        assert!(found);
    }

    #[test]
    fn fuzz_has_no_violations() {
        let s = fuzz_second_page(0, 60, 3, 3);
        assert_eq!(s.accepted.len(), 60);
        assert!(s.violations.is_empty());
        assert!(!s.witnesses.is_empty());
    }
}
