//! Modules over the Laurent ring `Z[t, t^-1]`: structured kinds, truncations
//! by powers of `I = (t-1)` and `I_p = I + (p)`, completion towers and the
//! rational Fitting splitting.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::abgrp::{from_relation_matrix, rank_profile, slice_matrices, AbError, FgAbGroup, Presented};
use crate::linalg::{charpoly_rational, stable_fitting_on, FittingSplit, FpMatrix, IntMatrix, ModMatrix, PModule, QMatrix};

pub const DEFAULT_DEPTH_CAP: usize = 24;
pub const DEFAULT_PRECISION: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CModError {
    #[error("t does not act invertibly")]
    NotAnAutomorphism,
    #[error("t = {0} is not a unit of Z[1/{1}]")]
    NonUnitDenominator(String, u64),
    #[error("Z[1/{m}] with t = {t} is not finitely generated over the Laurent ring")]
    NotFinitelyGenerated { m: u64, t: String },
    #[error("Laurent presentation does not reproduce the module: {0}")]
    PresentationMismatch(String),
    #[error("operation needs a structured module, got a raw presentation")]
    Unsupported(Box<TameReport>),
    #[error("no stabilization up to depth {cap} ({flavor}); last truncated factors {last:?}")]
    DepthExceeded { flavor: Flavor, cap: usize, last: Vec<u32> },
    #[error("rational dimension is not finite or not available")]
    InfiniteRank,
}

/// Laurent polynomial with integer coefficients, keyed by exponent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaurentPoly {
    terms: BTreeMap<i32, BigInt>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigInt) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(e: i32, c: BigInt) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        LaurentPoly { terms }
    }

    /// `c_0 + c_1 t + …` from `low` upwards.
    pub fn from_coeffs(low: i32, coeffs: &[i64]) -> Self {
        let mut p = Self::zero();
        for (k, &c) in coeffs.iter().enumerate() {
            p.add_term(low + k as i32, BigInt::from(c));
        }
        p
    }

    pub fn add_term(&mut self, e: i32, c: BigInt) {
        let v = self.terms.entry(e).or_insert_with(BigInt::zero);
        *v += c;
        if v.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exponent(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &BigInt)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }
}

/// Generators and relator columns over the Laurent ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentPresentation {
    pub gens: usize,
    /// Each relator is a vector of length `gens`.
    pub relators: Vec<Vec<LaurentPoly>>,
}

impl LaurentPresentation {
    pub fn direct_sum(parts: &[LaurentPresentation]) -> Self {
        let gens = parts.iter().map(|p| p.gens).sum();
        let mut relators = Vec::new();
        let mut off = 0;
        for p in parts {
            for r in &p.relators {
                let mut col = vec![LaurentPoly::zero(); gens];
                col[off..off + p.gens].clone_from_slice(r);
                relators.push(col);
            }
            off += p.gens;
        }
        LaurentPresentation { gens, relators }
    }

    /// Integer relation matrix of the truncation at depth `i`; generator
    /// `e_j s^k` sits at row `j*i + k` where `t = 1 + s`.
    pub fn kronecker(&self, flavor: Flavor, i: usize) -> IntMatrix {
        let g = self.gens;
        let mut cols: Vec<Vec<BigInt>> = Vec::new();
        for r in &self.relators {
            let shift = r.iter().filter_map(|p| p.min_exponent()).min().unwrap_or(0).min(0);
            let expanded: Vec<Vec<BigInt>> = r.iter().map(|p| s_expansion(p, -shift, i)).collect();
            for l in 0..i {
                let mut col = vec![BigInt::zero(); g * i];
                for (j, e) in expanded.iter().enumerate() {
                    for (k, c) in e.iter().enumerate() {
                        if l + k < i {
                            col[j * i + l + k] = c.clone();
                        }
                    }
                }
                cols.push(col);
            }
        }
        match flavor {
            Flavor::I => {}
            Flavor::Ip(p) => {
                for j in 0..g {
                    for k in 0..i {
                        let mut col = vec![BigInt::zero(); g * i];
                        col[j * i + k] = BigInt::from(p).pow((i - k) as u32);
                        cols.push(col);
                    }
                }
            }
            Flavor::Mixed(p, n) => {
                for j in 0..g * i {
                    let mut col = vec![BigInt::zero(); g * i];
                    col[j] = BigInt::from(p).pow(n);
                    cols.push(col);
                }
            }
        }
        IntMatrix::from_fn(g * i, cols.len(), |a, b| cols[b][a].clone())
    }

    /// Multiplication by `t = 1 + s` on the depth-`i` coordinates.
    pub fn t_matrix(&self, i: usize) -> IntMatrix {
        let g = self.gens;
        IntMatrix::from_fn(g * i, g * i, |a, b| {
            let same = a / i == b / i;
            if same && (a == b || a % i == b % i + 1) {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        })
    }

    /// Coordinate map from depth `i + 1` down to depth `i`.
    pub fn drop_matrix(&self, i: usize) -> IntMatrix {
        let g = self.gens;
        IntMatrix::from_fn(g * i, g * (i + 1), |a, b| {
            if a / i == b / (i + 1) && a % i == b % (i + 1) {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        })
    }
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

/// Coefficients of `t^shift * p(t)` in powers of `s = t - 1`, below `s^i`.
fn s_expansion(p: &LaurentPoly, shift: i32, i: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); i];
    for (e, c) in p.terms() {
        let e = (e + shift) as u64;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += c * binomial(e, k as u64);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    I,
    Ip(u32),
    Mixed(u32, u32),
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flavor::I => write!(f, "I"),
            Flavor::Ip(p) => write!(f, "I_{}", p),
            Flavor::Mixed(p, n) => write!(f, "I+{}^{}", p, n),
        }
    }
}

/// A C-module. `Localized` is `Z[1/m]^n` with `t` acting by `(u/v)·A`,
/// `A ∈ GL_n(Z)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CModule {
    Lattice(IntMatrix),
    Localized { m: u64, u: i64, v: i64, matrix: IntMatrix },
    FiniteAb(FgAbGroup),
    DirectSum(Vec<CModule>),
    Raw(LaurentPresentation),
}

fn smooth_over(x: u64, m: u64) -> bool {
    let mut x = x;
    loop {
        let g = x.gcd(&m);
        if g == 1 {
            return x == 1;
        }
        x /= g;
    }
}

fn frac_str(u: i64, v: i64) -> String {
    if v == 1 {
        alloc::format!("{}", u)
    } else {
        alloc::format!("{}/{}", u, v)
    }
}

impl CModule {
    pub fn lattice(a: IntMatrix) -> Result<Self, CModError> {
        if !a.is_square() || a.det().abs() != BigInt::one() {
            return Err(CModError::NotAnAutomorphism);
        }
        Ok(CModule::Lattice(a))
    }

    /// `Z[1/m]^n` with `t = (t_num/t_den)·matrix` (identity on rank 1 if absent).
    pub fn localized(m: u64, t_num: i64, t_den: i64, matrix: Option<IntMatrix>) -> Result<Self, CModError> {
        assert!(m >= 2 && t_den != 0 && t_num != 0, "localized module needs m >= 2 and nonzero t");
        let g = t_num.gcd(&t_den);
        let (mut u, mut v) = (t_num / g, t_den / g);
        if v < 0 {
            u = -u;
            v = -v;
        }
        if !smooth_over(u.unsigned_abs(), m) || !smooth_over(v.unsigned_abs(), m) {
            return Err(CModError::NonUnitDenominator(frac_str(u, v), m));
        }
        if !smooth_over(m, (u * v).unsigned_abs().max(1)) || (u * v).unsigned_abs() == 1 {
            return Err(CModError::NotFinitelyGenerated { m, t: frac_str(u, v) });
        }
        let matrix = matrix.unwrap_or_else(|| IntMatrix::identity(1));
        if !matrix.is_square() || matrix.det().abs() != BigInt::one() {
            return Err(CModError::NotAnAutomorphism);
        }
        let module = CModule::Localized { m, u, v, matrix };
        module.check_round_trip()?;
        Ok(module)
    }

    /// Finite or f.g. abelian group with automorphism, from cyclic orders
    /// (0 meaning Z) and the action on those generators.
    pub fn finite(orders: &[i64], action: &IntMatrix) -> Result<Self, CModError> {
        let n = orders.len();
        let rel = IntMatrix::from_fn(n, n, |i, j| if i == j { BigInt::from(orders[i]) } else { BigInt::zero() });
        let pres = from_relation_matrix(n, &rel);
        let raw_ok = (0..n).all(|j| {
            let col: Vec<BigInt> = action.col(j).iter().map(|x| x * BigInt::from(orders[j])).collect();
            (0..n).all(|i| orders[i] == 0 && col[i].is_zero() || orders[i] != 0 && col[i].is_multiple_of(&BigInt::from(orders[i])))
        });
        if !raw_ok {
            return Err(CModError::NotAnAutomorphism);
        }
        let a = pres.proj.mul(action).mul(&pres.lift);
        let g = pres.group.with_action(a).map_err(|_| CModError::NotAnAutomorphism)?;
        Ok(CModule::FiniteAb(g))
    }

    pub fn from_group(g: FgAbGroup) -> Self {
        CModule::FiniteAb(g)
    }

    pub fn direct_sum(parts: Vec<CModule>) -> Self {
        CModule::DirectSum(parts)
    }

    pub fn is_structured(&self) -> bool {
        match self {
            CModule::Raw(_) => false,
            CModule::DirectSum(ps) => ps.iter().all(|p| p.is_structured()),
            _ => true,
        }
    }

    /// Finite Laurent presentation of the module.
    pub fn presentation(&self) -> LaurentPresentation {
        match self {
            CModule::Lattice(a) => matrix_presentation(a, 1, 1, &[]),
            CModule::Localized { u, v, matrix, .. } => matrix_presentation(matrix, *v, *u, &[]),
            CModule::FiniteAb(g) => {
                let orders: Vec<BigInt> = (0..g.ngens()).map(|i| g.order_of_gen(i)).collect();
                matrix_presentation(&g.action_or_identity(), 1, 1, &orders)
            }
            CModule::DirectSum(ps) => {
                let parts: Vec<LaurentPresentation> = ps.iter().map(|p| p.presentation()).collect();
                LaurentPresentation::direct_sum(&parts)
            }
            CModule::Raw(p) => p.clone(),
        }
    }

    /// `D_p` of the underlying abelian group, when known.
    pub fn big_d(&self, p: u32) -> Option<usize> {
        match self {
            CModule::Lattice(a) => Some(a.rows()),
            CModule::Localized { matrix, .. } => Some(matrix.rows()),
            CModule::FiniteAb(g) => Some(rank_profile(g, p).big_d),
            CModule::DirectSum(ps) => ps.iter().map(|q| q.big_d(p)).sum(),
            CModule::Raw(_) => None,
        }
    }

    /// Action of `t` on `M ⊗ Q`.
    pub fn rational_action(&self) -> Result<QMatrix, CModError> {
        match self {
            CModule::Lattice(a) => Ok(QMatrix::from_int(a)),
            CModule::Localized { u, v, matrix, .. } => {
                Ok(QMatrix::from_int(matrix).scale(&BigRational::new(BigInt::from(*u), BigInt::from(*v))))
            }
            CModule::FiniteAb(g) => {
                let k = g.torsion().len();
                let free: Vec<usize> = (k..g.ngens()).collect();
                Ok(QMatrix::from_int(&g.action_or_identity().submatrix(&free, &free)))
            }
            CModule::DirectSum(ps) => {
                let blocks = ps.iter().map(|p| p.rational_action()).collect::<Result<Vec<_>, _>>()?;
                Ok(QMatrix::block_diag(&blocks))
            }
            CModule::Raw(_) => Err(CModError::InfiniteRank),
        }
    }

    /// `M / p^N M` as a finite module with the action of `t`.
    pub fn mod_prime_power(&self, p: u32, n: u32) -> (PModule, ModMatrix) {
        let pp = p as u64;
        match self {
            CModule::Lattice(a) => {
                let k = a.rows();
                (PModule::free(pp, n, k), ModMatrix::from_fn(pp, n, k, k, |i, j| big_i128(&a[(i, j)])))
            }
            CModule::Localized { m, u, v, matrix } => {
                if Integer::is_multiple_of(m, &pp) {
                    return (PModule::free(pp, n, 0), ModMatrix::zeros(pp, n, 0, 0));
                }
                let k = matrix.rows();
                let q = pp.pow(n);
                let vinv = inv_mod_u64(v.rem_euclid(q as i64) as u64, q);
                let scalar = (u.rem_euclid(q as i64) as u128 * vinv as u128 % q as u128) as i128;
                let t = ModMatrix::from_fn(pp, n, k, k, |i, j| big_i128(&matrix[(i, j)]) * scalar);
                (PModule::free(pp, n, k), t)
            }
            CModule::FiniteAb(g) => {
                let (gp, keep) = g.p_primary(p);
                let exps: Vec<u32> = (0..gp.ngens()).map(|i| p_valuation_or(&gp.order_of_gen(i), p, n).min(n)).collect();
                let a = g.action_or_identity().submatrix(&keep, &keep);
                let k = keep.len();
                (PModule::cyclic_sum(pp, n, &exps), ModMatrix::from_fn(pp, n, k, k, |i, j| big_i128(&a[(i, j)])))
            }
            CModule::DirectSum(ps) => {
                let parts: Vec<(PModule, ModMatrix)> = ps.iter().map(|q| q.mod_prime_power(p, n)).collect();
                let k: usize = parts.iter().map(|x| x.0.rank).sum();
                let mut rel_cols = Vec::new();
                let mut t = ModMatrix::zeros(pp, n, k, k);
                let mut off = 0;
                for (pm, tm) in &parts {
                    for j in 0..pm.relations.cols() {
                        let mut c = vec![0u64; k];
                        for (i, x) in pm.relations.col(j).into_iter().enumerate() {
                            c[off + i] = x;
                        }
                        rel_cols.push(c);
                    }
                    for i in 0..pm.rank {
                        for j in 0..pm.rank {
                            t[(off + i, off + j)] = tm[(i, j)];
                        }
                    }
                    off += pm.rank;
                }
                let rel = ModMatrix::from_cols(pp, n, k, &rel_cols).howell();
                (PModule { rank: k, relations: rel }, t)
            }
            CModule::Raw(_) => panic!("mod_prime_power needs a structured module"),
        }
    }

    fn check_round_trip(&self) -> Result<(), CModError> {
        let CModule::Localized { m, u, v, matrix } = self else { return Ok(()) };
        let pres = self.presentation();
        let n = 3;
        for p in [2u32, 3, 5, 7] {
            for i in 1..=3 {
                let kron = truncate_presentation(&pres, Flavor::Mixed(p, n), i);
                let direct = if Integer::is_multiple_of(m, &(p as u64)) {
                    FgAbGroup::trivial()
                } else {
                    let q = BigInt::from(p).pow(n);
                    let vinv = BigInt::from(*v).modpow(&(BigInt::from(p).pow(n - 1) * BigInt::from(p - 1) - 1), &q);
                    let scalar = (BigInt::from(*u) * vinv).mod_floor(&q);
                    let k = matrix.rows();
                    let t = matrix.scale(&scalar).sub(&IntMatrix::identity(k));
                    let rel = t.pow(i as u32).hstack(&IntMatrix::identity(k).scale(&q));
                    from_relation_matrix(k, &rel).group
                };
                if kron.group.torsion() != direct.torsion() || kron.group.free_rank() != direct.free_rank() {
                    return Err(CModError::PresentationMismatch(alloc::format!(
                        "p={} depth={}: presented {:?}, structured {:?}",
                        p,
                        i,
                        kron.group.torsion(),
                        direct.torsion()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn p_valuation_or(d: &BigInt, p: u32, n: u32) -> u32 {
    if d.is_zero() {
        return n;
    }
    let pb = BigInt::from(p);
    let mut x = d.clone();
    let mut v = 0;
    while x.is_multiple_of(&pb) {
        x /= &pb;
        v += 1;
    }
    v
}

fn big_i128(x: &BigInt) -> i128 {
    x.to_i128().expect("entry does not fit in i128")
}

fn inv_mod_u64(a: u64, q: u64) -> u64 {
    let e = Integer::extended_gcd(&(a as i128), &(q as i128));
    assert_eq!(e.gcd, 1, "not invertible");
    e.x.rem_euclid(q as i128) as u64
}

/// Relators `v·t·e_j − u·(A e_j)` and `d_j e_j` for finite orders.
fn matrix_presentation(a: &IntMatrix, v: i64, u: i64, orders: &[BigInt]) -> LaurentPresentation {
    let g = a.rows();
    let mut relators = Vec::new();
    for j in 0..g {
        let mut col = vec![LaurentPoly::zero(); g];
        col[j].add_term(1, BigInt::from(v));
        for (i, c) in col.iter_mut().enumerate() {
            c.add_term(0, -BigInt::from(u) * &a[(i, j)]);
        }
        relators.push(col);
    }
    for (j, d) in orders.iter().enumerate() {
        if !d.is_zero() {
            let mut col = vec![LaurentPoly::zero(); g];
            col[j] = LaurentPoly::constant(d.clone());
            relators.push(col);
        }
    }
    LaurentPresentation { gens: g, relators }
}

/// One truncation with its coordinate data.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub depth: usize,
    pub group: FgAbGroup,
    /// maps depth-`i` Kronecker coordinates to group coordinates
    pub proj: IntMatrix,
    pub lift: IntMatrix,
}

pub fn truncate_presentation(pres: &LaurentPresentation, flavor: Flavor, i: usize) -> Truncation {
    assert!(i >= 1, "truncation depth must be at least 1");
    let rel = pres.kronecker(flavor, i);
    let Presented { mut group, proj, lift } = from_relation_matrix(pres.gens * i, &rel);
    let t = proj.mul(&pres.t_matrix(i)).mul(&lift);
    let t = group.normalize_matrix(&t);
    group = group.with_action(t).expect("t acts invertibly on every truncation");
    Truncation { depth: i, group, proj, lift }
}

/// `M/MI^i`, `M/MI_p^i` or `M/(MI^i + p^N M)` with the induced action.
pub fn truncate(m: &CModule, flavor: Flavor, i: usize) -> Truncation {
    truncate_presentation(&m.presentation(), flavor, i)
}

/// Invariant factors read at `p`: p-exponents of the torsion capped at `n`,
/// free generators counted as `n`; sorted ascending.
pub fn truncated_factors(g: &FgAbGroup, p: u32, n: u32) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    for d in g.torsion() {
        let v = p_valuation_or(d, p, n);
        if v > 0 {
            out.push(v.min(n));
        }
    }
    out.extend(core::iter::repeat_n(n, g.free_rank()));
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitFactor {
    /// a free `Z_p` summand (exponents growing along the tower, or free)
    Free,
    Cyclic(u32),
}

#[derive(Clone, Debug)]
pub struct StabilizationReport {
    /// first depth from which truncated factors and slice maps are constant
    pub index: usize,
    pub v_index: usize,
    pub w_index: usize,
    pub truncated: Vec<u32>,
    pub limit: Vec<LimitFactor>,
    pub v_dim: usize,
    pub w_dim: usize,
    /// action of t on the limit slices
    pub v_action: FpMatrix,
    pub w_action: FpMatrix,
    /// first depth `s` with `ker(limit → stage s) ⊆ p·limit`
    pub hat_in_p_index: usize,
}

#[derive(Clone, Debug)]
pub struct CompletionTower {
    pub flavor: Flavor,
    pub p: u32,
    pub precision: u32,
    /// `stages[k]` is depth `k + 1`
    pub stages: Vec<Truncation>,
    /// `transitions[k]`: stage depth `k + 2` → stage depth `k + 1`
    pub transitions: Vec<IntMatrix>,
    pub report: StabilizationReport,
}

impl CompletionTower {
    pub fn stage(&self, depth: usize) -> &FgAbGroup {
        &self.stages[depth - 1].group
    }

    /// Map from stage `hi` down to stage `lo` (depths).
    pub fn composite(&self, hi: usize, lo: usize) -> IntMatrix {
        assert!(lo <= hi && lo >= 1);
        let mut acc = IntMatrix::identity(self.stage(hi).ngens());
        for d in (lo..hi).rev() {
            acc = self.transitions[d - 1].mul(&acc);
        }
        self.stage(lo).normalize_matrix(&acc)
    }

    /// Slice maps of the composite `hi → lo`.
    pub fn slice_composite(&self, hi: usize, lo: usize) -> (FpMatrix, FpMatrix) {
        slice_matrices(self.stage(hi), self.stage(lo), &self.composite(hi, lo), self.p)
    }
}

fn transition(pres: &LaurentPresentation, lo: &Truncation, hi: &Truncation) -> IntMatrix {
    let m = lo.proj.mul(&pres.drop_matrix(lo.depth)).mul(&hi.lift);
    lo.group.normalize_matrix(&m)
}

/// Builds a tower until its slices and truncated factors stabilize.
pub fn completion_tower(m: &CModule, flavor: Flavor, p: u32, precision: u32, cap: usize) -> Result<CompletionTower, CModError> {
    let pres = m.presentation();
    let bound = m.big_d(p);
    let mut stages: Vec<Truncation> = Vec::new();
    let mut transitions: Vec<IntMatrix> = Vec::new();
    let mut factors: Vec<Vec<u32>> = Vec::new();
    let push = |stages: &mut Vec<Truncation>, transitions: &mut Vec<IntMatrix>, factors: &mut Vec<Vec<u32>>| {
        let d = stages.len() + 1;
        let t = truncate_presentation(&pres, flavor, d);
        if let Some(b) = bound {
            let r = rank_profile(&t.group, p);
            assert!(r.big_d <= b && r.dim_mod_p <= b, "stage slice dimension above the module bound");
        }
        if let Some(prev) = stages.last() {
            transitions.push(transition(&pres, prev, &t));
        }
        factors.push(truncated_factors(&t.group, p, precision));
        stages.push(t);
    };
    let mut index = None;
    while stages.len() < cap + 2 {
        push(&mut stages, &mut transitions, &mut factors);
        let n = stages.len();
        if n < 3 {
            continue;
        }
        let s = n - 2;
        if factors[s - 1] == factors[s] && factors[s] == factors[s + 1] {
            let ok = (s..s + 2).all(|d| {
                let (v, _) = slice_matrices(&stages[d].group, &stages[d - 1].group, &transitions[d - 1], p);
                v.is_square() && v.rank() == v.rows()
            });
            if ok {
                index = Some(s);
                break;
            }
        }
        if s > cap {
            break;
        }
    }
    let Some(index) = index else {
        return Err(CModError::DepthExceeded { flavor, cap, last: factors.last().cloned().unwrap_or_default() });
    };
    let mut tower = CompletionTower {
        flavor,
        p,
        precision,
        stages,
        transitions,
        report: StabilizationReport {
            index,
            v_index: index,
            w_index: index,
            truncated: factors[index - 1].clone(),
            limit: Vec::new(),
            v_dim: 0,
            w_dim: 0,
            v_action: FpMatrix::zeros(p, 0, 0),
            w_action: FpMatrix::zeros(p, 0, 0),
            hat_in_p_index: index,
        },
    };
    // the p-torsion of the limit is the stable image; extend the lookahead
    // until two consecutive depths give the same image
    let w_image = loop {
        let top = tower.stages.len();
        let (_, w1) = tower.slice_composite(top, index);
        let (_, w0) = tower.slice_composite(top - 1, index);
        let (i1, i0) = (w1.image(), w0.image());
        if i1.cols() == i0.cols() && top >= index + 3 {
            break i1;
        }
        if top > cap + index + 8 {
            return Err(CModError::DepthExceeded { flavor, cap, last: tower.report.truncated.clone() });
        }
        push(&mut tower.stages, &mut tower.transitions, &mut factors);
    };
    let g = tower.stage(index).clone();
    let (va, wa) = crate::abgrp::slice_actions(&g, p);
    let w_action = if w_image.cols() == 0 {
        FpMatrix::zeros(p, 0, 0)
    } else {
        w_image.solve(&wa.mul(&w_image)).expect("stable image is t-invariant")
    };
    let v_dim = va.rows();
    let w_dim = w_image.cols();
    // growth of exponents between the last two stages marks free summands
    let last = tower.stages.len();
    let hi = truncated_factors(tower.stage(last), p, u32::MAX);
    let lo = truncated_factors(tower.stage(last - 1), p, u32::MAX);
    let mut limit = Vec::new();
    for (k, &e) in hi.iter().enumerate() {
        let grows = e == u32::MAX || lo.get(k).is_none_or(|&x| x != e);
        limit.push(if grows { LimitFactor::Free } else { LimitFactor::Cyclic(e) });
    }
    debug_assert_eq!(limit.len(), v_dim);
    let hat_in_p_index = (1..=index)
        .find(|&s| {
            let (v, _) = tower.slice_composite(index, s);
            v.rank() == v_dim
        })
        .unwrap_or(index);
    tower.report.limit = limit;
    tower.report.v_dim = v_dim;
    tower.report.w_dim = w_dim;
    tower.report.v_action = va;
    tower.report.w_action = w_action;
    tower.report.hat_in_p_index = hat_in_p_index;
    let w_stable = (1..=index).find(|&s| {
        let (_, w) = tower.slice_composite(tower.stages.len(), s);
        w.rank() == w_dim
    });
    tower.report.w_index = w_stable.unwrap_or(index);
    tower.report.v_index = (1..=index)
        .find(|&s| {
            let (v, _) = tower.slice_composite(index, s);
            v.is_square() && v.rank() == v_dim
        })
        .unwrap_or(index);
    Ok(tower)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TameReport {
    pub tor_finite: Option<bool>,
    pub dim_q: Option<usize>,
    pub charpoly: Option<Vec<BigRational>>,
    pub charpoly_inverse: Option<Vec<BigRational>>,
    pub integral: Option<bool>,
    pub inverse_integral: Option<bool>,
    pub tame: Option<bool>,
}

pub fn tame_check(m: &CModule) -> Result<TameReport, CModError> {
    if !m.is_structured() {
        let partial = TameReport {
            tor_finite: None,
            dim_q: None,
            charpoly: None,
            charpoly_inverse: None,
            integral: None,
            inverse_integral: None,
            tame: None,
        };
        return Err(CModError::Unsupported(Box::new(partial)));
    }
    let q = m.rational_action()?;
    let cp = charpoly_rational(&q, true).map_err(|_| CModError::NotAnAutomorphism)?;
    let (inv, inv_ok) = cp.inverse.clone().expect("inverse requested");
    Ok(TameReport {
        tor_finite: Some(true),
        dim_q: Some(q.rows()),
        integral: Some(cp.integral),
        inverse_integral: Some(inv_ok),
        tame: Some(cp.integral || inv_ok),
        charpoly: Some(cp.coeffs),
        charpoly_inverse: Some(inv),
    })
}

/// `V = M ⊗ Q` split as `Ker (t-1)^d ⊕ Im (t-1)^d`.
#[derive(Clone, Debug)]
pub struct RationalModule {
    pub dim: usize,
    pub action: QMatrix,
    /// basis of the generalized 1-eigenspace (columns)
    pub hat: QMatrix,
    /// basis of the complement on which `t-1` is invertible
    pub infinite_part: QMatrix,
}

impl RationalModule {
    pub fn from_action(action: QMatrix) -> Self {
        let d = action.rows();
        let b = action.sub(&QMatrix::identity(d)).pow(d as u32);
        let hat = b.kernel();
        let infinite_part = b.image();
        let r = RationalModule { dim: d, action, hat, infinite_part };
        assert!(r.is_direct(), "Fitting decomposition must be direct");
        r
    }

    pub fn is_direct(&self) -> bool {
        self.hat.cols() + self.infinite_part.cols() == self.dim && self.hat.hstack(&self.infinite_part).rank() == self.dim
    }

    /// Action restricted to the completion summand, in the `hat` basis.
    pub fn hat_action(&self) -> QMatrix {
        if self.hat.cols() == 0 {
            return QMatrix::zeros(0, 0);
        }
        self.hat.solve(&self.action.mul(&self.hat)).expect("summand is t-invariant")
    }

    pub fn infinite_action(&self) -> QMatrix {
        if self.infinite_part.cols() == 0 {
            return QMatrix::zeros(0, 0);
        }
        self.infinite_part.solve(&self.action.mul(&self.infinite_part)).expect("summand is t-invariant")
    }

    /// Projection onto the completion summand along the other one.
    pub fn projection(&self) -> QMatrix {
        let basis = self.hat.hstack(&self.infinite_part);
        let inv = basis.inverse().expect("direct sum");
        let k = self.hat.cols();
        let mut keep = QMatrix::identity(self.dim);
        for i in k..self.dim {
            keep[(i, i)] = BigRational::zero();
        }
        basis.mul(&keep).mul(&inv)
    }
}

pub fn rational_fitting(m: &CModule) -> Result<RationalModule, CModError> {
    Ok(RationalModule::from_action(m.rational_action()?))
}

/// Fitting splitting of `t - 1` on `M / p^N M`.
pub fn fitting_mod_prime_power(m: &CModule, p: u32, n: u32) -> (PModule, FittingSplit) {
    let (pm, t) = m.mod_prime_power(p, n);
    let b = t.sub(&ModMatrix::identity(p as u64, n, pm.rank));
    let split = stable_fitting_on(&pm, &b);
    (pm, split)
}

impl From<AbError> for CModError {
    fn from(_: AbError) -> Self {
        CModError::NotAnAutomorphism
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn klein() -> CModule {
        CModule::lattice(IntMatrix::from_rows(&[vec![-1]])).unwrap()
    }

    #[test]
    fn construct_examples() {
        assert!(CModule::lattice(IntMatrix::from_rows(&[vec![1, 3], vec![3, 10]])).is_ok());
        assert!(CModule::localized(2, 2, 1, None).is_ok());
        assert!(CModule::finite(&[9], &IntMatrix::from_rows(&[vec![4]])).is_ok());
        assert_eq!(CModule::finite(&[9], &IntMatrix::from_rows(&[vec![3]])), Err(CModError::NotAnAutomorphism));
        assert!(matches!(CModule::localized(2, 3, 1, None), Err(CModError::NonUnitDenominator(..))));
        assert!(matches!(CModule::lattice(IntMatrix::from_rows(&[vec![2]])), Err(CModError::NotAnAutomorphism)));
    }

    #[test]
    fn tame_examples() {
        let r = tame_check(&CModule::localized(2, 2, 1, None).unwrap()).unwrap();
        assert_eq!(r.tame, Some(true));
        let r = tame_check(&CModule::localized(6, 2, 3, None).unwrap()).unwrap();
        assert_eq!(r.tame, Some(false));
        let r = tame_check(&CModule::lattice(IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]])).unwrap()).unwrap();
        assert_eq!(r.tame, Some(true));
        let raw = CModule::Raw(CModule::localized(2, 2, 1, None).unwrap().presentation());
        assert!(matches!(tame_check(&raw), Err(CModError::Unsupported(_))));
    }

    #[test]
    fn truncate_examples() {
        let t = truncate(&klein(), Flavor::I, 3);
        assert_eq!(t.group.torsion(), &bi(&[8])[..]);
        assert_eq!(t.group.action().unwrap(), &IntMatrix::from_rows(&[vec![7]]));
        for i in 1..5 {
            assert!(truncate(&CModule::localized(2, 2, 1, None).unwrap(), Flavor::I, i).group.is_trivial());
        }
        let t = truncate(&CModule::lattice(IntMatrix::from_rows(&[vec![1, 3], vec![3, 10]])).unwrap(), Flavor::I, 1);
        assert_eq!(t.group.torsion(), &bi(&[3, 3])[..]);
        for i in 1..6 {
            let t = truncate(&CModule::localized(3, 3, 1, None).unwrap(), Flavor::Ip(2), i);
            assert_eq!(t.group.torsion(), &[BigInt::from(2).pow(i as u32)][..]);
            assert_eq!(t.group.action().unwrap()[(0, 0)], BigInt::from(3) % BigInt::from(2).pow(i as u32));
        }
    }

    #[test]
    fn tower_examples() {
        let bs13 = CModule::localized(3, 3, 1, None).unwrap();
        let t = completion_tower(&bs13, Flavor::Ip(2), 2, 8, 24).unwrap();
        assert_eq!(t.report.limit, vec![LimitFactor::Free]);
        assert_eq!((t.report.v_dim, t.report.w_dim), (1, 0));
        assert!(t.report.v_action.is_identity());
        let t = completion_tower(&klein(), Flavor::I, 2, 8, 24).unwrap();
        assert_eq!(t.report.limit, vec![LimitFactor::Free]);
        let t = completion_tower(&CModule::localized(2, 2, 1, None).unwrap(), Flavor::Ip(2), 2, 8, 24).unwrap();
        assert!(t.report.limit.is_empty());
    }

    #[test]
    fn rational_fitting_examples() {
        let r = RationalModule::from_action(QMatrix::from_int(&IntMatrix::from_rows(&[vec![1, 1], vec![0, 1]])));
        assert_eq!((r.hat.cols(), r.infinite_part.cols()), (2, 0));
        let r = RationalModule::from_action(QMatrix::from_int(&IntMatrix::from_rows(&[vec![2]])));
        assert_eq!((r.hat.cols(), r.infinite_part.cols()), (0, 1));
        let r = RationalModule::from_action(QMatrix::identity(3));
        assert_eq!(r.hat.cols(), 3);
    }
}
