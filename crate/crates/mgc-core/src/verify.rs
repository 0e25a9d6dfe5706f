//! Verification harness for `G = M ⋊ C`: the group zoo, lower central quotients,
//! surjectivity of `H_n(G) → H_n(Ĝ)` for `R ∈ {Z, Z/p, Q}`, the Dwyer
//! filtration in degree 2 and a few standalone checks.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::abgrp::{slice_actions, slice_matrices, AbError, AbHom, FgAbGroup};
use crate::chainres::{equivariant_resolution, lift_chain_map, p_torsion_order, wang_cone_homology, ChainError, CoeffComplex, DEFAULT_ORDER_BUDGET};
use crate::cmod::{
    completion_tower, rational_fitting, truncate, CModError, CModule, CompletionTower, Flavor, LaurentPresentation, LimitFactor,
    Truncation, DEFAULT_DEPTH_CAP, DEFAULT_PRECISION,
};
use crate::homfun::{
    exterior_power, h2_from_slices, homology_dims, homology_lambda_gamma, induced_map, subsets, equivariant_section, two_column_semidirect,
    GradedCModule, H2Certificate, HomError,
};
use crate::linalg::{FpMatrix, IntMatrix, QMatrix};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Module(#[from] CModError),
    #[error(transparent)]
    Homology(#[from] HomError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Group(#[from] AbError),
    #[error("the lower Z/p-central series is not computed as a subgroup series")]
    UnsupportedSeries,
    #[error("module has no slice model: {0}")]
    NoSliceModel(String),
    #[error("unknown group {0}")]
    UnknownGroup(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ring {
    Z,
    Zp,
    Q,
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ring::Z => "Z",
            Ring::Zp => "Z/p",
            Ring::Q => "Q",
        })
    }
}

#[derive(Clone, Debug)]
pub struct GroupSpec {
    pub name: String,
    pub module: CModule,
    pub primes: Vec<u32>,
    pub nmax: usize,
    pub depth_cap: usize,
    pub tame: Option<bool>,
}

impl GroupSpec {
    pub fn new(name: &str, module: CModule) -> Self {
        let tame = crate::cmod::tame_check(&module).ok().and_then(|r| r.tame);
        GroupSpec { name: name.to_string(), module, primes: vec![2, 3, 5], nmax: 6, depth_cap: DEFAULT_DEPTH_CAP, tame }
    }
}

pub const ZOO_NAMES: [&str; 8] = ["klein", "heisenberg", "bs1_2", "bs1_3", "sol", "torus_p3", "finite9", "paper_rank2"];

pub fn zoo_member(name: &str) -> Option<GroupSpec> {
    let lattice = |rows: &[Vec<i64>]| CModule::lattice(IntMatrix::from_rows(rows)).expect("zoo lattice");
    let module = match name {
        "klein" => lattice(&[vec![-1]]),
        "heisenberg" => lattice(&[vec![1, 1], vec![0, 1]]),
        "bs1_2" | "paper_rank2" => CModule::localized(2, 2, 1, None).expect("zoo module"),
        "bs1_3" => CModule::localized(3, 3, 1, None).expect("zoo module"),
        "sol" => lattice(&[vec![2, 1], vec![1, 1]]),
        "torus_p3" => lattice(&[vec![1, 3], vec![3, 10]]),
        "finite9" => CModule::finite(&[9], &IntMatrix::from_rows(&[vec![4]])).expect("zoo module"),
        _ => return None,
    };
    Some(GroupSpec::new(name, module))
}

pub fn zoo() -> Vec<GroupSpec> {
    ZOO_NAMES.iter().map(|n| zoo_member(n).expect("zoo name")).collect()
}

// ---------------------------------------------------------------------------
// slice models

struct SlicePart {
    group: FgAbGroup,
    v_action: FpMatrix,
    w_action: FpMatrix,
    /// `M/p = 0` although the part has generators (`Z[1/m]` with `p | m`)
    killed: bool,
}

fn slice_parts(m: &CModule, p: u32, out: &mut Vec<SlicePart>) -> Result<(), VerifyError> {
    match m {
        CModule::Lattice(a) => {
            let g = FgAbGroup::free(a.rows()).with_action(a.clone())?;
            let (v_action, w_action) = slice_actions(&g, p);
            out.push(SlicePart { group: g, v_action, w_action, killed: false });
        }
        CModule::Localized { m, u, v, matrix } => {
            let n = matrix.rows();
            let group = FgAbGroup::free(n);
            if m % u64::from(p) == 0 {
                let z = FpMatrix::zeros(p, 0, 0);
                out.push(SlicePart { group, v_action: z.clone(), w_action: z, killed: true });
            } else {
                let pi = i64::from(p);
                let vinv = (1..pi).find(|x| (v.rem_euclid(pi) * x) % pi == 1).expect("v is prime to p");
                let scalar = (u.rem_euclid(pi) * vinv) % pi;
                let v_action = FpMatrix::from_fn(p, n, n, |i, j| {
                    let e: i64 = (&matrix[(i, j)] % BigInt::from(pi)).try_into().expect("small");
                    scalar * e
                });
                out.push(SlicePart { group, v_action, w_action: FpMatrix::zeros(p, 0, 0), killed: false });
            }
        }
        CModule::FiniteAb(g) => {
            let (v_action, w_action) = slice_actions(g, p);
            out.push(SlicePart { group: g.clone(), v_action, w_action, killed: false });
        }
        CModule::DirectSum(ps) => {
            for q in ps {
                slice_parts(q, p, out)?;
            }
        }
        CModule::Raw(_) => return Err(VerifyError::NoSliceModel(String::from("raw presentation"))),
    }
    Ok(())
}

/// Actions of `t` on `V = M/p` and `W = pM` (p-torsion).
pub fn module_slices(m: &CModule, p: u32) -> Result<(FpMatrix, FpMatrix), VerifyError> {
    let mut parts = Vec::new();
    slice_parts(m, p, &mut parts)?;
    let vs: Vec<FpMatrix> = parts.iter().filter(|s| !s.killed).map(|s| s.v_action.clone()).collect();
    let ws: Vec<FpMatrix> = parts.iter().filter(|s| !s.killed).map(|s| s.w_action.clone()).collect();
    Ok((FpMatrix::block_diag(p, &vs), FpMatrix::block_diag(p, &ws)))
}

/// Depth-`i` coordinates of the module generators.
fn generator_embedding(gens: usize, depth: usize) -> IntMatrix {
    IntMatrix::from_fn(gens * depth, gens, |a, j| if a == j * depth { BigInt::one() } else { BigInt::zero() })
}

/// Images of the module generators in a truncation.
fn coefficient_matrix(gens: usize, stage: &Truncation) -> IntMatrix {
    stage.group.normalize_matrix(&stage.proj.mul(&generator_embedding(gens, stage.depth)))
}

/// Slice maps of the canonical map `M → stage`.
pub fn coefficient_slices(m: &CModule, stage: &Truncation, p: u32) -> Result<(FpMatrix, FpMatrix), VerifyError> {
    let mut parts = Vec::new();
    slice_parts(m, p, &mut parts)?;
    let gens: usize = parts.iter().map(|s| s.group.ngens()).sum();
    let full = coefficient_matrix(gens, stage);
    let rows: Vec<usize> = (0..full.rows()).collect();
    let tv = stage.group.slice_v_gens(p).len();
    let tw = stage.group.slice_w_gens(p).len();
    let (mut fv, mut fw) = (FpMatrix::zeros(p, tv, 0), FpMatrix::zeros(p, tw, 0));
    let mut off = 0;
    for s in &parts {
        let k = s.group.ngens();
        if !s.killed {
            let cols: Vec<usize> = (off..off + k).collect();
            let (v, w) = slice_matrices(&s.group, &stage.group, &full.submatrix(&rows, &cols), p);
            fv = fv.hstack(&v);
            fw = fw.hstack(&w);
        }
        off += k;
    }
    Ok((fv, fw))
}

/// `M` as a finitely generated group with action, plus the matrix taking its
/// coordinates to presentation-generator coordinates.
pub fn fg_model(m: &CModule) -> Option<(FgAbGroup, IntMatrix)> {
    fn collect(m: &CModule, out: &mut Vec<FgAbGroup>) -> bool {
        match m {
            CModule::Lattice(a) => {
                out.push(FgAbGroup::free(a.rows()).with_action(a.clone()).expect("lattice action"));
                true
            }
            CModule::FiniteAb(g) => {
                out.push(g.clone());
                true
            }
            CModule::DirectSum(ps) => ps.iter().all(|q| collect(q, out)),
            _ => false,
        }
    }
    let mut parts = Vec::new();
    if !collect(m, &mut parts) {
        return None;
    }
    if parts.len() == 1 {
        let g = parts.pop().unwrap();
        let n = g.ngens();
        return Some((g, IntMatrix::identity(n)));
    }
    let pres = FgAbGroup::direct_sum(&parts);
    Some((pres.group, pres.lift))
}

fn coefficient_hom(m: &CModule, stage: &Truncation) -> Option<AbHom> {
    let (g, lift) = fg_model(m)?;
    let gens = lift.rows();
    let mat = coefficient_matrix(gens, stage).mul(&lift);
    AbHom::new(g, stage.group.clone(), mat).ok()
}

fn coinvariant_dim(t: &FpMatrix) -> usize {
    t.rows() - t.sub(&FpMatrix::identity(t.p(), t.rows())).rank()
}

fn invariant_basis(t: &FpMatrix) -> FpMatrix {
    t.sub(&FpMatrix::identity(t.p(), t.rows())).kernel()
}

// ---------------------------------------------------------------------------
// lower central series

/// `G/γ_i`, with `γ_i ∩ M = M I^{i-1}` (or its isolator over `Q`).
#[derive(Clone, Debug)]
pub struct LcsQuotient {
    pub i: usize,
    /// the M-part of `G/γ_i`, with the induced action
    pub quotient: FgAbGroup,
    /// `[M : M ∩ γ_i]` when finite
    pub index: Option<BigInt>,
    pub rational_dim: usize,
}

/// The free quotient of a truncation, with coordinates (rows) to keep.
fn free_quotient(t: &Truncation) -> (FgAbGroup, Vec<usize>) {
    let g = &t.group;
    let k = g.torsion().len();
    let free: Vec<usize> = (k..g.ngens()).collect();
    let a = g.action_or_identity().submatrix(&free, &free);
    (FgAbGroup::free(free.len()).with_action(a).expect("action on the free quotient"), free)
}

pub fn lcs_quotients(g: &GroupSpec, ring: Ring, imax: usize) -> Result<Vec<LcsQuotient>, VerifyError> {
    if ring == Ring::Zp {
        return Err(VerifyError::UnsupportedSeries);
    }
    let mut out = Vec::new();
    for i in 2..=imax {
        let t = truncate(&g.module, Flavor::I, i - 1);
        let quotient = match ring {
            Ring::Q => free_quotient(&t).0,
            _ => t.group.clone(),
        };
        let index = quotient.order();
        out.push(LcsQuotient { i, rational_dim: quotient.free_rank(), index, quotient });
    }
    Ok(out)
}

/// Rational dimensions of `M ⊗ Q / (M ⊗ Q) I^{i-1}`, `i = 2..=imax`, and the
/// first `i ≥ 2` from which they are constant.
pub fn q_prenilpotence(m: &CModule, imax: usize) -> Result<(Vec<usize>, Option<usize>), VerifyError> {
    let a = m.rational_action()?;
    let d = a.rows();
    let b = a.sub(&QMatrix::identity(d));
    let dims: Vec<usize> = (2..=imax.max(3)).map(|i| d - b.pow((i - 1) as u32).rank()).collect();
    // ranks of powers stabilize once two consecutive ones agree
    let idx = (0..dims.len() - 1).find(|&k| dims[k] == dims[k + 1]).map(|k| k + 2);
    Ok((dims, idx))
}

// ---------------------------------------------------------------------------
// epimorphism verification

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Formula,
    Chain,
    Rational,
    /// bounds from the natural degree-2 sequence only
    Bounds,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Formula => "formula",
            Route::Chain => "chain",
            Route::Rational => "rational",
            Route::Bounds => "bounds",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeVerdict {
    pub n: usize,
    pub dim_g: usize,
    pub dim_ghat: usize,
    pub surjective: bool,
    pub split: bool,
    pub route: Route,
    pub kernel_interval: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct StabilizationInfo {
    pub flavor: String,
    pub index: usize,
    pub v_index: usize,
    pub w_index: usize,
    pub truncated: Vec<u32>,
    pub limit: Vec<LimitFactor>,
    /// the other tower (`I` read at p versus `I_p`) gives the same slices
    pub towers_agree: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct EpiReport {
    pub group: String,
    pub ring: Ring,
    pub p: Option<u32>,
    pub tame: Option<bool>,
    pub degrees: Vec<DegreeVerdict>,
    pub stabilization: Option<StabilizationInfo>,
    /// `M(t-1) ⊆ pM` (over Q: `V̂ = V`)
    pub iso_case: bool,
    /// degree-2 data when the graded model is unavailable at `p = 2`
    pub partial: Option<H2Certificate>,
    /// Q-prenilpotence index for rational reports
    pub prenilpotence_index: Option<usize>,
}

impl EpiReport {
    pub fn all_surjective(&self) -> bool {
        !self.degrees.is_empty() && self.degrees.iter().all(|d| d.surjective)
    }

    pub fn iso_case_holds(&self) -> bool {
        !self.iso_case || self.degrees.iter().all(|d| d.dim_g == d.dim_ghat)
    }

    pub fn verified(&self) -> bool {
        self.partial.is_none()
            && self.all_surjective()
            && self.iso_case_holds()
            && self.degrees.iter().all(|d| d.dim_g >= d.dim_ghat)
            && self.stabilization.as_ref().is_none_or(|s| s.towers_agree != Some(false))
    }
}

/// Stable image of the p-torsion slice of the limit inside the stage at the
/// stabilization index (columns).
fn stable_w_image(tower: &CompletionTower) -> FpMatrix {
    let top = tower.stages.len();
    tower.slice_composite(top, tower.report.index).1.image()
}

fn limit_slices(tower: &CompletionTower) -> (FpMatrix, FpMatrix) {
    (tower.report.v_action.clone(), tower.report.w_action.clone())
}

pub fn verify_epimorphism(g: &GroupSpec, ring: Ring, p: u32, nmax: usize) -> Result<EpiReport, VerifyError> {
    if ring == Ring::Q {
        return rational_verify(g, nmax);
    }
    let m = &g.module;
    let (vm, wm) = module_slices(m, p)?;
    let (flavor, other) = match ring {
        Ring::Z => (Flavor::I, Flavor::Ip(p)),
        _ => (Flavor::Ip(p), Flavor::I),
    };
    let tower = completion_tower(m, flavor, p, DEFAULT_PRECISION, g.depth_cap)?;
    let (v_hat, w_hat) = limit_slices(&tower);
    let towers_agree = completion_tower(m, other, p, DEFAULT_PRECISION, g.depth_cap).ok().map(|t| {
        let (v2, w2) = limit_slices(&t);
        v2.rows() == v_hat.rows()
            && w2.rows() == w_hat.rows()
            && homology_dims(v2.rows(), w2.rows(), nmax) == homology_dims(v_hat.rows(), w_hat.rows(), nmax)
    });
    let rep = &tower.report;
    let stabilization = Some(StabilizationInfo {
        flavor: flavor.to_string(),
        index: rep.index,
        v_index: rep.v_index,
        w_index: rep.w_index,
        truncated: rep.truncated.clone(),
        limit: rep.limit.clone(),
        towers_agree,
    });
    let stage = &tower.stages[rep.index - 1];
    let (fv, fw_stage) = coefficient_slices(m, stage, p)?;
    let w_img = stable_w_image(&tower);
    let fw = if w_img.cols() == 0 {
        FpMatrix::zeros(p, 0, fw_stage.cols())
    } else {
        w_img.solve(&fw_stage).expect("the image of M lies in every stage image")
    };
    let iso_case = vm.is_identity();
    let mut report = EpiReport {
        group: g.name.clone(),
        ring,
        p: Some(p),
        tame: g.tame,
        degrees: Vec::new(),
        stabilization,
        iso_case,
        partial: None,
        prenilpotence_index: None,
    };
    if p == 2 && (wm.rows() > 0 || w_hat.rows() > 0) {
        report.partial = Some(h2_from_slices(&fv, &fw));
        return Ok(report);
    }
    let h_g = homology_lambda_gamma(&vm, &wm, nmax)?;
    let h_hat = homology_lambda_gamma(&v_hat, &w_hat, nmax)?;
    let map = induced_map(&h_g, &h_hat, &fv, &fw)?;
    let two = two_column_semidirect(&h_g, Some((&h_hat, &map)));
    let two_hat = two_column_semidirect(&h_hat, None);
    let split = equivariant_section(&fv, &vm, &v_hat).is_some() && equivariant_section(&fw, &wm, &w_hat).is_some();
    let comparison = two.comparison.expect("comparison requested");
    for (n, c) in comparison.iter().enumerate() {
        let dim_g = two.degrees[n].total;
        let dim_ghat = two_hat.degrees[n].total;
        let surjective = c.certified_surjective || dim_g.saturating_sub(c.kernel_interval.1) >= dim_ghat;
        report.degrees.push(DegreeVerdict { n, dim_g, dim_ghat, surjective, split, route: Route::Formula, kernel_interval: c.kernel_interval });
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// rational version

fn q_exterior(f: &QMatrix, a: usize) -> QMatrix {
    let rs = subsets(f.rows(), a);
    let cs = subsets(f.cols(), a);
    QMatrix::from_fn(rs.len(), cs.len(), |i, j| if a == 0 { BigRational::one() } else { f.submatrix(&rs[i], &cs[j]).det() })
}

fn q_minus_one(a: &QMatrix) -> QMatrix {
    a.sub(&QMatrix::identity(a.rows()))
}

pub fn rational_verify(g: &GroupSpec, nmax: usize) -> Result<EpiReport, VerifyError> {
    let rm = rational_fitting(&g.module)?;
    let a = rm.action.clone();
    let b = rm.hat_action();
    let d = rm.dim;
    let f = if rm.hat.cols() == 0 { QMatrix::zeros(0, d) } else { rm.hat.solve(&rm.projection()).expect("projection lands in the summand") };
    // inclusion of the summand is an equivariant section of the projection
    let split = rm.hat.cols() == 0 || a.mul(&rm.hat) == rm.hat.mul(&b);
    let lam = |x: &QMatrix, n: usize| q_exterior(x, n);
    let mut degrees = Vec::new();
    for n in 0..=nmax {
        let coinv = |t: &QMatrix| t.rows() - q_minus_one(t).rank();
        let (an, bn, fnn) = (lam(&a, n), lam(&b, n), lam(&f, n));
        let mut dim_g = coinv(&an);
        let mut dim_ghat = coinv(&bn);
        let bm = q_minus_one(&bn);
        let coinv_onto = fnn.hstack(&bm).rank() - bm.rank() == coinv(&bn);
        let mut inv_onto = true;
        if n >= 1 {
            let (a1, b1, f1) = (lam(&a, n - 1), lam(&b, n - 1), lam(&f, n - 1));
            let k = q_minus_one(&a1).kernel();
            let k2 = q_minus_one(&b1).kernel().cols();
            dim_g += k.cols();
            dim_ghat += k2;
            inv_onto = f1.mul(&k).rank() == k2;
        }
        let surjective = coinv_onto && inv_onto;
        degrees.push(DegreeVerdict {
            n,
            dim_g,
            dim_ghat,
            surjective,
            split,
            route: Route::Rational,
            kernel_interval: (dim_g - dim_ghat, dim_g - dim_ghat),
        });
    }
    let (_, idx) = q_prenilpotence(&g.module, 8)?;
    Ok(EpiReport {
        group: g.name.clone(),
        ring: Ring::Q,
        p: None,
        tame: g.tame,
        degrees,
        stabilization: None,
        iso_case: rm.infinite_part.cols() == 0,
        partial: None,
        prenilpotence_index: idx,
    })
}

// ---------------------------------------------------------------------------
// Dwyer filtration

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DwyerMode {
    Exact,
    Interval,
    /// interval arithmetic without a chain route at `p = 2`
    UnverifiedExact,
}

impl fmt::Display for DwyerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DwyerMode::Exact => "EXACT",
            DwyerMode::Interval => "INTERVAL",
            DwyerMode::UnverifiedExact => "UNVERIFIED-EXACT",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DwyerStage {
    pub i: usize,
    /// `dim H_2(G/γ_i)`
    pub h2_quotient: usize,
    /// bounds for `dim Φ_i`
    pub phi: (usize, usize),
    pub route: Route,
}

#[derive(Clone, Debug)]
pub struct DwyerReport {
    pub group: String,
    pub p: u32,
    pub ring: Ring,
    pub h2: usize,
    pub stages: Vec<DwyerStage>,
    /// `lim H_2(G/γ_i)` as the stable image, when determined
    pub limit: Option<(usize, usize)>,
    pub stabilization_index: Option<usize>,
    pub mode: DwyerMode,
    /// exact values weakly decrease along the filtration
    pub monotone: bool,
    /// `dim H_2(G) = dim Φ_∞ + dim lim` (`None` when undetermined)
    pub exact_sequence: Option<bool>,
}

impl DwyerReport {
    pub fn verified(&self) -> bool {
        self.monotone && self.exact_sequence == Some(true)
    }
}

/// Degree-2 homology of `Q ⋊ C` for one stage, by formula or chain complex.
struct StageH2 {
    group: FgAbGroup,
    graded: Option<GradedCModule>,
    complex: Option<CoeffComplex>,
    h2: usize,
}

fn stage_h2(group: FgAbGroup, p: u32, need_chain: bool) -> Result<StageH2, VerifyError> {
    let (v, w) = slice_actions(&group, p);
    let graded = homology_lambda_gamma(&v, &w, 2).ok();
    let complex = if need_chain || graded.is_none() { Some(equivariant_resolution(&group, p, 2, DEFAULT_ORDER_BUDGET)?) } else { None };
    let h2 = match (&complex, &graded) {
        (Some(c), _) => wang_cone_homology(c).dims[2],
        (None, Some(h)) => two_column_semidirect(h, None).degrees[2].total,
        _ => unreachable!(),
    };
    Ok(StageH2 { group, graded, complex, h2 })
}

/// Rank bounds for `H_2(src ⋊ C) → H_2(dst ⋊ C)` induced by `mat`.
fn stage_map_rank(src: &StageH2, dst: &StageH2, mat: &IntMatrix, p: u32) -> Result<((usize, usize), Route), VerifyError> {
    if let (Some(a), Some(b)) = (&src.graded, &dst.graded) {
        let (fv, fw) = slice_matrices(&src.group, &dst.group, mat, p);
        let map = induced_map(a, b, &fv, &fw)?;
        let cmp = two_column_semidirect(a, Some((b, &map))).comparison.expect("comparison")[2].clone();
        let (lo, hi) = cmp.kernel_interval;
        if lo == hi || src.complex.is_none() || dst.complex.is_none() {
            return Ok(((src.h2 - hi, src.h2 - lo), Route::Formula));
        }
    }
    let (Some(cs), Some(cd)) = (&src.complex, &dst.complex) else {
        return Err(VerifyError::Homology(HomError::UnsupportedAtTwo));
    };
    let f = AbHom::new(src.group.clone(), dst.group.clone(), mat.clone())?;
    let r = lift_chain_map(&f, cs, cd)?.on_homology[2].rank();
    Ok(((r, r), Route::Chain))
}

fn needs_chain(g: &FgAbGroup, p: u32) -> bool {
    p == 2 && !g.slice_w_gens(p).is_empty()
}

/// Tower of `M/MI^d` (or its free quotient), depths `1..=dmax`.
struct StageSystem {
    pres: LaurentPresentation,
    stages: Vec<Truncation>,
    rational: bool,
}

impl StageSystem {
    fn new(m: &CModule, dmax: usize, rational: bool) -> Self {
        let pres = m.presentation();
        let stages = (1..=dmax).map(|d| crate::cmod::truncate_presentation(&pres, Flavor::I, d)).collect();
        StageSystem { pres, stages, rational }
    }

    fn group(&self, d: usize) -> FgAbGroup {
        let t = &self.stages[d - 1];
        if self.rational {
            free_quotient(t).0
        } else {
            t.group.clone()
        }
    }

    fn restrict_rows(&self, d: usize, m: IntMatrix) -> IntMatrix {
        if !self.rational {
            return m;
        }
        let (_, rows) = free_quotient(&self.stages[d - 1]);
        let cols: Vec<usize> = (0..m.cols()).collect();
        m.submatrix(&rows, &cols)
    }

    /// Stage `hi` → stage `lo` in group coordinates.
    fn composite(&self, hi: usize, lo: usize) -> IntMatrix {
        let mut acc = IntMatrix::identity(self.pres.gens * hi);
        for d in (lo..hi).rev() {
            acc = self.pres.drop_matrix(d).mul(&acc);
        }
        let t_hi = &self.stages[hi - 1];
        let t_lo = &self.stages[lo - 1];
        let mut lift = t_hi.lift.clone();
        if self.rational {
            let (_, free) = free_quotient(t_hi);
            let rows: Vec<usize> = (0..lift.rows()).collect();
            lift = lift.submatrix(&rows, &free);
        }
        let m = t_lo.group.normalize_matrix(&t_lo.proj.mul(&acc).mul(&lift));
        let m = self.restrict_rows(lo, m);
        self.group(lo).normalize_matrix(&m)
    }
}

/// Bounds on `Φ = ker(H_2(G) → H_2(Q ⋊ C))` from the natural degree-2
/// sequence and the exact `H_1` maps, for `p = 2` without a chain route.
fn phi_bounds_at_two(vm: &FpMatrix, wm: &FpMatrix, fv: &FpMatrix, stage: &StageH2, h2_g: usize) -> (usize, usize) {
    let p = vm.p();
    let coinv_m2 = if wm.rows() == 0 {
        coinvariant_dim(&exterior_power(vm, 2))
    } else {
        homology_dims(vm.rows(), wm.rows(), 2)[2]
    };
    let (vq, _) = slice_actions(&stage.group, p);
    let inv_q1 = invariant_basis(&vq).cols();
    let coinv_q2 = stage.h2 - inv_q1;
    let k = invariant_basis(vm);
    let ker3 = k.cols() - fv.mul(&k).rank();
    (ker3.saturating_sub(coinv_q2), h2_g.min(coinv_m2 + ker3))
}

pub fn dwyer_filtration(g: &GroupSpec, p: u32, ring: Ring, imax: usize) -> Result<DwyerReport, VerifyError> {
    if ring == Ring::Zp {
        return Err(VerifyError::UnsupportedSeries);
    }
    let imax = imax.max(5);
    let m = &g.module;
    let rational = ring == Ring::Q;
    let sys = StageSystem::new(m, imax - 1, rational);
    let model = fg_model(m);
    let (vm, wm) = module_slices(m, p)?;
    let m_needs_chain = p == 2 && wm.rows() > 0;
    let mut stages_h2 = Vec::new();
    for i in 2..=imax {
        let grp = sys.group(i - 1);
        let chain = needs_chain(&grp, p) || m_needs_chain;
        stages_h2.push(stage_h2(grp, p, chain)?);
    }
    // H_2(G)
    let m_complex = match &model {
        Some((mg, _)) if m_needs_chain || stages_h2.iter().any(|s| s.complex.is_some()) => {
            equivariant_resolution(mg, p, 2, DEFAULT_ORDER_BUDGET).ok()
        }
        _ => None,
    };
    let h_g = homology_lambda_gamma(&vm, &wm, 2).ok();
    let h2 = match (&h_g, &m_complex) {
        (Some(h), _) => two_column_semidirect(h, None).degrees[2].total,
        (None, Some(c)) => wang_cone_homology(c).dims[2],
        _ => return Err(VerifyError::Homology(HomError::UnsupportedAtTwo)),
    };
    let mut stages = Vec::new();
    let mut any_bounds = false;
    for (k, st) in stages_h2.iter().enumerate() {
        let i = k + 2;
        let trunc = &sys.stages[i - 2];
        let mut interval = None;
        let mut route = Route::Formula;
        if let (Some(hg), Some(hq)) = (&h_g, &st.graded) {
            let (fv, fw) = stage_slices(m, trunc, &sys, i - 1, p)?;
            let map = induced_map(hg, hq, &fv, &fw)?;
            let cmp = two_column_semidirect(hg, Some((hq, &map))).comparison.expect("comparison")[2].clone();
            interval = Some(cmp.kernel_interval);
        }
        let exact_needed = interval.is_none_or(|(a, b)| a != b);
        if exact_needed {
            if let (Some(c), Some(cq)) = (&m_complex, &st.complex) {
                if let Some(f) = coefficient_hom(m, trunc).map(|f| rationalize_hom(f, &sys, i - 1)) {
                    let k = lift_chain_map(&f, c, cq)?.kernel_dim(2);
                    interval = Some((k, k));
                    route = Route::Chain;
                }
            }
        }
        if interval.is_none() {
            let (fv, _) = stage_slices(m, trunc, &sys, i - 1, p)?;
            interval = Some(phi_bounds_at_two(&vm, &wm, &fv, st, h2));
            route = Route::Bounds;
            any_bounds = true;
        }
        stages.push(DwyerStage { i, h2_quotient: st.h2, phi: interval.unwrap(), route });
    }
    // stable image of H_2(G/γ_j) in H_2(G/γ_i)
    let top = imax;
    let idx = |i: usize| i - 2;
    let mut rank_top = Vec::new();
    let mut rank_prev = Vec::new();
    for i in 2..=top - 2 {
        let (r1, _) = stage_map_rank(&stages_h2[idx(top)], &stages_h2[idx(i)], &sys.composite(top - 1, i - 1), p)?;
        let (r0, _) = stage_map_rank(&stages_h2[idx(top - 1)], &stages_h2[idx(i)], &sys.composite(top - 2, i - 1), p)?;
        rank_top.push(r1);
        rank_prev.push(r0);
    }
    let last = rank_top.len() - 1;
    let target = rank_top[last];
    let stable = |k: usize| rank_top[k] == rank_prev[k] && rank_top[k] == target && target.0 == target.1;
    let stabilization_index = if stable(last) { (0..=last).rev().take_while(|&k| stable(k)).last().map(|k| k + 2) } else { None };
    let limit = stabilization_index.map(|_| target);
    let interval_mode = stages.iter().any(|s| s.phi.0 != s.phi.1);
    let mode = if matches!(m, CModule::Localized { .. }) && p == 2 || any_bounds && p == 2 {
        DwyerMode::UnverifiedExact
    } else if interval_mode {
        DwyerMode::Interval
    } else {
        DwyerMode::Exact
    };
    let exact: Vec<usize> = stages.iter().filter(|s| s.phi.0 == s.phi.1).map(|s| s.phi.0).collect();
    let monotone = exact.windows(2).all(|w| w[0] >= w[1]) && stages.windows(2).all(|w| w[1].phi.0 <= w[0].phi.1);
    let phi_last = stages.last().expect("at least one stage").phi;
    let exact_sequence = limit.map(|(l, _)| {
        if phi_last.0 == phi_last.1 {
            h2 == phi_last.0 + l
        } else {
            (phi_last.0 + l..=phi_last.1 + l).contains(&h2)
        }
    });
    Ok(DwyerReport { group: g.name.clone(), p, ring, h2, stages, limit, stabilization_index, mode, monotone, exact_sequence })
}

fn stage_slices(m: &CModule, trunc: &Truncation, sys: &StageSystem, d: usize, p: u32) -> Result<(FpMatrix, FpMatrix), VerifyError> {
    if !sys.rational {
        return coefficient_slices(m, trunc, p);
    }
    // over Q the quotient is torsion-free: restrict to its coordinates
    let mut parts = Vec::new();
    slice_parts(m, p, &mut parts)?;
    let gens: usize = parts.iter().map(|s| s.group.ngens()).sum();
    let full = sys.restrict_rows(d, coefficient_matrix(gens, trunc));
    let q = sys.group(d);
    let rows: Vec<usize> = (0..full.rows()).collect();
    let (mut fv, mut fw) = (FpMatrix::zeros(p, q.ngens(), 0), FpMatrix::zeros(p, 0, 0));
    let mut off = 0;
    for s in &parts {
        let k = s.group.ngens();
        if !s.killed {
            let cols: Vec<usize> = (off..off + k).collect();
            let (v, w) = slice_matrices(&s.group, &q, &full.submatrix(&rows, &cols), p);
            fv = fv.hstack(&v);
            fw = fw.hstack(&w);
        }
        off += k;
    }
    Ok((fv, fw))
}

fn rationalize_hom(f: AbHom, sys: &StageSystem, d: usize) -> AbHom {
    if !sys.rational {
        return f;
    }
    let q = sys.group(d);
    let m = q.normalize_matrix(&sys.restrict_rows(d, f.matrix));
    AbHom { source: f.source, target: q, matrix: m }
}

// ---------------------------------------------------------------------------
// standalone checks

/// `H_*(Z/p^i)` along the inclusions `Z/p^i → Z/p^{i+1}` and the
/// `Z/p`-completion tower of their union.
#[derive(Clone, Debug)]
pub struct PruferReport {
    pub p: u32,
    /// `dim H_2(Z/p^i, Z/p)`, `i = 1..=imax`
    pub stage_dims: Vec<usize>,
    /// dimension of the image of `H_2(Z/p^i)` in `H_2(Z/p^imax)`
    pub colimit_dims: Vec<usize>,
    /// first stage from which the colimit estimate is constant
    pub stabilized_at: Option<usize>,
    /// `Z/p^i → (Z/p^{i+k}) / p^k` is zero for all tested `i, k`
    pub completion_zero: bool,
}

impl PruferReport {
    pub fn colimit_dim(&self) -> usize {
        *self.colimit_dims.last().unwrap_or(&0)
    }
}

pub fn prufer_remark(p: u32, imax: usize) -> Result<PruferReport, VerifyError> {
    let pb = |e: usize| BigInt::from(p).pow(e as u32);
    let cyc = |e: usize| FgAbGroup::new(vec![pb(e)], 0);
    let graded: Vec<GradedCModule> = (1..=imax)
        .map(|e| {
            let (v, w) = slice_actions(&cyc(e), p);
            homology_lambda_gamma(&v, &w, 2)
        })
        .collect::<Result<_, _>>()?;
    let stage_dims: Vec<usize> = graded.iter().map(|h| h.dim(2)).collect();
    let mut colimit_dims = Vec::new();
    for i in 1..=imax {
        // x ↦ p^{imax-i} x
        let f = AbHom::new(cyc(i), cyc(imax), IntMatrix::from_diag(&[pb(imax - i)]))?;
        let (fv, fw) = crate::abgrp::induced_on_slices(&f, p)?;
        let map = induced_map(&graded[i - 1], &graded[imax - 1], &fv, &fw)?;
        colimit_dims.push(map.blocks[2].rank());
    }
    let last = *colimit_dims.last().unwrap_or(&0);
    let stabilized_at = (0..colimit_dims.len()).find(|&k| colimit_dims[k..].iter().all(|&d| d == last)).map(|k| k + 1);
    let mut completion_zero = true;
    for i in 1..=imax {
        for k in 1..=imax {
            let big = cyc(i + k);
            let q = big.quotient(&IntMatrix::from_diag(&[pb(k)]));
            let inc = IntMatrix::from_diag(&[pb(k)]);
            let img = q.group.normalize_matrix(&q.proj.mul(&inc));
            completion_zero &= (0..img.rows()).all(|r| img[(r, 0)].is_zero());
        }
    }
    Ok(PruferReport { p, stage_dims, colimit_dims, stabilized_at, completion_zero })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgreementReport {
    pub p: u32,
    pub chain: Vec<usize>,
    /// Λ⊗Γ two-column dims (odd `p`, or no p-torsion)
    pub formula: Option<Vec<usize>>,
    /// `h_n(M) + h_{n-1}(M)` when `t` acts trivially
    pub kunneth: Option<Vec<usize>>,
}

impl AgreementReport {
    pub fn agrees(&self) -> bool {
        self.formula.as_ref().is_none_or(|f| *f == self.chain) && self.kunneth.as_ref().is_none_or(|k| *k == self.chain)
    }
}

/// Wang cone dimensions against the formula and, for trivial actions, Künneth.
pub fn chain_formula_agreement(m: &FgAbGroup, p: u32, nmax: usize) -> Result<AgreementReport, VerifyError> {
    let cx = equivariant_resolution(m, p, nmax, DEFAULT_ORDER_BUDGET)?;
    let chain = wang_cone_homology(&cx).dims;
    let (v, w) = slice_actions(m, p);
    let formula = homology_lambda_gamma(&v, &w, nmax).ok().map(|h| two_column_semidirect(&h, None).totals());
    let trivial = m.action().is_none_or(|a| m.normalize_matrix(a) == m.normalize_matrix(&IntMatrix::identity(m.ngens())));
    let kunneth = trivial.then(|| {
        let h = homology_dims(v.rows(), w.rows(), nmax);
        (0..=nmax).map(|n| h[n] + if n > 0 { h[n - 1] } else { 0 }).collect()
    });
    Ok(AgreementReport { p, chain, formula, kunneth })
}

/// Whether a chain route exists for `M` at `p` within the default budget.
pub fn chain_route_available(m: &CModule, p: u32) -> bool {
    fg_model(m).is_some_and(|(g, _)| p_torsion_order(&g, p) <= BigInt::from(DEFAULT_ORDER_BUDGET))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(name: &str) -> GroupSpec {
        zoo_member(name).unwrap()
    }

    #[test]
    fn klein_series() {
        let q = lcs_quotients(&member("klein"), Ring::Z, 8).unwrap();
        for lq in &q {
            assert_eq!(lq.index, Some(BigInt::from(2).pow(lq.i as u32 - 1)), "i = {}", lq.i);
        }
        assert!(matches!(lcs_quotients(&member("klein"), Ring::Zp, 4), Err(VerifyError::UnsupportedSeries)));
    }

    #[test]
    fn heisenberg_and_bs_series() {
        let q = lcs_quotients(&member("heisenberg"), Ring::Z, 4).unwrap();
        assert_eq!(q[0].quotient.free_rank(), 1);
        assert_eq!(q[1].quotient.free_rank(), 2);
        assert_eq!(q[2].quotient.free_rank(), 2);
        let q = lcs_quotients(&member("bs1_2"), Ring::Z, 4).unwrap();
        assert!(q.iter().all(|lq| lq.quotient.is_trivial()));
    }

    #[test]
    fn epi_examples() {
        let r = verify_epimorphism(&member("klein"), Ring::Zp, 2, 2).unwrap();
        let dims: Vec<(usize, usize)> = r.degrees.iter().map(|d| (d.dim_g, d.dim_ghat)).collect();
        assert_eq!(dims, vec![(1, 1), (2, 2), (1, 1)]);
        assert!(r.verified());
        let r = verify_epimorphism(&member("bs1_3"), Ring::Zp, 2, 2).unwrap();
        assert_eq!(r.degrees.iter().map(|d| d.dim_ghat).collect::<Vec<_>>(), vec![1, 2, 1]);
        assert!(r.verified());
        let r = verify_epimorphism(&member("torus_p3"), Ring::Zp, 3, 3).unwrap();
        assert_eq!(r.degrees.iter().map(|d| d.dim_g).collect::<Vec<_>>(), vec![1, 3, 3, 1]);
        assert!(r.iso_case && r.verified());
    }

    #[test]
    fn rational_examples() {
        let dims = |name: &str| {
            let r = rational_verify(&member(name), 4).unwrap();
            assert!(r.verified(), "{}", name);
            (r.degrees.iter().map(|d| d.dim_g).collect::<Vec<_>>(), r.degrees.iter().map(|d| d.dim_ghat).collect::<Vec<_>>())
        };
        assert_eq!(dims("sol"), (vec![1, 1, 1, 1, 0], vec![1, 1, 0, 0, 0]));
        assert_eq!(dims("klein"), (vec![1, 1, 0, 0, 0], vec![1, 1, 0, 0, 0]));
        assert_eq!(dims("bs1_2"), (vec![1, 1, 0, 0, 0], vec![1, 1, 0, 0, 0]));
    }

    #[test]
    fn dwyer_examples() {
        for p in [2, 3, 5] {
            let r = dwyer_filtration(&member("heisenberg"), p, Ring::Z, 6).unwrap();
            assert_eq!(r.h2, 2);
            assert_eq!(r.stages[0].phi, (2, 2));
            assert_eq!(r.stages[1].phi, (0, 0));
            assert_eq!(r.limit, Some((2, 2)));
            assert!(r.verified());
        }
        let r = dwyer_filtration(&member("klein"), 2, Ring::Z, 6).unwrap();
        assert!(r.stages.iter().all(|s| s.phi == (0, 0)));
        assert_eq!(r.limit, Some((1, 1)));
        assert!(r.verified() && r.mode == DwyerMode::Exact);
        let r = dwyer_filtration(&member("torus_p3"), 3, Ring::Z, 6).unwrap();
        assert!(r.stages.iter().all(|s| s.phi == (0, 0) && s.h2_quotient == 5));
        assert_eq!(r.limit, Some((3, 3)));
    }

    #[test]
    fn prufer() {
        for p in [3, 5] {
            let r = prufer_remark(p, 4).unwrap();
            assert!(r.stage_dims.iter().all(|&d| d == 1));
            assert!(r.colimit_dim() >= 1 && r.stabilized_at.unwrap() <= 3);
            assert!(r.completion_zero);
        }
    }
}
