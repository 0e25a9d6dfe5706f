//! Serializable views of core reports, with table and CSV rendering.

use mgc_core::cmod::{LimitFactor, StabilizationReport, TameReport, Truncation};
use mgc_core::specseq::{FuzzRecord, FuzzSummary};
use mgc_core::verify::{DwyerReport, EpiReport, StabilizationInfo};
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// One command result in all three output formats.
#[derive(Debug)]
pub struct Rendered {
    pub json: Value,
    pub table: String,
    pub csv: String,
    pub ok: bool,
}

impl Rendered {
    pub fn text(&self, format: Format) -> String {
        match format {
            Format::Table => self.table.clone(),
            Format::Json => serde_json::to_string_pretty(&self.json).expect("reports serialize"),
            Format::Csv => self.csv.clone(),
        }
    }
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("flat rows serialize to csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

/// Left-aligned columns separated by two spaces.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (k, c) in r.iter().enumerate() {
            width[k] = width[k].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells.iter().enumerate().map(|(k, c)| format!("{:<w$}", c, w = width[k])).collect();
        s.join("  ").trim_end().to_string()
    };
    let mut out = vec![line(headers.to_vec())];
    for r in rows {
        out.push(line(r.iter().map(|s| s.as_str()).collect()));
    }
    out.join("\n") + "\n"
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn limit_str(l: &[LimitFactor]) -> Vec<String> {
    l.iter()
        .map(|f| match f {
            LimitFactor::Free => "Zp".to_string(),
            LimitFactor::Cyclic(e) => format!("Z/p^{e}"),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// epimorphism

#[derive(Clone, Debug, Serialize)]
pub struct DegreeRow {
    pub n: usize,
    #[serde(rename = "dimG")]
    pub dim_g: usize,
    #[serde(rename = "dimGhat")]
    pub dim_ghat: usize,
    pub surjective: bool,
    pub split: bool,
    pub route: String,
    pub kernel_interval: [usize; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizationView {
    pub flavor: String,
    pub index: usize,
    pub v_index: usize,
    pub w_index: usize,
    pub truncated: Vec<u32>,
    pub limit: Vec<String>,
    pub towers_agree: Option<bool>,
}

impl From<&StabilizationInfo> for StabilizationView {
    fn from(s: &StabilizationInfo) -> Self {
        StabilizationView {
            flavor: s.flavor.clone(),
            index: s.index,
            v_index: s.v_index,
            w_index: s.w_index,
            truncated: s.truncated.clone(),
            limit: limit_str(&s.limit),
            towers_agree: s.towers_agree,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartialView {
    pub degree: usize,
    pub surjective: bool,
    pub kernel_interval: [usize; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct EpiView {
    pub group: String,
    #[serde(rename = "R")]
    pub ring: String,
    pub p: Option<u32>,
    pub tame: Option<bool>,
    pub iso_case: bool,
    pub degrees: Vec<DegreeRow>,
    pub stabilization: Option<StabilizationView>,
    pub prenilpotence_index: Option<usize>,
    /// degree-2 certificate when only that is available
    pub partial: Option<PartialView>,
    pub verified: bool,
}

impl From<&EpiReport> for EpiView {
    fn from(r: &EpiReport) -> Self {
        EpiView {
            group: r.group.clone(),
            ring: r.ring.to_string(),
            p: r.p,
            tame: r.tame,
            iso_case: r.iso_case,
            degrees: r
                .degrees
                .iter()
                .map(|d| DegreeRow {
                    n: d.n,
                    dim_g: d.dim_g,
                    dim_ghat: d.dim_ghat,
                    surjective: d.surjective,
                    split: d.split,
                    route: d.route.to_string(),
                    kernel_interval: [d.kernel_interval.0, d.kernel_interval.1],
                })
                .collect(),
            stabilization: r.stabilization.as_ref().map(StabilizationView::from),
            prenilpotence_index: r.prenilpotence_index,
            partial: r.partial.as_ref().map(|c| PartialView {
                degree: 2,
                surjective: c.surjective,
                kernel_interval: [c.kernel_interval.0, c.kernel_interval.1],
            }),
            verified: r.verified(),
        }
    }
}

#[derive(Serialize)]
struct EpiCsvRow<'a> {
    group: &'a str,
    #[serde(rename = "R")]
    ring: &'a str,
    p: Option<u32>,
    n: usize,
    #[serde(rename = "dimG")]
    dim_g: usize,
    #[serde(rename = "dimGhat")]
    dim_ghat: usize,
    surjective: bool,
    split: bool,
    route: &'a str,
}

pub fn render_epi(r: &EpiReport) -> Rendered {
    let v = EpiView::from(r);
    let rows: Vec<Vec<String>> = v
        .degrees
        .iter()
        .map(|d| {
            vec![
                d.n.to_string(),
                d.dim_g.to_string(),
                d.dim_ghat.to_string(),
                d.surjective.to_string(),
                d.split.to_string(),
                d.route.clone(),
                format!("[{},{}]", d.kernel_interval[0], d.kernel_interval[1]),
            ]
        })
        .collect();
    let mut t = format!("group {}  R = {}  p = {}  tame = {}  iso case = {}\n", v.group, v.ring, opt(&v.p), opt(&v.tame), v.iso_case);
    if let Some(s) = &v.stabilization {
        t += &format!(
            "tower {}: index {} (V {}, W {}), truncated [{}], limit [{}], other tower agrees: {}\n",
            s.flavor,
            s.index,
            s.v_index,
            s.w_index,
            list(&s.truncated),
            s.limit.join(", "),
            opt(&s.towers_agree)
        );
    }
    if let Some(i) = v.prenilpotence_index {
        t += &format!("prenilpotence index {i}\n");
    }
    if let Some(c) = &v.partial {
        t += &format!(
            "graded model unavailable; degree 2 only: surjective {}, kernel in [{},{}]\n",
            c.surjective, c.kernel_interval[0], c.kernel_interval[1]
        );
    } else {
        t += &table(&["n", "dimG", "dimGhat", "surjective", "split", "route", "kernel"], &rows);
    }
    t += &format!("{}\n", if v.verified { "VERIFIED" } else { "NOT VERIFIED" });
    let csv_rows: Vec<EpiCsvRow> = v
        .degrees
        .iter()
        .map(|d| EpiCsvRow {
            group: &v.group,
            ring: &v.ring,
            p: v.p,
            n: d.n,
            dim_g: d.dim_g,
            dim_ghat: d.dim_ghat,
            surjective: d.surjective,
            split: d.split,
            route: &d.route,
        })
        .collect();
    let csv = csv_string(&csv_rows);
    Rendered { json: serde_json::to_value(&v).expect("serialize"), table: t, csv, ok: v.verified }
}

// ---------------------------------------------------------------------------
// Dwyer filtration

#[derive(Clone, Debug, Serialize)]
pub struct DwyerStageRow {
    pub i: usize,
    pub h2_quotient: usize,
    pub phi_lo: usize,
    pub phi_hi: usize,
    pub route: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DwyerView {
    pub group: String,
    #[serde(rename = "R")]
    pub ring: String,
    pub p: u32,
    pub h2: usize,
    pub mode: String,
    pub stages: Vec<DwyerStageRow>,
    pub limit: Option<[usize; 2]>,
    pub stabilization_index: Option<usize>,
    pub monotone: bool,
    pub exact_sequence: Option<bool>,
    pub verified: bool,
}

impl From<&DwyerReport> for DwyerView {
    fn from(r: &DwyerReport) -> Self {
        DwyerView {
            group: r.group.clone(),
            ring: r.ring.to_string(),
            p: r.p,
            h2: r.h2,
            mode: r.mode.to_string(),
            stages: r
                .stages
                .iter()
                .map(|s| DwyerStageRow { i: s.i, h2_quotient: s.h2_quotient, phi_lo: s.phi.0, phi_hi: s.phi.1, route: s.route.to_string() })
                .collect(),
            limit: r.limit.map(|(a, b)| [a, b]),
            stabilization_index: r.stabilization_index,
            monotone: r.monotone,
            exact_sequence: r.exact_sequence,
            verified: r.verified(),
        }
    }
}

fn interval(lo: usize, hi: usize) -> String {
    if lo == hi {
        lo.to_string()
    } else {
        format!("[{lo},{hi}]")
    }
}

pub fn render_dwyer(r: &DwyerReport) -> Rendered {
    let v = DwyerView::from(r);
    let rows: Vec<Vec<String>> =
        v.stages.iter().map(|s| vec![s.i.to_string(), s.h2_quotient.to_string(), interval(s.phi_lo, s.phi_hi), s.route.clone()]).collect();
    let mut t = format!("group {}  R = {}  p = {}  dim H_2(G) = {}  mode {}\n", v.group, v.ring, v.p, v.h2, v.mode);
    t += &table(&["i", "H2(G/gamma_i)", "dim Phi_i", "route"], &rows);
    t += &format!(
        "limit {}  stabilizes at {}  monotone {}  exact sequence {}\n{}\n",
        v.limit.map_or("-".to_string(), |[a, b]| interval(a, b)),
        opt(&v.stabilization_index),
        v.monotone,
        opt(&v.exact_sequence),
        if v.verified { "VERIFIED" } else { "NOT VERIFIED" }
    );
    let csv = csv_string(&v.stages);
    Rendered { json: serde_json::to_value(&v).expect("serialize"), table: t, csv, ok: v.verified }
}

// ---------------------------------------------------------------------------
// tameness, truncations, towers

#[derive(Clone, Debug, Serialize)]
pub struct TameView {
    pub group: String,
    pub tame: Option<bool>,
    pub dim_q: Option<usize>,
    pub charpoly: Option<Vec<String>>,
    pub charpoly_inverse: Option<Vec<String>>,
    pub integral: Option<bool>,
    pub inverse_integral: Option<bool>,
}

pub fn render_tame(group: &str, r: &TameReport) -> Rendered {
    fn strs<T: ToString>(c: &Option<Vec<T>>) -> Option<Vec<String>> {
        c.as_ref().map(|v| v.iter().map(|x| x.to_string()).collect())
    }
    let v = TameView {
        group: group.to_string(),
        tame: r.tame,
        dim_q: r.dim_q,
        charpoly: strs(&r.charpoly),
        charpoly_inverse: strs(&r.charpoly_inverse),
        integral: r.integral,
        inverse_integral: r.inverse_integral,
    };
    let row = vec![
        v.group.clone(),
        opt(&v.dim_q),
        v.charpoly.as_ref().map_or("-".into(), |c| c.join(" ")),
        opt(&v.integral),
        opt(&v.inverse_integral),
        opt(&v.tame),
    ];
    let t = table(&["group", "dim_Q", "charpoly", "integral", "inverse integral", "tame"], &[row]);
    #[derive(Serialize)]
    struct Row<'a> {
        group: &'a str,
        dim_q: Option<usize>,
        charpoly: String,
        integral: Option<bool>,
        inverse_integral: Option<bool>,
        tame: Option<bool>,
    }
    let csv = csv_string(&[Row {
        group: &v.group,
        dim_q: v.dim_q,
        charpoly: v.charpoly.as_ref().map_or(String::new(), |c| c.join(" ")),
        integral: v.integral,
        inverse_integral: v.inverse_integral,
        tame: v.tame,
    }]);
    Rendered { json: serde_json::to_value(&v).expect("serialize"), table: t, csv, ok: true }
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationView {
    pub group: String,
    pub flavor: String,
    pub depth: usize,
    pub torsion: Vec<String>,
    pub free_rank: usize,
    pub action: Vec<Vec<String>>,
}

pub fn render_truncation(group: &str, flavor: &str, t: &Truncation) -> Rendered {
    let g = &t.group;
    let a = g.action_or_identity();
    let v = TruncationView {
        group: group.to_string(),
        flavor: flavor.to_string(),
        depth: t.depth,
        torsion: g.torsion().iter().map(|d| d.to_string()).collect(),
        free_rank: g.free_rank(),
        action: (0..a.rows()).map(|i| a.row(i).iter().map(|x| x.to_string()).collect()).collect(),
    };
    let mut parts: Vec<String> = v.torsion.iter().map(|d| format!("Z/{d}")).collect();
    parts.extend(std::iter::repeat_n("Z".to_string(), v.free_rank));
    let shape = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
    let action = v.action.iter().map(|r| format!("[{}]", r.join(","))).collect::<Vec<_>>().join("");
    let t = format!("{} / depth {} ({}): {}\nt acts by [{}]\n", v.group, v.depth, v.flavor, shape, action);
    #[derive(Serialize)]
    struct Row<'a> {
        group: &'a str,
        flavor: &'a str,
        depth: usize,
        torsion: String,
        free_rank: usize,
        action: String,
    }
    let csv = csv_string(&[Row { group: &v.group, flavor: &v.flavor, depth: v.depth, torsion: v.torsion.join(" "), free_rank: v.free_rank, action }]);
    Rendered { json: serde_json::to_value(&v).expect("serialize"), table: t, csv, ok: true }
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerView {
    pub flavor: String,
    pub stabilized: bool,
    pub index: Option<usize>,
    pub v_index: Option<usize>,
    pub w_index: Option<usize>,
    pub truncated: Vec<u32>,
    pub limit: Vec<String>,
    pub v_dim: Option<usize>,
    pub w_dim: Option<usize>,
    pub error: Option<String>,
}

impl TowerView {
    pub fn from_report(flavor: String, r: &StabilizationReport) -> Self {
        TowerView {
            flavor,
            stabilized: true,
            index: Some(r.index),
            v_index: Some(r.v_index),
            w_index: Some(r.w_index),
            truncated: r.truncated.clone(),
            limit: limit_str(&r.limit),
            v_dim: Some(r.v_dim),
            w_dim: Some(r.w_dim),
            error: None,
        }
    }

    pub fn failed(flavor: String, error: String) -> Self {
        TowerView {
            flavor,
            stabilized: false,
            index: None,
            v_index: None,
            w_index: None,
            truncated: Vec::new(),
            limit: Vec::new(),
            v_dim: None,
            w_dim: None,
            error: Some(error),
        }
    }
}

#[derive(Serialize)]
struct TowerCsvRow<'a> {
    group: &'a str,
    p: u32,
    flavor: &'a str,
    stabilized: bool,
    index: Option<usize>,
    v_index: Option<usize>,
    w_index: Option<usize>,
    truncated: String,
    limit: String,
}

/// `ok` is decided by the caller (all towers stabilized and consistent).
pub fn render_towers(group: &str, p: u32, towers: &[TowerView], ok: bool) -> Rendered {
    let rows: Vec<Vec<String>> = towers
        .iter()
        .map(|t| {
            vec![
                t.flavor.clone(),
                opt(&t.index),
                opt(&t.v_index),
                opt(&t.w_index),
                format!("[{}]", list(&t.truncated)),
                format!("[{}]", t.limit.join(", ")),
                t.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let mut t = format!("group {group}  p = {p}\n");
    t += &table(&["tower", "index", "V index", "W index", "truncated", "limit", "note"], &rows);
    t += &format!("{}\n", if ok { "CONSISTENT" } else { "INCONSISTENT" });
    let csv_rows: Vec<TowerCsvRow> = towers
        .iter()
        .map(|x| TowerCsvRow {
            group,
            p,
            flavor: &x.flavor,
            stabilized: x.stabilized,
            index: x.index,
            v_index: x.v_index,
            w_index: x.w_index,
            truncated: list(&x.truncated),
            limit: x.limit.join(" "),
        })
        .collect();
    let json = serde_json::json!({ "group": group, "p": p, "towers": towers, "consistent": ok });
    Rendered { json, table: t, csv: csv_string(&csv_rows), ok }
}

// ---------------------------------------------------------------------------
// homology

#[derive(Clone, Debug, Serialize)]
pub struct HomologyRow {
    pub n: usize,
    pub coinvariants: Option<usize>,
    pub invariants: Option<usize>,
    pub formula: Option<usize>,
    pub chain: Option<usize>,
}

pub fn render_homology(group: &str, p: u32, rows: &[HomologyRow], ok: bool) -> Rendered {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.n.to_string(), opt(&r.coinvariants), opt(&r.invariants), opt(&r.formula), opt(&r.chain)])
        .collect();
    let mut t = format!("H_*({group}; Z/{p})\n");
    t += &table(&["n", "coinvariants", "invariants", "formula", "chain"], &cells);
    t += &format!("{}\n", if ok { "CONSISTENT" } else { "INCONSISTENT" });
    let json = serde_json::json!({ "group": group, "p": p, "degrees": rows, "consistent": ok });
    Rendered { json, table: t, csv: csv_string(rows), ok }
}

// ---------------------------------------------------------------------------
// spectral fuzz

#[derive(Clone, Debug, Serialize)]
pub struct FuzzRow {
    pub seed: u64,
    pub n: usize,
    pub hypothesis: bool,
    pub violation: bool,
    pub witness: bool,
}

impl From<&FuzzRecord> for FuzzRow {
    fn from(r: &FuzzRecord) -> Self {
        FuzzRow {
            seed: r.seed,
            n: r.n,
            hypothesis: r.verdict.hypothesis,
            violation: r.verdict.violation,
            witness: !r.verdict.total_iso[r.n + 1],
        }
    }
}

pub fn render_fuzz(start: u64, size: usize, p: u32, s: &FuzzSummary) -> Rendered {
    let ok = s.violations.is_empty() && !s.witnesses.is_empty();
    let seeds = |v: &[FuzzRecord]| v.iter().map(|r| r.seed).collect::<Vec<_>>();
    let json = serde_json::json!({
        "start": start,
        "size": size,
        "p": p,
        "tried": s.tried,
        "accepted": s.accepted.len(),
        "violations": seeds(&s.violations),
        "witnesses": seeds(&s.witnesses),
        "verified": ok,
    });
    let mut t = format!(
        "second-page comparison, size {size}, p = {p}, seeds from {start}\ntried {}  accepted {}  violations {}  sharpness witnesses {}\n",
        s.tried,
        s.accepted.len(),
        s.violations.len(),
        s.witnesses.len()
    );
    if !s.violations.is_empty() {
        t += &format!("violating seeds: {}\n", list(&seeds(&s.violations)));
    }
    if let Some(w) = s.witnesses.first() {
        t += &format!("first witness: seed {} (hypothesis at n = {}, degree {} not iso)\n", w.seed, w.n, w.n + 1);
    }
    t += &format!("{}\n", if ok { "VERIFIED" } else { "NOT VERIFIED" });
    let rows: Vec<FuzzRow> = s.accepted.iter().map(FuzzRow::from).collect();
    Rendered { json, table: t, csv: csv_string(&rows), ok }
}

// ---------------------------------------------------------------------------
// zoo

#[derive(Clone, Debug, Serialize)]
pub struct ZooRow {
    pub group: String,
    pub check: String,
    #[serde(rename = "R")]
    pub ring: String,
    pub p: Option<u32>,
    pub summary: String,
    pub verified: bool,
}

pub fn render_zoo(rows: &[ZooRow]) -> Rendered {
    let ok = rows.iter().all(|r| r.verified);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.group.clone(), r.check.clone(), r.ring.clone(), opt(&r.p), r.summary.clone(), if r.verified { "ok" } else { "FAIL" }.into()])
        .collect();
    let mut t = table(&["group", "check", "R", "p", "summary", "status"], &cells);
    let bad = rows.iter().filter(|r| !r.verified).count();
    t += &format!("{} checks, {} failed\n", rows.len(), bad);
    let json = serde_json::json!({ "checks": rows, "verified": ok });
    Rendered { json, table: t, csv: csv_string(rows), ok }
}

pub fn dims_summary(r: &EpiReport) -> String {
    if let Some(c) = &r.partial {
        return format!("H_2 only: surjective {}", c.surjective);
    }
    let g: Vec<usize> = r.degrees.iter().map(|d| d.dim_g).collect();
    let h: Vec<usize> = r.degrees.iter().map(|d| d.dim_ghat).collect();
    format!("{} -> {}", list(&g), list(&h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_aligns() {
        let t = table(&["a", "bb"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    bb\nxyz  1\n");
    }

    #[test]
    fn csv_has_header() {
        #[derive(Serialize)]
        struct R {
            n: usize,
            ok: bool,
        }
        assert_eq!(csv_string(&[R { n: 1, ok: true }]), "n,ok\n1,true\n");
    }
}
