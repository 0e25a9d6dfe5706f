use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{debug, info};
use mgc::report::{
    dims_summary, render_dwyer, render_epi, render_fuzz, render_homology, render_tame, render_towers, render_truncation, render_zoo, Format,
    HomologyRow, Rendered, TowerView, ZooRow,
};
use mgc::spec::{resolve_group, SpecError};
use mgc_core::chainres::cone_dims;
use mgc_core::cmod::{completion_tower, tame_check, truncate, CModError, Flavor, DEFAULT_PRECISION};
use mgc_core::homfun::{homology_lambda_gamma, two_column_semidirect};
use mgc_core::specseq::fuzz_second_page;
use mgc_core::verify::{
    chain_route_available, dwyer_filtration, fg_model, module_slices, rational_verify, verify_epimorphism, zoo, DwyerMode, Ring, VerifyError,
    ZOO_NAMES,
};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Module(#[from] CModError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser, Debug)]
#[command(name = "mgc", version, about = "Homology of metabelian groups and their completions")]
struct Cli {
    /// print JSON instead of a table
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// print CSV instead of a table
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FlavorArg {
    #[value(name = "I")]
    I,
    #[value(name = "Ip")]
    Ip,
    #[value(name = "mixed")]
    Mixed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RingArg {
    #[value(name = "Z")]
    Z,
    #[value(name = "Zp")]
    Zp,
    #[value(name = "Q")]
    Q,
}

impl From<RingArg> for Ring {
    fn from(r: RingArg) -> Ring {
        match r {
            RingArg::Z => Ring::Z,
            RingArg::Zp => Ring::Zp,
            RingArg::Q => Ring::Q,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tameness data: rational dimension and characteristic polynomials.
    Tame {
        /// zoo name or path to a JSON module spec
        spec: String,
    },
    /// One truncation M/MI^i, M/MI_p^i or M/(MI^i + p^N M).
    Truncate {
        spec: String,
        #[arg(long, value_enum)]
        flavor: FlavorArg,
        #[arg(long)]
        depth: usize,
        #[arg(short)]
        p: Option<u32>,
        #[arg(short = 'N', default_value_t = DEFAULT_PRECISION)]
        precision: u32,
    },
    /// H_*(G; Z/p) by the two-column formula and, when small, the chain route.
    Homology {
        spec: String,
        #[arg(short)]
        p: u32,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
    },
    /// Completion towers for I, I_p and the mixed filtration at p.
    Complete {
        spec: String,
        #[arg(short)]
        p: u32,
    },
    /// Check that G -> Ĝ_R induces epimorphisms on mod-p (or rational) homology.
    VerifyEpi {
        spec: String,
        #[arg(short = 'R', value_enum, default_value = "Zp")]
        ring: RingArg,
        #[arg(short)]
        p: Option<u32>,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
    },
    /// Dwyer filtration of H_2(G; Z/p) along the lower central series.
    Dwyer {
        spec: String,
        #[arg(short)]
        p: u32,
        #[arg(long, default_value_t = 6)]
        imax: usize,
        #[arg(short = 'R', value_enum, default_value = "Z")]
        ring: RingArg,
    },
    /// Random double-complex morphisms against the second-page comparison.
    SpecseqFuzz {
        /// number of morphisms satisfying the hypothesis
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(short, default_value_t = 3)]
        p: u32,
        /// first seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the built-in groups, or run every check on them.
    Zoo {
        #[arg(long)]
        all: bool,
    },
}

fn prime(p: u32) -> Result<u32, CliError> {
    if p >= 2 && (2..p).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d)) {
        Ok(p)
    } else {
        Err(CliError::Usage(format!("{p} is not a prime")))
    }
}

fn need_p(p: Option<u32>, what: &str) -> Result<u32, CliError> {
    prime(p.ok_or_else(|| CliError::Usage(format!("{what} needs -p")))?)
}

fn homology(spec: &str, p: u32, nmax: usize) -> Result<Rendered, CliError> {
    let g = resolve_group(spec)?;
    let (v, w) = module_slices(&g.module, p)?;
    // the graded action is natural only at odd p or without p-torsion
    let formula = if p != 2 || w.rows() == 0 { homology_lambda_gamma(&v, &w, nmax).ok().map(|h| two_column_semidirect(&h, None)) } else { None };
    let chain = if chain_route_available(&g.module, p) {
        let (m, _) = fg_model(&g.module).expect("chain route needs a finitely generated model");
        Some(cone_dims(&m, p, nmax).map_err(VerifyError::from)?)
    } else {
        None
    };
    let rows: Vec<HomologyRow> = (0..=nmax)
        .map(|n| {
            let d = formula.as_ref().map(|f| &f.degrees[n]);
            HomologyRow {
                n,
                coinvariants: d.map(|d| d.coinvariants),
                invariants: d.map(|d| d.invariants),
                formula: d.map(|d| d.total),
                chain: chain.as_ref().map(|c| c[n]),
            }
        })
        .collect();
    let ok = rows.iter().all(|r| r.formula.is_none() || r.chain.is_none() || r.formula == r.chain) && rows.iter().any(|r| r.formula.is_some() || r.chain.is_some());
    Ok(render_homology(&g.name, p, &rows, ok))
}

fn complete(spec: &str, p: u32) -> Result<Rendered, CliError> {
    let g = resolve_group(spec)?;
    let flavors = [Flavor::I, Flavor::Ip(p), Flavor::Mixed(p, DEFAULT_PRECISION)];
    let mut views = Vec::new();
    for f in flavors {
        debug!("building {f} tower for {}", g.name);
        views.push(match completion_tower(&g.module, f, p, DEFAULT_PRECISION, g.depth_cap) {
            Ok(t) => TowerView::from_report(f.to_string(), &t.report),
            Err(e) => TowerView::failed(f.to_string(), e.to_string()),
        });
    }
    // I_p and the mixed filtration define the same completion
    let ok = views[1].stabilized && views[2].stabilized && views[1].truncated == views[2].truncated;
    Ok(render_towers(&g.name, p, &views, ok))
}

fn zoo_all() -> Result<Rendered, CliError> {
    let mut rows = Vec::new();
    for g in zoo() {
        for &p in &g.primes {
            for ring in [Ring::Z, Ring::Zp] {
                info!("{} R={ring} p={p}", g.name);
                let r = verify_epimorphism(&g, ring, p, g.nmax)?;
                rows.push(ZooRow {
                    group: g.name.clone(),
                    check: "epi".into(),
                    ring: ring.to_string(),
                    p: Some(p),
                    summary: dims_summary(&r),
                    verified: r.verified(),
                });
            }
            let d = dwyer_filtration(&g, p, Ring::Z, 6)?;
            let limit = d.limit.map_or("-".to_string(), |(a, b)| if a == b { a.to_string() } else { format!("[{a},{b}]") });
            rows.push(ZooRow {
                group: g.name.clone(),
                check: "dwyer".into(),
                ring: Ring::Z.to_string(),
                p: Some(p),
                summary: format!("H_2 {} limit {} {}", d.h2, limit, d.mode),
                verified: d.verified() && d.mode != DwyerMode::Interval,
            });
        }
        let r = rational_verify(&g, g.nmax)?;
        rows.push(ZooRow {
            group: g.name.clone(),
            check: "epi".into(),
            ring: Ring::Q.to_string(),
            p: None,
            summary: format!("{} prenilpotence {}", dims_summary(&r), r.prenilpotence_index.map_or("-".into(), |i| i.to_string())),
            verified: r.verified(),
        });
    }
    Ok(render_zoo(&rows))
}

fn zoo_list() -> Rendered {
    let rows: Vec<Vec<String>> = zoo()
        .iter()
        .map(|g| vec![g.name.clone(), format!("{:?}", g.module), g.tame.map_or("-".into(), |t| t.to_string())])
        .collect();
    let names: Vec<&str> = ZOO_NAMES.to_vec();
    #[derive(serde::Serialize)]
    struct Row<'a> {
        name: &'a str,
        tame: Option<bool>,
    }
    let zs = zoo();
    let csv_rows: Vec<Row> = zs.iter().map(|g| Row { name: &g.name, tame: g.tame }).collect();
    Rendered {
        json: serde_json::json!({ "groups": names }),
        table: mgc::report::table(&["name", "module", "tame"], &rows),
        csv: mgc::report::csv_string(&csv_rows),
        ok: true,
    }
}

fn run(cli: &Cli) -> Result<Rendered, CliError> {
    match &cli.command {
        Command::Tame { spec } => {
            let g = resolve_group(spec)?;
            Ok(render_tame(&g.name, &tame_check(&g.module)?))
        }
        Command::Truncate { spec, flavor, depth, p, precision } => {
            let g = resolve_group(spec)?;
            if *depth == 0 {
                return Err(CliError::Usage("depth must be at least 1".into()));
            }
            let f = match flavor {
                FlavorArg::I => Flavor::I,
                FlavorArg::Ip => Flavor::Ip(need_p(*p, "flavor Ip")?),
                FlavorArg::Mixed => Flavor::Mixed(need_p(*p, "flavor mixed")?, *precision),
            };
            Ok(render_truncation(&g.name, &f.to_string(), &truncate(&g.module, f, *depth)))
        }
        Command::Homology { spec, p, nmax } => homology(spec, prime(*p)?, *nmax),
        Command::Complete { spec, p } => complete(spec, prime(*p)?),
        Command::VerifyEpi { spec, ring, p, nmax } => {
            let g = resolve_group(spec)?;
            let r = match ring {
                RingArg::Q => rational_verify(&g, *nmax)?,
                _ => verify_epimorphism(&g, (*ring).into(), need_p(*p, "R = Z or Zp")?, *nmax)?,
            };
            Ok(render_epi(&r))
        }
        Command::Dwyer { spec, p, imax, ring } => {
            let g = resolve_group(spec)?;
            Ok(render_dwyer(&dwyer_filtration(&g, prime(*p)?, (*ring).into(), *imax)?))
        }
        Command::SpecseqFuzz { seeds, size, p, seed } => {
            let s = fuzz_second_page(*seed, *seeds, *size, prime(*p)?);
            Ok(render_fuzz(*seed, *size, *p, &s))
        }
        Command::Zoo { all } => {
            if *all {
                zoo_all()
            } else {
                Ok(zoo_list())
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("MGC_LOG")).init();
    let cli = Cli::parse();
    let format = if cli.json {
        Format::Json
    } else if cli.csv {
        Format::Csv
    } else {
        Format::Table
    };
    match run(&cli) {
        Ok(r) => {
            let mut text = r.text(format);
            if format == Format::Json {
                text.push('\n');
            }
            // a closed pipe (`| head`) is not an error
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if r.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("mgc: {e}");
            ExitCode::from(2)
        }
    }
}
