mod config;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{ConfigError, RunConfig};
use whitney_core::cube_tree::build_cube_tree;
use whitney_core::domain_partition::{domain_overlap, partition_domain, DomainPartition};
use whitney_core::exponents::{theta_report, ExponentReport, Lp, Rat};
use whitney_core::measure::ProductMeasure;
use whitney_core::spline::{
    approximate, mixed_norm, rate_experiment, Generator, NormSpec, SampledFunction,
};
use whitney_core::whitney::{verify_cover, whitney_cover, WhitneyCover};

/// Whitney covers, cube-trees, balanced partitions and spline approximation
/// rates on rasterized John domains.
#[derive(Parser)]
#[command(name = "whitney", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Whitney cover of the domain with an invariant report
    Decompose(ConfigArg),
    /// Cube-tree over the cover with its consistency certificate
    Tree(ConfigArg),
    /// Balanced domain partitions across the m-ladder
    Partition(ConfigArg),
    /// Single spline approximation at the first partition size
    Approx(ConfigArg),
    /// Error-vs-n rate experiment with CSV and manifest outputs
    Rates(ConfigArg),
    /// Width exponent report in exact rational arithmetic
    Exponent {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        d: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<bool, ConfigError> {
        match &cli.command {
            Command::Decompose(a) => cmd_decompose(&RunConfig::load(&a.config)?),
            Command::Tree(a) => cmd_tree(&RunConfig::load(&a.config)?),
            Command::Partition(a) => cmd_partition(&RunConfig::load(&a.config)?),
            Command::Approx(a) => cmd_approx(&RunConfig::load(&a.config)?),
            Command::Rates(a) => cmd_rates(&RunConfig::load(&a.config)?),
            Command::Exponent { p, q, r, d } => cmd_exponent(p, q, *r, *d),
        }
    };
    match run() {
        Ok(true) => ExitCode::from(0),
        Ok(false) => {
            eprintln!("invariant violation detected");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_out(cfg: &RunConfig, name: &str, data: &str) -> Result<(), ConfigError> {
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", cfg.out_dir.display())))?;
    let path = cfg.out_dir.join(name);
    fs::write(&path, data).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cover_of(cfg: &RunConfig) -> Result<(whitney_core::dyadic::GridMask, WhitneyCover), ConfigError> {
    let mask = cfg.mask()?;
    let cover =
        whitney_cover(&mask).map_err(|e| ConfigError::Invalid(format!("cover: {e:?}")))?;
    Ok((mask, cover))
}

fn cover_json(cover: &WhitneyCover, stats_pass: bool, stats: &serde_json::Value) -> String {
    let cubes: Vec<_> = cover
        .cubes
        .iter()
        .zip(&cover.dist_sq)
        .map(|(c, &d2)| json!({"level": c.level, "index": c.index, "dist_sq": d2}))
        .collect();
    serde_json::to_string_pretty(&json!({
        "grid_level": cover.grid_level,
        "dim": cover.dim,
        "cube_count": cover.cubes.len(),
        "inside_cells": cover.inside_cells,
        "residual_cells": cover.residual_cells,
        "invariants_pass": stats_pass,
        "stats": stats,
        "cubes": cubes,
    }))
    .unwrap()
}

fn cmd_decompose(cfg: &RunConfig) -> Result<bool, ConfigError> {
    let (mask, cover) = cover_of(cfg)?;
    let stats = verify_cover(&cover, &mask);
    let pass = stats.min_ratio >= 1.0 && stats.max_ratio <= 4.0 && stats.max_touching <= 144;
    let stats_json = json!({
        "min_dist_diam_ratio": stats.min_ratio,
        "max_dist_diam_ratio": stats.max_ratio,
        "max_touching": stats.max_touching,
        "covered_measure": stats.covered_measure,
        "residual_measure": stats.residual_measure,
    });
    write_out(cfg, "cover.json", &cover_json(&cover, pass, &stats_json))?;
    if mask.dim == 2 {
        write_out(cfg, "cover.svg", &svg::cover_svg(&cover))?;
    }
    println!(
        "cover: {} cubes, dist/diam in [{:.3}, {:.3}], max touching {}, residual cells {} -> {}",
        cover.cubes.len(),
        stats.min_ratio,
        stats.max_ratio,
        stats.max_touching,
        cover.residual_cells,
        if pass { "pass" } else { "FAIL" }
    );
    Ok(pass)
}

fn cmd_tree(cfg: &RunConfig) -> Result<bool, ConfigError> {
    let (_, cover) = cover_of(cfg)?;
    let (ct, cert) = build_cube_tree(&cover)
        .map_err(|e| ConfigError::Invalid(format!("cube tree: {e:?}")))?;
    let john = whitney_core::cube_tree::estimate_john_constant(&cover, &ct);
    let vertices: Vec<_> = cover
        .cubes
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let p = ct.tree.parent[id];
            json!({
                "id": id,
                "parent": if p == u32::MAX { None } else { Some(p) },
                "level": c.level,
                "index": c.index,
            })
        })
        .collect();
    let out = serde_json::to_string_pretty(&json!({
        "root": ct.tree.root,
        "certificate": {"l_star": cert.l_star, "k_star": cert.k_star,
                         "witness": [cert.witness.0, cert.witness.1]},
        "john_constant": john,
        "vertices": vertices,
    }))
    .unwrap();
    write_out(cfg, "tree.json", &out)?;
    println!(
        "tree: {} vertices, certificate l*={} k*={}, John constant {:.3}",
        cover.cubes.len(),
        cert.l_star,
        cert.k_star,
        john
    );
    Ok(true)
}

fn pipeline(
    cfg: &RunConfig,
) -> Result<
    (
        whitney_core::dyadic::GridMask,
        WhitneyCover,
        whitney_core::cube_tree::CubeTree,
        whitney_core::cube_tree::ConsistencyCertificate,
        ProductMeasure,
    ),
    ConfigError,
> {
    let (mask, cover) = cover_of(cfg)?;
    let (ct, cert) = build_cube_tree(&cover)
        .map_err(|e| ConfigError::Invalid(format!("cube tree: {e:?}")))?;
    let wp = cfg.weight_pair(&mask)?;
    let pm = wp
        .build_phi(&mask)
        .map_err(|e| ConfigError::Invalid(format!("measure: {e:?}")))?;
    Ok((mask, cover, ct, cert, pm))
}

fn partition_json(dp: &DomainPartition) -> serde_json::Value {
    let cells: Vec<_> = dp
        .cells
        .iter()
        .map(|c| {
            let pieces: Vec<_> = c
                .pieces
                .iter()
                .map(|p| {
                    json!({
                        "outer": {"level": p.outer().level, "index": p.outer().index},
                        "hole": p.inner().map(|h| json!({"level": h.level, "index": h.index})),
                    })
                })
                .collect();
            json!({"phi": c.phi, "vertices": c.vertices, "pieces": pieces})
        })
        .collect();
    json!({
        "n": dp.n,
        "m": dp.m,
        "k": dp.k,
        "phi_total": dp.phi_total,
        "cell_budget": dp.cell_budget(),
        "heavy_parts": dp.heavy_parts,
        "budgets": dp.budgets,
        "cells": cells,
    })
}

fn cmd_partition(cfg: &RunConfig) -> Result<bool, ConfigError> {
    let (mask, cover, ct, _, pm) = pipeline(cfg)?;
    let n = cfg.n_list[0];
    let mut prev: Option<DomainPartition> = None;
    let mut pass = true;
    for m in 0..=cfg.m {
        let dp = partition_domain(&cover, &ct, &pm, n, m)
            .map_err(|e| ConfigError::Invalid(format!("partition m={m}: {e:?}")))?;
        let budget = dp.cell_budget() * (1.0 + 1e-9);
        if dp.cells.iter().any(|c| c.phi > budget) {
            pass = false;
        }
        let out = serde_json::to_string_pretty(&partition_json(&dp)).unwrap();
        write_out(cfg, &format!("cells_m{m}.json"), &out)?;
        if mask.dim == 2 {
            write_out(cfg, &format!("cells_m{m}.svg"), &svg::partition_svg(&dp.cells))?;
        }
        let overlap = match &prev {
            Some(p) => Some(
                domain_overlap(p, &dp, mask.level)
                    .map_err(|e| ConfigError::Invalid(format!("overlap: {e:?}")))?,
            ),
            None => None,
        };
        println!(
            "partition n={n} m={m}: {} cells, budget {:.6}, overlap with m-1: {}",
            dp.cells.len(),
            dp.cell_budget(),
            overlap.map_or("-".into(), |o| o.to_string())
        );
        prev = Some(dp);
    }
    Ok(pass)
}

fn cmd_approx(cfg: &RunConfig) -> Result<bool, ConfigError> {
    let (mask, cover, ct, _, pm) = pipeline(cfg)?;
    let wp = cfg.weight_pair(&mask)?;
    let spec = NormSpec::new(&wp, &mask)
        .map_err(|e| ConfigError::Invalid(format!("norms: {e:?}")))?;
    let n = cfg.n_list[0];
    let dp = partition_domain(&cover, &ct, &pm, n, cfg.m)
        .map_err(|e| ConfigError::Invalid(format!("partition: {e:?}")))?;
    let f = SampledFunction::from_generator(&Generator::SinProduct, mask.level, mask.dim);
    let spline = approximate(&f, &dp.cells, &spec)
        .map_err(|e| ConfigError::Invalid(format!("projection: {e:?}")))?;
    let residual = spline.residual_grid(&f);
    let idx_sets: Vec<Vec<usize>> =
        spline.cells.iter().map(|c| c.grid_cells.clone()).collect();
    let err = mixed_norm(&residual, &idx_sets, &spec);
    let cells: Vec<_> = spline
        .cells
        .iter()
        .map(|c| {
            json!({
                "grid_cells": c.grid_cells.len(),
                "degree": c.degree,
                "reduced": c.reduced,
                "center": c.center,
                "scale": c.scale,
            })
        })
        .collect();
    let out = serde_json::to_string_pretty(&json!({
        "n": n,
        "m": cfg.m,
        "cell_count": spline.cells.len(),
        "mixed_norm_error": err,
        "cells": cells,
    }))
    .unwrap();
    write_out(cfg, "approx.json", &out)?;
    println!(
        "approx n={n}: {} cells, mixed-norm error {err:.6e}",
        spline.cells.len()
    );
    Ok(true)
}

fn cmd_rates(cfg: &RunConfig) -> Result<bool, ConfigError> {
    let (mask, cover, ct, cert, pm) = pipeline(cfg)?;
    let wp = cfg.weight_pair(&mask)?;
    let table = rate_experiment(&Generator::SinProduct, &mask, &wp, &cfg.n_list, cfg.m)
        .map_err(|e| ConfigError::Invalid(format!("rate experiment: {e:?}")))?;
    if table.slope.is_none() {
        eprintln!("warning: fewer than two data points; slope omitted");
    }
    let mut csv = String::from("n,cells,error,theory_exponent,fitted_slope\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{:e},{},{}\n",
            row.n,
            row.cells,
            row.error,
            table.theory,
            table.slope.map_or(String::new(), |s| format!("{s}")),
        ));
    }
    write_out(cfg, "rates.csv", &csv)?;
    // measured constants: spanning certificate, cover stats, John constant,
    // partition overlap across one ladder step at the smallest n
    let stats = verify_cover(&cover, &mask);
    let n0 = *cfg.n_list.iter().min().unwrap();
    let p0 = partition_domain(&cover, &ct, &pm, n0, 0)
        .map_err(|e| ConfigError::Invalid(format!("partition: {e:?}")))?;
    let p1 = partition_domain(&cover, &ct, &pm, n0, 1)
        .map_err(|e| ConfigError::Invalid(format!("partition: {e:?}")))?;
    let overlap01 = domain_overlap(&p0, &p1, mask.level)
        .map_err(|e| ConfigError::Invalid(format!("overlap: {e:?}")))?;
    let manifest = serde_json::to_string_pretty(&json!({
        "level": cfg.level,
        "p": wp.p, "q": wp.q, "r": wp.r, "dim": mask.dim,
        "n_list": cfg.n_list,
        "m": cfg.m,
        "seed": cfg.seed,
        "theory_exponent": table.theory,
        "fitted_slope": table.slope,
        "truncated": table.truncated,
        "degree_reduced": table.degree_reduced,
        "constants": {
            "k_star": cert.k_star,
            "l_star": cert.l_star,
            "john_constant": whitney_core::cube_tree::estimate_john_constant(&cover, &ct),
            "max_touching": stats.max_touching,
            "max_dist_diam_ratio": stats.max_ratio,
            "tree_k": p0.k,
            "domain_overlap_m0_m1": overlap01,
        },
    }))
    .unwrap();
    write_out(cfg, "manifest.json", &manifest)?;
    match table.slope {
        Some(s) => println!(
            "rates: fitted slope {s:.4}, theory exponent {:.4}",
            table.theory
        ),
        None => println!("rates: single row, no slope"),
    }
    Ok(true)
}

fn parse_lp(s: &str) -> Result<Lp, ConfigError> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") || s == "∞" {
        return Ok(Lp::Infinity);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (
            a.parse::<i128>().map_err(|_| bad_lp(s))?,
            b.parse::<i128>().map_err(|_| bad_lp(s))?,
        ),
        None => (s.parse::<i128>().map_err(|_| bad_lp(s))?, 1),
    };
    let lp = Lp::finite(num, den);
    if !lp.valid() {
        return Err(ConfigError::Invalid(format!(
            "exponent {s} must lie in [1, inf]"
        )));
    }
    Ok(lp)
}

fn bad_lp(s: &str) -> ConfigError {
    ConfigError::Invalid(format!("cannot parse exponent {s:?}; use n, n/m or inf"))
}

fn rat_json(r: Option<Rat>) -> serde_json::Value {
    match r {
        Some(r) => json!({"exact": r.to_string(), "value": r.to_f64()}),
        None => serde_json::Value::Null,
    }
}

fn cmd_exponent(p: &str, q: &str, r: u32, d: u32) -> Result<bool, ConfigError> {
    if r == 0 || d == 0 {
        return Err(ConfigError::Invalid(
            "r and d must be positive integers".into(),
        ));
    }
    let rep: ExponentReport = theta_report(parse_lp(p)?, parse_lp(q)?, r, d);
    let show = |lp: Lp| match lp {
        Lp::Infinity => "inf".to_string(),
        Lp::Finite(x) => x.to_string(),
    };
    let out = serde_json::to_string_pretty(&json!({
        "p": show(rep.p), "q": show(rep.q), "r": rep.r, "d": rep.d,
        "eta": rat_json(rep.eta),
        "kappa": rat_json(rep.kappa),
        "theta": rat_json(rep.theta),
        "case": rep.case.label(),
        "theta_tilde": rat_json(rep.theta_tilde),
        "tilde_case": rep.tilde_case.label(),
        "dual_swapped": rep.dual_swapped,
        "flags": {
            "kappa_positive": rep.kappa_positive,
            "off_p_boundary": rep.off_p_boundary,
            "off_eta_boundary": rep.off_eta_boundary,
            "off_dual_boundary": rep.off_dual_boundary,
        },
    }))
    .unwrap();
    println!("{out}");
    Ok(true)
}
