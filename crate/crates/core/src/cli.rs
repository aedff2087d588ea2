//! Command-line driver.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bvp::{self, Potential};
use crate::complex::{to_document, BoundarySpec, CellComplex};
use crate::decomp::{self, Decomposition, GluingReport};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::morse::{self, IndexReport, TiePolicy};
use crate::svg;
use crate::tiler::{self, Doubling, SurfaceNet};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "harmtile",
    version,
    about = "Harmonic rectangle tilings of planar cell complexes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Solve the mixed boundary value problem.
    Solve(Flags),
    /// Sign-change indices and the boundary index identity.
    Index(Flags),
    /// Slice along singular levels and classify the pieces.
    Decompose(Flags),
    /// Tile every piece and assemble the surface.
    Tile(Flags),
    /// Run the pipeline and evaluate every identity.
    Verify(Flags),
    /// Write a fixture document; `--input` names the fixture.
    Gen(Flags),
}

impl Command {
    fn split(&self) -> (&'static str, &Flags) {
        match self {
            Command::Solve(f) => ("solve", f),
            Command::Index(f) => ("index", f),
            Command::Decompose(f) => ("decompose", f),
            Command::Tile(f) => ("tile", f),
            Command::Verify(f) => ("verify", f),
            Command::Gen(f) => ("gen", f),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// Mesh document, or a fixture name such as FIX-ANN or RANDOM:7:pants.
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Break equal neighbour values by vertex id.
    #[arg(long)]
    pub tie_perturb: bool,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_rel: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol_solve: f64,
    #[arg(long, default_value_t = 1000)]
    pub raster: usize,
    #[arg(long, default_value_t = 480.0)]
    pub svg_scale: f64,
}

/// Everything a command needs, echoed into each report.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    pub command: String,
    pub input: String,
    pub out: PathBuf,
    pub solve_residual: f64,
    pub equality_rel: f64,
    pub tie_policy: TiePolicy,
    pub raster: usize,
    pub svg_scale: f64,
}

impl RunConfig {
    pub fn new(command: &str, flags: &Flags) -> Result<Self> {
        if !(flags.tol_rel > 0.0 && flags.tol_solve > 0.0) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if flags.raster < 64 {
            return Err(Error::Validation(
                "raster resolution must be at least 64".into(),
            ));
        }
        Ok(RunConfig {
            command: command.into(),
            input: flags.input.clone(),
            out: flags.out.clone(),
            solve_residual: flags.tol_solve,
            equality_rel: flags.tol_rel,
            tie_policy: if flags.tie_perturb {
                TiePolicy::Perturb
            } else {
                TiePolicy::Strict
            },
            raster: flags.raster,
            svg_scale: flags.svg_scale,
        })
    }

    fn policy(&self) -> TiePolicy {
        self.tie_policy
    }
}

/// Reads a document from disk, or builds a named fixture when no such file exists.
pub fn load_input(input: &str) -> Result<(CellComplex, BoundarySpec)> {
    let path = Path::new(input);
    if path.exists() {
        crate::complex::load_complex(&fs::read_to_string(path)?)
    } else {
        fixtures::by_name(input)
    }
}

struct Stages {
    cx: CellComplex,
    spec: BoundarySpec,
    g: Potential,
}

impl Stages {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let (cx, spec) = load_input(&cfg.input)?;
        info!(
            "loaded {} vertices, {} edges, {} cells",
            cx.vertex_count(),
            cx.edge_count(),
            cx.cell_count()
        );
        let g = bvp::solve_dnbvp_with(&cx, &spec, cfg.solve_residual)?;
        info!("solved, relative residual {:e}", g.residual_norm());
        Ok(Stages { cx, spec, g })
    }

    fn index(&self, cfg: &RunConfig) -> Result<IndexReport> {
        morse::index_formula_check(&self.cx, &self.spec, self.g.values(), cfg.policy())
    }

    fn decompose(&self, report: &IndexReport) -> Result<Decomposition> {
        decomp::decompose(&self.cx, &self.spec, self.g.values(), report)
    }

    fn energy(&self) -> f64 {
        bvp::dirichlet_energy(self.cx.network(), self.g.values())
    }
}

fn envelope(cfg: &RunConfig, body: Value) -> Value {
    json!({ "version": VERSION, "config": cfg, "result": body })
}

fn write_json(cfg: &RunConfig, name: &str, body: Value) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    let text = serde_json::to_string_pretty(&envelope(cfg, body)).expect("serialisable report");
    fs::write(&path, text + "\n")?;
    Ok(path)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Value> {
    let st = Stages::load(cfg)?;
    let flux = bvp::flux_report(&st.cx, &st.spec, st.g.values())?;
    let scale = flux.per_vertex.iter().map(|f| f.flux.abs()).sum::<f64>();
    let values: Vec<Value> = (0..st.cx.vertex_count())
        .map(|v| json!({ "id": st.cx.label(v), "g": st.g.value(v) }))
        .collect();
    Ok(json!({
        "values": values,
        "k": st.spec.k(),
        "energy": st.energy(),
        "residual": st.g.residual_norm(),
        "alphaFlux": bvp::alpha_flux(&st.cx, &st.spec, st.g.values())?,
        "arcFluxes": flux.arc_totals,
        "consistencyTotal": flux.total,
        "fluxScale": scale,
    }))
}

pub fn cmd_index(cfg: &RunConfig) -> Result<Value> {
    let st = Stages::load(cfg)?;
    let report = st.index(cfg)?;
    Ok(serde_json::to_value(report).expect("serialisable"))
}

fn decomposition_summary(d: &Decomposition, gluing: &GluingReport) -> Value {
    let comps: Vec<Value> = d
        .components
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "band": c.band,
                "low": c.low,
                "high": c.high,
                "kind": c.kind,
                "cells": c.faces.len(),
                "eulerCharacteristic": c.euler_characteristic,
                "arcEndpointCount": c.arc_endpoint_count,
                "identified": c.identified.iter().map(|(v, copies)| json!({"vertex": v, "copies": copies.len()})).collect::<Vec<_>>(),
                "boundaryCurves": c.runs.iter().map(|r| json!({"value": r.value, "closed": r.closed, "length": c.run_flux(d, r)})).collect::<Vec<_>>(),
                "energy": c.energy(d),
            })
        })
        .collect();
    json!({
        "levels": d.levels,
        "singularVertices": d.singular,
        "subdomains": d.subdomains,
        "components": comps,
        "gluing": gluing,
    })
}

pub fn cmd_decompose(cfg: &RunConfig) -> Result<Value> {
    let st = Stages::load(cfg)?;
    let report = st.index(cfg)?;
    let d = st.decompose(&report)?;
    let gluing = decomp::verify_gluing(&d, cfg.equality_rel)?;
    Ok(decomposition_summary(&d, &gluing))
}

/// SurfaceNet, doubling data and the per-component SVG documents.
pub struct TileOutput {
    pub net: SurfaceNet,
    pub doubling: Doubling,
    pub svgs: Vec<(String, String)>,
    pub energy: f64,
}

pub fn run_tiling(cfg: &RunConfig, raster: bool) -> Result<TileOutput> {
    let st = Stages::load(cfg)?;
    let report = st.index(cfg)?;
    let d = st.decompose(&report)?;
    let gluing = decomp::verify_gluing(&d, cfg.equality_rel)?;
    let tiles = d
        .components
        .iter()
        .map(|c| tiler::tile_component(&d, c, raster.then_some(cfg.raster)))
        .collect::<Result<Vec<_>>>()?;
    let net = tiler::assemble_surface(&d, tiles, gluing);
    let energy = st.energy();
    let doubling = tiler::doubling_report(&net, st.cx.loops().len(), energy);
    let svgs = net
        .components
        .iter()
        .map(|tc| {
            (
                format!("component-{}.svg", tc.component),
                svg::render_component(tc, &net.cones, st.spec.k(), cfg.svg_scale),
            )
        })
        .collect();
    Ok(TileOutput {
        net,
        doubling,
        svgs,
        energy,
    })
}

pub fn cmd_tile(cfg: &RunConfig) -> Result<Value> {
    let out = run_tiling(cfg, true)?;
    fs::create_dir_all(&cfg.out)?;
    for (name, text) in &out.svgs {
        fs::write(cfg.out.join(name), text)?;
    }
    let rel = (out.net.total_area - out.energy).abs() / out.energy.max(f64::MIN_POSITIVE);
    Ok(json!({
        "surface": out.net,
        "doubling": out.doubling,
        "areaEqualsEnergy": rel <= cfg.equality_rel,
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

/// Runs the whole pipeline and evaluates every identity it should satisfy.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Vec<Check>> {
    let st = Stages::load(cfg)?;
    let mut checks = Vec::new();
    let e = st.energy();
    let k = st.spec.k();
    let flux = bvp::flux_report(&st.cx, &st.spec, st.g.values())?;
    checks.push(check(
        "consistency",
        flux.total.abs() <= 1e-10 * e / k,
        format!("total boundary flux {:e}", flux.total),
    ));
    let report = st.index(cfg)?;
    checks.push(check(
        "index identity",
        report.total_index == report.expected,
        format!("{} = {}", report.total_index, report.expected),
    ));
    let out = run_tiling(cfg, true)?;
    let net = &out.net;
    let rel = (net.total_area - e).abs() / e;
    checks.push(check(
        "area = energy",
        rel <= cfg.equality_rel,
        format!("relative gap {rel:e}"),
    ));
    let worst_component = net
        .components
        .iter()
        .map(|c| (c.target.area() - c.energy).abs() / c.energy.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    checks.push(check(
        "component areas",
        worst_component <= cfg.equality_rel,
        format!("worst relative gap {worst_component:e}"),
    ));
    let cross = net
        .components
        .iter()
        .map(|c| c.cross_section_defect)
        .fold(0.0, f64::max);
    checks.push(check(
        "cross-sections",
        cross <= cfg.equality_rel,
        format!("worst {cross:e}"),
    ));
    let bnd: usize = net
        .components
        .iter()
        .map(|c| c.boundary_violations.len())
        .sum();
    checks.push(check(
        "boundary preservation",
        bnd == 0,
        format!("{bnd} tiles off their side"),
    ));
    let covered = net.components.iter().all(|c| {
        c.coverage
            .as_ref()
            .is_some_and(|r| r.gaps == 0 && r.overlaps == 0)
    });
    checks.push(check("coverage", covered, format!("raster {}", cfg.raster)));
    let seam = net
        .gluing
        .seams
        .iter()
        .map(|s| (s.length_a - s.length_b).abs() / s.length_a.max(s.length_b))
        .fold(0.0, f64::max);
    checks.push(check(
        "gluing",
        seam <= cfg.equality_rel,
        format!("{} seams, worst {seam:e}", net.gluing.seams.len()),
    ));
    checks.push(check(
        "gauss-bonnet",
        net.gauss_bonnet == 4 * net.euler_characteristic,
        format!(
            "{} quarter turns, chi {}",
            net.gauss_bonnet, net.euler_characteristic
        ),
    ));
    let m = st.cx.loops().len();
    checks.push(check(
        "doubling",
        out.doubling.genus + 1 == m && out.doubling.area == 2.0 * e,
        format!("genus {}, area {}", out.doubling.genus, out.doubling.area),
    ));
    Ok(checks)
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<PathBuf> {
    let (cx, spec) = fixtures::by_name(&cfg.input)?;
    fs::create_dir_all(&cfg.out)?;
    let name = cfg.input.replace(':', "-");
    let path = cfg.out.join(format!("{name}.json"));
    fs::write(&path, to_document(&cx, &spec).to_json() + "\n")?;
    Ok(path)
}

/// Parses arguments, runs one command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, flags) = cli.command.split();
    match execute(name, flags) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(name: &str, flags: &Flags) -> Result<()> {
    let cfg = RunConfig::new(name, flags)?;
    match name {
        "solve" => {
            let body = cmd_solve(&cfg)?;
            println!("energy {}", body["energy"]);
            println!("alpha flux {}", body["alphaFlux"]);
            println!("consistency {}", body["consistencyTotal"]);
            write_json(&cfg, "solution.json", body)?;
        }
        "index" => {
            let body = cmd_index(&cfg)?;
            println!("total {} expected {}", body["totalIndex"], body["expected"]);
            write_json(&cfg, "index.json", body)?;
        }
        "decompose" => {
            let body = cmd_decompose(&cfg)?;
            for c in body["components"].as_array().into_iter().flatten() {
                println!("component {} {}", c["id"], c["kind"]);
            }
            write_json(&cfg, "decomposition.json", body)?;
        }
        "tile" => {
            let body = cmd_tile(&cfg)?;
            let comps = body["surface"]["components"].as_array().map_or(0, Vec::len);
            println!("{comps} components");
            println!(
                "area=energy: {}",
                if body["areaEqualsEnergy"] == true {
                    "pass"
                } else {
                    "fail"
                }
            );
            write_json(&cfg, "surface.json", body)?;
        }
        "verify" => {
            let checks = cmd_verify(&cfg)?;
            for c in &checks {
                println!(
                    "{}: {} ({})",
                    c.name,
                    if c.pass { "pass" } else { "fail" },
                    c.detail
                );
            }
            let failed = checks.iter().any(|c| !c.pass);
            write_json(
                &cfg,
                "verify.json",
                serde_json::to_value(&checks).expect("serialisable"),
            )?;
            if failed {
                let names = checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name.clone())
                    .collect();
                return Err(Error::VerificationFailed(names));
            }
        }
        "gen" => {
            let path = cmd_gen(&cfg)?;
            println!("{}", path.display());
        }
        _ => unreachable!("subcommand names are matched in run"),
    }
    Ok(())
}
