use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flatdiff::hodge::{self, OneForm};
use flatdiff::mesh::MeshExport;
use flatdiff::pairing::{self, PairingOptions};
use flatdiff::suites::{self, Status, Suite, VerifyConfig, VerifyReport};
use flatdiff::{catalog, Error, FlatSurface, Mesh};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

mod forms;

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "flatdiff", version, about = "Flat surfaces, Hodge norms and the Teichmüller pairing")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Target edge length of the mesh.
    #[arg(long, global = true, default_value_t = 0.1)]
    h: f64,
    /// Contour radius as a fraction of half the systole.
    #[arg(long, global = true, default_value_t = 0.4)]
    radius_factor: f64,
    /// Explicit contour radius for every zero (overrides --radius-factor).
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Samples per full turn for the residue contour.
    #[arg(long, global = true, default_value_t = 512)]
    contour_samples: usize,
    /// Principal-value cutoff (defaults to half the contour radius).
    #[arg(long, global = true)]
    eps0: Option<f64>,
    /// Optimizer restarts for the Teichmüller norm estimate.
    #[arg(long, global = true, default_value_t = 32)]
    restarts: usize,
    /// Optimizer tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Trials per property suite (defaults to each suite's own count).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    /// Closed pairing on translation surfaces, half-translation pairing on covers.
    Auto,
    Closed,
    Harmonic,
    Principal,
    HalfTranslation,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a surface description and print its invariants.
    Validate { surface: String },
    /// Pair a closed one-form with a quadratic differential.
    Pair {
        surface: String,
        /// harmonic-basis:i | conj-holomorphic:i | constant:a,b | periods:p1,…[;r1,…]
        #[arg(long)]
        eta: String,
        /// omega-squared | constant:c | coeffs:c00,c01;c10,c11
        #[arg(long, default_value = "omega-squared")]
        q: String,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Run property suites: stokes, residue-decay, hodge-teich, mean-value, int-beta, kernel or all.
    Verify { surface: String, suite: String },
    /// Write the triangulation (of the double cover for half-translation surfaces).
    ExportMesh { surface: String },
    /// Basis exports.
    Basis {
        #[command(subcommand)]
        command: BasisCommand,
    },
}

#[derive(Subcommand, Debug)]
enum BasisCommand {
    /// Harmonic and holomorphic bases with their periods.
    Export {
        surface: String,
        #[arg(long, value_enum, default_value_t = BasisKind::Harmonic)]
        kind: BasisKind,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BasisKind {
    Harmonic,
    Holomorphic,
}

/// Exit status: 0 success, 1 a check failed, 2 bad input, 3 numerical failure.
enum Outcome {
    Ok,
    Violations,
}

fn load_surface(arg: &str) -> Result<FlatSurface> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return catalog::by_name(name).with_context(|| format!("no bundled surface '{name}' (have {})", catalog::NAMES.join(", ")));
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("cannot read {arg}"))?;
    FlatSurface::from_json(&text).with_context(|| format!("invalid surface {arg}"))
}

/// The translation mesh to work on: the surface itself or its double cover.
fn working_mesh(s: &FlatSurface, h: f64) -> Result<Mesh> {
    if s.is_translation() {
        Ok(Mesh::triangulate(s, h)?)
    } else {
        Ok(Mesh::triangulate_cover(&flatdiff::DoubleCover::new(s)?, h)?)
    }
}

fn emit(cfg: &RunConfig, command: &str, body: impl Serialize, csv: impl FnOnce() -> String) -> Result<()> {
    let text = match cfg.format {
        Format::Json => {
            let mut v = serde_json::to_value(body)?;
            let obj = match &mut v {
                Value::Object(m) => std::mem::take(m),
                other => {
                    let mut m = serde_json::Map::new();
                    m.insert("result".into(), other.take());
                    m
                }
            };
            let mut out = serde_json::Map::new();
            out.insert("schema".into(), json!(SCHEMA));
            out.insert("command".into(), json!(command));
            out.extend(obj);
            serde_json::to_string_pretty(&Value::Object(out))? + "\n"
        }
        Format::Csv => csv(),
    };
    match &cfg.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn validate(cfg: &RunConfig, arg: &str) -> Result<Outcome> {
    let s = load_surface(arg)?;
    let kind = if s.is_translation() { "translation" } else { "half-translation" };
    let summary = format!("genus {}, {}, {}, area {:.4}", s.genus(), kind, s.stratum(), s.area());
    eprintln!("{summary}");
    let cones: Vec<Value> = s
        .cone_points()
        .iter()
        .map(|c| json!({"id": c.id, "angle": c.total_angle, "angle_over_pi": c.total_angle / std::f64::consts::PI, "order": c.order, "marked": c.marked, "sigma": c.in_sigma()}))
        .collect();
    let body = json!({
        "summary": summary,
        "genus": s.genus(),
        "translation": s.is_translation(),
        "stratum": s.stratum(),
        "area": s.area(),
        "polygons": s.num_polygons(),
        "cone_points": cones,
    });
    emit(cfg, "validate", &body, || {
        let mut t = String::from("id,angle,order,marked,sigma\n");
        for c in s.cone_points() {
            let _ = writeln!(t, "{},{},{},{},{}", c.id, c.total_angle, c.order, c.marked, c.in_sigma());
        }
        t
    })?;
    Ok(Outcome::Ok)
}

fn pair(cfg: &RunConfig, arg: &str, eta_spec: &str, q_spec: &str, method: Method) -> Result<Outcome> {
    let s = load_surface(arg)?;
    let mesh = working_mesh(&s, cfg.h)?;
    let bump = if mesh.sigma_vertices().is_empty() { 0.0 } else { 0.45 * flatdiff::norms::systole(&mesh.surface)? };
    let eta = forms::eta(eta_spec, &mesh, bump)?;
    let q = forms::qd(q_spec, &mesh)?;
    let zs = pairing::zeros(&mesh);
    let opts = PairingOptions {
        radii: cfg.radius.map(|r| vec![r; zs.len()]),
        radius_factor: cfg.radius_factor,
        contour_samples: cfg.contour_samples,
        eps0: cfg.eps0,
        ..PairingOptions::default()
    };
    let method = match method {
        Method::Auto if s.is_translation() => Method::Closed,
        Method::Auto => Method::HalfTranslation,
        m => m,
    };
    let result = match method {
        Method::Closed => pairing::pairing_closed(&mesh, &eta, &q, &opts)?,
        Method::Harmonic => pairing::pairing_harmonic(&mesh, &eta, &q, &opts)?,
        Method::HalfTranslation => pairing::pairing_halftranslation(&mesh, &eta, &q, &opts)?,
        Method::Principal => {
            let cover = flatdiff::DoubleCover::new(&s)?;
            let value = pairing::pairing_principal(&cover, &mesh, &eta, &q)?;
            flatdiff::PairingResult { value, bulk_term: value, contour_terms: vec![], radius_used: vec![], error_estimate: 0.0, cone_points: vec![] }
        }
        Method::Auto => unreachable!(),
    };
    let method_name = format!("{method:?}").to_lowercase();
    let body = json!({"surface": arg, "eta": eta_spec, "q": q_spec, "method": method_name, "h": cfg.h, "result": result});
    emit(cfg, "pair", &body, || {
        format!(
            "value_re,value_im,bulk_re,bulk_im,error_estimate\n{},{},{},{},{}\n",
            result.value.re, result.value.im, result.bulk_term.re, result.bulk_term.im, result.error_estimate
        )
    })?;
    Ok(Outcome::Ok)
}

fn verify_csv(rep: &VerifyReport) -> String {
    let mut t = String::from("suite,status,check,pass,value,bound\n");
    for s in &rep.suites {
        let status = format!("{:?}", s.status).to_lowercase();
        if s.checks.is_empty() {
            let _ = writeln!(t, "{},{},,,,", s.suite, status);
        }
        for c in &s.checks {
            let _ = writeln!(t, "{},{},{},{},{:e},{:e}", s.suite, status, c.name, c.pass, c.value, c.bound);
        }
    }
    t
}

fn verify(cfg: &RunConfig, arg: &str, suite: &str) -> Result<Outcome> {
    let list = Suite::parse_list(suite)?;
    let s = load_surface(arg)?;
    let vc = VerifyConfig {
        h: cfg.h,
        radius_factor: cfg.radius_factor,
        contour_samples: cfg.contour_samples,
        eps0: cfg.eps0,
        restarts: cfg.restarts,
        tol: cfg.tol,
        seed: cfg.seed,
        trials: cfg.trials,
    };
    let rep = suites::verify(arg, &s, &list, &vc)?;
    for r in &rep.suites {
        let tag = match r.status {
            Status::Pass => "pass".to_string(),
            Status::Fail => format!("FAIL ({} of {} checks)", r.violations(), r.checks.len()),
            Status::Skipped => format!("skipped: {}", r.reason.as_deref().unwrap_or("")),
        };
        eprintln!("{:<14} {tag}", r.suite.name());
    }
    emit(cfg, "verify", &rep, || verify_csv(&rep))?;
    Ok(if rep.pass { Outcome::Ok } else { Outcome::Violations })
}

fn export_mesh(cfg: &RunConfig, arg: &str) -> Result<Outcome> {
    let s = load_surface(arg)?;
    let mesh = working_mesh(&s, cfg.h)?;
    let ex: MeshExport = mesh.export();
    emit(cfg, "export-mesh", &ex, || {
        let mut t = String::from("face,v0,v1,v2,x0,y0,x1,y1,x2,y2,polygon\n");
        for (f, (vs, p)) in ex.faces.iter().zip(&ex.positions).enumerate() {
            let _ = writeln!(
                t,
                "{f},{},{},{},{},{},{},{},{},{},{}",
                vs[0], vs[1], vs[2], p[0][0], p[0][1], p[1][0], p[1][1], p[2][0], p[2][1], ex.face_polygon[f]
            );
        }
        t
    })?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct BasisExport {
    kind: &'static str,
    on_cover: bool,
    num_edges: usize,
    /// `periods[j][k]` is the integral of form k over cycle j.
    periods: Vec<Vec<[f64; 2]>>,
    forms: Vec<OneForm>,
}

fn basis_export(cfg: &RunConfig, arg: &str, kind: BasisKind) -> Result<Outcome> {
    let s = load_surface(arg)?;
    let mesh = working_mesh(&s, cfg.h)?;
    let on_cover = mesh.involution.is_some();
    let forms = match (kind, on_cover) {
        (BasisKind::Harmonic, false) => hodge::harmonic_basis(&mesh)?.forms,
        (BasisKind::Harmonic, true) => hodge::anti_invariant_basis(&mesh)?.harmonic,
        (BasisKind::Holomorphic, false) => hodge::holomorphic_basis(&mesh)?.closed,
        (BasisKind::Holomorphic, true) => hodge::anti_invariant_basis(&mesh)?.holomorphic_closed,
    };
    let hom = mesh.homology();
    let periods = hom.cycles.iter().map(|c| forms.iter().map(|f| f.integrate(c)).map(|z| [z.re, z.im]).collect()).collect();
    let body = BasisExport {
        kind: if kind == BasisKind::Harmonic { "harmonic" } else { "holomorphic" },
        on_cover,
        num_edges: mesh.fine.num_edges(),
        periods,
        forms,
    };
    emit(cfg, "basis-export", &body, || {
        let mut t = String::from("form,edge,re,im\n");
        for (k, f) in body.forms.iter().enumerate() {
            for (e, v) in f.edge_values.iter().enumerate() {
                let _ = writeln!(t, "{k},{e},{},{}", v.re, v.im);
            }
        }
        t
    })?;
    Ok(Outcome::Ok)
}

fn check_config(cfg: &RunConfig) -> Result<()> {
    let positive = [("--h", cfg.h), ("--radius-factor", cfg.radius_factor), ("--tol", cfg.tol)];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            bail!("{name} must be positive, got {v}");
        }
    }
    if cfg.contour_samples == 0 || cfg.restarts == 0 {
        bail!("--contour-samples and --restarts must be positive");
    }
    if let Some(e) = cfg.eps0.filter(|e| !(*e > 0.0)) {
        bail!("--eps0 must be positive, got {e}");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = &cli.run;
    check_config(cfg)?;
    match &cli.command {
        Command::Validate { surface } => validate(cfg, surface),
        Command::Pair { surface, eta, q, method } => pair(cfg, surface, eta, q, *method),
        Command::Verify { surface, suite } => verify(cfg, surface, suite),
        Command::ExportMesh { surface } => export_mesh(cfg, surface),
        Command::Basis { command: BasisCommand::Export { surface, kind } } => basis_export(cfg, surface, *kind),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::SolverFailure(_) | Error::RankDeficient { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
