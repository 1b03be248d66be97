//! Property suites run by `flatdiff verify`.
//!
//! Every suite draws its randomness from its own ChaCha stream of the master seed, so
//! a suite produces the same numbers whether it runs alone or as part of `all`.

use crate::error::{Error, Result};
use crate::geom::loglog_slope;
use crate::hodge::{anti_invariant_basis, harmonic_basis, holomorphic_basis, hodge_norm, OneForm};
use crate::mesh::Mesh;
use crate::norms::{self, TeichOptions};
use crate::pairing::{self, PairingOptions};
use crate::surface::{DoubleCover, FlatSurface};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Stokes,
    ResidueDecay,
    HodgeTeich,
    MeanValue,
    IntBeta,
    Kernel,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Stokes, Suite::ResidueDecay, Suite::HodgeTeich, Suite::MeanValue, Suite::IntBeta, Suite::Kernel];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Stokes => "stokes",
            Suite::ResidueDecay => "residue-decay",
            Suite::HodgeTeich => "hodge-teich",
            Suite::MeanValue => "mean-value",
            Suite::IntBeta => "int-beta",
            Suite::Kernel => "kernel",
        }
    }

    fn stream(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64 + 1
    }

    /// Parses a suite name, with `all` expanding to every suite.
    pub fn parse_list(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            Ok(Suite::ALL.to_vec())
        } else {
            Ok(vec![name.parse()?])
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite '{s}' (expected one of stokes, residue-decay, hodge-teich, mean-value, int-beta, kernel, all)")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub h: f64,
    pub radius_factor: f64,
    pub contour_samples: usize,
    pub eps0: Option<f64>,
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
    /// Overrides the per-suite trial counts when set.
    pub trials: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { h: 0.1, radius_factor: 0.4, contour_samples: 512, eps0: None, restarts: 32, tol: 1e-6, seed: 0, trials: None }
    }
}

impl VerifyConfig {
    fn pairing(&self) -> PairingOptions {
        PairingOptions { radius_factor: self.radius_factor, contour_samples: self.contour_samples, eps0: self.eps0, ..PairingOptions::default() }
    }

    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }
}

/// One asserted inequality or identity.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl Check {
    /// Passes when `value ≤ bound`.
    fn at_most(name: impl Into<String>, value: f64, bound: f64, detail: Value) -> Check {
        Check { name: name.into(), pass: value <= bound, value, bound, detail }
    }

    /// Passes when `value ≥ bound`.
    fn at_least(name: impl Into<String>, value: f64, bound: f64, detail: Value) -> Check {
        Check { name: name.into(), pass: value >= bound, value, bound, detail }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn finish(suite: Suite, checks: Vec<Check>) -> SuiteReport {
        let status = if checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
        SuiteReport { suite, status, reason: None, checks }
    }

    fn skipped(suite: Suite, reason: &str) -> SuiteReport {
        SuiteReport { suite, status: Status::Skipped, reason: Some(reason.to_string()), checks: vec![] }
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub surface: String,
    pub config: VerifyConfig,
    /// Whether the suites ran on the holonomy double cover.
    pub on_cover: bool,
    pub faces: usize,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

/// A surface together with the translation mesh the suites run on.
pub struct Prepared {
    pub cover: Option<DoubleCover>,
    pub mesh: Mesh,
    /// Closed harmonic forms: all of them, or the anti-invariant ones on a cover.
    pub harmonic: Vec<OneForm>,
    /// Pure-type holomorphic forms, anti-invariant on a cover.
    pub holomorphic: Vec<OneForm>,
    /// Closed representatives of `holomorphic`.
    pub holomorphic_closed: Vec<OneForm>,
}

impl Prepared {
    pub fn new(surface: &FlatSurface, h: f64) -> Result<Prepared> {
        if surface.is_translation() {
            let mesh = Mesh::triangulate(surface, h)?;
            let harmonic = harmonic_basis(&mesh)?.forms;
            let hol = holomorphic_basis(&mesh)?;
            Ok(Prepared { cover: None, mesh, harmonic, holomorphic: hol.forms, holomorphic_closed: hol.closed })
        } else {
            let cover = DoubleCover::new(surface)?;
            let mesh = Mesh::triangulate_cover(&cover, h)?;
            let b = anti_invariant_basis(&mesh)?;
            Ok(Prepared { cover: Some(cover), mesh, harmonic: b.harmonic, holomorphic: b.holomorphic, holomorphic_closed: b.holomorphic_closed })
        }
    }
}

fn suite_rng(seed: u64, suite: Suite) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite.stream());
    rng
}

fn random_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn random_combination(rng: &mut ChaCha8Rng, forms: &[OneForm]) -> (OneForm, Vec<C64>) {
    let c = random_coeffs(rng, forms.len());
    let refs: Vec<&OneForm> = forms.iter().collect();
    (OneForm::combine(&refs, &c), c)
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

fn rel(a: C64, b: C64, floor: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(floor)
}

/// Runs the requested suites on an already prepared surface.
pub fn run(name: &str, prep: &Prepared, suites: &[Suite], cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut out = Vec::with_capacity(suites.len());
    for &s in suites {
        out.push(match s {
            Suite::Stokes => stokes(prep, cfg)?,
            Suite::ResidueDecay => residue_decay(prep, cfg)?,
            Suite::HodgeTeich => hodge_teich(prep, cfg)?,
            Suite::MeanValue => mean_value(cfg),
            Suite::IntBeta => int_beta(prep, cfg)?,
            Suite::Kernel => kernel(prep)?,
        });
    }
    let pass = out.iter().all(|r| r.status != Status::Fail);
    Ok(VerifyReport { surface: name.to_string(), config: cfg.clone(), on_cover: prep.cover.is_some(), faces: prep.mesh.fine.num_faces(), suites: out, pass })
}

/// Prepares `surface` and runs the suites.
pub fn verify(name: &str, surface: &FlatSurface, suites: &[Suite], cfg: &VerifyConfig) -> Result<VerifyReport> {
    let needs_mesh = suites.iter().any(|&s| s != Suite::MeanValue);
    if !needs_mesh {
        let out: Vec<SuiteReport> = suites.iter().map(|_| mean_value(cfg)).collect();
        let pass = out.iter().all(|r| r.status != Status::Fail);
        return Ok(VerifyReport { surface: name.to_string(), config: cfg.clone(), on_cover: false, faces: 0, suites: out, pass });
    }
    let prep = Prepared::new(surface, cfg.h)?;
    run(name, &prep, suites, cfg)
}

/// A regular vertex and a radius such that bumps of that radius stay away from Σ.
fn bump_site(mesh: &Mesh) -> Result<(usize, f64)> {
    let c = &mesh.fine;
    if mesh.sigma_vertices().is_empty() {
        let v = (0..c.num_vertices).next().ok_or_else(|| Error::InvalidInput("empty mesh".into()))?;
        return Ok((v, 0.2 * c.total_area().sqrt()));
    }
    let (r_low, _) = norms::embedded_radius_lower_bounds(mesh)?;
    let mut best = (0, f64::NEG_INFINITY);
    for (f, &r) in r_low.iter().enumerate() {
        let diam = (0..3).map(|k| c.he_vector(3 * f + k).norm()).fold(0.0, f64::max);
        if r - diam > best.1 {
            best = (f, r - diam);
        }
    }
    let (f, room) = best;
    if room <= 0.0 {
        return Err(Error::InvalidInput("mesh too coarse to place a bump away from Σ".into()));
    }
    Ok((c.faces[f][0], 0.8 * room))
}

fn stokes(prep: &Prepared, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mesh = &prep.mesh;
    let mut rng = suite_rng(cfg.seed, Suite::Stokes);
    let q = crate::norms::QDElement::omega_squared(mesh);
    let q_scale = mesh.fine.total_area().sqrt();
    let opts = cfg.pairing();
    let zs = pairing::zeros(mesh);
    let mut checks = Vec::new();
    for trial in 0..cfg.trials(5) {
        let (eta, coeffs) = random_combination(&mut rng, &prep.harmonic);
        let a = pairing::pairing_closed(mesh, &eta, &q, &opts)?;
        let half: Vec<f64> = a.radius_used.iter().map(|r| 0.5 * r).collect();
        let b = pairing::pairing_closed(mesh, &eta, &q, &PairingOptions { radii: Some(half), ..opts.clone() })?;
        let scale = hodge_norm(mesh, &eta) * q_scale;
        let d = rel(a.value, b.value, 1e-12 * scale);
        checks.push(Check::at_most(
            format!("radius-invariance/{trial}"),
            d,
            1e-3,
            json!({"coefficients": coeffs.iter().map(|&z| cjson(z)).collect::<Vec<_>>(), "value": cjson(a.value), "value_half_radius": cjson(b.value), "zeros": zs.len()}),
        ));
    }
    let (v, rho) = bump_site(mesh)?;
    for (k, r) in [rho, 0.5 * rho].into_iter().enumerate() {
        let f: Vec<C64> = pairing::bump(mesh, v, r)?.into_iter().map(|x| C64::new(x, 0.0)).collect();
        let eta = pairing::exact_form(mesh, &f);
        let p = pairing::pairing_closed(mesh, &eta, &q, &opts)?;
        let scale = hodge_norm(mesh, &eta) * q_scale;
        checks.push(Check::at_most(format!("exact-form/{k}"), p.value.norm(), 1e-3 * scale, json!({"vertex": v, "bump_radius": r})));
    }
    Ok(SuiteReport::finish(Suite::Stokes, checks))
}

fn residue_decay(prep: &Prepared, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mesh = &prep.mesh;
    let mut rng = suite_rng(cfg.seed, Suite::ResidueDecay);
    let q = crate::norms::QDElement::omega_squared(mesh);
    let q_scale = mesh.fine.total_area().sqrt();
    let opts = cfg.pairing();
    let zs = pairing::zeros(mesh);
    let mut checks = Vec::new();
    for trial in 0..cfg.trials(5) {
        let (eta, coeffs) = random_combination(&mut rng, &prep.harmonic);
        let scale = hodge_norm(mesh, &eta) * q_scale;
        let c = pairing::pairing_closed(mesh, &eta, &q, &opts)?;
        let h = pairing::pairing_harmonic(mesh, &eta, &q, &opts)?;
        checks.push(Check::at_most(
            format!("harmonic-vs-closed/{trial}"),
            rel(c.value, h.value, 1e-12 * scale),
            2e-3,
            json!({"coefficients": coeffs.iter().map(|&z| cjson(z)).collect::<Vec<_>>(), "closed": cjson(c.value), "harmonic": cjson(h.value)}),
        ));
        for (j, (&z, &r)) in zs.iter().zip(&c.radius_used).enumerate() {
            let radii = [r, 0.5 * r, 0.25 * r];
            let pieces = pairing::discarded_contour(mesh, &eta, &q, j, &radii, cfg.contour_samples)?;
            let mags: Vec<f64> = pieces.iter().map(|p| p.norm()).collect();
            let detail = json!({"zero": z, "radii": radii, "magnitudes": mags});
            if mags.iter().all(|&m| m <= 1e-13 * scale) {
                // the discarded piece vanishes identically (e.g. by symmetry)
                checks.push(Check::at_most(format!("decay/{trial}/{j}"), mags[0], 1e-13 * scale, detail));
            } else {
                let slope = loglog_slope(&radii, &mags);
                checks.push(Check::at_most(format!("decay/{trial}/{j}"), (slope - 2.0).abs(), 0.2, json!({"slope": slope, "zero": z, "radii": radii, "magnitudes": mags})));
            }
        }
    }
    Ok(SuiteReport::finish(Suite::ResidueDecay, checks))
}

fn hodge_teich(prep: &Prepared, cfg: &VerifyConfig) -> Result<SuiteReport> {
    if prep.cover.is_none() {
        return Ok(SuiteReport::skipped(Suite::HodgeTeich, "translation surface: no holonomy double cover"));
    }
    let mesh = &prep.mesh;
    let hol = &prep.holomorphic;
    if hol.is_empty() {
        return Ok(SuiteReport::skipped(Suite::HodgeTeich, "no anti-invariant holomorphic forms"));
    }
    let mut rng = suite_rng(cfg.seed, Suite::HodgeTeich);
    // the flat cover of the pillowcase family is the case of equality
    let equality_case = mesh.genus() == 1;
    let mut checks = Vec::new();
    for trial in 0..cfg.trials(20) {
        let (beta, coeffs) = random_combination(&mut rng, hol);
        let eta = beta.conj();
        let opts = TeichOptions { restarts: cfg.restarts, tol: cfg.tol, seed: rng.random(), ..TeichOptions::default() };
        let rep = norms::hodge_teich_report(mesh, &eta, hol, &opts, 1e-2)?;
        let n = &rep.cover_area_one;
        let detail = json!({
            "coefficients": coeffs.iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
            "optimizer_seed": opts.seed,
            "converged": rep.converged,
            "r": n.r,
            "base_area_one": {"teich": rep.base_area_one.teich, "hodge": rep.base_area_one.hodge, "r": rep.base_area_one.r},
        });
        checks.push(Check::at_least(format!("lower/{trial}"), n.teich, (1.0 - 1e-2) * n.hodge, detail));
        checks.push(Check::at_most(format!("upper/{trial}"), n.teich, n.upper_bound, Value::Null));
        if equality_case {
            checks.push(Check::at_most(format!("equality/{trial}"), (n.teich - n.hodge).abs(), 1e-3 * n.hodge, Value::Null));
        }
    }
    for trial in 0..cfg.trials(10) {
        let (beta, _) = random_combination(&mut rng, hol);
        let w = norms::lower_bound_witness(mesh, &beta)?;
        let identity = (w.pairing - C64::new(w.beta_norm_sq, 0.0)).norm() / w.beta_norm_sq.max(f64::MIN_POSITIVE);
        checks.push(Check::at_most(
            format!("witness/{trial}"),
            identity,
            1e-2,
            json!({"pairing": cjson(w.pairing), "beta_norm_sq": w.beta_norm_sq, "l1_norm": w.l1_norm, "omega_norm": w.omega_norm}),
        ));
        checks.push(Check::at_most(format!("witness-l1/{trial}"), w.l1_norm, w.omega_norm * w.beta_norm_sq.sqrt() * (1.0 + 1e-12), Value::Null));
    }
    Ok(SuiteReport::finish(Suite::HodgeTeich, checks))
}

fn mean_value(cfg: &VerifyConfig) -> SuiteReport {
    let mut rng = suite_rng(cfg.seed, Suite::MeanValue);
    let rep = norms::mean_value_check(rng.random(), cfg.trials(1000));
    let check = Check::at_most("mean-value-chain", rep.violations as f64, 0.0, serde_json::to_value(&rep).unwrap_or(Value::Null));
    SuiteReport::finish(Suite::MeanValue, vec![check])
}

fn int_beta(prep: &Prepared, cfg: &VerifyConfig) -> Result<SuiteReport> {
    let mesh = &prep.mesh;
    if prep.holomorphic.is_empty() {
        return Ok(SuiteReport::skipped(Suite::IntBeta, "no holomorphic forms"));
    }
    let sigma = mesh.sigma_vertices();
    if sigma.is_empty() {
        return Ok(SuiteReport::skipped(Suite::IntBeta, "Σ is empty"));
    }
    let r = 0.2 * norms::systole(&mesh.surface)?;
    let mut rng = suite_rng(cfg.seed, Suite::IntBeta);
    let mut checks = Vec::new();
    for trial in 0..cfg.trials(20) {
        let (beta, _) = random_combination(&mut rng, &prep.holomorphic);
        let p = norms::pointwise_ratio_check(mesh, &beta)?;
        checks.push(Check::at_most(format!("pointwise/{trial}"), p.max_ratio, 1.0, json!({"violations": p.violations, "faces": p.faces_checked})));
        for &v in &sigma {
            let rep = norms::int_beta_bound_check(mesh, &beta, v, r)?;
            checks.push(Check::at_most(format!("log-bound/{trial}/{v}"), rep.max_abs, rep.log_bound, json!({"order": rep.order, "radius": r})));
            if let Some(b) = rep.n2_bound {
                checks.push(Check::at_most(format!("n2-bound/{trial}/{v}"), rep.max_abs, b, Value::Null));
            }
        }
    }
    Ok(SuiteReport::finish(Suite::IntBeta, checks))
}

fn kernel(prep: &Prepared) -> Result<SuiteReport> {
    let Some(cover) = &prep.cover else {
        return Ok(SuiteReport::skipped(Suite::Kernel, "translation surface: no holonomy double cover"));
    };
    if let Some(cp) = cover.base.cone_points().iter().find(|c| c.order >= 2) {
        return Ok(SuiteReport::skipped(Suite::Kernel, &format!("not in the principal stratum (zero of order {})", cp.order)));
    }
    let mesh = &prep.mesh;
    let hol = &prep.holomorphic;
    let mut qs = vec![("omega-squared".to_string(), crate::norms::QDElement::omega_squared(mesh))];
    for k in 0..hol.len() {
        let mut c = vec![C64::new(0.0, 0.0); hol.len()];
        c[k] = C64::new(1.0, 0.0);
        qs.push((format!("2-omega-beta-{k}"), norms::qd_from_basis(mesh, hol, &c)?));
    }
    let mut checks = Vec::new();
    for (i, (beta, closed)) in hol.iter().zip(&prep.holomorphic_closed).enumerate() {
        let norm = hodge_norm(mesh, beta);
        for (label, q) in &qs {
            let p = pairing::pairing_principal(cover, mesh, beta, q)?;
            let pc = pairing::pairing_principal(cover, mesh, closed, q)?;
            checks.push(Check::at_most(
                format!("kernel/{i}/{label}"),
                p.norm(),
                1e-6 * norm,
                json!({"closed_representative": pc.norm() / hodge_norm(mesh, closed).max(f64::MIN_POSITIVE)}),
            ));
        }
    }
    Ok(SuiteReport::finish(Suite::Kernel, checks))
}
