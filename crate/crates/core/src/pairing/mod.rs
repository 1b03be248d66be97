//! Pairing of relative cohomology classes with quadratic differentials.
//!
//! For a closed form `η` and a quadratic differential `q`, the pairing splits into a
//! bulk integral of `q η^{0,1}/ω` outside small flat disks around the zeros of `ω`
//! and contour integrals `(1/2i) ∮ F q/ω` of the local primitive `F` of `η`.

mod chart;

pub use chart::{ConeChart, PatchFace, RaySegment};

use crate::error::{Error, Result};
use crate::geom::{circle_arcs_in_triangle, triangle_disk_area};
use crate::hodge::{self, OneForm};
use crate::mesh::Mesh;
use crate::norms::{systole, QDElement};
use crate::surface::DoubleCover;
use crate::C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const CLOSED_TOL: f64 = 1e-9;
const HARMONIC_TOL: f64 = 1e-6;
const ANTI_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct PairingOptions {
    /// Contour radius for each zero, in the order of [`zeros`]; `None` picks the default.
    pub radii: Option<Vec<f64>>,
    /// Default radius is this fraction of half the systole.
    pub radius_factor: f64,
    /// Trapezoid samples per `2π` of cone angle.
    pub contour_samples: usize,
    /// First principal-value exclusion radius; defaults to half the contour radius.
    pub eps0: Option<f64>,
    pub estimate_error: bool,
}

impl Default for PairingOptions {
    fn default() -> Self {
        PairingOptions { radii: None, radius_factor: 0.4, contour_samples: 512, eps0: None, estimate_error: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingResult {
    pub value: C64,
    pub bulk_term: C64,
    /// One term per zero of `ω`.
    pub contour_terms: Vec<C64>,
    pub radius_used: Vec<f64>,
    pub error_estimate: f64,
    /// Surface point behind each contour term.
    pub cone_points: Vec<usize>,
}

impl PairingResult {
    fn scaled(mut self, s: f64) -> PairingResult {
        self.value *= s;
        self.bulk_term *= s;
        for c in &mut self.contour_terms {
            *c *= s;
        }
        self.error_estimate *= s.abs();
        self
    }
}

/// Fine vertices where `ω` vanishes, in index order.
pub fn zeros(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.vertices.len()).filter(|&v| mesh.vertices[v].order > 0).collect()
}

/// `factor · systole / 2`.
pub fn default_radius(mesh: &Mesh, factor: f64) -> Result<f64> {
    Ok(factor * 0.5 * systole(&mesh.surface)?)
}

fn label(mesh: &Mesh, v: usize) -> usize {
    mesh.vertices[v].surface_vertex.unwrap_or(v)
}

fn require_translation(mesh: &Mesh) -> Result<()> {
    if mesh.is_translation() {
        Ok(())
    } else {
        Err(Error::HalfTranslationInput)
    }
}

fn require_closed(eta: &OneForm) -> Result<()> {
    if eta.closedness_defect > CLOSED_TOL {
        return Err(Error::NotClosed { defect: eta.closedness_defect });
    }
    Ok(())
}

fn resolve_radii(mesh: &Mesh, zs: &[usize], opts: &PairingOptions) -> Result<Vec<f64>> {
    if zs.is_empty() {
        return Ok(Vec::new());
    }
    match &opts.radii {
        Some(r) if r.len() != zs.len() => {
            Err(Error::InvalidInput(format!("{} contour radii given for {} zeros", r.len(), zs.len())))
        }
        Some(r) => Ok(r.clone()),
        None => Ok(vec![default_radius(mesh, opts.radius_factor)?; zs.len()]),
    }
}

/// Disks around the given vertices; errors if any fails to embed or two overlap.
pub fn disk_charts(mesh: &Mesh, vertices: &[usize], radii: &[f64]) -> Result<Vec<ConeChart>> {
    let charts: Vec<ConeChart> = vertices
        .iter()
        .zip(radii)
        .map(|(&v, &r)| {
            ConeChart::new(mesh, v, r).map_err(|e| match e {
                Error::RadiusTooLarge { radius, limit, .. } => Error::RadiusTooLarge { point: label(mesh, v), radius, limit },
                e => e,
            })
        })
        .collect::<Result<_>>()?;
    for i in 0..charts.len() {
        for j in i + 1..charts.len() {
            for pf in &charts[i].faces {
                if let Some(k) = charts[j].patch_index(pf.face) {
                    let d = (charts[j].faces[k].center - pf.center).norm();
                    if d < radii[i] + radii[j] {
                        return Err(Error::RadiusTooLarge { point: label(mesh, vertices[i]), radius: radii[i], limit: 0.5 * d });
                    }
                }
            }
        }
    }
    Ok(charts)
}

/// Values of the primitive `F` (with `F = 0` at the centre) at the corners of every patch face.
pub fn local_primitive(mesh: &Mesh, chart: &ConeChart, eta: &OneForm) -> Vec<[C64; 3]> {
    let c = &mesh.fine;
    let val = |he: usize| eta.edge_values[c.edge_of[he]] * c.he_orientation(he);
    let mut out: Vec<[C64; 3]> = Vec::with_capacity(chart.faces.len());
    for pf in &chart.faces {
        let g = pf.face;
        let mut fv = [C64::new(0.0, 0.0); 3];
        match pf.parent {
            None => {
                let k = (0..3).min_by(|&a, &b| (pf.pos[a] - pf.center).norm().total_cmp(&(pf.pos[b] - pf.center).norm())).unwrap();
                fv[(k + 1) % 3] = val(3 * g + k);
                fv[(k + 2) % 3] = -val(3 * g + (k + 2) % 3);
            }
            Some((pi, j, j2)) => {
                let fp = out[pi];
                fv[(j2 + 1) % 3] = fp[j];
                fv[j2] = fp[(j + 1) % 3];
                fv[(j2 + 2) % 3] = fv[(j2 + 1) % 3] + val(3 * g + (j2 + 1) % 3);
            }
        }
        out.push(fv);
    }
    out
}

fn bulk(mesh: &Mesh, eta: &OneForm, qv: &[C64], charts: &[ConeChart], radius_scale: &[f64]) -> C64 {
    let c = &mesh.fine;
    let mut holes: Vec<Vec<(C64, f64)>> = vec![Vec::new(); c.num_faces()];
    for (ch, &s) in charts.iter().zip(radius_scale) {
        for pf in &ch.faces {
            holes[pf.face].push((pf.center, ch.radius * s));
        }
    }
    let terms: Vec<C64> = (0..c.num_faces())
        .into_par_iter()
        .map(|f| {
            let mut a = c.area(f);
            for &(z, r) in &holes[f] {
                a -= triangle_disk_area(&c.pos[f], z, r);
            }
            qv[f] * eta.covectors[f][1] * a
        })
        .collect();
    terms.iter().sum()
}

/// `(1/2i) ∮_{|w|=R} F q dw` with exact arc integrals of the piecewise-affine primitive.
fn contour(mesh: &Mesh, chart: &ConeChart, eta: &OneForm, qv: &[C64]) -> C64 {
    let r = chart.radius;
    let prim = local_primitive(mesh, chart, eta);
    let i = C64::i();
    let terms: Vec<C64> = chart
        .faces
        .par_iter()
        .zip(prim.par_iter())
        .map(|(pf, fv)| {
            let arcs = circle_arcs_in_triangle(&pf.pos, pf.center, r);
            if arcs.is_empty() {
                return C64::new(0.0, 0.0);
            }
            let [a, b] = eta.covectors[pf.face];
            let d = pf.center - pf.pos[0];
            let fc = fv[0] + a * d + b * d.conj();
            let mut s = C64::new(0.0, 0.0);
            for (t1, t2) in arcs {
                let e1 = C64::from_polar(1.0, t1);
                let e2 = C64::from_polar(1.0, t2);
                s += fc * r * (e2 - e1) + a * (0.5 * r * r) * (e2 * e2 - e1 * e1) + b * i * (r * r * (t2 - t1));
            }
            qv[pf.face] * s
        })
        .collect();
    terms.iter().sum::<C64>() / (2.0 * i)
}

fn closed_raw(mesh: &Mesh, eta: &OneForm, qv: &[C64], charts: &[ConeChart]) -> (C64, Vec<C64>) {
    let b = bulk(mesh, eta, qv, charts, &vec![1.0; charts.len()]);
    let cs = charts.iter().map(|ch| contour(mesh, ch, eta, qv)).collect();
    (b, cs)
}

fn magnitude(mesh: &Mesh, eta: &OneForm, qv: &[C64]) -> f64 {
    (0..mesh.fine.num_faces()).map(|f| (qv[f].norm() * eta.covectors[f][1].norm() + qv[f].norm() * eta.covectors[f][0].norm()) * mesh.fine.area(f)).sum()
}

/// Bulk integral outside disks around the zeros plus contour terms on their boundaries.
pub fn pairing_closed(mesh: &Mesh, eta: &OneForm, q: &QDElement, opts: &PairingOptions) -> Result<PairingResult> {
    require_translation(mesh)?;
    require_closed(eta)?;
    let qv = q.face_values();
    let zs = zeros(mesh);
    let radii = resolve_radii(mesh, &zs, opts)?;
    let charts = disk_charts(mesh, &zs, &radii)?;
    let (bulk_term, contour_terms) = closed_raw(mesh, eta, &qv, &charts);
    let value = bulk_term + contour_terms.iter().sum::<C64>();
    let floor = 1e-12 * magnitude(mesh, eta, &qv);
    let mut error_estimate = floor;
    if opts.estimate_error && !zs.is_empty() {
        let half: Vec<f64> = radii.iter().map(|r| 0.5 * r).collect();
        let charts = disk_charts(mesh, &zs, &half)?;
        let (b, cs) = closed_raw(mesh, eta, &qv, &charts);
        error_estimate += (b + cs.iter().sum::<C64>() - value).norm();
    }
    Ok(PairingResult {
        value,
        bulk_term,
        contour_terms,
        radius_used: radii,
        error_estimate,
        cone_points: zs.iter().map(|&v| label(mesh, v)).collect(),
    })
}

/// Samples `(θ_k, w_k)` on the circle of flat radius `r`, `m` per `2π` of cone angle.
fn circle_samples(chart: &ConeChart, per_turn: usize) -> (usize, f64) {
    let turns = (chart.angle / (2.0 * PI)).round().max(1.0) as usize;
    let m = per_turn.max(8) * turns;
    (m, chart.angle / m as f64)
}

/// `∫_0^r` of the chosen covector component along a ray, and the `dz²` coefficient at its end.
fn ray_data(chart: &ConeChart, eta: &OneForm, qv: &[C64], theta: f64, r: f64, part: usize) -> (C64, C64) {
    let segs = chart.ray(theta, r);
    let d = C64::from_polar(1.0, theta);
    let dir = if part == 0 { d } else { d.conj() };
    let mut g = C64::new(0.0, 0.0);
    let mut qs = C64::new(0.0, 0.0);
    let mut ws = 0.0;
    for s in &segs {
        let f = chart.faces[s.patch].face;
        g += eta.covectors[f][part] * dir * (s.weight * (s.t1 - s.t0));
        if s.t1 >= r * (1.0 - 1e-9) {
            qs += qv[f] * s.weight;
            ws += s.weight;
        }
    }
    (g, if ws > 0.0 { qs / ws } else { C64::new(0.0, 0.0) })
}

/// `(1/2i) ∮_{|w|=r} P q dw` by the trapezoid rule, where `P` is the radial integral of
/// the `(1,0)` part (`part = 0`) or the `(0,1)` part (`part = 1`) of `η`.
fn radial_contour(chart: &ConeChart, eta: &OneForm, qv: &[C64], r: f64, per_turn: usize, part: usize) -> C64 {
    let (m, dt) = circle_samples(chart, per_turn);
    let terms: Vec<C64> = (0..m)
        .into_par_iter()
        .map(|k| {
            let th = chart.start + k as f64 * dt;
            let (g, qw) = ray_data(chart, eta, qv, th, r, part);
            g * qw * C64::from_polar(1.0, th)
        })
        .collect();
    // (1/2i) Σ G q (i w dθ)
    terms.iter().sum::<C64>() * (0.5 * r * dt)
}

/// Principal-value bulk integral plus residues of the holomorphic radial primitive.
pub fn pairing_harmonic(mesh: &Mesh, eta: &OneForm, q: &QDElement, opts: &PairingOptions) -> Result<PairingResult> {
    require_translation(mesh)?;
    require_closed(eta)?;
    let codifferential = hodge::codifferential_defect(mesh, eta)?;
    if codifferential > HARMONIC_TOL {
        return Err(Error::NotHarmonic { codifferential });
    }
    let qv = q.face_values();
    let zs = zeros(mesh);
    let radii = resolve_radii(mesh, &zs, opts)?;
    let charts = disk_charts(mesh, &zs, &radii)?;
    let eps: Vec<f64> = radii.iter().map(|&r| opts.eps0.map_or(0.5 * r, |e| e.min(r)) / r).collect();
    let pv_at = |s: f64| {
        let sc: Vec<f64> = eps.iter().map(|e| e * s).collect();
        bulk(mesh, eta, &qv, &charts, &sc)
    };
    let (b1, b2, b4) = if zs.is_empty() {
        let b = pv_at(1.0);
        (b, b, b)
    } else {
        (pv_at(1.0), pv_at(0.5), pv_at(0.25))
    };
    let coarse = (4.0 * b2 - b1) / 3.0;
    let bulk_term = (4.0 * b4 - b2) / 3.0;
    let residues: Vec<C64> = charts.iter().map(|ch| radial_contour(ch, eta, &qv, ch.radius, opts.contour_samples, 0)).collect();
    let value = bulk_term + residues.iter().sum::<C64>();
    let mut error_estimate = (coarse - bulk_term).norm() + 1e-12 * magnitude(mesh, eta, &qv);
    if opts.estimate_error && !zs.is_empty() {
        let half: C64 = charts.iter().map(|ch| radial_contour(ch, eta, &qv, 0.5 * ch.radius, opts.contour_samples, 0)).sum();
        error_estimate += (half - residues.iter().sum::<C64>()).norm();
    }
    Ok(PairingResult {
        value,
        bulk_term,
        contour_terms: residues,
        radius_used: radii,
        error_estimate,
        cone_points: zs.iter().map(|&v| label(mesh, v)).collect(),
    })
}

/// The piece dropped by the principal value: `(1/2i) ∮_{|w|=r} (∫ η^{0,1}) q dw` at each radius,
/// around the zero `zero` (an index into [`zeros`]).
pub fn discarded_contour(mesh: &Mesh, eta: &OneForm, q: &QDElement, zero: usize, radii: &[f64], per_turn: usize) -> Result<Vec<C64>> {
    require_translation(mesh)?;
    let zs = zeros(mesh);
    let &v = zs.get(zero).ok_or_else(|| Error::InvalidInput(format!("no zero with index {zero}")))?;
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let chart = disk_charts(mesh, &[v], &[rmax])?.remove(0);
    let qv = q.face_values();
    Ok(radii.iter().map(|&r| radial_contour(&chart, eta, &qv, r, per_turn, 1)).collect())
}

fn require_anti_invariant(mesh: &Mesh, eta: &OneForm) -> Result<()> {
    let defect = hodge::anti_invariance_defect(mesh, eta)?;
    if defect > ANTI_TOL {
        return Err(Error::NotAntiInvariant { defect });
    }
    Ok(())
}

/// `½ ∫ q̂ η^{0,1}/ω` over the cover, for bases whose zeros are all simple.
///
/// `q` is the pull-back of the base differential, given on the cover mesh.
pub fn pairing_principal(cover: &DoubleCover, mesh: &Mesh, eta: &OneForm, q: &QDElement) -> Result<C64> {
    if mesh.involution.is_none() {
        return Err(Error::NonEquivariantMesh);
    }
    if let Some(cp) = cover.base.cone_points().iter().find(|c| c.order >= 2) {
        return Err(Error::NotPrincipal { order: cp.order });
    }
    require_anti_invariant(mesh, eta)?;
    let c = &mesh.fine;
    let qv = q.face_values();
    let terms: Vec<C64> = (0..c.num_faces()).into_par_iter().map(|f| qv[f] * eta.covectors[f][1] * c.area(f)).collect();
    Ok(terms.iter().sum::<C64>() * 0.5)
}

/// Half of [`pairing_closed`] on the cover, applied to the pulled-back differential.
pub fn pairing_halftranslation(mesh: &Mesh, eta: &OneForm, q: &QDElement, opts: &PairingOptions) -> Result<PairingResult> {
    if mesh.involution.is_none() {
        return Err(Error::NonEquivariantMesh);
    }
    require_anti_invariant(mesh, eta)?;
    Ok(pairing_closed(mesh, eta, q, opts)?.scaled(0.5))
}

fn smoothstep(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let s = 2.0 * (1.0 - t);
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Values at mesh vertices of a bump equal to 1 on the disk of radius `rho/2` around
/// `vertex` and vanishing outside radius `rho`.
pub fn bump(mesh: &Mesh, vertex: usize, rho: f64) -> Result<Vec<f64>> {
    let chart = ConeChart::new(mesh, vertex, rho).map_err(|e| match e {
        Error::RadiusTooLarge { radius, limit, .. } => Error::RadiusTooLarge { point: label(mesh, vertex), radius, limit },
        e => e,
    })?;
    let mut f = vec![0.0; mesh.fine.num_vertices];
    for pf in &chart.faces {
        for k in 0..3 {
            let u = mesh.fine.faces[pf.face][k];
            f[u] = smoothstep((pf.pos[k] - pf.center).norm() / rho);
        }
    }
    Ok(f)
}

/// `df` for a function given at the mesh vertices.
pub fn exact_form(mesh: &Mesh, f: &[C64]) -> OneForm {
    let c = &mesh.fine;
    let vals = c.edge_he.iter().map(|&he| f[c.he_end(he)] - f[c.he_start(he)]).collect();
    OneForm::from_cochain(mesh, vals)
}

/// A purely relative class: `d` of bumps taking the value `values[j]` near the `j`-th
/// point of Σ (in the order of [`Mesh::sigma_vertices`]).
pub fn relative_deformation(mesh: &Mesh, values: &[C64], rho: f64) -> Result<OneForm> {
    let sigma = mesh.sigma_vertices();
    if values.len() != sigma.len() {
        return Err(Error::InvalidInput(format!("{} values given for {} points of Σ", values.len(), sigma.len())));
    }
    let mut f = vec![C64::new(0.0, 0.0); mesh.fine.num_vertices];
    let radii = vec![rho; sigma.len()];
    disk_charts(mesh, &sigma, &radii)?;
    for (&v, &c) in sigma.iter().zip(values) {
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        for (u, b) in bump(mesh, v, rho)?.into_iter().enumerate() {
            f[u] += c * b;
        }
    }
    Ok(exact_form(mesh, &f))
}

/// The closed form with the given periods on the cycles of [`Mesh::homology`] (its
/// harmonic part) and along the relative paths (bumps of radius `rho` around Σ).
pub fn form_with_periods(mesh: &Mesh, periods: &[C64], relative: &[C64], rho: f64) -> Result<OneForm> {
    let hb = hodge::harmonic_basis(mesh)?;
    let n = hb.forms.len();
    if periods.len() != n {
        return Err(Error::InvalidInput(format!("{} periods given, the homology basis has {n} cycles", periods.len())));
    }
    let rhs = nalgebra::DVector::from_column_slice(periods);
    let x = hb.period_matrix.clone().lu().solve(&rhs).ok_or_else(|| Error::SolverFailure("period matrix is singular".into()))?;
    let refs: Vec<&OneForm> = hb.forms.iter().collect();
    let eta = if n == 0 { OneForm::zero(mesh) } else { OneForm::combine(&refs, x.as_slice()) };
    let hom = &hb.homology;
    if relative.is_empty() {
        return Ok(eta);
    }
    if relative.len() != hom.relative_paths.len() {
        return Err(Error::InvalidInput(format!("{} relative periods given, expected {}", relative.len(), hom.relative_paths.len())));
    }
    let sigma = mesh.sigma_vertices();
    let mut values = vec![C64::new(0.0, 0.0); sigma.len()];
    for ((path, &(_, end)), &target) in hom.relative_paths.iter().zip(&hom.relative_endpoints).zip(relative) {
        let j = sigma.iter().position(|&v| v == end).ok_or_else(|| Error::InvalidInput("relative path does not end in Σ".into()))?;
        values[j] = target - eta.integrate(path);
    }
    let bumps = relative_deformation(mesh, &values, rho)?;
    Ok(OneForm::combine(&[&eta, &bumps], &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]))
}
