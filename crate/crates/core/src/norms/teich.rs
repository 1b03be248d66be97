//! Teichmüller norm of `Dπ(η)` by maximizing `|⟨q, μ⟩| / ‖q‖` over quadratic
//! differentials of the form `2 ω β` with `β` anti-invariant and holomorphic.

use super::qd::QDElement;
use crate::error::{Error, Result};
use crate::hodge::{hodge_norm, OneForm};
use crate::mesh::Mesh;
use crate::C64;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct TeichOptions {
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for TeichOptions {
    fn default() -> Self {
        TeichOptions { restarts: 32, tol: 1e-6, seed: 0, max_iter: 2000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TeichNormEstimate {
    /// Lower bound for the Teichmüller norm at the mesh's own scale.
    pub value: f64,
    /// Coefficients of the maximizer in the basis `2 ω β_k`, scaled to unit `L¹` norm on the base.
    pub coefficients: Vec<C64>,
    #[serde(skip)]
    pub maximizer: Option<QDElement>,
    pub restarts_used: usize,
    pub best_restart: usize,
    pub converged: bool,
}

/// Face data for the objective: `u_k = 2 β_k`, the Beltrami coefficient, areas.
struct Objective {
    m: usize,
    area: Vec<f64>,
    u: Vec<C64>,
    /// `ℓ(c) = Σ c_k l_k`.
    l: Vec<C64>,
}

impl Objective {
    fn new(mesh: &Mesh, eta: &OneForm, basis: &[OneForm]) -> Result<Objective> {
        let c = &mesh.fine;
        let nf = c.num_faces();
        if eta.covectors.len() != nf || basis.iter().any(|b| b.covectors.len() != nf) {
            return Err(Error::InvalidInput("forms live on a different mesh".into()));
        }
        let m = basis.len();
        let area: Vec<f64> = (0..nf).map(|f| c.area(f)).collect();
        let mut u = Vec::with_capacity(nf * m);
        for f in 0..nf {
            for b in basis {
                u.push(b.covectors[f][0] * 2.0);
            }
        }
        let l = (0..m)
            .map(|k| (0..nf).map(|f| u[f * m + k] * eta.covectors[f][1] * (0.5 * area[f])).sum())
            .collect();
        Ok(Objective { m, area, u, l })
    }

    fn coeffs(x: &[f64]) -> Vec<C64> {
        x.chunks(2).map(|p| C64::new(p[0], p[1])).collect()
    }

    fn ell(&self, c: &[C64]) -> C64 {
        c.iter().zip(&self.l).map(|(a, b)| a * b).sum()
    }

    /// `½ Σ A |ψ|`, the base `L¹` norm.
    fn norm(&self, c: &[C64]) -> f64 {
        let m = self.m;
        let mut s = 0.0;
        for (f, a) in self.area.iter().enumerate() {
            let psi: C64 = (0..m).map(|k| c[k] * self.u[f * m + k]).sum();
            s += a * abs(psi);
        }
        0.5 * s
    }

    fn ratio(&self, x: &[f64]) -> f64 {
        let c = Self::coeffs(x);
        let n = self.norm(&c);
        if n > 0.0 {
            self.ell(&c).norm() / n
        } else {
            0.0
        }
    }

    /// Central-difference gradient of the ratio, all directions in one sweep.
    fn gradient(&self, x: &[f64], h: f64) -> Vec<f64> {
        let m = self.m;
        let c = Self::coeffs(x);
        let mut plus = vec![0.0; 2 * m];
        let mut minus = vec![0.0; 2 * m];
        for (f, a) in self.area.iter().enumerate() {
            let u = &self.u[f * m..(f + 1) * m];
            let psi: C64 = (0..m).map(|k| c[k] * u[k]).sum();
            for k in 0..m {
                let re = u[k] * h;
                let im = re * C64::i();
                plus[2 * k] += a * abs(psi + re);
                minus[2 * k] += a * abs(psi - re);
                plus[2 * k + 1] += a * abs(psi + im);
                minus[2 * k + 1] += a * abs(psi - im);
            }
        }
        let l0 = self.ell(&c);
        (0..2 * m)
            .map(|i| {
                let k = i / 2;
                let dl = if i % 2 == 0 { self.l[k] * h } else { self.l[k] * C64::i() * h };
                let rp = (l0 + dl).norm() / (0.5 * plus[i]);
                let rm = (l0 - dl).norm() / (0.5 * minus[i]);
                (rp - rm) / (2.0 * h)
            })
            .collect()
    }
}

#[inline]
fn abs(z: C64) -> f64 {
    (z.re * z.re + z.im * z.im).sqrt()
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

struct Run {
    x: Vec<f64>,
    value: f64,
    converged: bool,
}

/// Normalized-gradient ascent on the unit sphere with an adaptive step.
fn ascend(obj: &Objective, mut x: Vec<f64>, opts: &TeichOptions) -> Run {
    normalize(&mut x);
    let mut f = obj.ratio(&x);
    let mut step = 0.25;
    for _ in 0..opts.max_iter {
        let g = obj.gradient(&x, 1e-6);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(gn > 1e-14) {
            return Run { x, value: f, converged: true };
        }
        loop {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b / gn).collect();
            normalize(&mut y);
            let fy = obj.ratio(&y);
            if fy > f {
                let gain = fy - f;
                x = y;
                f = fy;
                step = (step * 1.5).min(1.0);
                if gain <= opts.tol * 1e-3 * f && step < opts.tol.sqrt() {
                    return Run { x, value: f, converged: true };
                }
                break;
            }
            step *= 0.5;
            if step < opts.tol {
                return Run { x, value: f, converged: true };
            }
        }
    }
    Run { x, value: f, converged: false }
}

/// Coefficients `c_k = ⟨conj(η^{0,1}), β_k⟩`: the pushforward witness expressed in the basis.
pub fn witness_coefficients(mesh: &Mesh, eta: &OneForm, basis: &[OneForm]) -> Vec<C64> {
    let c = &mesh.fine;
    basis
        .iter()
        .map(|b| (0..c.num_faces()).map(|f| eta.covectors[f][1].conj() * b.covectors[f][0].conj() * c.area(f)).sum())
        .collect()
}

/// The quadratic differential `Σ_k c_k · 2 ω β_k` on the cover mesh.
pub fn qd_from_basis(mesh: &Mesh, basis: &[OneForm], coeffs: &[C64]) -> Result<QDElement> {
    let m = basis.len();
    if coeffs.len() != m {
        return Err(Error::InvalidInput(format!("{} coefficients for a basis of {m}", coeffs.len())));
    }
    let mut factors = vec![vec![C64::new(1.0, 0.0); mesh.fine.num_faces()]];
    factors.extend(basis.iter().map(|b| b.covectors.iter().map(|v| v[0]).collect::<Vec<_>>()));
    let mut mat = DMatrix::zeros(m + 1, m + 1);
    for (k, &ck) in coeffs.iter().enumerate() {
        mat[(0, k + 1)] = ck;
        mat[(k + 1, 0)] = ck;
    }
    let refs: Vec<&OneForm> = basis.iter().collect();
    let mut q = QDElement::new(factors, mat)?;
    q.factor_defect = QDElement::from_forms(&refs, DMatrix::zeros(m, m))?.factor_defect;
    Ok(q)
}

fn to_real(c: &[C64]) -> Vec<f64> {
    c.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Lower bound for `‖Dπ(η)‖_Teich`, using `η^{0,1}/ω` as the Beltrami coefficient and the
/// span of `2 ω β_k` as the space of quadratic differentials.
pub fn teich_norm_estimate(mesh: &Mesh, eta: &OneForm, basis: &[OneForm], opts: &TeichOptions) -> Result<TeichNormEstimate> {
    let start = witness_coefficients(mesh, eta, basis);
    teich_norm_estimate_from(mesh, eta, basis, opts, &start)
}

/// As [`teich_norm_estimate`], with restart 0 started from `start` instead of the witness.
pub fn teich_norm_estimate_from(
    mesh: &Mesh,
    eta: &OneForm,
    basis: &[OneForm],
    opts: &TeichOptions,
    start: &[C64],
) -> Result<TeichNormEstimate> {
    let m = basis.len();
    if m == 0 {
        return Ok(TeichNormEstimate { value: 0.0, coefficients: vec![], maximizer: None, restarts_used: 0, best_restart: 0, converged: true });
    }
    if start.len() != m {
        return Err(Error::InvalidInput(format!("{} start coefficients for a basis of {m}", start.len())));
    }
    let obj = Objective::new(mesh, eta, basis)?;
    let restarts = opts.restarts.max(1);
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let x0 = if i == 0 && start.iter().any(|z| z.norm() > 0.0) {
                to_real(start)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64));
                (0..2 * m).map(|_| StandardNormal.sample(&mut rng)).collect()
            };
            ascend(&obj, x0, opts)
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    let run = &runs[best];
    let mut coeffs = Objective::coeffs(&run.x);
    let n = obj.norm(&coeffs);
    if n > 0.0 {
        // fix the phase so that the pairing is real and positive
        let l = obj.ell(&coeffs);
        let phase = if l.norm() > 0.0 { l.conj() / l.norm() } else { C64::new(1.0, 0.0) };
        coeffs.iter_mut().for_each(|z| *z *= phase / n);
    }
    let maximizer = qd_from_basis(mesh, basis, &coeffs)?;
    Ok(TeichNormEstimate {
        value: run.value,
        coefficients: coeffs,
        maximizer: Some(maximizer),
        restarts_used: restarts,
        best_restart: best,
        converged: run.converged,
    })
}

/// The pushforward of `ω β` to the base, lifted back to the cover, with its pairing data.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    #[serde(skip)]
    pub q: Option<QDElement>,
    /// `∫_X q' μ` with `μ = β̄/ω`.
    pub pairing: C64,
    /// `‖q'‖_{L¹}` on the base.
    pub l1_norm: f64,
    pub beta_norm_sq: f64,
    pub omega_norm: f64,
}

impl Witness {
    pub fn ratio(&self) -> f64 {
        if self.l1_norm > 0.0 {
            self.pairing.norm() / self.l1_norm
        } else {
            0.0
        }
    }
}

/// `q' = (ρ_q)_*(ω β)`, summing the two lifts of every base face.
pub fn lower_bound_witness(mesh: &Mesh, beta: &OneForm) -> Result<Witness> {
    let inv = mesh.involution.as_ref().ok_or(Error::NonEquivariantMesh)?;
    let c = &mesh.fine;
    let nf = c.num_faces();
    // coefficient of ω β in each face chart; the sheet charts differ by w ↦ -w, under which dw² is invariant
    let pushed: Vec<C64> = (0..nf).map(|f| beta.covectors[f][0] + beta.covectors[inv.face[f]][0]).collect();
    let q = QDElement::new(vec![vec![C64::new(1.0, 0.0); nf], pushed.iter().map(|v| v * 0.5).collect()], {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        m
    })?;
    let mut pairing = C64::new(0.0, 0.0);
    let mut l1 = 0.0;
    let mut bn = 0.0;
    for f in 0..nf {
        let a = c.area(f);
        pairing += pushed[f] * beta.covectors[f][0].conj() * (0.5 * a);
        l1 += 0.5 * a * pushed[f].norm();
        bn += a * (beta.covectors[f][0].norm_sqr() + beta.covectors[f][1].norm_sqr());
    }
    Ok(Witness { q: Some(q), pairing, l1_norm: l1, beta_norm_sq: bn, omega_norm: c.total_area().sqrt() })
}

/// Quantities of the Hodge/Teichmüller comparison after rescaling the surface.
#[derive(Clone, Debug, Serialize)]
pub struct Normalized {
    pub convention: String,
    pub teich: f64,
    pub hodge: f64,
    pub r: f64,
    pub upper_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HodgeTeichReport {
    pub hodge_norm: f64,
    pub teich_estimate: f64,
    pub witness_ratio: f64,
    pub cover_area: f64,
    pub systole: f64,
    pub converged: bool,
    /// `ω` of area 1 on the cover: the normalization under which the bounds are asserted.
    pub cover_area_one: Normalized,
    /// `q` of area 1 on the base (cover area 2), reported for comparison.
    pub base_area_one: Normalized,
    pub pass: bool,
}

/// Checks `(1-δ)‖η‖ ≤ ‖Dπ(η)‖_Teich ≤ (4/r)‖η‖` for `η ∈ H^{0,1}_{-1}`.
///
/// The Hodge norm of a one-form is scale invariant while the Teichmüller norm scales
/// like `1/√area`, so the estimate is rescaled analytically rather than remeshing.
pub fn hodge_teich_report(mesh: &Mesh, eta: &OneForm, basis: &[OneForm], opts: &TeichOptions, lower_tol: f64) -> Result<HodgeTeichReport> {
    let est = teich_norm_estimate(mesh, eta, basis, opts)?;
    let hodge = hodge_norm(mesh, eta);
    let witness = {
        let beta = eta.conj();
        lower_bound_witness(mesh, &beta)?
    };
    let area = mesh.fine.total_area();
    let systole = super::systole(&mesh.surface)?;
    let norm = |label: &str, target_area: f64| {
        let s = (area / target_area).sqrt();
        let teich = est.value * s;
        let r = 0.5 * systole / s;
        let upper_bound = 4.0 / r * hodge;
        Normalized {
            convention: label.to_string(),
            teich,
            hodge,
            r,
            upper_bound,
            lower_ok: teich >= (1.0 - lower_tol) * hodge,
            upper_ok: teich <= upper_bound,
        }
    };
    let cover_area_one = norm("cover-area-1", 1.0);
    let base_area_one = norm("base-area-1", 2.0);
    Ok(HodgeTeichReport {
        hodge_norm: hodge,
        teich_estimate: est.value,
        witness_ratio: witness.ratio(),
        cover_area: area,
        systole,
        converged: est.converged,
        pass: cover_area_one.lower_ok && cover_area_one.upper_ok,
        cover_area_one,
        base_area_one,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::hodge::{anti_invariant_basis, constant_form};
    use crate::surface::DoubleCover;

    fn cx(a: f64, b: f64) -> C64 {
        C64::new(a, b)
    }

    fn quick() -> TeichOptions {
        TeichOptions { restarts: 4, ..TeichOptions::default() }
    }

    #[test]
    fn pillowcase_is_the_equality_case() {
        let d = DoubleCover::new(&catalog::pillowcase()).unwrap();
        let m = Mesh::triangulate_cover(&d, 0.25).unwrap();
        let basis = anti_invariant_basis(&m).unwrap();
        assert_eq!(basis.holomorphic.len(), 1);
        for b in [cx(1.0, 0.0), cx(0.3, -0.7)] {
            let eta = basis.antiholomorphic[0].scaled(b);
            let rep = hodge_teich_report(&m, &eta, &basis.holomorphic, &quick(), 1e-2).unwrap();
            assert!((rep.hodge_norm - b.norm()).abs() < 1e-9);
            assert!((rep.cover_area_one.teich - b.norm()).abs() < 1e-6 * b.norm(), "{rep:?}");
            assert!(rep.pass);
        }
        let zero = OneForm::zero(&m);
        let rep = hodge_teich_report(&m, &zero, &basis.holomorphic, &quick(), 1e-2).unwrap();
        assert_eq!((rep.teich_estimate, rep.hodge_norm), (0.0, 0.0));
        assert!(rep.pass);
    }

    #[test]
    fn pillowcase_witness() {
        let d = DoubleCover::new(&catalog::pillowcase()).unwrap();
        let m = Mesh::triangulate_cover(&d, 0.25).unwrap();
        let dz = constant_form(&m, cx(1.0, 0.0), cx(0.0, 0.0));
        let w = lower_bound_witness(&m, &dz).unwrap();
        assert!((w.pairing - cx(2.0, 0.0)).norm() < 1e-9, "{w:?}");
        assert!((w.beta_norm_sq - 2.0).abs() < 1e-9);
        let z = lower_bound_witness(&m, &OneForm::zero(&m)).unwrap();
        assert_eq!((z.pairing, z.l1_norm), (cx(0.0, 0.0), 0.0));
        let plain = Mesh::triangulate(&catalog::square_torus_marked(), 0.5).unwrap();
        assert!(matches!(lower_bound_witness(&plain, &OneForm::zero(&plain)), Err(Error::NonEquivariantMesh)));
    }

    #[test]
    fn q1111_sandwich_witness_and_monotonicity() {
        let d = DoubleCover::new(&catalog::q1111()).unwrap();
        let m = Mesh::triangulate_cover(&d, 0.3).unwrap();
        let basis = anti_invariant_basis(&m).unwrap();
        let hol = &basis.holomorphic;
        assert_eq!(hol.len(), 3);
        let refs: Vec<&OneForm> = hol.iter().collect();
        let beta = OneForm::combine(&refs, &[cx(0.5, 0.1), cx(-0.3, 0.8), cx(0.2, -0.4)]);
        let eta = beta.conj();

        let w = lower_bound_witness(&m, &beta).unwrap();
        assert!((w.pairing.re / w.beta_norm_sq - 1.0).abs() < 1e-2, "{w:?}");
        assert!(w.l1_norm <= w.omega_norm * w.beta_norm_sq.sqrt() * (1.0 + 1e-12));

        let rep = hodge_teich_report(&m, &eta, hol, &quick(), 1e-2).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.teich_estimate >= rep.witness_ratio * (1.0 - 1e-12));

        // enlarging the basis can only increase the supremum
        let small = teich_norm_estimate(&m, &eta, &hol[..2], &quick()).unwrap();
        let mut start = small.coefficients.clone();
        start.push(cx(0.0, 0.0));
        let full = teich_norm_estimate_from(&m, &eta, hol, &quick(), &start).unwrap();
        assert!(full.value >= small.value * (1.0 - 1e-9), "{} < {}", full.value, small.value);

        // homogeneity and unit-norm maximizer
        let twice = teich_norm_estimate(&m, &eta.scaled(cx(0.0, 2.0)), hol, &quick()).unwrap();
        let once = teich_norm_estimate(&m, &eta, hol, &quick()).unwrap();
        assert!((twice.value - 2.0 * once.value).abs() < 1e-6 * once.value);
        let q = once.maximizer.as_ref().unwrap();
        assert!((0.5 * crate::norms::qd_l1_norm(&m, q) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_beltrami_gives_zero() {
        let d = DoubleCover::new(&catalog::pillowcase()).unwrap();
        let m = Mesh::triangulate_cover(&d, 0.5).unwrap();
        let basis = anti_invariant_basis(&m).unwrap();
        let est = teich_norm_estimate(&m, &OneForm::zero(&m), &basis.holomorphic, &quick()).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
    }
}
