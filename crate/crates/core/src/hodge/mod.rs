//! Discrete Hodge theory: harmonic representatives, type decomposition and
//! bases of holomorphic forms.

mod form;
mod laplace;

pub use form::OneForm;
pub use laplace::{cotan_weights, face_sums, Laplacian};

use crate::error::{Error, Result};
use crate::mesh::{Homology, Mesh};
use crate::C64;
use nalgebra::DMatrix;
use serde::Serialize;

const CLOSED_TOL: f64 = 1e-9;

/// Harmonic representative of the class of a closed cochain.
pub fn harmonic_representative(mesh: &Mesh, cochain: &[C64]) -> Result<OneForm> {
    let mut v = harmonic_batch(mesh, &[cochain.to_vec()])?;
    Ok(v.remove(0))
}

fn harmonic_batch(mesh: &Mesh, cochains: &[Vec<C64>]) -> Result<Vec<OneForm>> {
    let c = &mesh.fine;
    for vals in cochains {
        let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let defect = face_sums(c, vals).iter().map(|s| s.norm()).fold(0.0, f64::max) / scale;
        if defect > CLOSED_TOL {
            return Err(Error::NotClosed { defect });
        }
    }
    let lap = mesh.laplacian()?;
    let out = lap.harmonic_parts(c, cochains);
    for (vals, input) in out.iter().zip(cochains) {
        // relative to the input too: an exact cochain has a round-off-sized harmonic part
        let (div, mag) = lap.divergence(c, vals);
        let d = div / mag.max(lap.divergence(c, input).1).max(f64::MIN_POSITIVE);
        if !(d <= 1e-8) {
            return Err(Error::SolverFailure(format!("codifferential residual {d:e}")));
        }
    }
    Ok(out.into_iter().map(|v| OneForm::from_cochain(mesh, v)).collect())
}

/// Relative codifferential of a cochain form.
pub fn codifferential_defect(mesh: &Mesh, form: &OneForm) -> Result<f64> {
    Ok(mesh.laplacian()?.codifferential_defect(&mesh.fine, &form.edge_values))
}

/// Cotangent Dirichlet energy of a cochain form.
pub fn energy(mesh: &Mesh, form: &OneForm) -> Result<f64> {
    Ok(mesh.laplacian()?.energy(&form.edge_values))
}

/// `(η^{1,0}, η^{0,1})` from the per-face covectors.
pub fn type_decompose(mesh: &Mesh, eta: &OneForm) -> (OneForm, OneForm) {
    let z = C64::new(0.0, 0.0);
    let p10 = eta.covectors.iter().map(|c| [c[0], z]).collect();
    let p01 = eta.covectors.iter().map(|c| [z, c[1]]).collect();
    (OneForm::from_covectors(mesh, p10), OneForm::from_covectors(mesh, p01))
}

/// Hermitian product `Σ_f area (α ᾱ' + β β̄')`.
pub fn inner(mesh: &Mesh, a: &OneForm, b: &OneForm) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for f in 0..mesh.fine.num_faces() {
        let (x, y) = (a.covectors[f], b.covectors[f]);
        s += (x[0] * y[0].conj() + x[1] * y[1].conj()) * mesh.fine.area(f);
    }
    s
}

/// `sqrt(Σ_f area (|α|² + |β|²))`, so that `‖dz‖² = area`.
pub fn hodge_norm(mesh: &Mesh, eta: &OneForm) -> f64 {
    inner(mesh, eta, eta).re.max(0.0).sqrt()
}

fn part_norm_sqr(mesh: &Mesh, eta: &OneForm, part: usize) -> f64 {
    (0..mesh.fine.num_faces()).map(|f| mesh.fine.area(f) * eta.covectors[f][part].norm_sqr()).sum()
}

/// `‖η^{0,1}‖ / ‖η‖`.
pub fn antiholomorphic_fraction(mesh: &Mesh, eta: &OneForm) -> f64 {
    let (a, b) = (part_norm_sqr(mesh, eta, 0), part_norm_sqr(mesh, eta, 1));
    (b / (a + b).max(f64::MIN_POSITIVE)).sqrt()
}

fn gram(mesh: &Mesh, forms: &[OneForm], part: Option<usize>) -> DMatrix<C64> {
    let n = forms.len();
    let c = &mesh.fine;
    DMatrix::from_fn(n, n, |i, j| {
        let mut s = C64::new(0.0, 0.0);
        for f in 0..c.num_faces() {
            let (x, y) = (forms[j].covectors[f], forms[i].covectors[f]);
            let v = match part {
                Some(p) => x[p] * y[p].conj(),
                None => x[0] * y[0].conj() + x[1] * y[1].conj(),
            };
            s += v * c.area(f);
        }
        s
    })
}

/// Harmonic forms dual to the homology generators.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicBasis {
    pub forms: Vec<OneForm>,
    /// `period_matrix[(j, k)] = ∫_{γ_j} forms[k]`.
    pub period_matrix: DMatrix<C64>,
    pub gram: DMatrix<C64>,
    pub homology: Homology,
}

pub fn harmonic_basis(mesh: &Mesh) -> Result<HarmonicBasis> {
    let homology = mesh.homology();
    let cochains: Vec<Vec<C64>> = homology.cocycles.iter().map(|z| z.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
    let forms = harmonic_batch(mesh, &cochains)?;
    let n = forms.len();
    let period_matrix = DMatrix::from_fn(n, n, |j, k| forms[k].integrate(&homology.cycles[j]));
    let gram = gram(mesh, &forms, None);
    Ok(HarmonicBasis { forms, period_matrix, gram, homology })
}

/// Holomorphic one-forms as exact (1,0)-projections of closed forms.
#[derive(Clone, Debug, Serialize)]
pub struct HolomorphicBasis {
    /// Orthonormal `(1,0)` forms.
    pub forms: Vec<OneForm>,
    /// The closed harmonic forms they were projected from.
    pub closed: Vec<OneForm>,
    /// `‖θ^{0,1}‖² / ‖θ‖²` for each closed form; zero in the continuum.
    pub residual_fractions: Vec<f64>,
}

/// The `dim`-dimensional subspace of `span(forms)` with the least `(0,1)` energy.
fn holomorphic_subspace(mesh: &Mesh, forms: &[OneForm], dim: usize) -> Result<HolomorphicBasis> {
    let n = forms.len();
    if dim == 0 {
        return Ok(HolomorphicBasis { forms: vec![], closed: vec![], residual_fractions: vec![] });
    }
    let g = gram(mesh, forms, None);
    let m01 = gram(mesh, forms, Some(1));
    let chol = g.clone().cholesky().ok_or(Error::RankDeficient { expected: n, found: 0 })?;
    let l = chol.l();
    let x = l.solve_lower_triangular(&m01).ok_or_else(|| Error::SolverFailure("triangular solve".into()))?;
    let s = l.solve_lower_triangular(&x.adjoint()).ok_or_else(|| Error::SolverFailure("triangular solve".into()))?;
    let s = (&s + s.adjoint()) * C64::new(0.5, 0.0);
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let small: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let found = small.iter().filter(|&&v| v < 0.5).count();
    if found != dim {
        return Err(Error::RankDeficient { expected: dim, found });
    }
    let lh = l.adjoint();
    let refs: Vec<&OneForm> = forms.iter().collect();
    let mut closed = Vec::with_capacity(dim);
    for &i in order.iter().take(dim) {
        let u = eig.eigenvectors.column(i).into_owned();
        let c = lh.solve_upper_triangular(&u).ok_or_else(|| Error::SolverFailure("triangular solve".into()))?;
        // fix the phase so the largest coefficient is real and positive
        let big = c.iter().cloned().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let phase = big.conj() / big.norm();
        let coeffs: Vec<C64> = c.iter().map(|v| v * phase).collect();
        closed.push(OneForm::combine(&refs, &coeffs));
    }
    // Gram–Schmidt on the (1,0) parts, mirrored on the closed forms
    let mut holo: Vec<OneForm> = Vec::with_capacity(dim);
    let mut closed_out: Vec<OneForm> = Vec::with_capacity(dim);
    for theta in closed {
        let (mut b, _) = type_decompose(mesh, &theta);
        let mut t = theta;
        for (prev_b, prev_t) in holo.iter().zip(&closed_out) {
            let p = inner(mesh, &b, prev_b);
            b = OneForm::combine(&[&b, prev_b], &[C64::new(1.0, 0.0), -p]);
            t = OneForm::combine(&[&t, prev_t], &[C64::new(1.0, 0.0), -p]);
        }
        let nrm = hodge_norm(mesh, &b);
        let k = C64::new(1.0 / nrm, 0.0);
        holo.push(b.scaled(k));
        closed_out.push(t.scaled(k));
    }
    let residual_fractions = closed_out
        .iter()
        .map(|t| part_norm_sqr(mesh, t, 1) / (part_norm_sqr(mesh, t, 0) + part_norm_sqr(mesh, t, 1)))
        .collect();
    let holo = holo.into_iter().map(|b| OneForm::from_covectors(mesh, b.covectors)).collect();
    Ok(HolomorphicBasis { forms: holo, closed: closed_out, residual_fractions })
}

pub fn holomorphic_basis(mesh: &Mesh) -> Result<HolomorphicBasis> {
    let hb = harmonic_basis(mesh)?;
    let g = hb.forms.len() / 2;
    holomorphic_subspace(mesh, &hb.forms, g)
}

impl HolomorphicBasis {
    /// Periods `A⁻¹ B` of the closed forms over a symplectic basis of cycles.
    pub fn normalized_periods(&self, homology: &Homology) -> Result<DMatrix<C64>> {
        let g = self.closed.len();
        let s = crate::mesh::symplectic_basis(&homology.intersection);
        let raw = DMatrix::from_fn(g, 2 * g, |i, j| self.closed[i].integrate(&homology.cycles[j]));
        let st = s.transpose().map(|v| C64::new(v, 0.0));
        let p = raw * st;
        let a = p.columns(0, g).into_owned();
        let b = p.columns(g, g).into_owned();
        let ainv = a.try_inverse().ok_or_else(|| Error::SolverFailure("singular A-periods".into()))?;
        Ok(ainv * b)
    }
}

/// Pull-back by the deck involution: `(τ^*c)(e) = c(τ e)`, covectors `-η_{τ f}`.
pub fn tau_pullback(mesh: &Mesh, eta: &OneForm) -> Result<OneForm> {
    let inv = mesh.involution.as_ref().ok_or(Error::NonEquivariantMesh)?;
    let c = &mesh.fine;
    let edge_values = c
        .edge_he
        .iter()
        .map(|&he| {
            let img = 3 * inv.face[he / 3] + he % 3;
            eta.along(mesh, img)
        })
        .collect();
    let covectors = (0..c.num_faces()).map(|f| eta.covectors[inv.face[f]].map(|v| -v)).collect();
    Ok(OneForm { edge_values, covectors, ..eta.clone() })
}

fn check_equivariant(mesh: &Mesh) -> Result<()> {
    let inv = mesh.involution.as_ref().ok_or(Error::NonEquivariantMesh)?;
    let c = &mesh.fine;
    let scale = c.pos.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
    for f in 0..c.num_faces() {
        let g = inv.face[f];
        if inv.face[g] != f {
            return Err(Error::NonEquivariantMesh);
        }
        for k in 0..3 {
            if (c.pos[g][k] + c.pos[f][k]).norm() > 1e-12 * scale || inv.vertex[c.faces[f][k]] != c.faces[g][k] {
                return Err(Error::NonEquivariantMesh);
            }
        }
    }
    Ok(())
}

/// Bases of the anti-invariant forms on a lifted cover mesh.
#[derive(Clone, Debug, Serialize)]
pub struct AntiInvariantBasis {
    /// Orthonormal closed harmonic anti-invariant forms.
    pub harmonic: Vec<OneForm>,
    /// Orthonormal anti-invariant `(1,0)` forms.
    pub holomorphic: Vec<OneForm>,
    pub holomorphic_closed: Vec<OneForm>,
    /// Conjugates of `holomorphic`.
    pub antiholomorphic: Vec<OneForm>,
}

pub fn anti_invariant_basis(mesh: &Mesh) -> Result<AntiInvariantBasis> {
    check_equivariant(mesh)?;
    let hb = harmonic_basis(mesh)?;
    let mut projected = Vec::with_capacity(hb.forms.len());
    for h in &hb.forms {
        let t = tau_pullback(mesh, h)?;
        projected.push(OneForm::combine(&[h, &t], &[C64::new(0.5, 0.0), C64::new(-0.5, 0.0)]));
    }
    let g = gram(mesh, &projected, None);
    let eig = g.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut keep: Vec<usize> = (0..projected.len()).filter(|&i| eig.eigenvalues[i] > 1e-8 * top).collect();
    keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let refs: Vec<&OneForm> = projected.iter().collect();
    let harmonic: Vec<OneForm> = keep
        .iter()
        .map(|&i| {
            let s = 1.0 / eig.eigenvalues[i].sqrt();
            let coeffs: Vec<C64> = eig.eigenvectors.column(i).iter().map(|v| v * s).collect();
            OneForm::combine(&refs, &coeffs)
        })
        .collect();
    let fixed = (0..mesh.fine.num_vertices).filter(|&v| mesh.involution.as_ref().unwrap().vertex[v] == v).count();
    let gcover = mesh.genus();
    let gbase = (gcover + 1 - fixed / 2) / 2;
    let expected = 2 * (gcover - gbase);
    if harmonic.len() != expected {
        return Err(Error::RankDeficient { expected, found: harmonic.len() });
    }
    let hol = holomorphic_subspace(mesh, &harmonic, expected / 2)?;
    let antiholomorphic = hol.forms.iter().map(|b| OneForm::from_covectors(mesh, b.conj().covectors)).collect();
    Ok(AntiInvariantBasis { harmonic, holomorphic: hol.forms, holomorphic_closed: hol.closed, antiholomorphic })
}

/// `‖η + τ^*η‖ / ‖η‖`; zero for anti-invariant forms.
pub fn anti_invariance_defect(mesh: &Mesh, eta: &OneForm) -> Result<f64> {
    let t = tau_pullback(mesh, eta)?;
    let s = OneForm::combine(&[eta, &t], &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
    Ok(hodge_norm(mesh, &s) / hodge_norm(mesh, eta).max(f64::MIN_POSITIVE))
}

/// Closed cochain of `a dz + b dz̄` on a translation mesh.
pub fn constant_form(mesh: &Mesh, a: C64, b: C64) -> OneForm {
    let vals = mesh.omega_cochain().into_iter().map(|w| a * w + b * w.conj()).collect();
    OneForm::from_cochain(mesh, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::surface::DoubleCover;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn torus_dx_is_already_harmonic() {
        let m = Mesh::triangulate(&catalog::square_torus(), 0.1).unwrap();
        let dx = constant_form(&m, c(0.5), c(0.5));
        let h = harmonic_representative(&m, &dx.edge_values).unwrap();
        assert!((energy(&m, &h).unwrap() - 1.0).abs() < 1e-9);
        assert!((hodge_norm(&m, &h) - 0.5f64.sqrt()).abs() < 1e-9);
        // an exact perturbation is removed again
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f: Vec<f64> = (0..m.fine.num_vertices).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pert: Vec<C64> = m
            .fine
            .edge_he
            .iter()
            .enumerate()
            .map(|(e, &he)| dx.edge_values[e] + c(f[m.fine.he_end(he)] - f[m.fine.he_start(he)]))
            .collect();
        let h2 = harmonic_representative(&m, &pert).unwrap();
        let diff = h2.edge_values.iter().zip(&h.edge_values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
        let h3 = harmonic_representative(&m, &h2.edge_values).unwrap();
        let diff = h3.edge_values.iter().zip(&h2.edge_values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn non_closed_cochain_is_rejected() {
        let m = Mesh::triangulate(&catalog::square_torus(), 0.25).unwrap();
        let mut v = vec![c(0.0); m.fine.num_edges()];
        v[0] = c(1.0);
        assert!(matches!(harmonic_representative(&m, &v), Err(Error::NotClosed { .. })));
    }

    #[test]
    fn type_decomposition_is_orthogonal() {
        let m = Mesh::triangulate(&catalog::octagon(), 0.25).unwrap();
        let hb = harmonic_basis(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coeffs: Vec<C64> = (0..4).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let refs: Vec<&OneForm> = hb.forms.iter().collect();
        let eta = OneForm::combine(&refs, &coeffs);
        let (a, b) = type_decompose(&m, &eta);
        let lhs = hodge_norm(&m, &eta).powi(2);
        let rhs = hodge_norm(&m, &a).powi(2) + hodge_norm(&m, &b).powi(2);
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
        assert!(inner(&m, &a, &b).norm() < 1e-14);
        // periods of the dual basis
        for j in 0..4 {
            for k in 0..4 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((hb.period_matrix[(j, k)] - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn torus_holomorphic_basis_is_exact() {
        for h in [0.3, 0.1] {
            let m = Mesh::triangulate(&catalog::square_torus_marked(), h).unwrap();
            let hb = holomorphic_basis(&m).unwrap();
            assert_eq!(hb.forms.len(), 1);
            let a0 = hb.forms[0].covectors[0][0];
            assert!((a0.norm() - 1.0).abs() < 1e-9);
            for cv in &hb.forms[0].covectors {
                assert!((cv[0] - a0).norm() < 1e-9 && cv[1].norm() == 0.0);
            }
            assert!(hb.residual_fractions[0] < 1e-18);
        }
    }

    #[test]
    fn octagon_holomorphic_basis() {
        let m = Mesh::triangulate(&catalog::octagon(), 0.2).unwrap();
        let hb = holomorphic_basis(&m).unwrap();
        assert_eq!(hb.forms.len(), 2);
        for r in &hb.residual_fractions {
            assert!(*r < 0.05, "{r}");
        }
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((inner(&m, &hb.forms[i], &hb.forms[j]) - expect).norm() < 1e-10);
            }
        }
        let per = hb.normalized_periods(&m.homology()).unwrap();
        // the normalized period matrix is symmetric with positive definite imaginary part
        assert!((&per - per.transpose()).norm() < 0.05 * per.norm());
        let im = per.map(|z| z.im);
        assert!(im.symmetric_eigen().eigenvalues.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn anti_invariant_bases() {
        let d = DoubleCover::new(&catalog::pillowcase()).unwrap();
        let m = Mesh::triangulate_cover(&d, 0.2).unwrap();
        let ai = anti_invariant_basis(&m).unwrap();
        assert_eq!(ai.harmonic.len(), 2);
        assert_eq!(ai.holomorphic.len(), 1);
        let cv = ai.holomorphic[0].covectors[0][0];
        assert!(ai.holomorphic[0].covectors.iter().all(|v| (v[0] - cv).norm() < 1e-9));

        let d = DoubleCover::new(&catalog::q1111()).unwrap();
        let m = Mesh::triangulate_cover(&d, 0.25).unwrap();
        let ai = anti_invariant_basis(&m).unwrap();
        assert_eq!(ai.harmonic.len(), 6);
        assert_eq!(ai.holomorphic.len(), 3);
        for f in ai.harmonic.iter().chain(&ai.holomorphic).chain(&ai.antiholomorphic) {
            assert!(anti_invariance_defect(&m, f).unwrap() < 1e-9);
            let t = tau_pullback(&m, f).unwrap();
            assert!((hodge_norm(&m, &t) - hodge_norm(&m, f)).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_mesh_has_no_involution() {
        let m = Mesh::triangulate(&catalog::octagon(), 0.4).unwrap();
        assert!(matches!(anti_invariant_basis(&m), Err(Error::NonEquivariantMesh)));
    }
}
