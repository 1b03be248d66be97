use crate::mesh::{Cycle, Mesh, TriComplex};
use crate::C64;
use serde::Serialize;

/// A complex one-form on a mesh.
///
/// `edge_values` are integrals along canonical half-edges; `covectors[f] = (α, β)`
/// describe `α dz + β dz̄` in the chart of face `f`. Forms built from cochains
/// carry both; forms built from covectors alone (type projections) get averaged
/// edge values and `is_cochain = false`.
#[derive(Clone, Debug, Serialize)]
pub struct OneForm {
    pub edge_values: Vec<C64>,
    pub covectors: Vec<[C64; 2]>,
    /// Largest face circulation, relative to the largest edge value.
    pub closedness_defect: f64,
    /// Largest mismatch between edge values and the covectors, relative.
    pub reconstruction_residual: f64,
    pub is_cochain: bool,
}

fn scale_of(values: &[C64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

pub(crate) fn he_value(c: &TriComplex, values: &[C64], he: usize) -> C64 {
    values[c.edge_of[he]] * c.he_orientation(he)
}

/// Least-squares `(α, β)` with `α v_k + β v̄_k ≈ c_k` on the three sides.
fn fit_covector(v: [C64; 3], c: [C64; 3]) -> [C64; 2] {
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    let mut r = [C64::new(0.0, 0.0); 2];
    for k in 0..3 {
        let row = [v[k], v[k].conj()];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += row[i].conj() * row[j];
            }
            r[i] += row[i].conj() * c[k];
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [(r[0] * m[1][1] - m[0][1] * r[1]) / det, (m[0][0] * r[1] - m[1][0] * r[0]) / det]
}

impl OneForm {
    pub fn from_cochain(mesh: &Mesh, values: Vec<C64>) -> OneForm {
        let c = &mesh.fine;
        let scale = scale_of(&values);
        let mut defect: f64 = 0.0;
        let mut resid: f64 = 0.0;
        let covectors = (0..c.num_faces())
            .map(|f| {
                let v = [0, 1, 2].map(|k| c.he_vector(3 * f + k));
                let e = [0, 1, 2].map(|k| he_value(c, &values, 3 * f + k));
                defect = defect.max((e[0] + e[1] + e[2]).norm());
                let cv = fit_covector(v, e);
                for k in 0..3 {
                    resid = resid.max((cv[0] * v[k] + cv[1] * v[k].conj() - e[k]).norm());
                }
                cv
            })
            .collect();
        OneForm {
            edge_values: values,
            covectors,
            closedness_defect: defect / scale,
            reconstruction_residual: resid / scale,
            is_cochain: true,
        }
    }

    pub fn from_covectors(mesh: &Mesh, covectors: Vec<[C64; 2]>) -> OneForm {
        let c = &mesh.fine;
        let values: Vec<C64> = c
            .edge_he
            .iter()
            .map(|&he| {
                let tw = c.twin[he];
                let a = covectors[he / 3];
                let b = covectors[tw / 3];
                let (v, w) = (c.he_vector(he), c.he_vector(tw));
                let x = a[0] * v + a[1] * v.conj();
                let y = b[0] * w + b[1] * w.conj();
                (x - y) * 0.5
            })
            .collect();
        let scale = scale_of(&values);
        let mut defect: f64 = 0.0;
        for f in 0..c.num_faces() {
            let s: C64 = (0..3).map(|k| he_value(c, &values, 3 * f + k)).sum();
            defect = defect.max(s.norm());
        }
        OneForm {
            edge_values: values,
            covectors,
            closedness_defect: defect / scale,
            reconstruction_residual: 0.0,
            is_cochain: false,
        }
    }

    pub fn zero(mesh: &Mesh) -> OneForm {
        OneForm::from_cochain(mesh, vec![C64::new(0.0, 0.0); mesh.fine.num_edges()])
    }

    /// Closed within `tol` and consistent with its covectors.
    pub fn is_closed(&self, tol: f64) -> bool {
        self.is_cochain && self.closedness_defect <= tol && self.reconstruction_residual <= tol
    }

    pub fn integrate(&self, cycle: &Cycle) -> C64 {
        cycle.edges.iter().map(|&(e, s)| self.edge_values[e] * s).sum()
    }

    /// `Σ coeffs[i] · forms[i]`; the flags are combined conservatively.
    pub fn combine(forms: &[&OneForm], coeffs: &[C64]) -> OneForm {
        let ne = forms[0].edge_values.len();
        let nf = forms[0].covectors.len();
        let mut edge_values = vec![C64::new(0.0, 0.0); ne];
        let mut covectors = vec![[C64::new(0.0, 0.0); 2]; nf];
        for (form, &a) in forms.iter().zip(coeffs) {
            for (x, y) in edge_values.iter_mut().zip(&form.edge_values) {
                *x += a * y;
            }
            for (x, y) in covectors.iter_mut().zip(&form.covectors) {
                x[0] += a * y[0];
                x[1] += a * y[1];
            }
        }
        OneForm {
            edge_values,
            covectors,
            closedness_defect: forms.iter().map(|f| f.closedness_defect).fold(0.0, f64::max),
            reconstruction_residual: forms.iter().map(|f| f.reconstruction_residual).fold(0.0, f64::max),
            is_cochain: forms.iter().all(|f| f.is_cochain),
        }
    }

    pub fn scaled(&self, a: C64) -> OneForm {
        OneForm::combine(&[self], &[a])
    }

    /// Complex conjugate form: `conj(α dz + β dz̄) = β̄ dz + ᾱ dz̄`.
    pub fn conj(&self) -> OneForm {
        OneForm {
            edge_values: self.edge_values.iter().map(|v| v.conj()).collect(),
            covectors: self.covectors.iter().map(|c| [c[1].conj(), c[0].conj()]).collect(),
            ..self.clone()
        }
    }

    /// Half-edge value.
    pub fn along(&self, mesh: &Mesh, he: usize) -> C64 {
        he_value(&mesh.fine, &self.edge_values, he)
    }
}
