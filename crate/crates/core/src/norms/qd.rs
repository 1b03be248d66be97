use crate::error::{Error, Result};
use crate::hodge::OneForm;
use crate::mesh::Mesh;
use crate::C64;
use nalgebra::DMatrix;

/// A quadratic differential `Σ c_ij φ_i φ_j` built from holomorphic one-form factors.
///
/// Factors are stored as their per-face `dz` coefficients, so the face value of the
/// product in the chart of face `f` is `Σ c_ij a_i(f) a_j(f)` (times `dz²`).
#[derive(Clone, Debug)]
pub struct QDElement {
    factors: Vec<Vec<C64>>,
    coeffs: DMatrix<C64>,
    /// Largest relative `(0,1)`-part among the factors.
    pub factor_defect: f64,
}

impl QDElement {
    pub fn new(factors: Vec<Vec<C64>>, coeffs: DMatrix<C64>) -> Result<QDElement> {
        let n = factors.len();
        if coeffs.nrows() != n || coeffs.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "coefficient matrix is {}x{}, expected {n}x{n}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        if let Some(f) = factors.first() {
            if factors.iter().any(|g| g.len() != f.len()) {
                return Err(Error::InvalidInput("factors live on different meshes".into()));
            }
        }
        let coeffs = (&coeffs + coeffs.transpose()) * C64::new(0.5, 0.0);
        Ok(QDElement { factors, coeffs, factor_defect: 0.0 })
    }

    /// Products of the `(1,0)` parts of the given forms.
    pub fn from_forms(forms: &[&OneForm], coeffs: DMatrix<C64>) -> Result<QDElement> {
        let factors = forms.iter().map(|f| f.covectors.iter().map(|c| c[0]).collect()).collect();
        let mut q = QDElement::new(factors, coeffs)?;
        q.factor_defect = forms
            .iter()
            .map(|f| {
                let a: f64 = f.covectors.iter().map(|c| c[0].norm_sqr()).sum();
                let b: f64 = f.covectors.iter().map(|c| c[1].norm_sqr()).sum();
                if a > 0.0 {
                    (b / a).sqrt()
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        Ok(q)
    }

    /// `c ω²`, i.e. `c dz²` in every chart.
    pub fn constant(mesh: &Mesh, c: C64) -> QDElement {
        let one = vec![C64::new(1.0, 0.0); mesh.fine.num_faces()];
        QDElement { factors: vec![one], coeffs: DMatrix::from_element(1, 1, c), factor_defect: 0.0 }
    }

    pub fn omega_squared(mesh: &Mesh) -> QDElement {
        QDElement::constant(mesh, C64::new(1.0, 0.0))
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Vec<C64>] {
        &self.factors
    }

    pub fn coefficient_matrix(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    /// Same factors, new coefficients.
    pub fn with_coefficients(&self, coeffs: DMatrix<C64>) -> Result<QDElement> {
        let mut q = QDElement::new(self.factors.clone(), coeffs)?;
        q.factor_defect = self.factor_defect;
        Ok(q)
    }

    pub fn scaled(&self, s: C64) -> QDElement {
        QDElement { factors: self.factors.clone(), coeffs: &self.coeffs * s, factor_defect: self.factor_defect }
    }

    /// `dz²` coefficient on every face.
    pub fn face_values(&self) -> Vec<C64> {
        let n = self.factors.len();
        let nf = self.factors.first().map_or(0, |f| f.len());
        (0..nf)
            .map(|f| {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..n {
                    let ai = self.factors[i][f];
                    for j in 0..n {
                        let c = self.coeffs[(i, j)];
                        if c != C64::new(0.0, 0.0) {
                            s += c * ai * self.factors[j][f];
                        }
                    }
                }
                s
            })
            .collect()
    }
}

/// `∫ |q|` by one-point quadrature per face.
pub fn qd_l1_norm(mesh: &Mesh, q: &QDElement) -> f64 {
    let c = &mesh.fine;
    q.face_values().iter().enumerate().map(|(f, v)| v.norm() * c.area(f)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn l1_norm_of_omega_squared_is_area() {
        let m = Mesh::triangulate(&catalog::square_torus(), 0.25).unwrap();
        assert!((qd_l1_norm(&m, &QDElement::omega_squared(&m)) - 1.0).abs() < 1e-12);
        let o = Mesh::triangulate(&catalog::octagon(), 0.3).unwrap();
        let area = 2.0 * (1.0 + 2f64.sqrt());
        assert!((qd_l1_norm(&o, &QDElement::omega_squared(&o)) - area).abs() < 1e-9);
        let q = QDElement::constant(&o, C64::new(0.0, -3.0));
        assert!((qd_l1_norm(&o, &q) - 3.0 * area).abs() < 1e-9);
    }

    #[test]
    fn coefficients_are_symmetrized() {
        let f = vec![vec![C64::new(1.0, 0.0)], vec![C64::new(2.0, 0.0)]];
        let c = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let q = QDElement::new(f, c).unwrap();
        assert_eq!(q.coefficient_matrix()[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(q.face_values()[0], C64::new(4.0, 0.0));
    }
}
