use super::form::he_value;
use crate::error::{Error, Result};
use crate::geom;
use crate::mesh::{Mesh, TriComplex};
use crate::C64;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

/// Cotangent weights and a Cholesky factor of the Laplacian with vertex 0 pinned.
#[derive(Debug)]
pub struct Laplacian {
    pub weights: Vec<f64>,
    llt: Llt<usize, f64>,
}

pub fn cotan_weights(c: &TriComplex) -> Vec<f64> {
    let mut w = vec![0.0; c.num_edges()];
    for he in 0..c.num_half_edges() {
        let p = &c.pos[he / 3];
        let k = he % 3;
        let o = p[(k + 2) % 3];
        let (u, v) = (p[k] - o, p[(k + 1) % 3] - o);
        w[c.edge_of[he]] += 0.5 * geom::dot(u, v) / geom::cross(u, v);
    }
    w
}

impl Laplacian {
    pub fn new(c: &TriComplex) -> Result<Laplacian> {
        let weights = cotan_weights(c);
        let n = c.num_vertices - 1;
        let mut trip = Vec::with_capacity(4 * weights.len());
        for (e, &w) in weights.iter().enumerate() {
            let he = c.edge_he[e];
            let (a, b) = (c.he_start(he), c.he_end(he));
            if a == b {
                continue;
            }
            if a > 0 {
                trip.push(Triplet::new(a - 1, a - 1, w));
            }
            if b > 0 {
                trip.push(Triplet::new(b - 1, b - 1, w));
            }
            if a > 0 && b > 0 {
                trip.push(Triplet::new(a - 1, b - 1, -w));
                trip.push(Triplet::new(b - 1, a - 1, -w));
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        let llt = m.sp_cholesky(Side::Lower).map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        Ok(Laplacian { weights, llt })
    }

    /// Adds `d f` to each closed cochain so that the result is co-closed.
    pub fn harmonic_parts(&self, c: &TriComplex, cochains: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let n = c.num_vertices - 1;
        let mut rhs = Mat::<f64>::zeros(n, 2 * cochains.len());
        for (j, vals) in cochains.iter().enumerate() {
            for (e, &w) in self.weights.iter().enumerate() {
                let he = c.edge_he[e];
                let (a, b) = (c.he_start(he), c.he_end(he));
                let flux = vals[e] * w;
                // rhs = -d0ᵀ W c
                if b > 0 {
                    rhs[(b - 1, 2 * j)] -= flux.re;
                    rhs[(b - 1, 2 * j + 1)] -= flux.im;
                }
                if a > 0 {
                    rhs[(a - 1, 2 * j)] += flux.re;
                    rhs[(a - 1, 2 * j + 1)] += flux.im;
                }
            }
        }
        let sol = self.llt.solve(&rhs);
        cochains
            .iter()
            .enumerate()
            .map(|(j, vals)| {
                let f = |v: usize| if v == 0 { C64::new(0.0, 0.0) } else { C64::new(sol[(v - 1, 2 * j)], sol[(v - 1, 2 * j + 1)]) };
                vals.iter()
                    .enumerate()
                    .map(|(e, &x)| {
                        let he = c.edge_he[e];
                        x + f(c.he_end(he)) - f(c.he_start(he))
                    })
                    .collect()
            })
            .collect()
    }

    /// Largest vertex divergence `d0ᵀ W c`, relative to the incident flux magnitude.
    pub fn codifferential_defect(&self, c: &TriComplex, values: &[C64]) -> f64 {
        let (div, mag) = self.divergence(c, values);
        div / mag.max(f64::MIN_POSITIVE)
    }

    /// Largest vertex divergence and largest incident flux magnitude.
    pub fn divergence(&self, c: &TriComplex, values: &[C64]) -> (f64, f64) {
        let mut div = vec![C64::new(0.0, 0.0); c.num_vertices];
        let mut mag = vec![0.0; c.num_vertices];
        for (e, &w) in self.weights.iter().enumerate() {
            let he = c.edge_he[e];
            let flux = values[e] * w;
            div[c.he_end(he)] += flux;
            div[c.he_start(he)] -= flux;
            mag[c.he_end(he)] += flux.norm();
            mag[c.he_start(he)] += flux.norm();
        }
        (div.iter().map(|d| d.norm()).fold(0.0, f64::max), mag.iter().cloned().fold(0.0, f64::max))
    }

    /// Cotangent Dirichlet energy `Σ w_e |c_e|²`.
    pub fn energy(&self, values: &[C64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v.norm_sqr()).sum()
    }
}

impl Mesh {
    pub fn laplacian(&self) -> Result<&Laplacian> {
        if let Some(l) = self.laplacian.get() {
            return Ok(l);
        }
        let l = Laplacian::new(&self.fine)?;
        Ok(self.laplacian.get_or_init(|| l))
    }
}

/// Face circulations of a cochain.
pub fn face_sums(c: &TriComplex, values: &[C64]) -> Vec<C64> {
    (0..c.num_faces()).map(|f| (0..3).map(|k| he_value(c, values, 3 * f + k)).sum()).collect()
}
