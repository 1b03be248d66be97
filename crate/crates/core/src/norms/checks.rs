//! Numerical checks of the disk estimates behind the Hodge/Teichmüller comparison.

use super::systole;
use crate::error::{Error, Result};
use crate::hodge::{hodge_norm, OneForm};
use crate::mesh::Mesh;
use crate::pairing::ConeChart;
use crate::C64;
use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

/// Tolerance for the mean-value chain, relative to the right-hand side.
pub const MEAN_VALUE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct MeanValueReport {
    pub seed: u64,
    pub trials: usize,
    pub violations: usize,
    /// Largest `|f(0)| / (mean of |f|)` seen.
    pub max_mean_ratio: f64,
    /// Largest `(mean of |f|) / (L² bound)` seen.
    pub max_l2_ratio: f64,
    /// Largest deviation of the quadrature mean of `f` from `f(0)`.
    pub max_mean_defect: f64,
}

fn unit_disk(rng: &mut ChaCha8Rng) -> C64 {
    let r = rng.random::<f64>().sqrt();
    C64::from_polar(r, rng.random::<f64>() * TAU)
}

/// Checks `|f(0)| ≤ (1/πr²)∫|f| ≤ ‖f‖_{L²}/(√π r)` on random polynomials of degree ≤ 10.
///
/// The disk integral of `|f|` uses Gauss–Legendre in the radius and the trapezoid rule in
/// the angle, both exact for the polynomial integrands involved, so the chain holds up
/// to rounding; the `L²` norm is evaluated in closed form.
pub fn mean_value_check(seed: u64, trials: usize) -> MeanValueReport {
    let gl = GaussLegendre::new(NonZeroUsize::new(12).unwrap());
    let nodes = gl.as_node_weight_pairs();
    let n_theta = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = MeanValueReport { seed, trials, violations: 0, max_mean_ratio: 0.0, max_l2_ratio: 0.0, max_mean_defect: 0.0 };
    for _ in 0..trials {
        let deg = rng.random_range(0..=10usize);
        let a: Vec<C64> = (0..=deg).map(|_| unit_disk(&mut rng)).collect();
        let r = 2.0 * (1.0 - rng.random::<f64>());
        let f = |z: C64| a.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c);
        let mut int_f = C64::new(0.0, 0.0);
        let mut int_abs = 0.0;
        for &(x, w) in nodes {
            let rho = 0.5 * r * (x + 1.0);
            let wr = 0.5 * r * w * rho * (TAU / n_theta as f64);
            for k in 0..n_theta {
                let v = f(C64::from_polar(rho, TAU * k as f64 / n_theta as f64));
                int_f += v * wr;
                int_abs += v.norm() * wr;
            }
        }
        let disk = PI * r * r;
        let l2: f64 = a.iter().enumerate().map(|(k, c)| PI * c.norm_sqr() * r.powi(2 * k as i32 + 2) / (k as f64 + 1.0)).sum::<f64>().sqrt();
        let f0 = a[0].norm();
        let mean = int_abs / disk;
        let bound = l2 / (PI.sqrt() * r);
        let scale = bound.max(f64::MIN_POSITIVE);
        if f0 - mean > MEAN_VALUE_TOL * scale || mean - bound > MEAN_VALUE_TOL * scale {
            rep.violations += 1;
        }
        if mean > 0.0 {
            rep.max_mean_ratio = rep.max_mean_ratio.max(f0 / mean);
        }
        if bound > 0.0 {
            rep.max_l2_ratio = rep.max_l2_ratio.max(mean / bound);
        }
        rep.max_mean_defect = rep.max_mean_defect.max((int_f / disk - a[0]).norm() / scale);
    }
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct PointwiseReport {
    pub faces_checked: usize,
    pub violations: usize,
    /// Largest `|β/ω| · √π r_low / ‖β‖` over the faces (at most 1 when the bound holds).
    pub max_ratio: f64,
    pub beta_norm: f64,
    pub chart_radius: f64,
}

/// Lower bounds for the embedded-disk radius at each face centroid: the distance to Σ,
/// capped at `0.45 · systole`.
pub fn embedded_radius_lower_bounds(mesh: &Mesh) -> Result<(Vec<f64>, f64)> {
    let cap = 0.45 * systole(&mesh.surface)?;
    let c = &mesh.fine;
    let mut r = vec![cap; c.num_faces()];
    for v in mesh.sigma_vertices() {
        let chart = ConeChart::new(mesh, v, cap)?;
        for pf in &chart.faces {
            let z = (pf.pos[0] + pf.pos[1] + pf.pos[2]) / 3.0;
            let d = (z - pf.center).norm();
            r[pf.face] = r[pf.face].min(d);
        }
    }
    Ok((r, cap))
}

/// Checks `|β/ω| ≤ ‖β‖ / (√π r_low)` at every face centroid.
pub fn pointwise_ratio_check(mesh: &Mesh, beta: &OneForm) -> Result<PointwiseReport> {
    let (r_low, cap) = embedded_radius_lower_bounds(mesh)?;
    let norm = hodge_norm(mesh, beta);
    let mut rep = PointwiseReport { faces_checked: r_low.len(), violations: 0, max_ratio: 0.0, beta_norm: norm, chart_radius: cap };
    for (f, &r) in r_low.iter().enumerate() {
        let val = beta.covectors[f][0].norm();
        let bound = norm / (PI.sqrt() * r);
        if val > bound * (1.0 + 1e-12) {
            rep.violations += 1;
        }
        if norm > 0.0 {
            rep.max_ratio = rep.max_ratio.max(val / bound);
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct IntBetaReport {
    pub vertex: usize,
    pub order: i32,
    pub radius: f64,
    pub samples: usize,
    /// Largest `|∫_{z₀}^z β|` over the sampled points.
    pub max_abs: f64,
    pub beta_norm: f64,
    /// `‖β‖ ln(2(n+1))`.
    pub log_bound: f64,
    /// `‖β‖`, asserted only at double zeros.
    pub n2_bound: Option<f64>,
    pub violations: usize,
}

/// Samples `|∫_{z₀}^z β|` over the flat disk of radius `r` around the vertex `z₀` along
/// radial segments, and compares with `‖β‖ ln(2(n+1))` (and `‖β‖` when `n = 2`).
///
/// The disk of radius `2r` must embed without meeting another point of Σ.
pub fn int_beta_bound_check(mesh: &Mesh, beta: &OneForm, vertex: usize, r: f64) -> Result<IntBetaReport> {
    if vertex >= mesh.vertices.len() {
        return Err(Error::InvalidInput(format!("vertex {vertex} out of range")));
    }
    let chart = ConeChart::new(mesh, vertex, 2.0 * r).map_err(|e| match e {
        Error::RadiusTooLarge { limit, .. } => Error::DiskNotEmbedded { point: vertex, radius: r, limit: 0.5 * limit },
        e => e,
    })?;
    let n = chart.order;
    let norm = hodge_norm(mesh, beta);
    let log_bound = norm * (2.0 * f64::from(n + 1)).ln();
    let n2_bound = (n == 2).then_some(norm);
    let rays = 64 * (n as usize + 1);
    let steps = 8;
    let mut max_abs: f64 = 0.0;
    for k in 0..rays {
        let theta = chart.start + chart.angle * k as f64 / rays as f64;
        let d = C64::from_polar(1.0, theta);
        let segs = chart.ray(theta, r);
        for s in 1..=steps {
            let t = r * s as f64 / steps as f64;
            let mut g = C64::new(0.0, 0.0);
            for seg in &segs {
                let hi = seg.t1.min(t);
                if hi > seg.t0 {
                    let [a, b] = beta.covectors[chart.faces[seg.patch].face];
                    g += (a * d + b * d.conj()) * (seg.weight * (hi - seg.t0));
                }
            }
            max_abs = max_abs.max(g.norm());
        }
    }
    let tol = 1e-12 * norm;
    let mut violations = usize::from(max_abs > log_bound + tol);
    if let Some(b) = n2_bound {
        violations += usize::from(max_abs > b + tol);
    }
    Ok(IntBetaReport { vertex, order: n, radius: r, samples: rays * steps, max_abs, beta_norm: norm, log_bound, n2_bound, violations })
}
