//! Small planar helpers shared by the mesh and pairing code.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[inline]
pub fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

#[inline]
pub fn dot(a: C64, b: C64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// Signed area (positive for counter-clockwise order).
pub fn polygon_area(v: &[C64]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>() * 0.5
}

pub fn triangle_area(p: &[C64; 3]) -> f64 {
    0.5 * cross(p[1] - p[0], p[2] - p[0])
}

/// Area centroid of a simple polygon.
pub fn polygon_centroid(v: &[C64]) -> C64 {
    let n = v.len();
    let o = v[0];
    let mut acc = C64::new(0.0, 0.0);
    let mut a = 0.0;
    for i in 1..n - 1 {
        let t = cross(v[i] - o, v[i + 1] - o);
        acc += (v[i] + v[i + 1] - 2.0 * o) * (t / 3.0);
        a += t;
    }
    o + acc / a
}

fn segments_cross(a: C64, b: C64, c: C64, d: C64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn point_on_segment(p: C64, a: C64, b: C64, tol: f64) -> bool {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm() <= tol;
    }
    let t = dot(p - a, ab) / l2;
    t > 0.0 && t < 1.0 && (a + ab * t - p).norm() <= tol
}

/// Checks that a polygon is simple and counter-clockwise. Returns a reason on failure.
pub fn check_simple_ccw(v: &[C64]) -> Result<(), String> {
    let n = v.len();
    if n < 3 {
        return Err(format!("{n} vertices"));
    }
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    for i in 0..n {
        if (v[(i + 1) % n] - v[i]).norm() <= tol {
            return Err(format!("edge {i} has zero length"));
        }
    }
    if polygon_area(v) <= 0.0 {
        return Err("vertices are not in counter-clockwise order".into());
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if !adjacent && segments_cross(a, b, c, d) {
                return Err(format!("edges {i} and {j} intersect"));
            }
        }
        for (k, &p) in v.iter().enumerate() {
            if k != i && k != (i + 1) % n && point_on_segment(p, a, b, tol) {
                return Err(format!("vertex {k} touches edge {i}"));
            }
        }
    }
    Ok(())
}

/// Convex (allowing straight angles) and counter-clockwise.
pub fn is_convex(v: &[C64]) -> bool {
    let n = v.len();
    let scale = v.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).max(1.0);
    (0..n).all(|i| cross(v[(i + 1) % n] - v[i], v[(i + 2) % n] - v[(i + 1) % n]) >= -1e-12 * scale)
}

/// Interior angle at each vertex of a counter-clockwise polygon, in (0, 2π).
pub fn interior_angles(v: &[C64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let prev = v[(i + n - 1) % n] - v[i];
            let next = v[(i + 1) % n] - v[i];
            let a = (prev / next).arg();
            if a <= 0.0 {
                a + 2.0 * PI
            } else {
                a
            }
        })
        .collect()
}

pub fn point_in_triangle(p: &[C64; 3], z: C64, tol: f64) -> bool {
    (0..3).all(|k| cross(p[(k + 1) % 3] - p[k], z - p[k]) >= -tol)
}

pub fn point_segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    let t = if l2 > 0.0 { (dot(z - a, ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (a + ab * t - z).norm()
}

pub fn point_triangle_distance(p: &[C64; 3], z: C64) -> f64 {
    if point_in_triangle(p, z, 0.0) {
        return 0.0;
    }
    (0..3)
        .map(|k| point_segment_distance(z, p[k], p[(k + 1) % 3]))
        .fold(f64::INFINITY, f64::min)
}

/// Parameters t in [0,1] where the segment a + t(b-a) meets the circle |z-c| = r.
fn segment_circle_params(a: C64, b: C64, c: C64, r: f64) -> Vec<f64> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm_sqr();
    let qb = 2.0 * dot(f, d);
    let qc = f.norm_sqr() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 || qa == 0.0 {
        return vec![];
    }
    let s = disc.sqrt();
    let mut out = Vec::with_capacity(2);
    for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
        if t > 0.0 && t < 1.0 {
            out.push(t);
        }
    }
    out
}

/// Signed area of the intersection of the disk |z| <= r with the triangle (0, a, b).
fn sector_triangle_area(a: C64, b: C64, r: f64) -> f64 {
    let mut pts = vec![a];
    for t in segment_circle_params(a, b, C64::new(0.0, 0.0), r) {
        pts.push(a + (b - a) * t);
    }
    pts.push(b);
    let mut area = 0.0;
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let mid = (p + q) * 0.5;
        if mid.norm() <= r {
            area += 0.5 * cross(p, q);
        } else {
            area += 0.5 * r * r * (q / p).arg();
        }
    }
    area
}

/// Exact area of a triangle intersected with a disk.
pub fn triangle_disk_area(p: &[C64; 3], c: C64, r: f64) -> f64 {
    let q = [p[0] - c, p[1] - c, p[2] - c];
    let mut a = 0.0;
    for k in 0..3 {
        a += sector_triangle_area(q[k], q[(k + 1) % 3], r);
    }
    a.max(0.0)
}

/// Angular intervals [t0, t1] (radians, counter-clockwise, t0 in [0, 2π)) of the
/// circle |z - c| = r lying inside the triangle.
pub fn circle_arcs_in_triangle(p: &[C64; 3], c: C64, r: f64) -> Vec<(f64, f64)> {
    let mut angles = Vec::new();
    for k in 0..3 {
        for t in segment_circle_params(p[k], p[(k + 1) % 3], c, r) {
            let z = p[k] + (p[(k + 1) % 3] - p[k]) * t;
            let mut a = (z - c).arg();
            if a < 0.0 {
                a += 2.0 * PI;
            }
            angles.push(a);
        }
    }
    let scale = (p[1] - p[0]).norm() + (p[2] - p[1]).norm() + (p[0] - p[2]).norm();
    let tol = 1e-12 * scale.max(r);
    if angles.is_empty() {
        let z = c + C64::new(r, 0.0);
        return if point_in_triangle(p, z, tol) { vec![(0.0, 2.0 * PI)] } else { vec![] };
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let n = angles.len();
    let mut arcs = Vec::new();
    for i in 0..n {
        let t0 = angles[i];
        let t1 = if i + 1 < n { angles[i + 1] } else { angles[0] + 2.0 * PI };
        let mid = 0.5 * (t0 + t1);
        if point_in_triangle(p, c + C64::from_polar(r, mid), tol) {
            arcs.push((t0, t1));
        }
    }
    arcs
}

/// Fits the slope of log y against log x by least squares.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
