//! Saddle connections, found by developing straight-line wedges through the
//! unrefined triangulation.

use crate::error::{Error, Result};
use crate::geom::{cross, point_segment_distance};
use crate::mesh::{Mesh, TriComplex, VertexInfo};
use crate::surface::FlatSurface;
use crate::C64;
use serde::Serialize;

/// A straight segment between two points of Σ with no Σ-point in its interior.
#[derive(Clone, Debug, Serialize)]
pub struct SaddleConnection {
    pub start: usize,
    pub end: usize,
    pub holonomy: C64,
    pub length: f64,
    /// Outgoing direction at `start`, measured in `[0, cone angle)` from a fixed reference.
    pub start_angle: f64,
    pub end_angle: f64,
}

const TOL: f64 = 1e-10;

/// A face placed in the developing plane: point = `a * chart + b`.
#[derive(Clone, Copy)]
struct Dev {
    f: usize,
    a: f64,
    b: C64,
}

struct Finder<'a> {
    c: &'a TriComplex,
    sigma: Vec<bool>,
    label: Vec<usize>,
    corner_start: Vec<[f64; 3]>,
    total: Vec<f64>,
    max_len: f64,
    found: Vec<SaddleConnection>,
}

impl Finder<'_> {
    fn p(&self, d: &Dev, k: usize) -> C64 {
        self.c.pos[d.f][k % 3] * d.a + d.b
    }

    /// Develops the neighbour across side `j`; returns it and the index of the shared side there.
    fn develop(&self, d: &Dev, j: usize) -> (Dev, usize) {
        let he = 3 * d.f + j % 3;
        let tw = self.c.twin[he];
        let (g, j2) = (tw / 3, tw % 3);
        let a = d.a * self.c.twin_sign[he].as_f64();
        let b = self.p(d, j) - self.c.pos[g][(j2 + 1) % 3] * a;
        (Dev { f: g, a, b }, j2)
    }

    fn angle_in_corner(&self, d: &Dev, k: usize, dir: C64) -> f64 {
        let e1 = self.p(d, k + 1) - self.p(d, k);
        let t = (dir / e1).arg();
        let t = if t < 0.0 { 0.0 } else { t };
        let v = self.c.faces[d.f][k % 3];
        let a = self.corner_start[d.f][k % 3] + t;
        if a >= self.total[v] - 1e-12 {
            a - self.total[v]
        } else {
            a
        }
    }

    fn record(&mut self, v0: usize, theta: f64, d: &Dev, k: usize) {
        let hol = self.p(d, k);
        let u = self.c.faces[d.f][k % 3];
        let end_angle = self.angle_in_corner(d, k, -hol);
        self.found.push(SaddleConnection {
            start: v0,
            end: u,
            holonomy: hol,
            length: hol.norm(),
            start_angle: theta,
            end_angle,
        });
    }

    fn vertex_event(&mut self, v0: usize, base: (f64, C64), d: &Dev, k: usize) {
        let p = self.p(d, k);
        let t = (p / base.1).arg().max(0.0);
        let theta = base.0 + t;
        if self.sigma[self.c.faces[d.f][k % 3]] {
            self.record(v0, theta, d, k);
        } else {
            self.walk(v0, theta, p / p.norm(), *d, k % 3);
        }
    }

    /// Continues a ray from the origin through a regular vertex until it hits Σ or exceeds the bound.
    fn walk(&mut self, v0: usize, theta: f64, dir: C64, mut d: Dev, mut k: usize) {
        enum State {
            Corner,
            Side,
        }
        let mut state = State::Corner;
        for _ in 0..1_000_000 {
            match state {
                State::Corner => {
                    let p = self.p(&d, k);
                    let mut ok = false;
                    for _ in 0..256 {
                        let e1 = self.p(&d, k + 1) - p;
                        let e2 = self.p(&d, k + 2) - p;
                        if cross(e1, dir) >= -TOL * e1.norm() && cross(dir, e2) > TOL * e2.norm() {
                            ok = true;
                            break;
                        }
                        let (nd, j2) = self.develop(&d, k + 2);
                        d = nd;
                        k = j2;
                    }
                    if !ok {
                        return;
                    }
                    let q = self.p(&d, k + 1);
                    if cross(q - p, dir).abs() <= TOL * (q - p).norm() {
                        if q.norm() > self.max_len {
                            return;
                        }
                        k = (k + 1) % 3;
                        if self.sigma[self.c.faces[d.f][k]] {
                            self.record(v0, theta, &d, k);
                            return;
                        }
                        continue;
                    }
                    let j = (k + 1) % 3;
                    let (a, b) = (self.p(&d, j), self.p(&d, j + 1));
                    if cross(a, b - a) / cross(dir, b - a) > self.max_len {
                        return;
                    }
                    let (nd, j2) = self.develop(&d, j);
                    d = nd;
                    k = j2;
                    state = State::Side;
                }
                State::Side => {
                    let j = k;
                    let opp = self.p(&d, j + 2);
                    let cr = cross(dir, opp);
                    if cr.abs() <= TOL * opp.norm() {
                        if opp.norm() > self.max_len {
                            return;
                        }
                        k = (j + 2) % 3;
                        if self.sigma[self.c.faces[d.f][k]] {
                            self.record(v0, theta, &d, k);
                            return;
                        }
                        state = State::Corner;
                        continue;
                    }
                    let side = if cr > 0.0 { (j + 1) % 3 } else { (j + 2) % 3 };
                    let (a, b) = (self.p(&d, side), self.p(&d, side + 1));
                    if cross(a, b - a) / cross(dir, b - a) > self.max_len {
                        return;
                    }
                    let (nd, j2) = self.develop(&d, side);
                    d = nd;
                    k = j2;
                }
            }
        }
    }

    fn search_from(&mut self, v0: usize, ring: &[(usize, usize)]) {
        for &(f, k) in ring {
            let d = Dev { f, a: 1.0, b: -self.c.pos[f][k] };
            let e1 = self.p(&d, k + 1);
            let base = (self.corner_start[f][k], e1);
            if e1.norm() <= self.max_len {
                self.vertex_event(v0, base, &d, k + 1);
            }
            let mut stack = vec![(d, (k + 1) % 3, e1, self.p(&d, k + 2))];
            while let Some((d, j, wr, wl)) = stack.pop() {
                let (a, b) = (self.p(&d, j), self.p(&d, j + 1));
                if point_segment_distance(C64::new(0.0, 0.0), a, b) > self.max_len {
                    continue;
                }
                let (nd, j2) = self.develop(&d, j);
                let cpt = self.p(&nd, j2 + 2);
                let in_r = cross(wr, cpt) > TOL * cpt.norm() * wr.norm();
                let in_l = cross(cpt, wl) > TOL * cpt.norm() * wl.norm();
                if in_r && in_l {
                    if cpt.norm() <= self.max_len {
                        self.vertex_event(v0, base, &nd, j2 + 2);
                    }
                    stack.push((nd, (j2 + 1) % 3, wr, cpt));
                    stack.push((nd, (j2 + 2) % 3, cpt, wl));
                } else if !in_r {
                    stack.push((nd, (j2 + 2) % 3, wr, wl));
                } else {
                    stack.push((nd, (j2 + 1) % 3, wr, wl));
                }
            }
        }
    }
}

/// Saddle connections of length at most `max_len` on a triangulated surface.
///
/// Each connection is reported once, oriented so that its start (vertex, angle)
/// is the smaller of its two ends.
pub fn complex_saddle_connections(c: &TriComplex, info: &[VertexInfo], max_len: f64) -> Vec<SaddleConnection> {
    let rings = c.vertex_corners();
    let mut corner_start = vec![[0.0; 3]; c.num_faces()];
    let mut total = vec![0.0; c.num_vertices];
    for (v, ring) in rings.iter().enumerate() {
        let mut acc = 0.0;
        for &(f, k) in ring {
            corner_start[f][k] = acc;
            acc += c.corner_angle(f, k);
        }
        total[v] = acc;
    }
    let mut finder = Finder {
        c,
        sigma: info.iter().map(|i| i.sigma).collect(),
        label: info.iter().enumerate().map(|(v, i)| i.surface_vertex.unwrap_or(v)).collect(),
        corner_start,
        total,
        max_len: max_len * (1.0 + 1e-12),
        found: Vec::new(),
    };
    for v in 0..c.num_vertices {
        if finder.sigma[v] {
            finder.search_from(v, &rings[v]);
        }
    }
    let mut found = std::mem::take(&mut finder.found);
    for s in &mut found {
        let fwd = (s.start, s.start_angle);
        let back = (s.end, s.end_angle);
        if back.0 < fwd.0 || (back.0 == fwd.0 && back.1 < fwd.1) {
            std::mem::swap(&mut s.start, &mut s.end);
            std::mem::swap(&mut s.start_angle, &mut s.end_angle);
            s.holonomy = -s.holonomy;
        }
    }
    found.sort_by(|a, b| a.start.cmp(&b.start).then(a.start_angle.total_cmp(&b.start_angle)));
    let mut out: Vec<SaddleConnection> = Vec::new();
    for s in found {
        if let Some(last) = out.last() {
            let near = |x: f64, y: f64, t: f64| (x - y).abs() < 1e-7 || (t - (x - y).abs()).abs() < 1e-7;
            if last.start == s.start && near(last.start_angle, s.start_angle, finder.total[s.start]) {
                continue;
            }
        }
        out.push(s);
    }
    // wrap-around duplicates at angle ~0 vs ~total
    if out.len() > 1 {
        let mut keep = vec![true; out.len()];
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if out[i].start != out[j].start {
                    break;
                }
                let t = finder.total[out[i].start];
                if keep[j] && (t - (out[j].start_angle - out[i].start_angle)).abs() < 1e-7 {
                    keep[j] = false;
                }
            }
        }
        let mut it = keep.iter();
        out.retain(|_| *it.next().unwrap());
    }
    for s in &mut out {
        s.start = finder.label[s.start];
        s.end = finder.label[s.end];
    }
    out.sort_by(|a, b| a.length.total_cmp(&b.length).then(a.start.cmp(&b.start)).then(a.start_angle.total_cmp(&b.start_angle)));
    out
}

/// Saddle connections of the surface with length at most `max_len`.
pub fn saddle_connections(surface: &FlatSurface, max_len: f64) -> Result<Vec<SaddleConnection>> {
    if surface.sigma().is_empty() {
        return Err(Error::EmptySigma);
    }
    let (c, info) = Mesh::coarse_complex(surface);
    Ok(complex_saddle_connections(&c, &info, max_len))
}

/// Length of the shortest saddle connection.
pub fn systole(surface: &FlatSurface) -> Result<f64> {
    if surface.sigma().is_empty() {
        return Err(Error::EmptySigma);
    }
    let (c, info) = Mesh::coarse_complex(surface);
    let mut len = 0.25 * surface.area().sqrt();
    for _ in 0..64 {
        let sc = complex_saddle_connections(&c, &info, len);
        if let Some(s) = sc.first() {
            return Ok(s.length);
        }
        len *= 2.0;
    }
    Err(Error::SolverFailure("no saddle connection found".into()))
}

/// Distance from a Σ-point to the nearest other Σ-point (infinite if it is alone).
pub fn sigma_separation(surface: &FlatSurface, point: usize, bound: f64) -> Result<f64> {
    let sc = saddle_connections(surface, bound)?;
    Ok(sc
        .iter()
        .filter(|s| (s.start == point) != (s.end == point))
        .map(|s| s.length)
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn square_torus_short_connections() {
        let x = catalog::square_torus_marked();
        let sc = saddle_connections(&x, 1.5).unwrap();
        // (1,0), (0,1), (1,1), (1,-1)
        assert_eq!(sc.len(), 4);
        assert!((systole(&x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_torus_counts_match_lattice() {
        let x = catalog::square_torus_marked();
        let l = 4.5;
        let sc = saddle_connections(&x, l).unwrap();
        // primitive vectors up to sign
        let mut n = 0;
        for a in -5i64..=5 {
            for b in -5i64..=5 {
                let gcd = num_gcd(a.abs(), b.abs());
                if gcd == 1 && ((a * a + b * b) as f64).sqrt() <= l && (a > 0 || (a == 0 && b > 0)) {
                    n += 1;
                }
            }
        }
        assert_eq!(sc.len(), n);
    }

    fn num_gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a
        } else {
            num_gcd(b, a % b)
        }
    }

    #[test]
    fn octagon_systole_is_a_side() {
        let x = catalog::octagon();
        assert!((systole(&x).unwrap() - 1.0).abs() < 1e-9);
        let sc = saddle_connections(&x, 1.0 + 1e-9).unwrap();
        assert_eq!(sc.len(), 4);
    }

    #[test]
    fn two_marked_points_are_half_apart() {
        let x = catalog::square_torus_two_marked();
        assert!((systole(&x).unwrap() - 0.5).abs() < 1e-12);
        assert!((sigma_separation(&x, 0, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pillowcase_connections() {
        let x = catalog::pillowcase();
        let s = systole(&x).unwrap();
        assert!(s > 0.0 && s <= 1.0 + 1e-12);
    }
}
