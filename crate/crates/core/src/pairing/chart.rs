use crate::error::{Error, Result};
use crate::geom::{cross, point_triangle_distance};
use crate::mesh::Mesh;
use crate::C64;
use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

/// A face of the embedded disk around a point of Σ.
#[derive(Clone, Debug)]
pub struct PatchFace {
    pub face: usize,
    /// Position of the centre point in this face's chart.
    pub center: C64,
    /// Unwrapped direction of the face centroid as seen from the centre.
    pub theta: f64,
    /// Unwrapped angular extent, relative to `theta` (so `lo ≤ 0 ≤ hi`).
    pub span: (f64, f64),
    /// Corner positions in the face chart.
    pub pos: [C64; 3],
    centroid_dir: C64,
    /// BFS parent: (index into the patch, side in the parent's face, side in this face).
    pub parent: Option<(usize, usize, usize)>,
}

/// The flat disk of radius `radius` around a mesh vertex, developed face by face.
///
/// Unwrapped angles live in `[start, start + angle)` and `e^{iθ}` is the direction in
/// every face chart. The uniformizing coordinate is `ζ = w^{1/(n+1)}`, in which the
/// flat differential reads `(n+1) ζⁿ dζ`.
#[derive(Clone, Debug)]
pub struct ConeChart {
    pub vertex: usize,
    pub order: i32,
    pub angle: f64,
    pub radius: f64,
    pub start: f64,
    pub faces: Vec<PatchFace>,
    index: HashMap<usize, usize>,
}

/// A piece of a ray inside one face: `center + t e^{iθ}` for `t ∈ [t0, t1]`.
#[derive(Clone, Copy, Debug)]
pub struct RaySegment {
    pub patch: usize,
    pub t0: f64,
    pub t1: f64,
    /// 1/2 when the ray runs along an edge, which the neighbouring face also reports.
    pub weight: f64,
}

fn too_large(point: usize, radius: f64, limit: f64) -> Error {
    Error::RadiusTooLarge { point, radius, limit }
}

fn centroid(p: &[C64; 3]) -> C64 {
    (p[0] + p[1] + p[2]) / 3.0
}

impl ConeChart {
    pub fn new(mesh: &Mesh, vertex: usize, radius: f64) -> Result<ConeChart> {
        let c = &mesh.fine;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("disk radius must be positive, got {radius}")));
        }
        let info = &mesh.vertices[vertex];
        let ring = &mesh.corners()[vertex];
        let tol = 1e-9 * radius.max(1.0);
        let (f0, k0) = ring[0];
        let start = (c.pos[f0][(k0 + 1) % 3] - c.pos[f0][k0]).arg();
        let mut faces: Vec<PatchFace> = Vec::new();
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut acc = start;
        for &(f, k) in ring {
            let p = &c.pos[f];
            let e1 = p[(k + 1) % 3] - p[k];
            let dir = centroid(p) - p[k];
            let ang = c.corner_angle(f, k);
            let rel = (dir / e1).arg();
            if index.contains_key(&f) {
                // two corners of one face at the centre: the disk overlaps itself
                let short = (0..3).map(|j| c.he_vector(3 * f + j).norm()).fold(f64::INFINITY, f64::min);
                return Err(too_large(vertex, radius, short));
            }
            index.insert(f, faces.len());
            queue.push_back(faces.len());
            faces.push(PatchFace {
                face: f,
                center: p[k],
                theta: acc + rel,
                span: (-rel, ang - rel),
                pos: *p,
                centroid_dir: dir / dir.norm(),
                parent: None,
            });
            acc += ang;
        }
        while let Some(i) = queue.pop_front() {
            let (f, cf, thf, df) = (faces[i].face, faces[i].center, faces[i].theta, faces[i].centroid_dir);
            for j in 0..3 {
                let he = 3 * f + j;
                let (s, t) = c.chart_map(he);
                let g = c.twin[he] / 3;
                let j2 = c.twin[he] % 3;
                let cg = cf * s + t;
                let pg = &c.pos[g];
                let d = point_triangle_distance(pg, cg);
                if d >= radius {
                    continue;
                }
                if let Some(&o) = index.get(&g) {
                    if (faces[o].center - cg).norm() > tol {
                        return Err(too_large(vertex, radius, d.max(0.5 * (faces[o].center - cg).norm())));
                    }
                    continue;
                }
                let dir = centroid(pg) - cg;
                if dir.norm() < tol {
                    return Err(too_large(vertex, radius, d));
                }
                let dir = dir / dir.norm();
                let theta = thf + (dir / (df * s)).arg();
                let mut lo = 0.0f64;
                let mut hi = 0.0f64;
                for (k, &z) in pg.iter().enumerate() {
                    let dist = (z - cg).norm();
                    if dist < radius {
                        let u = c.faces[g][k];
                        if u == vertex || mesh.vertices[u].sigma {
                            return Err(too_large(vertex, radius, dist));
                        }
                    }
                    let a = ((z - cg) / dir).arg();
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
                if hi - lo >= PI {
                    return Err(too_large(vertex, radius, d));
                }
                index.insert(g, faces.len());
                queue.push_back(faces.len());
                faces.push(PatchFace { face: g, center: cg, theta, span: (lo, hi), pos: *pg, centroid_dir: dir, parent: Some((i, j, j2)) });
            }
        }
        Ok(ConeChart { vertex, order: info.order.max(0), angle: info.angle, radius, start, faces, index })
    }

    pub fn patch_index(&self, face: usize) -> Option<usize> {
        self.index.get(&face).copied()
    }

    /// `theta` shifted by a multiple of the cone angle to lie within half a turn of `reference`.
    fn unwrap_near(&self, theta: f64, reference: f64) -> f64 {
        let d = theta - reference;
        theta - self.angle * (d / self.angle).round()
    }

    /// Flat polar coordinates `(t, θ)` of a point given in a face chart.
    pub fn polar(&self, face: usize, z: C64) -> Option<(f64, f64)> {
        let pf = &self.faces[self.patch_index(face)?];
        let v = z - pf.center;
        let t = v.norm();
        if t == 0.0 {
            return Some((0.0, self.start));
        }
        let th = pf.theta + (v / pf.centroid_dir).arg();
        let th = self.start + (th - self.start).rem_euclid(self.angle);
        Some((t, th))
    }

    /// Uniformizing coordinate of a point given in a face chart.
    pub fn uniformize(&self, face: usize, z: C64) -> Option<C64> {
        let (t, th) = self.polar(face, z)?;
        let m = f64::from(self.order + 1);
        Some(C64::from_polar(t.powf(1.0 / m), (th - self.start) / m))
    }

    /// Face and chart position of the point with uniformizing coordinate `zeta`.
    pub fn from_uniform(&self, zeta: C64) -> Option<(usize, C64)> {
        let m = f64::from(self.order + 1);
        let t = zeta.norm().powf(m);
        let th = self.start + (zeta.arg() * m).rem_euclid(self.angle);
        self.locate(th, t)
    }

    /// The point at flat distance `t` along the ray of unwrapped angle `theta`.
    pub fn locate(&self, theta: f64, t: f64) -> Option<(usize, C64)> {
        if t >= self.radius {
            return None;
        }
        let segs = self.ray(theta, t);
        let s = segs.iter().find(|s| s.t0 <= t && t <= s.t1)?;
        let pf = &self.faces[s.patch];
        Some((pf.face, pf.center + C64::from_polar(t, self.unwrap_near(theta, pf.theta))))
    }

    /// Pieces of the ray `{t e^{iθ} : 0 ≤ t ≤ len}` in each patch face, ordered by `t0`.
    pub fn ray(&self, theta: f64, len: f64) -> Vec<RaySegment> {
        let len = len.min(self.radius);
        let mut out = Vec::new();
        for (idx, pf) in self.faces.iter().enumerate() {
            let th = self.unwrap_near(theta, pf.theta);
            let rel = th - pf.theta;
            if rel < pf.span.0 - 1e-9 || rel > pf.span.1 + 1e-9 {
                continue;
            }
            if let Some(seg) = self.clip(idx, th, len) {
                out.push(seg);
            }
        }
        out.sort_by(|a, b| a.t0.total_cmp(&b.t0).then(a.patch.cmp(&b.patch)));
        out
    }

    fn clip(&self, idx: usize, theta: f64, len: f64) -> Option<RaySegment> {
        let pf = &self.faces[idx];
        let (t0, t1, on_edge) = clip_segment(&pf.pos, pf.center, C64::from_polar(1.0, theta), len)?;
        Some(RaySegment { patch: idx, t0, t1, weight: if on_edge { 0.5 } else { 1.0 } })
    }
}

/// Parameter interval of `c + t d`, `t ∈ [0, len]`, inside the closed triangle `p`;
/// the flag is set when the segment lies along one of its sides.
pub(crate) fn clip_segment(p: &[C64; 3], c: C64, d: C64, len: f64) -> Option<(f64, f64, bool)> {
    let mut t0 = 0.0f64;
    let mut t1 = len;
    let mut on_edge = false;
    for k in 0..3 {
        let e = p[(k + 1) % 3] - p[k];
        let en = e.norm();
        let a = cross(e, c - p[k]);
        let b = cross(e, d);
        if b.abs() <= 1e-12 * en {
            if a < -1e-11 * en {
                return None;
            }
            if a.abs() <= 1e-11 * en {
                on_edge = true;
            }
            continue;
        }
        let r = -a / b;
        if b > 0.0 {
            t0 = t0.max(r);
        } else {
            t1 = t1.min(r);
        }
    }
    (t1 - t0 > 1e-14 * len.max(1.0)).then_some((t0, t1, on_edge))
}
