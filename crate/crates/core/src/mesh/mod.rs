//! Triangle meshes of flat surfaces with per-face flat charts.

mod complex;
mod homology;
mod refine;

pub use complex::{next, prev, TriComplex};
pub use homology::{symplectic_basis, Cycle};

use crate::error::{Error, Result};
use crate::surface::{DoubleCover, FlatSurface, Sign};
use crate::C64;
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// What a mesh vertex sits on.
#[derive(Clone, Debug, Serialize)]
pub struct VertexInfo {
    /// Vertex orbit of the surface, for vertices at polygon corners.
    pub surface_vertex: Option<usize>,
    pub angle: f64,
    pub order: i32,
    pub sigma: bool,
}

impl VertexInfo {
    /// A true cone point (angle different from 2π).
    pub fn is_cone(&self) -> bool {
        (self.angle - 2.0 * PI).abs() > 1e-9
    }
}

/// Deck involution of a lifted mesh: faces map corner-to-corner.
#[derive(Clone, Debug)]
pub struct Involution {
    pub vertex: Vec<usize>,
    pub face: Vec<usize>,
}

/// A refined triangulation of a flat surface.
#[derive(Debug)]
pub struct Mesh {
    pub fine: TriComplex,
    pub coarse: TriComplex,
    /// Fine face → coarse face containing it.
    pub face_parent: Vec<usize>,
    /// Coarse face → polygon.
    pub coarse_polygon: Vec<usize>,
    /// Coarse half-edge → fine half-edges along it, in order.
    pub chains: Vec<Vec<usize>>,
    /// Coarse vertex → fine vertex.
    pub coarse_vertex: Vec<usize>,
    pub vertices: Vec<VertexInfo>,
    pub coarse_vertices: Vec<VertexInfo>,
    pub h: f64,
    pub surface: Arc<FlatSurface>,
    pub involution: Option<Involution>,
    pub(crate) coarse_origin: Vec<[Option<usize>; 3]>,
    pub(crate) laplacian: OnceLock<crate::hodge::Laplacian>,
    pub(crate) corners: OnceLock<Vec<Vec<(usize, usize)>>>,
}

fn vertex_infos(c: &TriComplex, surface: &FlatSurface, surface_vertex: &[Option<usize>]) -> Vec<VertexInfo> {
    let angles = c.vertex_angles();
    (0..c.num_vertices)
        .map(|v| {
            let sv = surface_vertex[v];
            let (order, sigma) = match sv {
                Some(i) => {
                    let cp = &surface.cone_points()[i];
                    (cp.order, cp.in_sigma())
                }
                None => (0, false),
            };
            VertexInfo { surface_vertex: sv, angle: angles[v], order, sigma }
        })
        .collect()
}

impl Mesh {
    /// Triangulates with maximal edge length `min(h, shortest polygon edge)`,
    /// graded down to a eighth of that near cone points.
    pub fn triangulate(surface: &FlatSurface, h: f64) -> Result<Mesh> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("mesh size must be positive, got {h}")));
        }
        let h = h.min(surface.min_edge_length());
        let (refiner, coarse_polygon, coarse_origin) = refine::coarse(surface);
        let cones: Vec<usize> = surface
            .cone_points()
            .iter()
            .filter(|c| (c.total_angle - 2.0 * PI).abs() > 1e-9)
            .map(|c| c.id)
            .collect();
        let r = refiner.run(h, &cones);
        let nsurf = surface.cone_points().len();
        let sv = |n: usize| -> Vec<Option<usize>> { (0..n).map(|v| (v < nsurf).then_some(v)).collect() };
        let vertices = vertex_infos(&r.fine, surface, &sv(r.fine.num_vertices));
        let coarse_vertices = vertex_infos(&r.coarse, surface, &sv(r.coarse.num_vertices));
        let mesh = Mesh {
            coarse_vertex: (0..r.num_coarse_vertices).collect(),
            fine: r.fine,
            coarse: r.coarse,
            face_parent: r.face_parent,
            coarse_polygon,
            chains: r.chains,
            vertices,
            coarse_vertices,
            h,
            surface: Arc::new(surface.clone()),
            involution: None,
            coarse_origin,
            laplacian: OnceLock::new(),
            corners: OnceLock::new(),
        };
        debug_assert!(mesh.fine.check().is_ok());
        Ok(mesh)
    }

    /// Unrefined triangulation of the polygons (one vertex per surface vertex plus polygon centroids).
    pub fn coarse_complex(surface: &FlatSurface) -> (TriComplex, Vec<VertexInfo>) {
        let (refiner, _, _) = refine::coarse(surface);
        let r = refiner.run(f64::INFINITY, &[]);
        let nsurf = surface.cone_points().len();
        let sv: Vec<Option<usize>> = (0..r.coarse.num_vertices).map(|v| (v < nsurf).then_some(v)).collect();
        let info = vertex_infos(&r.coarse, surface, &sv);
        (r.coarse, info)
    }

    /// Mesh of the double cover, lifted sheet by sheet from a mesh of the base.
    pub fn lift(base: &Mesh, cover: &DoubleCover) -> Result<Mesh> {
        if base.involution.is_some() || base.surface.is_translation() {
            return Err(Error::AlreadyTranslation);
        }
        let (fine, fine_vertex_of_corner) = lift_complex(&base.fine);
        let (coarse, _) = lift_complex(&base.coarse);
        let face_parent = (0..fine.num_faces()).map(|f| 2 * base.face_parent[f / 2] + f % 2).collect();
        let coarse_polygon: Vec<usize> = (0..coarse.num_faces()).map(|f| 2 * base.coarse_polygon[f / 2] + f % 2).collect();
        let chains: Vec<Vec<usize>> = (0..coarse.num_half_edges())
            .map(|he| {
                let (f, k, s) = (he / 3 / 2, he % 3, (he / 3) % 2);
                base.chains[3 * f + k].iter().map(|&fh| 3 * (2 * (fh / 3) + s) + fh % 3).collect()
            })
            .collect();
        let mut coarse_vertex = vec![usize::MAX; coarse.num_vertices];
        for he in 0..coarse.num_half_edges() {
            let first = chains[he][0];
            coarse_vertex[coarse.he_start(he)] = fine.he_start(first);
        }
        let coarse_origin: Vec<[Option<usize>; 3]> = (0..coarse.num_faces()).map(|f| base.coarse_origin[f / 2]).collect();
        let mut coarse_sv = vec![None; coarse.num_vertices];
        let mut fine_sv = vec![None; fine.num_vertices];
        for f in 0..coarse.num_faces() {
            for k in 0..3 {
                if let Some(i) = coarse_origin[f][k] {
                    let orbit = cover.cover.corner_vertex(coarse_polygon[f], i);
                    coarse_sv[coarse.faces[f][k]] = Some(orbit);
                    fine_sv[coarse_vertex[coarse.faces[f][k]]] = Some(orbit);
                }
            }
        }
        let vertices = vertex_infos(&fine, &cover.cover, &fine_sv);
        let coarse_vertices = vertex_infos(&coarse, &cover.cover, &coarse_sv);
        let mut vertex = vec![usize::MAX; fine.num_vertices];
        for f in 0..fine.num_faces() {
            for k in 0..3 {
                vertex[fine.faces[f][k]] = fine_vertex_of_corner[3 * (f ^ 1) + k];
            }
        }
        let involution = Involution { vertex, face: (0..fine.num_faces()).map(|f| f ^ 1).collect() };
        let mesh = Mesh {
            fine,
            coarse,
            face_parent,
            coarse_polygon,
            chains,
            coarse_vertex,
            vertices,
            coarse_vertices,
            h: base.h,
            surface: Arc::new(cover.cover.clone()),
            involution: Some(involution),
            coarse_origin,
            laplacian: OnceLock::new(),
            corners: OnceLock::new(),
        };
        debug_assert!(mesh.fine.check().is_ok());
        Ok(mesh)
    }

    /// Triangulates the base and lifts to the cover.
    pub fn triangulate_cover(cover: &DoubleCover, h: f64) -> Result<Mesh> {
        let base = Mesh::triangulate(&cover.base, h)?;
        Mesh::lift(&base, cover)
    }

    /// Corners around each fine vertex, counter-clockwise.
    pub fn corners(&self) -> &[Vec<(usize, usize)>] {
        self.corners.get_or_init(|| self.fine.vertex_corners())
    }

    pub fn is_translation(&self) -> bool {
        self.surface.is_translation()
    }

    pub fn genus(&self) -> usize {
        ((2 - self.fine.euler_characteristic()) / 2) as usize
    }

    /// Fine vertices in Σ.
    pub fn sigma_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].sigma).collect()
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.fine.num_half_edges()).map(|he| self.fine.he_vector(he).norm()).fold(0.0, f64::max)
    }

    /// Integral of the flat coordinate differential over each edge (canonical orientation).
    pub fn omega_cochain(&self) -> Vec<C64> {
        self.fine.edge_he.iter().map(|&he| self.fine.he_vector(he)).collect()
    }

    /// Homology generators, dual cocycles and intersection numbers.
    pub fn homology(&self) -> Homology {
        let c = &self.coarse;
        let tc = homology::TreeCotree::new(c);
        let lift = |hes: Vec<usize>| -> Cycle {
            Cycle::from_half_edges(&self.fine, hes.into_iter().flat_map(|he| self.chains[he].iter().copied()))
        };
        let cycles: Vec<Cycle> = tc.generators.iter().map(|&e| lift(tc.generator_loop(c, e))).collect();
        let coarse_cocycles: Vec<Vec<f64>> = (0..tc.generators.len()).map(|j| tc.dual_cocycle(c, j)).collect();
        let covectors: Vec<Vec<C64>> = coarse_cocycles.iter().map(|z| real_covectors(c, z)).collect();
        let n = cycles.len();
        let mut cup = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for f in 0..c.num_faces() {
                    let (x, y) = (covectors[a][f], covectors[b][f]);
                    s += c.area(f) * (x.re * y.im - x.im * y.re);
                }
                cup[(a, b)] = s;
            }
        }
        let intersection = cup.clone().try_inverse().map(|m| m.transpose().map(|v| v.round())).unwrap_or(cup);
        let cocycles = covectors
            .iter()
            .map(|cv| {
                self.fine
                    .edge_he
                    .iter()
                    .map(|&he| {
                        let a = cv[self.face_parent[he / 3]];
                        let w = self.fine.he_vector(he);
                        a.re * w.re + a.im * w.im
                    })
                    .collect()
            })
            .collect();
        let sigma: Vec<usize> = (0..c.num_vertices).filter(|&v| self.coarse_vertices[v].sigma).collect();
        let mut relative_paths = Vec::new();
        let mut relative_endpoints = Vec::new();
        if let Some((&z0, rest)) = sigma.split_first() {
            for &z in rest {
                let mut hes: Vec<usize> = tc.path_from_root(c, z0).into_iter().rev().map(|h| c.twin[h]).collect();
                hes.extend(tc.path_from_root(c, z));
                relative_paths.push(lift(hes));
                relative_endpoints.push((self.coarse_vertex[z0], self.coarse_vertex[z]));
            }
        }
        Homology { cycles, cocycles, intersection, relative_paths, relative_endpoints }
    }

    /// Plain-data export of the fine mesh.
    pub fn export(&self) -> MeshExport {
        MeshExport {
            h: self.h,
            num_vertices: self.fine.num_vertices,
            faces: self.fine.faces.clone(),
            positions: self.fine.pos.iter().map(|p| p.map(|z| [z.re, z.im])).collect(),
            twins: self.fine.twin.clone(),
            twin_signs: self.fine.twin_sign.iter().map(|s| s.as_i8()).collect(),
            face_polygon: self.face_parent.iter().map(|&f| self.coarse_polygon[f]).collect(),
            vertices: self.vertices.clone(),
        }
    }
}

/// Per-face real covector `(a_x + i a_y)` reproducing a closed real cochain.
fn real_covectors(c: &TriComplex, values: &[f64]) -> Vec<C64> {
    (0..c.num_faces())
        .map(|f| {
            let v0 = c.he_vector(3 * f);
            let v1 = c.he_vector(3 * f + 1);
            let c0 = c.he_orientation(3 * f) * values[c.edge_of[3 * f]];
            let c1 = c.he_orientation(3 * f + 1) * values[c.edge_of[3 * f + 1]];
            let det = v0.re * v1.im - v0.im * v1.re;
            C64::new((c0 * v1.im - c1 * v0.im) / det, (v0.re * c1 - v1.re * c0) / det)
        })
        .collect()
}

/// Lifts a complex to the holonomy double cover. Also returns the vertex of each cover corner.
fn lift_complex(c: &TriComplex) -> (TriComplex, Vec<usize>) {
    let nf = c.num_faces();
    let mut faces_pos = Vec::with_capacity(2 * nf);
    let mut twin = vec![0; 6 * nf];
    for f in 0..nf {
        let p = c.pos[f];
        faces_pos.push(p);
        faces_pos.push(p.map(|z| -z));
    }
    for he in 0..3 * nf {
        let (f, k) = (he / 3, he % 3);
        let tw = c.twin[he];
        let flip = usize::from(c.twin_sign[he] == Sign::Minus);
        for s in 0..2 {
            twin[3 * (2 * f + s) + k] = 3 * (2 * (tw / 3) + (s ^ flip)) + tw % 3;
        }
    }
    // vertices from corner orbits
    let n = 6 * nf;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for he in 0..n {
        let tw = twin[he];
        let (a, b) = (find(&mut parent, he), find(&mut parent, next(tw)));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut id = vec![usize::MAX; n];
    let mut corner_vertex = vec![0; n];
    let mut nv = 0;
    for he in 0..n {
        let r = find(&mut parent, he);
        if id[r] == usize::MAX {
            id[r] = nv;
            nv += 1;
        }
        corner_vertex[he] = id[r];
    }
    let faces = (0..2 * nf).map(|f| [corner_vertex[3 * f], corner_vertex[3 * f + 1], corner_vertex[3 * f + 2]]).collect();
    let signs = vec![Sign::Plus; n];
    (TriComplex::new(faces, faces_pos, twin, signs, nv), corner_vertex)
}

/// Homology data of a mesh; all chains live on the fine mesh.
#[derive(Clone, Debug, Serialize)]
pub struct Homology {
    pub cycles: Vec<Cycle>,
    /// Closed real cochains with `cocycles[k](cycles[j]) = δ_kj`.
    pub cocycles: Vec<Vec<f64>>,
    /// `intersection[(i, j)]` is the algebraic intersection number of cycles i and j.
    pub intersection: DMatrix<f64>,
    pub relative_paths: Vec<Cycle>,
    pub relative_endpoints: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshExport {
    pub h: f64,
    pub num_vertices: usize,
    pub faces: Vec<[usize; 3]>,
    pub positions: Vec<[[f64; 2]; 3]>,
    pub twins: Vec<usize>,
    pub twin_signs: Vec<i8>,
    pub face_polygon: Vec<usize>,
    pub vertices: Vec<VertexInfo>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn integrate(c: &Cycle, values: &[f64]) -> f64 {
        c.edges.iter().map(|&(e, s)| s * values[e]).sum()
    }

    #[test]
    fn octagon_mesh_basics() {
        let s = catalog::octagon();
        let m = Mesh::triangulate(&s, 0.2).unwrap();
        m.fine.check().unwrap();
        assert_eq!(m.fine.euler_characteristic(), -2);
        assert!(m.max_edge_length() <= 0.2 + 1e-12);
        assert!((m.fine.total_area() - s.area()).abs() < 1e-10);
        let cones: Vec<&VertexInfo> = m.vertices.iter().filter(|v| v.is_cone()).collect();
        assert_eq!(cones.len(), 1);
        assert!((cones[0].angle - 6.0 * PI).abs() < 1e-9);
        let regular = m.vertices.iter().filter(|v| !v.is_cone()).all(|v| (v.angle - 2.0 * PI).abs() < 1e-9);
        assert!(regular);
    }

    #[test]
    fn grading_refines_near_the_cone() {
        let m = Mesh::triangulate(&catalog::octagon(), 0.2).unwrap();
        let cone = m.vertices.iter().position(|v| v.is_cone()).unwrap();
        let near = (0..m.fine.num_half_edges())
            .filter(|&he| m.fine.he_start(he) == cone)
            .map(|he| m.fine.he_vector(he).norm())
            .fold(0.0, f64::max);
        assert!(near <= 0.2 / 8.0 + 1e-12, "{near}");
    }

    #[test]
    fn homology_of_octagon() {
        let m = Mesh::triangulate(&catalog::octagon(), 0.3).unwrap();
        let hom = m.homology();
        assert_eq!(hom.cycles.len(), 4);
        for (k, z) in hom.cocycles.iter().enumerate() {
            for (j, c) in hom.cycles.iter().enumerate() {
                assert!(c.boundary(&m.fine).iter().all(|b| b.abs() < 1e-12));
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((integrate(c, z) - expect).abs() < 1e-9);
            }
        }
        let i = &hom.intersection;
        assert!((i + i.transpose()).norm() < 1e-12);
        assert!((i.determinant().abs() - 1.0).abs() < 1e-9);
        let s = symplectic_basis(i);
        let j = &s * i * s.transpose();
        for a in 0..4 {
            for b in 0..4 {
                let expect = if b == a + 2 { 1.0 } else if a == b + 2 { -1.0 } else { 0.0 };
                assert!((j[(a, b)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn torus_intersection_sign() {
        let m = Mesh::triangulate(&catalog::square_torus(), 0.5).unwrap();
        let hom = m.homology();
        let omega = m.omega_cochain();
        // orient so that the first cycle has positive real period; then a·b has the sign of Im(b)
        let p: Vec<C64> = hom.cycles.iter().map(|c| c.edges.iter().map(|&(e, s)| omega[e] * s).sum()).collect();
        let cross = p[0].re * p[1].im - p[0].im * p[1].re;
        assert!((hom.intersection[(0, 1)] - cross.signum()).abs() < 1e-12, "{:?} {}", p, hom.intersection);
    }

    #[test]
    fn marked_torus_relative_paths() {
        let m = Mesh::triangulate(&catalog::square_torus_two_marked(), 0.25).unwrap();
        let hom = m.homology();
        assert_eq!(hom.relative_paths.len(), 1);
        let (a, b) = hom.relative_endpoints[0];
        let bd = hom.relative_paths[0].boundary(&m.fine);
        assert!((bd[b] - 1.0).abs() < 1e-12 && (bd[a] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lifted_cover_mesh() {
        let d = DoubleCover::new(&catalog::q1111()).unwrap();
        let m = Mesh::triangulate_cover(&d, 0.3).unwrap();
        m.fine.check().unwrap();
        assert_eq!(m.genus(), 5);
        assert!(m.is_translation());
        let inv = m.involution.as_ref().unwrap();
        for v in 0..m.fine.num_vertices {
            assert_eq!(inv.vertex[inv.vertex[v]], v);
        }
        let cones = m.vertices.iter().filter(|v| v.is_cone()).count();
        assert_eq!(cones, 4);
        assert!(m.vertices.iter().filter(|v| v.is_cone()).all(|v| (v.angle - 6.0 * PI).abs() < 1e-9));
        let hom = m.homology();
        assert_eq!(hom.cycles.len(), 10);
        // the pillowcase cover: four ramification points, all marked
        let d = DoubleCover::new(&catalog::pillowcase()).unwrap();
        let m = Mesh::triangulate_cover(&d, 0.25).unwrap();
        assert_eq!(m.sigma_vertices().len(), 4);
        assert_eq!(m.genus(), 1);
    }

    #[test]
    fn nonconvex_polygon_uses_ear_clipping() {
        // an L-shaped torus-like polygon: three squares
        let text = r#"{"polygons":[{"vertices":[[0,0],[2,0],[2,1],[1,1],[1,2],[0,2]]}],
          "gluings":[{"from":[0,0],"to":[0,3],"sign":1},{"from":[0,1],"to":[0,4],"sign":1},{"from":[0,2],"to":[0,5],"sign":1}]}"#;
        // edge vectors: (2,0) vs (-1,0) do not match, so build a valid L instead
        assert!(FlatSurface::from_json(text).is_err());
        let text = r#"{"polygons":[{"vertices":[[0,0],[1,0],[2,0],[2,1],[1,1],[1,2],[0,2],[0,1]]}],
          "gluings":[{"from":[0,0],"to":[0,5],"sign":1},{"from":[0,1],"to":[0,3],"sign":1},
                     {"from":[0,2],"to":[0,7],"sign":1},{"from":[0,4],"to":[0,6],"sign":1}]}"#;
        let s = FlatSurface::from_json(text).unwrap();
        let m = Mesh::triangulate(&s, 0.3).unwrap();
        m.fine.check().unwrap();
        assert!((m.fine.total_area() - 3.0).abs() < 1e-12);
        assert_eq!(m.fine.euler_characteristic(), 2 - 2 * s.genus() as i64);
    }
}
