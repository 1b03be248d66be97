use crate::geom;
use crate::surface::Sign;
use crate::C64;

/// A triangulated surface where each face carries its own flat chart.
///
/// Half-edge `3f + k` runs from corner `k` to corner `k+1` of face `f`. Charts of
/// neighbouring faces differ by `z ↦ s z + t` with `s = ±1` (`twin_sign`).
#[derive(Clone, Debug)]
pub struct TriComplex {
    pub faces: Vec<[usize; 3]>,
    pub pos: Vec<[C64; 3]>,
    pub twin: Vec<usize>,
    pub twin_sign: Vec<Sign>,
    pub num_vertices: usize,
    pub edge_of: Vec<usize>,
    pub edge_he: Vec<usize>,
}

#[inline]
pub fn next(he: usize) -> usize {
    if he % 3 == 2 {
        he - 2
    } else {
        he + 1
    }
}

#[inline]
pub fn prev(he: usize) -> usize {
    if he % 3 == 0 {
        he + 2
    } else {
        he - 1
    }
}

impl TriComplex {
    pub fn new(faces: Vec<[usize; 3]>, pos: Vec<[C64; 3]>, twin: Vec<usize>, twin_sign: Vec<Sign>, num_vertices: usize) -> Self {
        let mut edge_of = vec![usize::MAX; twin.len()];
        let mut edge_he = Vec::with_capacity(twin.len() / 2);
        for he in 0..twin.len() {
            if edge_of[he] == usize::MAX {
                edge_of[he] = edge_he.len();
                edge_of[twin[he]] = edge_he.len();
                edge_he.push(he.min(twin[he]));
            }
        }
        TriComplex { faces, pos, twin, twin_sign, num_vertices, edge_of, edge_he }
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_he.len()
    }

    pub fn num_half_edges(&self) -> usize {
        self.twin.len()
    }

    pub fn he_start(&self, he: usize) -> usize {
        self.faces[he / 3][he % 3]
    }

    pub fn he_end(&self, he: usize) -> usize {
        self.faces[he / 3][(he + 1) % 3]
    }

    /// Edge vector of a half-edge in its face chart.
    pub fn he_vector(&self, he: usize) -> C64 {
        let p = &self.pos[he / 3];
        p[(he + 1) % 3] - p[he % 3]
    }

    /// +1 when the half-edge is the canonical representative of its edge.
    pub fn he_orientation(&self, he: usize) -> f64 {
        if self.edge_he[self.edge_of[he]] == he {
            1.0
        } else {
            -1.0
        }
    }

    pub fn area(&self, f: usize) -> f64 {
        geom::triangle_area(&self.pos[f])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_faces()).map(|f| self.area(f)).sum()
    }

    pub fn corner_angle(&self, f: usize, k: usize) -> f64 {
        let p = &self.pos[f];
        let a = p[(k + 1) % 3] - p[k];
        let b = p[(k + 2) % 3] - p[k];
        (b / a).arg()
    }

    /// Chart change across half-edge `he`: returns `(s, t)` with `z_twin = s z + t`.
    pub fn chart_map(&self, he: usize) -> (f64, C64) {
        let tw = self.twin[he];
        let s = self.twin_sign[he].as_f64();
        let z = self.pos[he / 3][he % 3];
        let w = self.pos[tw / 3][(tw + 1) % 3];
        (s, w - z * s)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    /// Corners `(face, k)` around every vertex, in counter-clockwise order.
    pub fn vertex_corners(&self) -> Vec<Vec<(usize, usize)>> {
        let mut seen = vec![false; self.twin.len()];
        let mut out = vec![Vec::new(); self.num_vertices];
        for he in 0..self.twin.len() {
            if seen[he] {
                continue;
            }
            let v = self.he_start(he);
            let mut ring = Vec::new();
            let mut cur = he;
            loop {
                seen[cur] = true;
                ring.push((cur / 3, cur % 3));
                // the edge entering this corner from the far side, then cross it
                cur = self.twin[prev(cur)];
                if cur == he {
                    break;
                }
            }
            debug_assert!(out[v].is_empty(), "vertex {v} is not a disk");
            out[v] = ring;
        }
        out
    }

    pub fn vertex_angles(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.num_vertices];
        for f in 0..self.num_faces() {
            for k in 0..3 {
                a[self.faces[f][k]] += self.corner_angle(f, k);
            }
        }
        a
    }

    /// Structural self-check: twins are involutive, endpoints and chart maps agree.
    pub fn check(&self) -> Result<(), String> {
        let scale = self.pos.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
        for he in 0..self.twin.len() {
            let tw = self.twin[he];
            if self.twin[tw] != he || tw == he {
                return Err(format!("half-edge {he}: twin is not an involution"));
            }
            if self.he_start(he) != self.he_end(tw) || self.he_end(he) != self.he_start(tw) {
                return Err(format!("half-edge {he}: endpoints disagree with its twin"));
            }
            if self.twin_sign[he] != self.twin_sign[tw] {
                return Err(format!("half-edge {he}: asymmetric chart sign"));
            }
            let (s, _) = self.chart_map(he);
            if (self.he_vector(tw) + self.he_vector(he) * s).norm() > 1e-9 * scale {
                return Err(format!("half-edge {he}: edge vectors do not match"));
            }
        }
        for f in 0..self.num_faces() {
            if self.area(f) <= 0.0 {
                return Err(format!("face {f} is degenerate or inverted"));
            }
        }
        Ok(())
    }
}
