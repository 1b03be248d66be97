//! Coarse triangulation of the polygons followed by red-green refinement.

use super::complex::TriComplex;
use crate::geom;
use crate::surface::{FlatSurface, Sign};
use crate::C64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Clone, Debug)]
struct ENode {
    sign: Sign,
    len: f64,
    a: usize,
    b: usize,
    split: Option<(usize, [usize; 2])>,
}

/// A side reference: edge node and whether the face walks it from `b` to `a`.
type Side = (usize, bool);

#[derive(Clone, Debug)]
struct Leaf {
    v: [usize; 3],
    p: [C64; 3],
    e: [Side; 3],
    coarse: usize,
    alive: bool,
}

pub(crate) struct Refiner {
    nodes: Vec<ENode>,
    leaves: Vec<Leaf>,
    num_vertices: usize,
}

/// Output of the refinement.
pub(crate) struct Refined {
    pub coarse: TriComplex,
    pub fine: TriComplex,
    pub face_parent: Vec<usize>,
    pub chains: Vec<Vec<usize>>,
    pub num_coarse_vertices: usize,
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, usize);
impl Eq for Dist {}
impl PartialOrd for Dist {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Dist {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl Refiner {
    fn node(&mut self, a: usize, b: usize, len: f64, sign: Sign) -> usize {
        self.nodes.push(ENode { sign, len, a, b, split: None });
        self.nodes.len() - 1
    }

    fn new_vertex(&mut self) -> usize {
        self.num_vertices += 1;
        self.num_vertices - 1
    }

    fn split_node(&mut self, id: usize) -> (usize, [usize; 2]) {
        if let Some(s) = self.nodes[id].split {
            return s;
        }
        let m = self.new_vertex();
        let ENode { sign, len, a, b, .. } = self.nodes[id].clone();
        let c0 = self.node(a, m, 0.5 * len, sign);
        let c1 = self.node(m, b, 0.5 * len, sign);
        self.nodes[id].split = Some((m, [c0, c1]));
        (m, [c0, c1])
    }

    /// Halves of side `k` of a leaf in the face's walking order, plus the midpoint.
    fn halves(&mut self, li: usize, k: usize) -> (Side, Side, usize) {
        let (id, rev) = self.leaves[li].e[k];
        let (m, [c0, c1]) = self.split_node(id);
        if rev {
            ((c1, true), (c0, true), m)
        } else {
            ((c0, false), (c1, false), m)
        }
    }

    fn max_side(&self, li: usize) -> f64 {
        self.leaves[li].e.iter().map(|&(id, _)| self.nodes[id].len).fold(0.0, f64::max)
    }

    fn red(&mut self, li: usize) {
        let (h0a, h0b, m0) = self.halves(li, 0);
        let (h1a, h1b, m1) = self.halves(li, 1);
        let (h2a, h2b, m2) = self.halves(li, 2);
        let Leaf { v, p, coarse, .. } = self.leaves[li].clone();
        let q = [(p[0] + p[1]) * 0.5, (p[1] + p[2]) * 0.5, (p[2] + p[0]) * 0.5];
        let e01 = self.node(m0, m1, (q[1] - q[0]).norm(), Sign::Plus);
        let e12 = self.node(m1, m2, (q[2] - q[1]).norm(), Sign::Plus);
        let e20 = self.node(m2, m0, (q[0] - q[2]).norm(), Sign::Plus);
        self.leaves[li].alive = false;
        let kids = [
            Leaf { v: [v[0], m0, m2], p: [p[0], q[0], q[2]], e: [h0a, (e20, true), h2b], coarse, alive: true },
            Leaf { v: [m0, v[1], m1], p: [q[0], p[1], q[1]], e: [h0b, h1a, (e01, true)], coarse, alive: true },
            Leaf { v: [m2, m1, v[2]], p: [q[2], q[1], p[2]], e: [(e12, true), h1b, h2a], coarse, alive: true },
            Leaf { v: [m0, m1, m2], p: [q[0], q[1], q[2]], e: [(e01, false), (e12, false), (e20, false)], coarse, alive: true },
        ];
        self.leaves.extend(kids);
    }

    fn green(&mut self, li: usize, k: usize) {
        let (ha, hb, m) = self.halves(li, k);
        let Leaf { v, p, e, coarse, .. } = self.leaves[li].clone();
        let (k1, k2) = ((k + 1) % 3, (k + 2) % 3);
        let pm = (p[k] + p[k1]) * 0.5;
        let d = self.node(m, v[k2], (p[k2] - pm).norm(), Sign::Plus);
        self.leaves[li].alive = false;
        self.leaves.push(Leaf { v: [v[k], m, v[k2]], p: [p[k], pm, p[k2]], e: [ha, (d, false), e[k2]], coarse, alive: true });
        self.leaves.push(Leaf { v: [m, v[k1], v[k2]], p: [pm, p[k1], p[k2]], e: [hb, e[k1], (d, true)], coarse, alive: true });
    }

    fn split_sides(&self, li: usize) -> Vec<usize> {
        (0..3).filter(|&k| self.nodes[self.leaves[li].e[k].0].split.is_some()).collect()
    }

    fn needs_closure(&self, li: usize) -> bool {
        let split = self.split_sides(li);
        if split.len() >= 2 {
            return true;
        }
        split.iter().any(|&k| {
            let (_, kids) = self.nodes[self.leaves[li].e[k].0].split.unwrap();
            kids.iter().any(|&c| self.nodes[c].split.is_some())
        })
    }

    fn closure(&mut self) {
        loop {
            let mut changed = false;
            let mut li = 0;
            while li < self.leaves.len() {
                if self.leaves[li].alive && self.needs_closure(li) {
                    self.red(li);
                    changed = true;
                }
                li += 1;
            }
            if !changed {
                break;
            }
        }
    }

    fn refine_marked(&mut self, marked: Vec<usize>) {
        for li in marked {
            if self.leaves[li].alive {
                self.red(li);
            }
        }
        self.closure();
    }

    /// Graph distances along current edges from the given vertices.
    fn distances(&self, sources: &[usize]) -> Vec<f64> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for n in &self.nodes {
            if n.split.is_none() {
                adj[n.a].push((n.b, n.len));
                adj[n.b].push((n.a, n.len));
            }
        }
        let mut dist = vec![f64::INFINITY; self.num_vertices];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(Dist(0.0, s));
        }
        while let Some(Dist(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(w, l) in &adj[u] {
                if d + l < dist[w] {
                    dist[w] = d + l;
                    heap.push(Dist(d + l, w));
                }
            }
        }
        dist
    }

    /// Builds the complex of the alive leaves; returns it with the leaf index of each face.
    fn assemble(&self) -> (TriComplex, Vec<usize>, Vec<[usize; 2]>) {
        let alive: Vec<usize> = (0..self.leaves.len()).filter(|&l| self.leaves[l].alive).collect();
        let mut occ = vec![[usize::MAX; 2]; self.nodes.len()];
        for (f, &li) in alive.iter().enumerate() {
            for k in 0..3 {
                let (id, rev) = self.leaves[li].e[k];
                assert!(self.nodes[id].split.is_none(), "hanging node left in mesh");
                let slot = &mut occ[id][usize::from(rev)];
                assert_eq!(*slot, usize::MAX, "edge used twice from the same side");
                *slot = 3 * f + k;
            }
        }
        let mut twin = vec![0; 3 * alive.len()];
        let mut twin_sign = vec![Sign::Plus; 3 * alive.len()];
        for (id, o) in occ.iter().enumerate() {
            if o[0] == usize::MAX && o[1] == usize::MAX {
                continue;
            }
            assert!(o[0] != usize::MAX && o[1] != usize::MAX, "open edge in mesh");
            twin[o[0]] = o[1];
            twin[o[1]] = o[0];
            twin_sign[o[0]] = self.nodes[id].sign;
            twin_sign[o[1]] = self.nodes[id].sign;
        }
        let faces = alive.iter().map(|&l| self.leaves[l].v).collect();
        let pos = alive.iter().map(|&l| self.leaves[l].p).collect();
        (TriComplex::new(faces, pos, twin, twin_sign, self.num_vertices), alive, occ)
    }

    fn descendants(&self, id: usize, rev: bool, out: &mut Vec<Side>) {
        match self.nodes[id].split {
            None => out.push((id, rev)),
            Some((_, [c0, c1])) => {
                if rev {
                    self.descendants(c1, true, out);
                    self.descendants(c0, true, out);
                } else {
                    self.descendants(c0, false, out);
                    self.descendants(c1, false, out);
                }
            }
        }
    }
}

/// Polygon corner behind each coarse face corner (`None` for interior vertices).
pub(crate) type CornerOrigin = Vec<[Option<usize>; 3]>;

/// Triangulates every polygon: a fan from the centroid for convex polygons,
/// ear clipping otherwise. Vertex ids `0..V` are the surface vertex orbits.
pub(crate) fn coarse(surface: &FlatSurface) -> (Refiner, Vec<usize>, CornerOrigin) {
    let mut r = Refiner { nodes: Vec::new(), leaves: Vec::new(), num_vertices: surface.cone_points().len() };
    let polys = surface.polygons();
    let mut side: Vec<Vec<Side>> = polys.iter().map(|p| vec![(usize::MAX, false); p.len()]).collect();
    for g in surface.gluings() {
        let (p, e) = (g.a.polygon, g.a.edge);
        let n = polys[p].len();
        let a = surface.corner_vertex(p, e);
        let b = surface.corner_vertex(p, (e + 1) % n);
        let id = r.node(a, b, surface.edge_vector(p, e).norm(), g.sign);
        side[p][e] = (id, false);
        side[g.b.polygon][g.b.edge] = (id, true);
    }
    let mut face_polygon = Vec::new();
    let mut origin = Vec::new();
    for (pi, poly) in polys.iter().enumerate() {
        let n = poly.len();
        let vid: Vec<usize> = (0..n).map(|i| surface.corner_vertex(pi, i)).collect();
        if n == 3 {
            r.leaves.push(Leaf { v: [vid[0], vid[1], vid[2]], p: [poly[0], poly[1], poly[2]], e: [side[pi][0], side[pi][1], side[pi][2]], coarse: 0, alive: true });
            face_polygon.push(pi);
            origin.push([Some(0), Some(1), Some(2)]);
        } else if geom::is_convex(poly) {
            let c = geom::polygon_centroid(poly);
            let cv = r.new_vertex();
            let spokes: Vec<usize> = (0..n).map(|i| r.node(cv, vid[i], (poly[i] - c).norm(), Sign::Plus)).collect();
            for i in 0..n {
                let j = (i + 1) % n;
                r.leaves.push(Leaf {
                    v: [cv, vid[i], vid[j]],
                    p: [c, poly[i], poly[j]],
                    e: [(spokes[i], false), side[pi][i], (spokes[j], true)],
                    coarse: 0,
                    alive: true,
                });
                face_polygon.push(pi);
                origin.push([None, Some(i), Some(j)]);
            }
        } else {
            let mut diag = std::collections::HashMap::new();
            for [i, j, k] in ear_clip(poly) {
                let mut e = [(0, false); 3];
                for (s, (x, y)) in [(i, j), (j, k), (k, i)].into_iter().enumerate() {
                    e[s] = if (x + 1) % n == y {
                        side[pi][x]
                    } else if let Some(&id) = diag.get(&(y, x)) {
                        (id, true)
                    } else {
                        let id = r.node(vid[x], vid[y], (poly[y] - poly[x]).norm(), Sign::Plus);
                        diag.insert((x, y), id);
                        (id, false)
                    };
                }
                r.leaves.push(Leaf { v: [vid[i], vid[j], vid[k]], p: [poly[i], poly[j], poly[k]], e, coarse: 0, alive: true });
                face_polygon.push(pi);
                origin.push([Some(i), Some(j), Some(k)]);
            }
        }
    }
    for (f, l) in r.leaves.iter_mut().enumerate() {
        l.coarse = f;
    }
    (r, face_polygon, origin)
}

/// Ear clipping for a simple counter-clockwise polygon without degenerate ears.
fn ear_clip(poly: &[C64]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::new();
    let scale = poly.iter().map(|z| z.norm_sqr()).fold(1.0, f64::max);
    while idx.len() > 3 {
        let m = idx.len();
        let mut best: Option<(f64, usize)> = None;
        for t in 0..m {
            let (a, b, c) = (idx[(t + m - 1) % m], idx[t], idx[(t + 1) % m]);
            let (pa, pb, pc) = (poly[a], poly[b], poly[c]);
            if geom::cross(pb - pa, pc - pb) <= 1e-12 * scale {
                continue;
            }
            let tri = [pa, pb, pc];
            let blocked = idx.iter().any(|&o| o != a && o != b && o != c && geom::point_in_triangle(&tri, poly[o], 1e-12 * scale));
            if blocked {
                continue;
            }
            // prefer the fattest ear
            let q = geom::triangle_area(&tri) / ((pb - pa).norm_sqr() + (pc - pb).norm_sqr() + (pa - pc).norm_sqr());
            if best.is_none_or(|(bq, _)| q > bq) {
                best = Some((q, t));
            }
        }
        let t = best.expect("simple polygon has an ear").1;
        out.push([idx[(t + m - 1) % m], idx[t], idx[(t + 1) % m]]);
        idx.remove(t);
    }
    out.push([idx[0], idx[1], idx[2]]);
    out
}

impl Refiner {
    /// Refines to maximal edge length `h`, then grades towards `cones` down to `h/8`.
    pub(crate) fn run(mut self, h: f64, cones: &[usize]) -> Refined {
        let (coarse, _, _) = self.assemble();
        let coarse_sides: Vec<[Side; 3]> = self.leaves.iter().map(|l| l.e).collect();
        let num_coarse_vertices = self.num_vertices;
        loop {
            let marked: Vec<usize> = (0..self.leaves.len())
                .filter(|&l| self.leaves[l].alive && self.max_side(l) > h * (1.0 + 1e-12))
                .collect();
            if marked.is_empty() {
                break;
            }
            self.refine_marked(marked);
        }
        self.closure();
        if !cones.is_empty() {
            for _ in 0..8 {
                let dist = self.distances(cones);
                let marked: Vec<usize> = (0..self.leaves.len())
                    .filter(|&l| {
                        let leaf = &self.leaves[l];
                        if !leaf.alive {
                            return false;
                        }
                        let d = leaf.v.iter().map(|&v| dist[v]).fold(f64::INFINITY, f64::min);
                        let target = (0.25 * d).clamp(h / 8.0, h);
                        self.max_side(l) > target * (1.0 + 1e-12)
                    })
                    .collect();
                if marked.is_empty() {
                    break;
                }
                self.refine_marked(marked);
            }
        }
        let n = self.leaves.len();
        for li in 0..n {
            if self.leaves[li].alive {
                let s = self.split_sides(li);
                if s.len() == 1 {
                    self.green(li, s[0]);
                }
            }
        }
        let (fine, alive, occ) = self.assemble();
        let face_parent = alive.iter().map(|&l| self.leaves[l].coarse).collect();
        let mut chains = Vec::with_capacity(3 * coarse_sides.len());
        for sides in &coarse_sides {
            for &(id, rev) in sides {
                let mut d = Vec::new();
                self.descendants(id, rev, &mut d);
                chains.push(d.into_iter().map(|(n, r)| occ[n][usize::from(r)]).collect());
            }
        }
        Refined { coarse, fine, face_parent, chains, num_coarse_vertices }
    }
}
