//! Flat surfaces presented as polygons with edge gluings.

mod cover;
mod raw;

pub use cover::DoubleCover;
pub use raw::{RawGluing, RawMarkedPoint, RawPolygon, RawSurface};

use crate::error::{Error, Result};
use crate::geom;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

/// How two glued edges are identified: by a translation or by a half-turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i8(s: i8) -> Option<Sign> {
        match s {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
    pub fn compose(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeRef {
    pub polygon: usize,
    pub edge: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Gluing {
    pub a: EdgeRef,
    pub b: EdgeRef,
    pub sign: Sign,
}

/// A vertex orbit of the glued polygons.
#[derive(Clone, Debug, Serialize)]
pub struct ConePoint {
    pub id: usize,
    pub total_angle: f64,
    /// `k` with angle `2π(k+1)` on translation surfaces and `π(k+2)` on half-translation ones.
    pub order: i32,
    pub marked: bool,
    /// Polygon corners `(polygon, vertex)` in this orbit.
    pub corners: Vec<(usize, usize)>,
}

impl ConePoint {
    /// Singular or marked: the points that make up Σ.
    pub fn in_sigma(&self) -> bool {
        self.order != 0 || self.marked
    }
}

#[derive(Clone, Debug)]
pub struct FlatSurface {
    polygons: Vec<Vec<C64>>,
    partner: Vec<Vec<(EdgeRef, Sign)>>,
    corner_vertex: Vec<Vec<usize>>,
    cone_points: Vec<ConePoint>,
    translation: bool,
}

struct Work {
    polys: Vec<Vec<C64>>,
    partner: Vec<Vec<Option<(usize, usize, Sign)>>>,
    marked: Vec<(usize, usize)>,
}

impl Work {
    /// Inserts `x` after vertex `e` of polygon `p`, shifting every edge reference.
    fn insert_vertex(&mut self, p: usize, e: usize, x: C64) {
        self.polys[p].insert(e + 1, x);
        for row in self.partner.iter_mut() {
            for slot in row.iter_mut().flatten() {
                if slot.0 == p && slot.1 > e {
                    slot.1 += 1;
                }
            }
        }
        self.partner[p].insert(e + 1, None);
        for m in self.marked.iter_mut() {
            if m.0 == p && m.1 > e {
                m.1 += 1;
            }
        }
    }

    fn vertex(&self, p: usize, i: usize) -> C64 {
        let n = self.polys[p].len();
        self.polys[p][i % n]
    }

    /// Splits edge `(p,e)` at parameter `t` and its partner at `1-t`.
    fn split(&mut self, p: usize, e: usize, t: f64) {
        let (q, f, s) = self.partner[p][e].expect("glued edge");
        let x = self.vertex(p, e) + (self.vertex(p, e + 1) - self.vertex(p, e)) * t;
        if (q, f) == (p, e) {
            self.insert_vertex(p, e, x);
            self.partner[p][e] = Some((p, e + 1, s));
            self.partner[p][e + 1] = Some((p, e, s));
            return;
        }
        let y = self.vertex(q, f) + (self.vertex(q, f + 1) - self.vertex(q, f)) * (1.0 - t);
        self.insert_vertex(p, e, x);
        let f = if q == p && f > e { f + 1 } else { f };
        self.insert_vertex(q, f, y);
        let e = if q == p && e > f { e + 1 } else { e };
        self.partner[p][e] = Some((q, f + 1, s));
        self.partner[q][f + 1] = Some((p, e, s));
        self.partner[p][e + 1] = Some((q, f, s));
        self.partner[q][f] = Some((p, e + 1, s));
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

impl FlatSurface {
    /// Parses and validates a JSON surface description.
    pub fn from_json(text: &str) -> Result<FlatSurface> {
        let raw: RawSurface = serde_json::from_str(text)?;
        FlatSurface::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawSurface) -> Result<FlatSurface> {
        let polys: Vec<Vec<C64>> = raw
            .polygons
            .iter()
            .map(|p| p.vertices.iter().map(|v| C64::new(v[0], v[1])).collect())
            .collect();
        let mut gluings = Vec::with_capacity(raw.gluings.len());
        for g in &raw.gluings {
            let sign = Sign::from_i8(g.sign)
                .ok_or_else(|| Error::InvalidInput(format!("gluing sign must be 1 or -1, got {}", g.sign)))?;
            for r in [g.from, g.to] {
                if r[0] >= polys.len() || r[1] >= polys[r[0]].len() {
                    return Err(Error::InvalidInput(format!("gluing refers to missing edge {r:?}")));
                }
            }
            gluings.push(Gluing {
                a: EdgeRef { polygon: g.from[0], edge: g.from[1] },
                b: EdgeRef { polygon: g.to[0], edge: g.to[1] },
                sign,
            });
        }
        let mut work = prepare(polys, &gluings)?;
        for (idx, m) in raw.marked_points.iter().enumerate() {
            let z = C64::new(m.position[0], m.position[1]);
            place_marked(&mut work, idx, m.polygon, z)?;
        }
        finish(work)
    }

    /// Builds a surface from polygons, gluings and marked polygon corners.
    pub fn from_parts(polygons: Vec<Vec<C64>>, gluings: &[Gluing], marked_corners: &[(usize, usize)]) -> Result<FlatSurface> {
        let positions: Vec<(usize, C64)> = marked_corners
            .iter()
            .map(|&(p, i)| (p, polygons[p][i % polygons[p].len()]))
            .collect();
        let mut work = prepare(polygons, gluings)?;
        for (idx, (p, z)) in positions.into_iter().enumerate() {
            place_marked(&mut work, idx, p, z)?;
        }
        finish(work)
    }

    pub fn to_raw(&self) -> RawSurface {
        let polygons = self
            .polygons
            .iter()
            .map(|p| RawPolygon { vertices: p.iter().map(|z| [z.re, z.im]).collect() })
            .collect();
        let gluings = self
            .gluings()
            .iter()
            .map(|g| RawGluing { from: [g.a.polygon, g.a.edge], to: [g.b.polygon, g.b.edge], sign: g.sign.as_i8() })
            .collect();
        let marked_points = self
            .cone_points
            .iter()
            .filter(|c| c.marked)
            .map(|c| {
                let (p, i) = c.corners[0];
                let z = self.polygons[p][i];
                RawMarkedPoint { polygon: p, position: [z.re, z.im] }
            })
            .collect();
        RawSurface { polygons, gluings, marked_points }
    }

    pub fn polygons(&self) -> &[Vec<C64>] {
        &self.polygons
    }

    pub fn num_polygons(&self) -> usize {
        self.polygons.len()
    }

    pub fn partner(&self, p: usize, e: usize) -> (EdgeRef, Sign) {
        self.partner[p][e]
    }

    /// Each gluing once, listed from the lexicographically smaller edge.
    pub fn gluings(&self) -> Vec<Gluing> {
        let mut out = Vec::new();
        for (p, row) in self.partner.iter().enumerate() {
            for (e, &(b, sign)) in row.iter().enumerate() {
                let a = EdgeRef { polygon: p, edge: e };
                if a <= b {
                    out.push(Gluing { a, b, sign });
                }
            }
        }
        out
    }

    pub fn corner_vertex(&self, p: usize, i: usize) -> usize {
        self.corner_vertex[p][i]
    }

    /// All vertex orbits, regular ones included.
    pub fn cone_points(&self) -> &[ConePoint] {
        &self.cone_points
    }

    /// Indices of the orbits in Σ.
    pub fn sigma(&self) -> Vec<usize> {
        self.cone_points.iter().filter(|c| c.in_sigma()).map(|c| c.id).collect()
    }

    pub fn is_translation(&self) -> bool {
        self.translation
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(|p| geom::polygon_area(p)).sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        let v = self.cone_points.len() as i64;
        let e = self.gluings().len() as i64;
        let f = self.polygons.len() as i64;
        v - e + f
    }

    pub fn genus(&self) -> usize {
        ((2 - self.euler_characteristic()) / 2) as usize
    }

    /// Largest polygon diameter; the length scale for tolerances.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for p in &self.polygons {
            for a in p {
                for b in p {
                    d = d.max((a - b).norm());
                }
            }
        }
        d
    }

    pub fn min_edge_length(&self) -> f64 {
        let mut m = f64::INFINITY;
        for p in &self.polygons {
            let n = p.len();
            for i in 0..n {
                m = m.min((p[(i + 1) % n] - p[i]).norm());
            }
        }
        m
    }

    /// The same surface with every length multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> FlatSurface {
        let mut s = self.clone();
        for p in s.polygons.iter_mut() {
            for z in p.iter_mut() {
                *z *= lambda;
            }
        }
        s
    }

    /// Stratum label such as `H(2)` or `Q(1^4)`; Σ-points only.
    pub fn stratum(&self) -> String {
        let mut orders: Vec<i32> = self.cone_points.iter().filter(|c| c.in_sigma()).map(|c| c.order).collect();
        orders.sort_by(|a, b| b.cmp(a));
        let mut parts = Vec::new();
        let mut i = 0;
        while i < orders.len() {
            let mut j = i;
            while j < orders.len() && orders[j] == orders[i] {
                j += 1;
            }
            if j - i > 1 {
                parts.push(format!("{}^{}", orders[i], j - i));
            } else {
                parts.push(format!("{}", orders[i]));
            }
            i = j;
        }
        format!("{}({})", if self.translation { "H" } else { "Q" }, parts.join(","))
    }

    /// Edge vector of `(p, e)` in the polygon's own coordinates.
    pub fn edge_vector(&self, p: usize, e: usize) -> C64 {
        let n = self.polygons[p].len();
        self.polygons[p][(e + 1) % n] - self.polygons[p][e]
    }
}

fn prepare(polys: Vec<Vec<C64>>, gluings: &[Gluing]) -> Result<Work> {
    for (i, p) in polys.iter().enumerate() {
        geom::check_simple_ccw(p).map_err(|reason| Error::NonSimplePolygon { polygon: i, reason })?;
    }
    let mut partner: Vec<Vec<Option<(usize, usize, Sign)>>> = polys.iter().map(|p| vec![None; p.len()]).collect();
    for g in gluings {
        for (x, y) in [(g.a, g.b), (g.b, g.a)] {
            if let Some(prev) = partner[x.polygon][x.edge] {
                if (prev.0, prev.1) != (y.polygon, y.edge) || g.a != g.b {
                    return Err(Error::DuplicateEdge { polygon: x.polygon, edge: x.edge });
                }
            }
            partner[x.polygon][x.edge] = Some((y.polygon, y.edge, g.sign));
        }
    }
    for (p, row) in partner.iter().enumerate() {
        for (e, slot) in row.iter().enumerate() {
            if slot.is_none() {
                return Err(Error::UnpairedEdge { polygon: p, edge: e });
            }
        }
    }
    let diam = polys
        .iter()
        .flat_map(|p| p.iter().flat_map(move |a| p.iter().map(move |b| (a - b).norm())))
        .fold(0.0, f64::max);
    let tol = 1e-12 * diam.max(1e-300);
    let mut work = Work { polys, partner, marked: Vec::new() };
    for g in gluings {
        let va = work.vertex(g.a.polygon, g.a.edge + 1) - work.vertex(g.a.polygon, g.a.edge);
        let vb = work.vertex(g.b.polygon, g.b.edge + 1) - work.vertex(g.b.polygon, g.b.edge);
        if g.a == g.b {
            if g.sign == Sign::Plus {
                return Err(Error::EdgeMismatch(
                    g.a.polygon,
                    g.a.edge,
                    g.b.polygon,
                    g.b.edge,
                    "an edge can only be glued to itself by a half-turn".into(),
                ));
            }
            continue;
        }
        let expected = -va * g.sign.as_f64();
        if (vb - expected).norm() > tol.max(1e-12 * va.norm()) {
            return Err(Error::EdgeMismatch(
                g.a.polygon,
                g.a.edge,
                g.b.polygon,
                g.b.edge,
                format!("edge vectors {va} and {vb} do not match under sign {}", g.sign.as_i8()),
            ));
        }
    }
    // Fold every self-glued edge at its midpoint so that the fixed point becomes a vertex.
    loop {
        let mut found = None;
        'scan: for (p, row) in work.partner.iter().enumerate() {
            for (e, slot) in row.iter().enumerate() {
                let (q, f, _) = slot.unwrap();
                if (q, f) == (p, e) {
                    found = Some((p, e));
                    break 'scan;
                }
            }
        }
        match found {
            Some((p, e)) => work.split(p, e, 0.5),
            None => break,
        }
    }
    Ok(work)
}

fn place_marked(work: &mut Work, idx: usize, p: usize, z: C64) -> Result<()> {
    if p >= work.polys.len() {
        return Err(Error::MarkedPoint { index: idx, reason: format!("polygon {p} does not exist") });
    }
    let poly = work.polys[p].clone();
    let n = poly.len();
    let scale = poly.iter().map(|v| (v - poly[0]).norm()).fold(0.0, f64::max);
    let tol = 1e-10 * scale;
    if let Some(i) = (0..n).find(|&i| (poly[i] - z).norm() <= tol) {
        work.marked.push((p, i));
        return Ok(());
    }
    for e in 0..n {
        let (a, b) = (poly[e], poly[(e + 1) % n]);
        if geom::point_segment_distance(z, a, b) <= tol {
            let t = geom::dot(z - a, b - a) / (b - a).norm_sqr();
            work.split(p, e, t);
            work.marked.push((p, e + 1));
            return Ok(());
        }
    }
    let inside = {
        let mut wind = 0.0;
        for i in 0..n {
            wind += ((poly[(i + 1) % n] - z) / (poly[i] - z)).arg();
        }
        wind.abs() > PI
    };
    let reason = if inside {
        "interior marked points are not supported; place the point on an edge or a vertex".to_string()
    } else {
        "point lies outside its polygon".to_string()
    };
    Err(Error::MarkedPoint { index: idx, reason })
}

fn finish(work: Work) -> Result<FlatSurface> {
    let Work { polys, partner, marked } = work;
    let partner: Vec<Vec<(EdgeRef, Sign)>> = partner
        .into_iter()
        .map(|row| row.into_iter().map(|s| s.unwrap()).map(|(q, f, s)| (EdgeRef { polygon: q, edge: f }, s)).collect())
        .collect();
    let translation = partner.iter().flatten().all(|(_, s)| *s == Sign::Plus);

    // connectivity of the gluing graph
    let mut parent: Vec<usize> = (0..polys.len()).collect();
    for (p, row) in partner.iter().enumerate() {
        for (q, _) in row {
            union(&mut parent, p, q.polygon);
        }
    }
    let components = (0..polys.len()).filter(|&p| find(&mut parent, p) == p).count();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }

    // vertex orbits
    let offsets: Vec<usize> = polys
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.len();
            Some(o)
        })
        .collect();
    let total: usize = polys.iter().map(|p| p.len()).sum();
    let corner = |p: usize, i: usize| offsets[p] + i % polys[p].len();
    let mut parent: Vec<usize> = (0..total).collect();
    for (p, row) in partner.iter().enumerate() {
        for (e, (b, _)) in row.iter().enumerate() {
            union(&mut parent, corner(p, e), corner(b.polygon, b.edge + 1));
            union(&mut parent, corner(p, e + 1), corner(b.polygon, b.edge));
        }
    }
    let mut orbit_of_root = std::collections::BTreeMap::new();
    let mut corner_vertex = Vec::with_capacity(polys.len());
    let mut cone_points: Vec<ConePoint> = Vec::new();
    for (p, poly) in polys.iter().enumerate() {
        let angles = geom::interior_angles(poly);
        let mut row = Vec::with_capacity(poly.len());
        for (i, angle) in angles.into_iter().enumerate() {
            let root = find(&mut parent, corner(p, i));
            let id = *orbit_of_root.entry(root).or_insert_with(|| {
                cone_points.push(ConePoint { id: cone_points.len(), total_angle: 0.0, order: 0, marked: false, corners: vec![] });
                cone_points.len() - 1
            });
            cone_points[id].total_angle += angle;
            cone_points[id].corners.push((p, i));
            row.push(id);
        }
        corner_vertex.push(row);
    }
    for &(p, i) in &marked {
        cone_points[corner_vertex[p][i]].marked = true;
    }
    let unit = if translation { 2.0 * PI } else { PI };
    for c in cone_points.iter_mut() {
        let m = c.total_angle / unit;
        let k = m.round();
        if (m - k).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "vertex orbit {} has angle {} which is not a multiple of {}",
                c.id, c.total_angle, unit
            )));
        }
        c.order = if translation { k as i32 - 1 } else { k as i32 - 2 };
    }
    let surface = FlatSurface { polygons: polys, partner, corner_vertex, cone_points, translation };
    let chi = surface.euler_characteristic();
    let orders: i64 = surface.cone_points.iter().map(|c| c.order as i64).sum();
    let expected = if translation { -chi } else { -2 * chi };
    if orders != expected {
        return Err(Error::InvalidInput(format!("cone orders sum to {orders}, expected {expected}")));
    }
    Ok(surface)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn square_torus() {
        let s = catalog::square_torus();
        assert!(s.is_translation());
        assert_eq!(s.genus(), 1);
        assert_eq!(s.cone_points().len(), 1);
        let c = &s.cone_points()[0];
        assert!((c.total_angle - 2.0 * PI).abs() < 1e-12);
        assert_eq!(c.order, 0);
        assert!(s.sigma().is_empty());
        assert!((s.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn octagon_is_genus_two_with_one_zero() {
        let s = catalog::octagon();
        assert_eq!(s.genus(), 2);
        assert_eq!(s.stratum(), "H(2)");
        assert!((s.area() - 2.0 * (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((s.cone_points()[0].total_angle - 6.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn pillowcase_has_four_poles() {
        for s in [catalog::pillowcase(), catalog::folded_square()] {
            assert!(!s.is_translation());
            assert_eq!(s.genus(), 0);
            let poles: Vec<_> = s.cone_points().iter().filter(|c| c.order == -1).collect();
            assert_eq!(poles.len(), 4);
            for c in poles {
                assert!((c.total_angle - PI).abs() < 1e-12);
            }
            assert_eq!(s.stratum(), "Q(-1^4)");
        }
    }

    #[test]
    fn principal_genus_two_example() {
        let s = catalog::q1111();
        assert_eq!(s.genus(), 2);
        assert_eq!(s.stratum(), "Q(1^4)");
        assert!((s.area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn half_octagon_quotient() {
        let s = catalog::octagon_quotient();
        assert_eq!(s.genus(), 0);
        assert_eq!(s.stratum(), "Q(1,-1^5)");
    }

    #[test]
    fn mismatched_edge_is_rejected() {
        let text = r#"{"polygons":[{"vertices":[[0,0],[1,0],[1,1],[0,1.1]]}],
            "gluings":[{"from":[0,0],"to":[0,2],"sign":1},{"from":[0,1],"to":[0,3],"sign":1}]}"#;
        match FlatSurface::from_json(text) {
            Err(Error::EdgeMismatch(0, 0, 0, 2, _)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = FlatSurface::from_json("{\"polygons\": [").unwrap_err();
        let msg = std::error::Error::source(&err).map(|e| e.to_string()).unwrap_or_default();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn unpaired_and_disconnected() {
        let text = r#"{"polygons":[{"vertices":[[0,0],[1,0],[1,1],[0,1]]}],
            "gluings":[{"from":[0,0],"to":[0,2],"sign":1}]}"#;
        assert!(matches!(FlatSurface::from_json(text), Err(Error::UnpairedEdge { .. })));
        let two = r#"{"polygons":[{"vertices":[[0,0],[1,0],[1,1],[0,1]]},{"vertices":[[0,0],[1,0],[1,1],[0,1]]}],
            "gluings":[{"from":[0,0],"to":[0,2],"sign":1},{"from":[0,1],"to":[0,3],"sign":1},
                       {"from":[1,0],"to":[1,2],"sign":1},{"from":[1,1],"to":[1,3],"sign":1}]}"#;
        assert!(matches!(FlatSurface::from_json(two), Err(Error::Disconnected { components: 2 })));
    }

    #[test]
    fn self_glued_translation_is_rejected() {
        let text = r#"{"polygons":[{"vertices":[[0,0],[1,0],[1,1],[0,1]]}],
            "gluings":[{"from":[0,0],"to":[0,0],"sign":1},{"from":[0,1],"to":[0,3],"sign":1},{"from":[0,2],"to":[0,2],"sign":-1}]}"#;
        assert!(matches!(FlatSurface::from_json(text), Err(Error::EdgeMismatch(..))));
    }

    #[test]
    fn marked_point_on_edge_splits_partner() {
        let s = catalog::square_torus_two_marked();
        assert_eq!(s.sigma().len(), 2);
        assert_eq!(s.polygons()[0].len(), 6);
        assert_eq!(s.genus(), 1);
    }

    #[test]
    fn interior_marked_point_is_reported() {
        let text = r#"{"polygons":[{"vertices":[[0,0],[1,0],[1,1],[0,1]]}],
            "gluings":[{"from":[0,0],"to":[0,2],"sign":1},{"from":[0,1],"to":[0,3],"sign":1}],
            "marked_points":[{"polygon":0,"position":[0.5,0.5]}]}"#;
        assert!(matches!(FlatSurface::from_json(text), Err(Error::MarkedPoint { .. })));
    }

    #[test]
    fn raw_round_trip() {
        let s = catalog::pillowcase();
        let again = FlatSurface::from_raw(&s.to_raw()).unwrap();
        assert_eq!(again.stratum(), s.stratum());
        assert_eq!(again.polygons(), s.polygons());
    }
}
