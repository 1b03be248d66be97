use super::{EdgeRef, FlatSurface, Gluing, Sign};
use crate::error::{Error, Result};

/// The holonomy double cover of a half-translation surface.
///
/// Cover polygon `2p + s` is base polygon `p` on sheet `s`; sheet 1 carries the
/// negated coordinates. The deck involution swaps sheets and acts as `z ↦ -z`.
#[derive(Clone, Debug)]
pub struct DoubleCover {
    pub base: FlatSurface,
    pub cover: FlatSurface,
}

impl DoubleCover {
    pub fn new(base: &FlatSurface) -> Result<DoubleCover> {
        if base.is_translation() {
            return Err(Error::AlreadyTranslation);
        }
        let mut polygons = Vec::with_capacity(2 * base.num_polygons());
        for poly in base.polygons() {
            polygons.push(poly.clone());
            polygons.push(poly.iter().map(|z| -z).collect());
        }
        let mut gluings = Vec::new();
        for g in base.gluings() {
            let flip = usize::from(g.sign == Sign::Minus);
            for s in 0..2 {
                gluings.push(Gluing {
                    a: EdgeRef { polygon: 2 * g.a.polygon + s, edge: g.a.edge },
                    b: EdgeRef { polygon: 2 * g.b.polygon + (s ^ flip), edge: g.b.edge },
                    sign: Sign::Plus,
                });
            }
        }
        let mut marked = Vec::new();
        for c in base.cone_points().iter().filter(|c| c.in_sigma()) {
            for &(p, i) in &c.corners {
                marked.push((2 * p, i));
                marked.push((2 * p + 1, i));
            }
        }
        let cover = match FlatSurface::from_parts(polygons, &gluings, &marked) {
            Err(Error::Disconnected { .. }) => return Err(Error::AlreadyTranslation),
            other => other?,
        };
        Ok(DoubleCover { base: base.clone(), cover })
    }

    pub fn tau_polygon(&self, q: usize) -> usize {
        q ^ 1
    }

    pub fn project_polygon(&self, q: usize) -> usize {
        q / 2
    }

    /// Image of a cover vertex orbit under the deck involution.
    pub fn tau_vertex(&self, v: usize) -> usize {
        let (q, i) = self.cover.cone_points()[v].corners[0];
        self.cover.corner_vertex(q ^ 1, i)
    }

    /// Base orbit below a cover orbit.
    pub fn project_vertex(&self, v: usize) -> usize {
        let (q, i) = self.cover.cone_points()[v].corners[0];
        self.base.corner_vertex(q / 2, i)
    }

    /// Cover orbits fixed by the involution: the ramification points.
    pub fn ramification_points(&self) -> Vec<usize> {
        (0..self.cover.cone_points().len()).filter(|&v| self.tau_vertex(v) == v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use num_complex::Complex64 as C64;

    fn check_invariants(base: &FlatSurface) {
        let d = DoubleCover::new(base).unwrap();
        let cover = &d.cover;
        assert!(cover.is_translation());
        assert!((cover.area() - 2.0 * base.area()).abs() < 1e-12);
        for v in 0..cover.cone_points().len() {
            assert_eq!(d.tau_vertex(d.tau_vertex(v)), v);
            assert_eq!(d.project_vertex(d.tau_vertex(v)), d.project_vertex(v));
        }
        for q in 0..cover.num_polygons() {
            assert_eq!(d.project_polygon(d.tau_polygon(q)), d.project_polygon(q));
            for e in 0..cover.polygons()[q].len() {
                let w = cover.edge_vector(q, e);
                let v = base.edge_vector(q / 2, e);
                // quadratic edge data pulls back to the square of the holonomy
                assert!((w * w - v * v).norm() < 1e-12);
                assert!((cover.edge_vector(q ^ 1, e) + w).norm() < 1e-12);
            }
        }
        let odd = base.cone_points().iter().filter(|c| c.order.rem_euclid(2) == 1).count();
        assert_eq!(d.ramification_points().len(), odd);
        for r in d.ramification_points() {
            assert!(cover.cone_points()[r].in_sigma());
        }
        // Riemann–Hurwitz
        assert_eq!(2 * cover.genus() as i64 - 2, 2 * (2 * base.genus() as i64 - 2) + odd as i64);
    }

    #[test]
    fn pillowcase_cover_is_two_by_one_torus() {
        let d = DoubleCover::new(&catalog::pillowcase()).unwrap();
        assert_eq!(d.cover.genus(), 1);
        assert_eq!(d.ramification_points().len(), 4);
        assert!((d.cover.area() - 2.0).abs() < 1e-12);
        check_invariants(&catalog::pillowcase());
    }

    #[test]
    fn covers_of_bundled_examples() {
        check_invariants(&catalog::folded_square());
        check_invariants(&catalog::q1111());
        check_invariants(&catalog::octagon_quotient());
        let d = DoubleCover::new(&catalog::q1111()).unwrap();
        assert_eq!(d.cover.genus(), 5);
        assert_eq!(d.cover.stratum(), "H(2^4)");
        let o = DoubleCover::new(&catalog::octagon_quotient()).unwrap();
        assert_eq!(o.cover.genus(), 2);
        assert!((o.cover.area() - catalog::octagon().area()).abs() < 1e-12);
    }

    #[test]
    fn translation_input_is_rejected() {
        assert!(matches!(DoubleCover::new(&catalog::square_torus()), Err(Error::AlreadyTranslation)));
    }

    #[test]
    fn trivial_holonomy_is_rejected() {
        // a square whose sides are glued by half-turns to a rotated copy: holonomy is trivial
        let a = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        let b: Vec<C64> = a.iter().map(|z| -z).collect();
        let g = |p, e, q, f, s| Gluing { a: EdgeRef { polygon: p, edge: e }, b: EdgeRef { polygon: q, edge: f }, sign: s };
        let gl = [
            g(0, 0, 1, 2, Sign::Minus),
            g(0, 2, 1, 0, Sign::Minus),
            g(0, 1, 1, 3, Sign::Minus),
            g(0, 3, 1, 1, Sign::Minus),
        ];
        let s = FlatSurface::from_parts(vec![a, b], &gl, &[]).unwrap();
        assert!(matches!(DoubleCover::new(&s), Err(Error::AlreadyTranslation)));
    }
}
