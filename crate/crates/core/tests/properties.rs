use flatdiff::hodge::{self, constant_form, harmonic_basis, OneForm};
use flatdiff::norms::{self, qd_l1_norm, saddle_connections, systole, TeichOptions};
use flatdiff::pairing::{self, PairingOptions};
use flatdiff::{catalog, DoubleCover, Mesh, QDElement, C64};
use proptest::prelude::*;
use std::sync::OnceLock;

fn torus() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| Mesh::triangulate(&catalog::square_torus_marked(), 0.2).unwrap())
}

fn octagon() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| Mesh::triangulate(&catalog::octagon(), 0.3).unwrap())
}

fn pillowcase() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| Mesh::triangulate_cover(&DoubleCover::new(&catalog::pillowcase()).unwrap(), 0.25).unwrap())
}

fn octagon_harmonic() -> &'static Vec<OneForm> {
    static B: OnceLock<Vec<OneForm>> = OnceLock::new();
    B.get_or_init(|| harmonic_basis(octagon()).unwrap().forms)
}

fn c64() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn nonzero() -> impl Strategy<Value = C64> {
    c64().prop_filter("away from zero", |z| z.norm() > 0.1)
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flat_torus_pairing_is_exact(b in c64(), c in c64()) {
        let m = torus();
        let eta = constant_form(m, C64::new(0.0, 0.0), b);
        let r = pairing::pairing_closed(m, &eta, &QDElement::constant(m, c), &PairingOptions::default()).unwrap();
        prop_assert!(close(r.value, c * b, 1e-9), "{} vs {}", r.value, c * b);
    }

    #[test]
    fn pairing_is_bilinear(a in c64(), s in c64(), x in prop::collection::vec(c64(), 4), y in prop::collection::vec(c64(), 4)) {
        let m = octagon();
        let basis = octagon_harmonic();
        let refs: Vec<&OneForm> = basis.iter().collect();
        let e1 = OneForm::combine(&refs, &x);
        let e2 = OneForm::combine(&refs, &y);
        let q = QDElement::omega_squared(m);
        let opts = PairingOptions::default();
        let p = |e: &OneForm, q: &QDElement| pairing::pairing_closed(m, e, q, &opts).unwrap().value;
        let lhs = p(&OneForm::combine(&[&e1, &e2], &[a, C64::new(1.0, 0.0)]), &q);
        prop_assert!(close(lhs, a * p(&e1, &q) + p(&e2, &q), 1e-9));
        prop_assert!(close(p(&e1, &q.scaled(s)), s * p(&e1, &q), 1e-9));
    }

    #[test]
    fn exact_forms_pair_to_zero(vals in prop::collection::vec(c64(), 8)) {
        // a harmonic representative only sees cohomology
        let m = octagon();
        let f: Vec<C64> = (0..m.fine.num_vertices).map(|v| vals[v % vals.len()] * (v as f64).sin()).collect();
        let exact = pairing::exact_form(m, &f);
        let h = hodge::harmonic_representative(m, &exact.edge_values).unwrap();
        prop_assert!(hodge::hodge_norm(m, &h) <= 1e-8 * (1.0 + hodge::hodge_norm(m, &exact)));
    }

    #[test]
    fn harmonic_projection_is_idempotent(x in prop::collection::vec(c64(), 4)) {
        let m = octagon();
        let refs: Vec<&OneForm> = octagon_harmonic().iter().collect();
        let eta = OneForm::combine(&refs, &x);
        let again = hodge::harmonic_representative(m, &eta.edge_values).unwrap();
        let diff: f64 = eta.edge_values.iter().zip(&again.edge_values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-9 * (1.0 + x.iter().map(|z| z.norm()).sum::<f64>()));
    }

    #[test]
    fn qd_norm_is_absolutely_homogeneous(s in c64()) {
        let m = octagon();
        let q = QDElement::omega_squared(m);
        prop_assert!((qd_l1_norm(m, &q.scaled(s)) - s.norm() * qd_l1_norm(m, &q)).abs() <= 1e-12 * (1.0 + s.norm()));
    }

    #[test]
    fn systole_scales_linearly(lambda in 0.2..5.0f64) {
        let s = catalog::octagon();
        let a = systole(&s).unwrap();
        let b = systole(&s.scaled(lambda)).unwrap();
        prop_assert!((b - lambda * a).abs() <= 1e-10 * lambda);
    }

    #[test]
    fn saddle_lists_grow_with_length(l1 in 0.5..2.5f64, extra in 0.0..1.5f64) {
        let s = catalog::octagon();
        let short = saddle_connections(&s, l1).unwrap();
        let long = saddle_connections(&s, l1 + extra).unwrap();
        prop_assert!(short.len() <= long.len());
        prop_assert!(short.iter().all(|c| c.length <= l1 + 1e-12));
        let mut lens: Vec<f64> = long.iter().filter(|c| c.length <= l1).map(|c| c.length).collect();
        let mut want: Vec<f64> = short.iter().map(|c| c.length).collect();
        lens.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(lens.len(), want.len());
    }

    #[test]
    fn mean_value_chain_holds(seed in any::<u64>()) {
        prop_assert_eq!(norms::mean_value_check(seed, 20).violations, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn teich_estimate_is_homogeneous(s in nonzero(), x in c64()) {
        let m = pillowcase();
        let basis = hodge::anti_invariant_basis(m).unwrap();
        let eta = basis.harmonic[0].scaled(x + C64::new(1.0, 0.0));
        let opts = TeichOptions { restarts: 2, ..TeichOptions::default() };
        let a = norms::teich_norm_estimate(m, &eta, &basis.holomorphic, &opts).unwrap().value;
        let b = norms::teich_norm_estimate(m, &eta.scaled(s), &basis.holomorphic, &opts).unwrap().value;
        prop_assert!((b - s.norm() * a).abs() <= 1e-6 * (1.0 + b));
    }

    #[test]
    fn witness_never_exceeds_teich(x in nonzero()) {
        let m = pillowcase();
        let basis = hodge::anti_invariant_basis(m).unwrap();
        let beta = basis.holomorphic[0].scaled(x);
        let w = norms::lower_bound_witness(m, &beta).unwrap();
        let eta = beta.conj();
        let est = norms::teich_norm_estimate(m, &eta, &basis.holomorphic, &TeichOptions { restarts: 2, ..TeichOptions::default() }).unwrap();
        prop_assert!(w.ratio() <= est.value * (1.0 + 1e-6));
    }
}
