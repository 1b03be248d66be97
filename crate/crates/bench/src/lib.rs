//! Shared fixtures for the benchmarks.

use flatdiff::hodge::{anti_invariant_basis, harmonic_basis, AntiInvariantBasis};
use flatdiff::{catalog, DoubleCover, Mesh, OneForm};

/// Octagon mesh with its harmonic basis.
pub fn octagon(h: f64) -> (Mesh, Vec<OneForm>) {
    let m = Mesh::triangulate(&catalog::octagon(), h).expect("octagon triangulates");
    let forms = harmonic_basis(&m).expect("harmonic basis").forms;
    (m, forms)
}

/// Cover mesh of a bundled half-translation surface with its anti-invariant bases.
pub fn cover(name: &str, h: f64) -> (DoubleCover, Mesh, AntiInvariantBasis) {
    let d = DoubleCover::new(&catalog::by_name(name).expect("bundled surface")).expect("double cover");
    let m = Mesh::triangulate_cover(&d, h).expect("cover triangulates");
    let b = anti_invariant_basis(&m).expect("anti-invariant basis");
    (d, m, b)
}
