//! Discrete Hodge theory on flat surfaces and the pairing between harmonic
//! one-forms and quadratic differentials.
//!
//! The pipeline: a [`FlatSurface`] (polygons with gluings) is triangulated into a
//! [`Mesh`]; closed cochains on the mesh are made harmonic by a cotangent-Laplacian
//! solve; the pairing with a quadratic differential is evaluated by splitting off
//! small disks around the singularities; and the norms module bounds the result
//! against the Teichmüller norm.

pub mod catalog;
pub mod error;
pub mod geom;
pub mod hodge;
pub mod mesh;
pub mod norms;
pub mod pairing;
pub mod suites;
pub mod surface;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use hodge::OneForm;
pub use mesh::Mesh;
pub use norms::{QDElement, SaddleConnection, TeichNormEstimate};
pub use pairing::{PairingOptions, PairingResult};
pub use surface::{ConePoint, DoubleCover, EdgeRef, FlatSurface, Gluing, RawSurface, Sign};
