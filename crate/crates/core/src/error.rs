use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed surface description")]
    Parse(#[from] serde_json::Error),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polygon {polygon} is not a simple counter-clockwise polygon: {reason}")]
    NonSimplePolygon { polygon: usize, reason: String },

    #[error("edge {edge:?} of polygon {polygon} is not glued to anything")]
    UnpairedEdge { polygon: usize, edge: usize },

    #[error("edge {edge} of polygon {polygon} appears in more than one gluing")]
    DuplicateEdge { polygon: usize, edge: usize },

    #[error("edge ({0},{1}) and edge ({2},{3}) cannot be glued: {4}")]
    EdgeMismatch(usize, usize, usize, usize, String),

    #[error("the gluing graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("marked point {index}: {reason}")]
    MarkedPoint { index: usize, reason: String },

    #[error("surface is already a translation surface")]
    AlreadyTranslation,

    #[error("operation needs a translation surface, got a half-translation surface")]
    HalfTranslationInput,

    #[error("surface has no singular or marked points")]
    EmptySigma,

    #[error("linear solver failed: {0}")]
    SolverFailure(String),

    #[error("expected a space of dimension {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("mesh carries no compatible involution")]
    NonEquivariantMesh,

    #[error("radius {radius} at point {point} exceeds the admissible limit {limit}")]
    RadiusTooLarge { point: usize, radius: f64, limit: f64 },

    #[error("one-form is not closed (defect {defect:e})")]
    NotClosed { defect: f64 },

    #[error("one-form is not harmonic (codifferential {codifferential:e})")]
    NotHarmonic { codifferential: f64 },

    #[error("one-form is not anti-invariant (defect {defect:e})")]
    NotAntiInvariant { defect: f64 },

    #[error("cone point of order {order} is not allowed in the principal stratum")]
    NotPrincipal { order: i32 },

    #[error("disk of radius {radius} around point {point} is not embedded (limit {limit})")]
    DiskNotEmbedded { point: usize, radius: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
