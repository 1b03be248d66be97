//! Norms of quadratic differentials and the comparison with Hodge norms.

mod checks;
mod qd;
mod saddle;
mod teich;

pub use checks::{
    embedded_radius_lower_bounds, int_beta_bound_check, mean_value_check, pointwise_ratio_check, IntBetaReport, MeanValueReport,
    PointwiseReport, MEAN_VALUE_TOL,
};
pub use qd::{qd_l1_norm, QDElement};
pub use saddle::{complex_saddle_connections, saddle_connections, sigma_separation, systole, SaddleConnection};
pub use teich::{
    hodge_teich_report, lower_bound_witness, qd_from_basis, teich_norm_estimate, teich_norm_estimate_from, witness_coefficients,
    HodgeTeichReport, Normalized, TeichNormEstimate, TeichOptions, Witness,
};
