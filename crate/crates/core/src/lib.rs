//! Spectral distances between states of the Moyal plane and the noncommutative torus.

pub mod distance;
pub mod error;
pub mod linalg;
pub mod lipschitz;
pub mod moyal;
pub mod optimizer;
pub mod probes;
pub mod states;
pub mod torus;
pub mod verify;
pub mod zeta;

pub use distance::{
    analytic_upper_bound, certificate_lower_bound, closed_form_distance, moyal_distance, triangular_check, DistanceParams,
    DistanceReport,
};
pub use error::{Error, Result};
pub use lipschitz::{check_ball, commutator_norm, op_norm, radial_ball_check, BallReport};
pub use moyal::{
    a_step, ahat, del, delbar, gst_norm, involution, l2_inner, reconstruct, seminorm_rho, star, trace_integral,
    Derivation, DerivativeCoefficients, MoyalElement,
};
pub use num_complex::Complex64;
pub use optimizer::{optimize_distance, OptimizerOutcome, OptimizerParams};
pub use probes::{asymptotic_fit, bound_b, crossover_index, estimate_checks, g_seq, u_seq, ProbeSeries};
pub use states::{
    basis_state, diagonal_difference, eval, finite_state, zeta_state, Construction, MoyalPureState, StateSpec,
};
pub use torus::{
    phi_state_eval, sigma, tau, torus_commutator_norm, torus_del, torus_delbar, torus_distance, torus_involution,
    torus_distance_in_box, torus_op_norm, weyl_product, TorusElement, TorusState,
};
