//! Moyal plane in the matrix base.
//!
//! An element `a = Σ a_{mn} f_{mn}` is stored as its dense coefficient
//! matrix. The star product becomes matrix multiplication, the involution
//! the conjugate transpose, and the derivations `∂`, `∂̄` act as weighted
//! index shifts. Every operation is exact on finitely supported elements:
//! mixed orders are zero-padded and derivatives grow the order by one.

mod algebra;
mod calculus;

pub use algebra::{
    gst_norm, involution, l2_inner, seminorm_rho, star, trace_integral, MoyalElement,
};
pub use calculus::{a_step, ahat, del, delbar, reconstruct, Derivation, DerivativeCoefficients};
pub(crate) use calculus::{del_adjoint_matrix, del_matrix};
