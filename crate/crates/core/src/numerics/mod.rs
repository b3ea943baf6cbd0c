//! Quadrature rules and special-function kernels shared by every
//! mutual-information integral in the crate.

mod quadrature;
pub(crate) mod special;

pub use quadrature::{gauss_hermite, gauss_laguerre, QuadratureKind, QuadratureRule};
pub use special::{log_bessel_i0, log_sum_exp};

/// Default Gauss-Hermite order used for the MI integrals.
pub const DEFAULT_HERMITE_ORDER: usize = 140;

/// Default Gauss-Laguerre order used for the radial MI integrals.
pub const DEFAULT_LAGUERRE_ORDER: usize = 64;
