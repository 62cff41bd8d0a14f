//! Diffeomorphic spatial transformation: the ADMM velocity solver, the
//! composition of small deformations into forward/inverse pairs, warping of
//! images and masks, and Jacobian diagnostics.

pub mod admm;
pub mod diff;
pub mod diffeo;
pub mod jacobian;
pub mod register;
pub mod spectral;
pub mod warp;

pub use admm::{field_nth_gradient, image_nth_gradient, solve_velocity, AdmmSolution, VelocityProblem};
pub use diff::{nth_gradient, Partial};
pub use diffeo::{
    compose, endpoint_error, endpoint_stats, integrate, integrate_with_cap, inverse_consistency,
    DiffeoMeta, DiffeoPair, EndpointStats,
};
pub use jacobian::{jacobian_determinant, positive_fraction};
pub use register::{register, register_detailed, Registration};
pub use warp::{warp, warp_binary, warp_mask, warp_mask_to_edges};
