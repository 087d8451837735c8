//! Asymptotic model of two sharp interfaces meeting in a phase-field system.

// `!(a < b)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod front_dynamics;
pub mod kernels;
pub mod order_field;
pub mod pde_reference;
pub mod profiles;
pub mod quadrature;
pub mod scenario;
pub mod spline;
pub mod temperature_field;
pub mod weak_residuals;

pub use error::{Error, Result};
pub use kernels::{build_table, BetaLaw, ConstantBeta, KernelTable, KernelValues};
pub use scenario::{load_scenario, Boundary, Poly, Scenario};
pub use front_dynamics::{
    assemble_fronts, contact_effects, solve_eta, FrontModel, FrontState, FrontTrajectory, SumDenominator, SumRule,
};
