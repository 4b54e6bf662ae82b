//! Validated numerics for analytic expanding maps via transfer-operator
//! determinants.
//!
//! The pipeline runs from [`systems`] (inverse branches on complex discs)
//! through [`periodic`] (verified periodic orbits) and [`determinant`]
//! (coefficients of the determinant power series) to [`tailbounds`]
//! (rigorous bounds on the neglected coefficients) and [`quantities`]
//! (Lyapunov exponents, variance, mixing rates, Hausdorff dimension).

pub mod arith;
pub mod determinant;
pub mod periodic;
pub mod systems;

pub mod quantities;
pub mod tailbounds;
