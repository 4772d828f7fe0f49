//! Numeric certification: quadrature, trajectories and residuals.

pub mod ode;
pub mod quadrature;
pub mod residual;
