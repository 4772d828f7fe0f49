//! Lie point-symmetry classification of quadratic Liénard equations
//! `x'' + f(x) x'^2 + g(x) = 0`.

pub mod expr;
pub mod oracle;
pub mod transform;
pub mod classify;
pub mod selftest;
