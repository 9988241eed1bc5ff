//! Numerical building blocks: polynomials, exact exponential moments,
//! adaptive quadrature and bracketed root finding.

pub mod expint;
pub mod piecewise;
pub mod poly;
pub mod quadrature;
pub mod roots;

pub use piecewise::PiecewisePoly;
pub use poly::Poly;
pub use quadrature::{integrate, integrate_to_infinity, Quadrature, QuadratureSettings};
