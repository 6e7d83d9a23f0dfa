//! First-passage-time distributions for one-dimensional diffusions
//! `dX = μ(X) dt + dW` against a constant upper barrier.
//!
//! For continuous piecewise-linear drifts the Laplace transform of the
//! passage-time density is assembled exactly from confluent hypergeometric
//! and exponential segment solutions ([`lapsolve`]), then inverted
//! numerically ([`invert`]). General Lipschitz drifts are linearized on a
//! grid of step `1/n` ([`drift::linearize`]) and the resulting error is
//! certified by closed-form bounds ([`bounds`]). A Monte Carlo estimator with
//! Brownian-bridge correction ([`mc`]) serves as an independent check.

// `!(a < b)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod drift;
pub mod invert;
pub mod lapsolve;
pub mod mc;
pub mod quad;
pub mod specfun;

pub use num_complex::Complex64;

/// Complex scalar used for transform variables and segment solutions.
pub type ComplexScalar = Complex64;
