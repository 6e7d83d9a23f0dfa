//! Special functions over complex scalars.
//!
//! - [`gamma`], [`ln_gamma`], [`rgamma`]: Lanczos approximation with reflection
//! - [`pochhammer`]: rising factorial `(a)_k`
//! - [`kummer_psi`]: Kummer's confluent hypergeometric `M(a, b; x)`
//! - [`kummer_basis`]: even/odd fundamental pair for `½y″ + (αx+β)y′ − λy = 0`
//! - [`normal_cdf`], [`normal_quantile`], [`erfc`], [`erfcx`]

mod gamma;
mod kummer;
mod normal;

pub use gamma::{gamma, ln_gamma, pochhammer, rgamma};
pub use kummer::{kummer_basis, kummer_psi, kummer_psi_with_loss, KummerBasis};
pub use normal::{erfc, erfcx, normal_cdf, normal_pdf, normal_quantile};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecfunError {
    #[error("gamma function pole at non-positive integer {0}")]
    PoleAtNonPositiveInteger(f64),
    #[error("Kummer parameter b = {0} is a non-positive integer")]
    BNonPositiveInteger(f64),
    #[error("Kummer series did not converge within {terms} terms (a = {a}, b = {b}, x = {x})")]
    SeriesDiverged {
        a: String,
        b: f64,
        x: String,
        terms: usize,
    },
    #[error("Kummer basis requires a nonzero slope")]
    ZeroSlope,
}

pub(crate) fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v == v.floor()
}
