//! Closed-form certificates: an upper bound on the first-passage density,
//! the crossing-probability error of drift linearization, and the
//! constant-drift crossing formulas.

use std::f64::consts::PI;

use thiserror::Error;

use crate::drift::PiecewiseLinearDrift;
use crate::quad::{integrate, QuadError};
use crate::specfun::{erfc, erfcx};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("barrier {c} is not above the start point {x0}")]
    BarrierNotAbove { x0: f64, c: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("quadrature failed: {0}")]
    QuadratureFail(#[from] QuadError),
}

fn require_positive(name: &str, v: f64) -> Result<(), BoundsError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::InvalidInput(format!(
            "{name} = {v} must be positive"
        )))
    }
}

/// `(c−x₀)/(√(2π) t^{3/2}) · e^{G(c)−G(x₀)−3Mt/2} · e^{−(c−x₀)²/(2t)}` with
/// `G′ = μ` and `M = inf{μ² + μ′₋/3}`.
pub fn density_upper_bound(
    drift: &PiecewiseLinearDrift,
    x0: f64,
    c: f64,
    t: f64,
) -> Result<f64, BoundsError> {
    if !(x0 < c) {
        return Err(BoundsError::BarrierNotAbove { x0, c });
    }
    require_positive("t", t)?;
    let d = c - x0;
    let m = drift.m_constant();
    let log = d.ln() - 0.5 * (2.0 * PI).ln() - 1.5 * t.ln() + drift.antiderivative_diff(x0, c)
        - 1.5 * m * t
        - d * d / (2.0 * t);
    Ok(log.exp())
}

/// Leading-order bound on `|P(τ_c > T) − P(τ_c^ε > T)|` for a drift
/// perturbed by at most `eps` in sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub epsilon: f64,
    pub horizon: f64,
    pub m1: f64,
    pub m2: f64,
    /// `∫₀ᵀ g(s)(M₁ + 1/√(2π(T−s))) ds`, `g` the Brownian hitting density.
    pub integral: f64,
    pub bound_value: f64,
}

/// Brownian first-passage density for distance `d` at time `s`.
fn hitting_density(d: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    d / ((2.0 * PI).sqrt() * s.powf(1.5)) * (-d * d / (2.0 * s)).exp()
}

const W_CUTOFF: f64 = 27.0;

fn crossing_integral(m1: f64, d: f64, horizon: f64) -> Result<f64, BoundsError> {
    let half = 0.5 * horizon;
    // [0, T/2] with s = d²/(2w²): g(s)ds = (2/√π)e^{−w²}dw
    let w_lo = d / horizon.sqrt();
    let near_zero = if w_lo >= W_CUTOFF {
        0.0
    } else {
        integrate(
            |w: f64| {
                let s = d * d / (2.0 * w * w);
                2.0 / PI.sqrt() * (-w * w).exp() * (m1 + 1.0 / (2.0 * PI * (horizon - s)).sqrt())
            },
            w_lo,
            W_CUTOFF,
            1e-10,
            1e-300,
        )?
        .value
    };
    // [T/2, T] with s = T − w²
    let near_t = integrate(
        |w: f64| {
            let g = hitting_density(d, horizon - w * w);
            g * (2.0 * w * m1 + 2.0 / (2.0 * PI).sqrt())
        },
        0.0,
        half.sqrt(),
        1e-10,
        1e-300,
    )?
    .value;
    Ok(near_zero + near_t)
}

/// `2TM₂e^{3M₂T/2}e^{M₁(c−x₀)} · I · eps`, where `M₁` bounds `|μ|` and `M₂`
/// is a Lipschitz constant of `μ`.
pub fn crossing_diff_bound(
    m1: f64,
    m2: f64,
    x0: f64,
    c: f64,
    horizon: f64,
    eps: f64,
) -> Result<ErrorBudget, BoundsError> {
    if !(x0 < c) {
        return Err(BoundsError::BarrierNotAbove { x0, c });
    }
    for (name, v) in [("M1", m1), ("M2", m2), ("T", horizon), ("eps", eps)] {
        require_positive(name, v)?;
    }
    let d = c - x0;
    let integral = crossing_integral(m1, d, horizon)?;
    let prefactor = 2.0 * horizon * m2 * (1.5 * m2 * horizon + m1 * d).exp();
    Ok(ErrorBudget {
        epsilon: eps,
        horizon,
        m1,
        m2,
        integral,
        bound_value: prefactor * integral * eps,
    })
}

/// Probability that `μs + W_s` reaches `d > 0` before time `h`:
/// `1 − Φ((d−μh)/√h) + e^{2μd}Φ(−(μh+d)/√h)`.
pub fn anderson_crossing(mu: f64, h: f64, d: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let rt = (2.0 * h).sqrt();
    let first = 0.5 * erfc((d - mu * h) / rt);
    let y = (mu * h + d) / rt;
    let second = if y >= 0.0 {
        0.5 * erfcx(y) * (-(d - mu * h).powi(2) / (2.0 * h)).exp()
    } else {
        (2.0 * mu * d).exp() * 0.5 * erfc(y)
    };
    (first + second).min(1.0)
}

/// `1 − anderson_crossing`.
pub fn anderson_non_crossing(mu: f64, h: f64, d: f64) -> f64 {
    1.0 - anderson_crossing(mu, h, d)
}

/// Probability that a Brownian bridge from `c − gap_start` to
/// `c − gap_end` over time `t` stays below `c`: `1 − e^{−2·gap_start·gap_end/t}`.
pub fn bridge_non_crossing(gap_start: f64, gap_end: f64, t: f64) -> f64 {
    if gap_start <= 0.0 || gap_end <= 0.0 {
        return 0.0;
    }
    -(-2.0 * gap_start * gap_end / t).exp_m1()
}
