//! Numerical Laplace inversion of the first-passage transform into the
//! density, the CDF and survival curves.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::drift::PiecewiseLinearDrift;
use crate::lapsolve::{laplace_fpt, SolveError};

/// Negative densities above this are clipped to zero.
const NEGATIVE_SLACK: f64 = 1e-8;
/// Survival increases below this are smoothed, larger ones are errors.
const MONOTONE_SLACK: f64 = 1e-6;
/// Below `SMALL_T_FACTOR·(c − x₀)²` the barrier is unreachable to double
/// precision and inversion is skipped.
pub const SMALL_T_FACTOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvertError {
    #[error("time must be positive and finite, got {0}")]
    InvalidTime(f64),
    #[error("invalid inversion config: {0}")]
    InvalidConfig(String),
    #[error("inversion unstable at t = {t}: successive Euler sums differ by {spread:e}")]
    InversionUnstable { t: f64, spread: f64 },
    #[error("inverted density {value:e} at t = {t} is negative")]
    NegativeDensity { t: f64, value: f64 },
    #[error("survival increases by {amount:e} at t = {t}")]
    MonotonicityViolation { t: f64, amount: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMethod {
    EulerSummation,
    GaverStehfest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub method: InversionMethod,
    pub terms: usize,
    pub target_rel_tol: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self::euler()
    }
}

impl InversionConfig {
    pub fn euler() -> Self {
        Self {
            method: InversionMethod::EulerSummation,
            terms: 32,
            target_rel_tol: 1e-8,
        }
    }

    pub fn gaver_stehfest() -> Self {
        Self {
            method: InversionMethod::GaverStehfest,
            terms: 14,
            target_rel_tol: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<(), InvertError> {
        if self.terms < 10 {
            return Err(InvertError::InvalidConfig(format!(
                "terms = {} (need at least 10)",
                self.terms
            )));
        }
        if self.method == InversionMethod::GaverStehfest && !self.terms.is_multiple_of(2) {
            return Err(InvertError::InvalidConfig(format!(
                "Gaver-Stehfest needs an even number of terms, got {}",
                self.terms
            )));
        }
        if !(self.target_rel_tol > 0.0 && self.target_rel_tol < 1.0) {
            return Err(InvertError::InvalidConfig(format!(
                "target_rel_tol = {} must lie in (0, 1)",
                self.target_rel_tol
            )));
        }
        Ok(())
    }

    /// Spread between the last two Euler sums that still counts as
    /// converged, relative to `max(|f|, 1)`.
    fn spread_tol(&self) -> f64 {
        self.target_rel_tol.sqrt()
    }
}

fn check_time(t: f64) -> Result<(), InvertError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(InvertError::InvalidTime(t))
    }
}

/// Evaluate `transform` at every node, in parallel, keeping node order.
fn eval_nodes<F>(transform: &F, nodes: &[Complex64]) -> Result<Vec<Complex64>, InvertError>
where
    F: Fn(Complex64) -> Result<Complex64, SolveError> + Sync,
{
    nodes
        .par_iter()
        .map(|&l| transform(l).map_err(InvertError::from))
        .collect()
}

/// Abate–Whitt Euler summation of the Bromwich integral on the trapezoid
/// nodes `λ_k = (A + 2πik)/(2t)`.
fn euler_invert<F>(transform: &F, t: f64, cfg: &InversionConfig) -> Result<f64, InvertError>
where
    F: Fn(Complex64) -> Result<Complex64, SolveError> + Sync,
{
    let a = (1.0 / cfg.target_rel_tol).ln();
    let m = (cfg.terms + 1) / 3;
    let n = cfg.terms - m;
    let nodes: Vec<Complex64> = (0..=cfg.terms)
        .map(|k| Complex64::new(a, 2.0 * PI * k as f64) / (2.0 * t))
        .collect();
    let values = eval_nodes(transform, &nodes)?;

    let scale = (0.5 * a).exp() / t;
    let mut partial = Vec::with_capacity(values.len());
    let mut s = 0.5 * values[0].re;
    partial.push(s);
    for (k, v) in values.iter().enumerate().skip(1) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * v.re;
        partial.push(s);
    }
    let binom: Vec<f64> = {
        let mut row = vec![1.0f64; m + 1];
        for j in 1..=m {
            row[j] = row[j - 1] * (m + 1 - j) as f64 / j as f64;
        }
        row
    };
    let norm = 0.5f64.powi(m as i32);
    let euler = |start: usize| -> f64 {
        binom
            .iter()
            .enumerate()
            .map(|(j, &b)| b * partial[start + j])
            .sum::<f64>()
            * norm
            * scale
    };
    let value = euler(n);
    let previous = euler(n - 1);
    let spread = (value - previous).abs();
    if !value.is_finite() || spread > cfg.spread_tol() * value.abs().max(1.0) {
        return Err(InvertError::InversionUnstable { t, spread });
    }
    Ok(value)
}

/// Stehfest weights `V_k`, `k = 1..=n`.
fn stehfest_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    let fact = |k: usize| -> f64 { (1..=k).map(|i| i as f64).product() };
    (1..=n)
        .map(|k| {
            let lo = k.div_ceil(2);
            let hi = k.min(half);
            let sum: f64 = (lo..=hi)
                .map(|j| {
                    (j as f64).powi(half as i32) * fact(2 * j)
                        / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k))
                })
                .sum();
            if (k + half).is_multiple_of(2) {
                sum
            } else {
                -sum
            }
        })
        .collect()
}

fn gaver_stehfest_invert<F>(
    transform: &F,
    t: f64,
    cfg: &InversionConfig,
) -> Result<f64, InvertError>
where
    F: Fn(Complex64) -> Result<Complex64, SolveError> + Sync,
{
    let h = LN_2 / t;
    let nodes: Vec<Complex64> = (1..=cfg.terms)
        .map(|k| Complex64::new(k as f64 * h, 0.0))
        .collect();
    let values = eval_nodes(transform, &nodes)?;
    let value = stehfest_weights(cfg.terms)
        .iter()
        .zip(&values)
        .map(|(w, v)| w * v.re)
        .sum::<f64>()
        * h;
    if !value.is_finite() {
        return Err(InvertError::InversionUnstable {
            t,
            spread: f64::INFINITY,
        });
    }
    Ok(value)
}

fn invert_raw<F>(transform: &F, t: f64, cfg: &InversionConfig) -> Result<f64, InvertError>
where
    F: Fn(Complex64) -> Result<Complex64, SolveError> + Sync,
{
    check_time(t)?;
    cfg.validate()?;
    match cfg.method {
        InversionMethod::EulerSummation => euler_invert(transform, t, cfg),
        InversionMethod::GaverStehfest => gaver_stehfest_invert(transform, t, cfg),
    }
}

/// Density `f(t)` from its Laplace transform.
pub fn invert_density<F>(transform: F, t: f64, cfg: &InversionConfig) -> Result<f64, InvertError>
where
    F: Fn(Complex64) -> Result<Complex64, SolveError> + Sync,
{
    let v = invert_raw(&transform, t, cfg)?;
    if v < -NEGATIVE_SLACK {
        return Err(InvertError::NegativeDensity { t, value: v });
    }
    Ok(v.max(0.0))
}

/// `P(τ ≤ t)` by inverting `f̂(λ)/λ`, clipped to `[0, 1]`.
pub fn invert_cdf<F>(transform: F, t: f64, cfg: &InversionConfig) -> Result<f64, InvertError>
where
    F: Fn(Complex64) -> Result<Complex64, SolveError> + Sync,
{
    let v = invert_raw(&|l: Complex64| transform(l).map(|f| f / l), t, cfg)?;
    Ok(v.clamp(0.0, 1.0))
}

/// First passage of `dX = μ(X)dt + dW` from `x0` to the upper barrier `c`.
#[derive(Debug, Clone)]
pub struct FirstPassageQuery {
    pub drift: PiecewiseLinearDrift,
    pub x0: f64,
    pub c: f64,
}

impl FirstPassageQuery {
    pub fn new(drift: PiecewiseLinearDrift, x0: f64, c: f64) -> Result<Self, InvertError> {
        if !(x0 < c) {
            return Err(SolveError::BarrierNotAbove { x0, c }.into());
        }
        drift.check_canonical().map_err(SolveError::from)?;
        Ok(Self { drift, x0, c })
    }

    pub fn transform(&self, lambda: Complex64) -> Result<Complex64, SolveError> {
        laplace_fpt(&self.drift, self.x0, self.c, lambda)
    }

    fn unreachable(&self, t: f64) -> bool {
        t < SMALL_T_FACTOR * (self.c - self.x0).powi(2)
    }

    pub fn density(&self, t: f64, cfg: &InversionConfig) -> Result<f64, InvertError> {
        check_time(t)?;
        if self.unreachable(t) {
            return Ok(0.0);
        }
        invert_density(|l| self.transform(l), t, cfg)
    }

    pub fn cdf(&self, t: f64, cfg: &InversionConfig) -> Result<f64, InvertError> {
        check_time(t)?;
        if self.unreachable(t) {
            return Ok(0.0);
        }
        invert_cdf(|l| self.transform(l), t, cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub density: Option<Vec<f64>>,
}

/// Pool-adjacent-violators fit of a non-increasing sequence.
fn isotonic_nonincreasing(values: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (v2, n2) = blocks[blocks.len() - 1];
            let (v1, n1) = blocks[blocks.len() - 2];
            if v1 >= v2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().expect("two blocks") =
                ((v1 * n1 as f64 + v2 * n2 as f64) / n as f64, n);
        }
    }
    let mut i = 0;
    for (v, n) in blocks {
        for slot in &mut values[i..i + n] {
            *slot = v;
        }
        i += n;
    }
}

/// Survival `1 − P(τ ≤ t)` on `times`, optionally with the density.
pub fn survival_curve(
    query: &FirstPassageQuery,
    times: &[f64],
    cfg: &InversionConfig,
    with_density: bool,
) -> Result<SurvivalCurve, InvertError> {
    for (i, &t) in times.iter().enumerate() {
        check_time(t)?;
        if i > 0 && t <= times[i - 1] {
            return Err(InvertError::InvalidConfig(format!(
                "time grid must be increasing (t[{i}] = {t})"
            )));
        }
    }
    let mut survival = times
        .iter()
        .map(|&t| query.cdf(t, cfg).map(|p| 1.0 - p))
        .collect::<Result<Vec<_>, _>>()?;
    for i in 1..survival.len() {
        let rise = survival[i] - survival[i - 1];
        if rise > MONOTONE_SLACK {
            return Err(InvertError::MonotonicityViolation {
                t: times[i],
                amount: rise,
            });
        }
    }
    isotonic_nonincreasing(&mut survival);
    let density = if with_density {
        Some(
            times
                .iter()
                .map(|&t| query.density(t, cfg))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };
    Ok(SurvivalCurve {
        times: times.to_vec(),
        survival,
        density,
    })
}
