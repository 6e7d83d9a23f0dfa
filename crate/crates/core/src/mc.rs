//! Monte Carlo crossing probabilities for `dX = μ(X)dt + dW` with a
//! Brownian-bridge correction between Euler steps.
//!
//! Path `p` draws from ChaCha8 stream `p` under key `seed`; step `k` consumes
//! the `2k`-th and `(2k+1)`-th 64-bit words of that stream (Gaussian, then
//! bridge uniform). Estimates therefore do not depend on thread count.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::specfun::normal_quantile;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid Monte Carlo config: {0}")]
    InvalidConfig(String),
    #[error("barrier {c} is not above the start point {x0}")]
    BarrierNotAbove { x0: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub bridge_correction: bool,
    pub horizon: f64,
}

impl McConfig {
    pub fn new(n_paths: usize, dt: f64, horizon: f64, seed: u64) -> Self {
        Self {
            n_paths,
            dt,
            seed,
            bridge_correction: true,
            horizon,
        }
    }

    pub fn validate(&self) -> Result<(), McError> {
        if self.n_paths < 100 {
            return Err(McError::InvalidConfig(format!(
                "n_paths = {} (need at least 100)",
                self.n_paths
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(McError::InvalidConfig(format!(
                "horizon = {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0 && self.dt < self.horizon) {
            return Err(McError::InvalidConfig(format!(
                "dt = {} must lie in (0, horizon = {})",
                self.dt, self.horizon
            )));
        }
        Ok(())
    }

    /// Number of Euler steps; the step is shrunk so they tile the horizon.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub n_paths: usize,
}

/// Probability that a Brownian bridge from `x_k` to `x_k1` over `dt`
/// touches `c`: `e^{−2(c−x_k)(c−x_k1)/dt}`.
pub fn bridge_crossing_prob(x_k: f64, x_k1: f64, c: f64, dt: f64) -> f64 {
    (-2.0 * (c - x_k) * (c - x_k1) / dt).exp()
}

fn uniform_open(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn check(x0: f64, c: f64, cfg: &McConfig) -> Result<(), McError> {
    cfg.validate()?;
    if !(x0 < c) {
        return Err(McError::BarrierNotAbove { x0, c });
    }
    Ok(())
}

/// Simulate path `index` with Gaussian increments multiplied by `signs`;
/// returns one crossing flag per sign.
fn simulate<const N: usize, F>(
    drift: &F,
    x0: f64,
    c: f64,
    cfg: &McConfig,
    index: u64,
    signs: [f64; N],
) -> [bool; N]
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let steps = cfg.steps();
    let h = cfg.horizon / steps as f64;
    let sqrt_h = h.sqrt();
    let mut x = [x0; N];
    let mut crossed = [false; N];
    for _ in 0..steps {
        let z = normal_quantile(uniform_open(rng.next_u64()));
        let u = uniform_open(rng.next_u64());
        for i in 0..N {
            if crossed[i] {
                continue;
            }
            let next = x[i] + drift(x[i]) * h + sqrt_h * signs[i] * z;
            if next >= c || (cfg.bridge_correction && u < bridge_crossing_prob(x[i], next, c, h)) {
                crossed[i] = true;
            }
            x[i] = next;
        }
        if crossed.iter().all(|&b| b) {
            break;
        }
    }
    crossed
}

/// Fraction of Euler paths from `x0` that reach `c` within the horizon.
pub fn estimate_crossing<F>(
    drift: &F,
    x0: f64,
    c: f64,
    cfg: &McConfig,
) -> Result<McEstimate, McError>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    check(x0, c, cfg)?;
    let hits: u64 = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| simulate(drift, x0, c, cfg, p, [1.0])[0] as u64)
        .sum();
    let n = cfg.n_paths as f64;
    let p_hat = hits as f64 / n;
    Ok(McEstimate {
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / n).sqrt(),
        n_paths: cfg.n_paths,
    })
}

/// As [`estimate_crossing`] with `±Z` path pairs; `n_paths / 2` pairs, and
/// the standard error is taken over pair averages.
pub fn estimate_crossing_antithetic<F>(
    drift: &F,
    x0: f64,
    c: f64,
    cfg: &McConfig,
) -> Result<McEstimate, McError>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    check(x0, c, cfg)?;
    let pairs = cfg.n_paths / 2;
    // pair sums in {0, 1, 2}
    let counts: [u64; 3] = (0..pairs as u64)
        .into_par_iter()
        .map(|p| {
            let [a, b] = simulate(drift, x0, c, cfg, p, [1.0, -1.0]);
            let mut hist = [0u64; 3];
            hist[a as usize + b as usize] = 1;
            hist
        })
        .reduce(|| [0; 3], |x, y| [x[0] + y[0], x[1] + y[1], x[2] + y[2]]);
    let m = pairs as f64;
    let mean = (0.5 * counts[1] as f64 + counts[2] as f64) / m;
    let second = (0.25 * counts[1] as f64 + counts[2] as f64) / m;
    let var = (second - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(McEstimate {
        p_hat: mean,
        std_err: (var / m).sqrt(),
        n_paths: 2 * pairs,
    })
}
