//! Adaptive Dormand–Prince integration of `(u, u′)′ = (u′, 2λu − 2μu′)`,
//! independent of the segment bases.

use num_complex::Complex64;

use super::{check_lambda, check_tails, leftmost_seed, ScaledState, SolveError};
use crate::drift::PiecewiseLinearDrift;

const DEFAULT_RTOL: f64 = 1e-10;
const MAX_STEPS: usize = 10_000_000;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type Y = [Complex64; 2];

/// Integrate one smooth piece `[from, to]` where `μ(x) = a x + b`.
fn integrate_piece(
    a: f64,
    b: f64,
    lambda: Complex64,
    from: f64,
    to: f64,
    y0: Y,
    rtol: f64,
    h_guess: &mut f64,
) -> Result<Y, SolveError> {
    let rhs = |x: f64, y: &Y| -> Y { [y[1], 2.0 * lambda * y[0] - 2.0 * (a * x + b) * y[1]] };
    let mut x = from;
    let mut y = y0;
    let len = to - from;
    let mut h = h_guess.min(len);
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
    k[0] = rhs(x, &y);
    for _ in 0..MAX_STEPS {
        if x >= to {
            return Ok(y);
        }
        let last = x + h >= to;
        if last {
            h = to - x;
        }
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let w = A[s][j];
                if w != 0.0 {
                    ys[0] += h * w * kj[0];
                    ys[1] += h * w * kj[1];
                }
            }
            k[s] = rhs(x + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = [Complex64::new(0.0, 0.0); 2];
        for s in 0..7 {
            for i in 0..2 {
                y5[i] += h * B5[s] * k[s][i];
                err[i] += h * (B5[s] - B4[s]) * k[s][i];
            }
        }
        let scale = y[0].norm().max(y[1].norm());
        let atol = rtol * 1e-3 * scale;
        let mut e: f64 = 0.0;
        for i in 0..2 {
            let tol = rtol * y[i].norm().max(y5[i].norm()) + atol;
            e = e.max(err[i].norm() / tol);
        }
        if e <= 1.0 {
            x = if last { to } else { x + h };
            y = y5;
            k[0] = k[6]; // first-same-as-last
            *h_guess = h;
        }
        let factor = if e == 0.0 {
            5.0
        } else {
            (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * (1.0 + x.abs()) {
            return Err(SolveError::StepUnderflow(x));
        }
        if !y[0].is_finite() || !y[1].is_finite() {
            return Err(SolveError::Overflow);
        }
    }
    Err(SolveError::StepUnderflow(x))
}

/// [`numeric_ode_oracle_with_tol`] at relative tolerance `1e-10`.
pub fn numeric_ode_oracle(
    drift: &PiecewiseLinearDrift,
    lambda: Complex64,
    x_start: f64,
    seed: (Complex64, Complex64),
    x_end: f64,
) -> Result<ScaledState, SolveError> {
    numeric_ode_oracle_with_tol(drift, lambda, x_start, seed, x_end, DEFAULT_RTOL)
}

/// Carry `seed = (u, u′)` at `x_start` to `x_end ≥ x_start`, stopping at
/// every breakpoint and renormalizing at least once per unit of `x`.
pub fn numeric_ode_oracle_with_tol(
    drift: &PiecewiseLinearDrift,
    lambda: Complex64,
    x_start: f64,
    seed: (Complex64, Complex64),
    x_end: f64,
    rtol: f64,
) -> Result<ScaledState, SolveError> {
    check_lambda(lambda)?;
    if !(x_end >= x_start) {
        return Err(SolveError::InvalidSegment(x_start, x_end));
    }
    let mut stops: Vec<f64> = drift
        .breakpoints()
        .iter()
        .copied()
        .filter(|&b| b > x_start && b < x_end)
        .collect();
    let mut mark = x_start.floor() + 1.0;
    while mark < x_end {
        if mark > x_start {
            stops.push(mark);
        }
        mark += 1.0;
    }
    stops.push(x_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut state = ScaledState::new(seed.0, seed.1).normalized()?;
    let mut x = x_start;
    let rate = lambda.norm().sqrt()
        + drift
            .intercepts()
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
    let mut h = 0.05 / rate;
    for &next in &stops {
        if next <= x {
            continue;
        }
        let (a, b) = drift.segment(drift.segment_index(0.5 * (x + next)));
        let y = integrate_piece(a, b, lambda, x, next, [state.u, state.du], rtol, &mut h)?;
        state = ScaledState {
            u: y[0],
            du: y[1],
            log_scale: state.log_scale,
        }
        .normalized()?;
        x = next;
    }
    Ok(state)
}

/// `u(x₀)/u(c)` from Runge–Kutta integration started on the decaying
/// exponential of the left tail.
pub fn oracle_laplace_fpt(
    drift: &PiecewiseLinearDrift,
    x0: f64,
    c: f64,
    lambda: Complex64,
) -> Result<Complex64, SolveError> {
    check_tails(drift)?;
    if !(x0 < c) {
        return Err(SolveError::BarrierNotAbove { x0, c });
    }
    let start = drift.breakpoints().first().copied().unwrap_or(x0).min(x0);
    let (_, b0) = drift.segment(0);
    let seed = leftmost_seed(b0, lambda, start)?;
    let at_x0 = numeric_ode_oracle(drift, lambda, start, seed, x0)?;
    let at_c = numeric_ode_oracle(drift, lambda, x0, (at_x0.u, at_x0.du), c)?;
    // at_x0 is normalized, so at_c.log_scale is the growth from x₀ to c
    Ok(at_x0.u / at_c.u * (-at_c.log_scale).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn exponential_cases() {
        let e = std::f64::consts::E;
        let s = numeric_ode_oracle(
            &PiecewiseLinearDrift::constant(0.0),
            c(0.5),
            0.0,
            (c(1.0), c(1.0)),
            1.0,
        )
        .unwrap();
        let (u, du) = s.at_scale(0.0);
        assert!((u.re / e - 1.0).abs() < 1e-9 && (du.re / e - 1.0).abs() < 1e-9);
        let s = numeric_ode_oracle(
            &PiecewiseLinearDrift::constant(1.0),
            c(1.5),
            0.0,
            (c(1.0), c(1.0)),
            2.0,
        )
        .unwrap();
        let (u, du) = s.at_scale(0.0);
        assert!((u.re / (e * e) - 1.0).abs() < 1e-9 && (du.re / (e * e) - 1.0).abs() < 1e-9);
    }
}
