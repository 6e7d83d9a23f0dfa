//! Laplace transform of the first-passage time to an upper barrier.
//!
//! `u` solves `½u″ + μu′ − λu = 0` with `u(−∞) = 0`; the transform is
//! `E[e^{−λτ_c}] = u(x₀)/u(c)`. The solution is carried left to right as a
//! normalized `(u, u′)` state plus a real log scale, matching value and
//! derivative at every breakpoint.

mod basis;
mod oracle;

pub use basis::{
    exponential_roots, propagate_segment, BasisKind, BasisPolicy, ScaledState, SegmentBasis,
    DEGENERATE_ROOT_GAP, KUMMER_MAX_COND, KUMMER_MAX_LOSS, KUMMER_MAX_Z,
};
pub use oracle::{numeric_ode_oracle, numeric_ode_oracle_with_tol, oracle_laplace_fpt};

use num_complex::Complex64;
use thiserror::Error;

use crate::drift::{DriftError, PiecewiseLinearDrift};
use crate::specfun::SpecfunError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("drift has a non-constant outer segment (slope {0})")]
    NonConstantTail(f64),
    #[error("Re λ must be positive (λ = {0})")]
    NonpositiveLambda(Complex64),
    #[error("decaying root r₊ = {0} has no positive real part")]
    DegenerateSeed(Complex64),
    #[error("barrier {c} is not above the start point {x0}")]
    BarrierNotAbove { x0: f64, c: f64 },
    #[error("segment basis matrix is singular")]
    SingularBasisMatrix,
    #[error("log scale overflow")]
    Overflow,
    #[error("invalid segment [{0}, {1}]")]
    InvalidSegment(f64, f64),
    #[error("local series did not converge")]
    SeriesNotConverged,
    #[error("point {x} is within {h} of breakpoint {breakpoint}")]
    TooCloseToBreakpoint { x: f64, h: f64, breakpoint: f64 },
    #[error("point {0} lies beyond the solved range (ends at {1})")]
    OutsideSolvedRange(f64, f64),
    #[error("Runge-Kutta step size underflow at x = {0}")]
    StepUnderflow(f64),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Drift(#[from] DriftError),
}

fn check_lambda(lambda: Complex64) -> Result<(), SolveError> {
    if lambda.re > 0.0 && lambda.im.is_finite() && lambda.re.is_finite() {
        Ok(())
    } else {
        Err(SolveError::NonpositiveLambda(lambda))
    }
}

fn check_tails(drift: &PiecewiseLinearDrift) -> Result<(), SolveError> {
    let slopes = drift.slopes();
    for &a in [slopes[0], slopes[slopes.len() - 1]].iter() {
        if a != 0.0 {
            return Err(SolveError::NonConstantTail(a));
        }
    }
    Ok(())
}

/// Decaying state `(1, r₊)` at the right end of a constant left tail with
/// drift `b₀`, `r₊ = −b₀ + √(b₀² + 2λ)`.
///
/// `λ = 0` is accepted when `r₊` still has positive real part (`b₀ < 0`).
pub fn leftmost_seed(
    b0: f64,
    lambda: Complex64,
    _x_start: f64,
) -> Result<(Complex64, Complex64), SolveError> {
    if lambda.re < 0.0 || (lambda.re == 0.0 && lambda.im != 0.0) || !lambda.re.is_finite() {
        return Err(SolveError::NonpositiveLambda(lambda));
    }
    let (rp, _) = exponential_roots(b0, lambda);
    if !(rp.re > 0.0) {
        return Err(SolveError::DegenerateSeed(rp));
    }
    Ok((Complex64::new(1.0, 0.0), rp))
}

/// Solver knobs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveOptions {
    pub policy: BasisPolicy,
    /// Stop propagating at the first node at or beyond this point.
    pub stop_at: Option<f64>,
}

/// Global `u` for one `λ`, stored as the state at every node plus the
/// matched basis on every interval between nodes.
#[derive(Debug, Clone)]
pub struct LaplaceSolution {
    drift: PiecewiseLinearDrift,
    lambda: Complex64,
    left_root: Complex64,
    nodes: Vec<f64>,
    states: Vec<ScaledState>,
    bases: Vec<SegmentBasis>,
    open_right: bool,
}

impl LaplaceSolution {
    pub fn drift(&self) -> &PiecewiseLinearDrift {
        &self.drift
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn bases(&self) -> &[SegmentBasis] {
        &self.bases
    }

    /// Scaled `(u, u′)` at `x`.
    pub fn eval(&self, x: f64) -> Result<ScaledState, SolveError> {
        let first = self.nodes[0];
        let last = *self.nodes.last().expect("at least one node");
        if x < first {
            let st = self.states[0];
            let s = x - first;
            let g = self.left_root.re * s;
            let f = (self.left_root * s - g).exp();
            return Ok(ScaledState {
                u: st.u * f,
                du: st.du * f,
                log_scale: st.log_scale + g,
            });
        }
        if x > last {
            if !self.open_right {
                return Err(SolveError::OutsideSolvedRange(x, last));
            }
            let (_, b) = self.drift.segment(self.drift.segment_count() - 1);
            let (tail, _) = propagate_segment(
                0.0,
                b,
                self.lambda,
                last,
                x,
                *self.states.last().expect("at least one state"),
                BasisPolicy::Auto,
            )?;
            return tail.eval(x, self.lambda);
        }
        let k = self.nodes.partition_point(|&n| n <= x);
        // nodes[k-1] <= x < nodes[k], or x == last
        if self.nodes[k - 1] == x {
            return Ok(self.states[k - 1]);
        }
        self.bases[k - 1].eval(x, self.lambda)
    }

    /// Largest relative jumps `(Δu, Δu′)` across interior nodes, comparing
    /// each basis' right-end value with the next basis' left-end value.
    pub fn max_matching_jump(&self) -> Result<(f64, f64), SolveError> {
        let mut worst = (0.0f64, 0.0f64);
        for k in 1..self.bases.len() {
            let x = self.nodes[k];
            let left = self.bases[k - 1].eval(x, self.lambda)?;
            let right = self.bases[k].eval(x, self.lambda)?;
            let ls = left.log_scale.max(right.log_scale);
            let (ul, dul) = left.at_scale(ls);
            let (ur, dur) = right.at_scale(ls);
            let ju = (ul - ur).norm() / ul.norm().max(ur.norm());
            let jd = (dul - dur).norm() / dul.norm().max(dur.norm()).max(f64::MIN_POSITIVE);
            worst = (worst.0.max(ju), worst.1.max(jd));
        }
        Ok(worst)
    }

    /// `u(x)/u(y)`.
    pub fn ratio(&self, x: f64, y: f64) -> Result<Complex64, SolveError> {
        let a = self.eval(x)?;
        let b = self.eval(y)?;
        Ok(a.u / b.u * (a.log_scale - b.log_scale).exp())
    }
}

/// [`solve_u_with`] without extra nodes, propagated across every breakpoint.
pub fn solve_u(
    drift: &PiecewiseLinearDrift,
    lambda: Complex64,
) -> Result<LaplaceSolution, SolveError> {
    solve_u_with(drift, lambda, &[], SolveOptions::default())
}

/// Propagate `u` from the decaying left tail through the breakpoints and
/// the extra `points` (inserted as zero-kink nodes).
pub fn solve_u_with(
    drift: &PiecewiseLinearDrift,
    lambda: Complex64,
    points: &[f64],
    options: SolveOptions,
) -> Result<LaplaceSolution, SolveError> {
    check_tails(drift)?;
    check_lambda(lambda)?;
    let mut nodes: Vec<f64> = drift
        .breakpoints()
        .iter()
        .chain(points.iter())
        .copied()
        .filter(|x| x.is_finite())
        .collect();
    if nodes.is_empty() {
        nodes.push(0.0);
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut open_right = true;
    if let Some(stop) = options.stop_at {
        let keep = nodes.partition_point(|&n| n < stop);
        if keep < nodes.len() {
            nodes.truncate(keep + 1);
            open_right = nodes.last().copied() >= drift.breakpoints().last().copied();
        }
    }

    let (_, b0) = drift.segment(0);
    let (u0, du0) = leftmost_seed(b0, lambda, nodes[0])?;
    let mut state = ScaledState::new(u0, du0).normalized()?;
    let mut states = Vec::with_capacity(nodes.len());
    let mut bases = Vec::with_capacity(nodes.len().saturating_sub(1));
    states.push(state);
    for w in nodes.windows(2) {
        let (left, right) = (w[0], w[1]);
        let (a, b) = drift.segment(drift.segment_index(0.5 * (left + right)));
        let (basis, next) = propagate_segment(a, b, lambda, left, right, state, options.policy)?;
        bases.push(basis);
        states.push(next);
        state = next;
    }
    Ok(LaplaceSolution {
        drift: drift.clone(),
        lambda,
        left_root: du0 / u0,
        nodes,
        states,
        bases,
        open_right,
    })
}

/// `E[e^{−λτ_c} | X₀ = x₀] = u(x₀)/u(c)`.
pub fn laplace_fpt(
    drift: &PiecewiseLinearDrift,
    x0: f64,
    c: f64,
    lambda: Complex64,
) -> Result<Complex64, SolveError> {
    laplace_fpt_with(drift, x0, c, lambda, BasisPolicy::Auto)
}

pub fn laplace_fpt_with(
    drift: &PiecewiseLinearDrift,
    x0: f64,
    c: f64,
    lambda: Complex64,
    policy: BasisPolicy,
) -> Result<Complex64, SolveError> {
    if !(x0 < c) {
        return Err(SolveError::BarrierNotAbove { x0, c });
    }
    let sol = solve_u_with(
        drift,
        lambda,
        &[x0, c],
        SolveOptions {
            policy,
            stop_at: Some(c),
        },
    )?;
    sol.ratio(x0, c)
}

/// `|½u″ + μu′ − λu|` relative to the largest of the three terms, with
/// central differences of step `h`.
pub fn ode_residual(solution: &LaplaceSolution, x: f64, h: f64) -> Result<f64, SolveError> {
    if let Some(&bp) = solution
        .drift()
        .breakpoints()
        .iter()
        .find(|&&bp| (bp - x).abs() <= h)
    {
        return Err(SolveError::TooCloseToBreakpoint {
            x,
            h,
            breakpoint: bp,
        });
    }
    let lo = solution.eval(x - h)?;
    let mid = solution.eval(x)?;
    let hi = solution.eval(x + h)?;
    let ls = mid.log_scale;
    let (ul, _) = lo.at_scale(ls);
    let (um, _) = mid.at_scale(ls);
    let (uh, _) = hi.at_scale(ls);
    let d1 = (uh - ul) / (2.0 * h);
    let d2 = (uh - 2.0 * um + ul) / (h * h);
    let lambda = solution.lambda();
    let mu = solution.drift().eval(x);
    let terms = [0.5 * d2, mu * d1, lambda * um];
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    Ok((terms[0] + terms[1] - terms[2]).norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn seed_examples() {
        assert_eq!(leftmost_seed(0.0, c(0.5), 0.0).unwrap().1, c(1.0));
        assert!((leftmost_seed(1.0, c(1.5), 0.0).unwrap().1 - c(1.0)).norm() < 1e-15);
        assert!(matches!(
            leftmost_seed(1.0, c(0.0), 0.0),
            Err(SolveError::DegenerateSeed(_))
        ));
        assert!((leftmost_seed(-1.0, c(0.0), 0.0).unwrap().1 - c(2.0)).norm() < 1e-15);
        assert!(matches!(
            leftmost_seed(0.0, c(-1.0), 0.0),
            Err(SolveError::NonpositiveLambda(_))
        ));
    }

    #[test]
    fn non_constant_tail_rejected() {
        let d = PiecewiseLinearDrift::general(vec![], vec![-1.0], vec![0.0]).unwrap();
        assert!(matches!(
            solve_u(&d, c(1.0)),
            Err(SolveError::NonConstantTail(_))
        ));
    }

    #[test]
    fn pure_exponential_solutions() {
        let sol = solve_u(&PiecewiseLinearDrift::constant(0.0), c(0.5)).unwrap();
        assert!((sol.ratio(1.0, 0.0).unwrap() - c(std::f64::consts::E)).norm() < 1e-14);
        let sol = solve_u(&PiecewiseLinearDrift::constant(1.0), c(1.5)).unwrap();
        assert!((sol.ratio(1.0, 0.0).unwrap() - c(std::f64::consts::E)).norm() < 1e-14);
        let f = laplace_fpt(&PiecewiseLinearDrift::constant(0.0), 0.0, 1.0, c(0.5)).unwrap();
        assert!((f.re - 0.367_879_441_2).abs() < 1e-10);
    }

    #[test]
    fn barrier_must_be_above() {
        let d = PiecewiseLinearDrift::constant(0.0);
        assert!(matches!(
            laplace_fpt(&d, 1.0, 1.0, c(1.0)),
            Err(SolveError::BarrierNotAbove { .. })
        ));
    }

    #[test]
    fn residual_checks() {
        let sol = solve_u(&PiecewiseLinearDrift::constant(0.0), c(0.5)).unwrap();
        assert!(ode_residual(&sol, 0.3, 1e-4).unwrap() < 1e-6);
        let clamp = PiecewiseLinearDrift::clamped_reversion();
        let sol = solve_u(&clamp, c(1.0)).unwrap();
        assert!(ode_residual(&sol, 0.5, 1e-4).unwrap() < 1e-6);
        assert!(matches!(
            ode_residual(&sol, 1.0 - 5e-5, 1e-4),
            Err(SolveError::TooCloseToBreakpoint { .. })
        ));
    }

    #[test]
    fn stop_at_limits_range() {
        let clamp = PiecewiseLinearDrift::clamped_reversion();
        let opts = SolveOptions {
            stop_at: Some(0.0),
            ..Default::default()
        };
        let sol = solve_u_with(&clamp, c(1.0), &[0.0], opts).unwrap();
        assert!(sol.eval(0.0).is_ok());
        assert!(matches!(
            sol.eval(0.5),
            Err(SolveError::OutsideSolvedRange(..))
        ));
    }
}
