//! Drift models: continuous piecewise-linear drifts, general drift functions
//! and their linearization, drift-derived constants, and the reduction of a
//! state-dependent diffusion coefficient to unit noise.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::quad::{self, QuadError};

/// Relative tolerance for continuity at breakpoints.
pub const CONTINUITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriftError {
    #[error("expected {expected} segments for {breakpoints} breakpoints, got {slopes} slopes and {intercepts} intercepts")]
    LengthMismatch {
        breakpoints: usize,
        expected: usize,
        slopes: usize,
        intercepts: usize,
    },
    #[error("breakpoints must be finite and strictly increasing (index {0})")]
    NonMonotoneBreakpoints(usize),
    #[error("drift is discontinuous at breakpoint {x}: left {left}, right {right}")]
    DiscontinuousDrift { x: f64, left: f64, right: f64 },
    #[error("outermost segments must have slope 0 (found {0})")]
    NonConstantTail(f64),
    #[error("non-finite drift coefficient")]
    NonFiniteCoefficient,
    #[error("empty linearization domain [{0}, {1}]")]
    EmptyDomain(f64, f64),
    #[error("linearization resolution must be at least 1")]
    InvalidResolution,
    #[error("drift is not finite at {0}")]
    UnboundedValue(f64),
    #[error("diffusion coefficient vanishes or is negative at {0}")]
    SigmaVanishes(f64),
    #[error("quadrature failed: {0}")]
    QuadratureFail(#[from] QuadError),
}

/// Continuous drift `μ(x) = aᵢx + bᵢ` on `[xᵢ, xᵢ₊₁]`, with `x₀ = −∞` and
/// `x_{m+1} = +∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearDrift {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
}

impl PiecewiseLinearDrift {
    /// Validated drift in canonical form (constant outermost segments).
    pub fn new(
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        intercepts: Vec<f64>,
    ) -> Result<Self, DriftError> {
        let d = Self::general(breakpoints, slopes, intercepts)?;
        d.check_canonical()?;
        Ok(d)
    }

    /// Validated drift that may grow linearly in the outermost segments.
    /// Such drifts are accepted by the drift-constant helpers but not by the
    /// transform solver.
    pub fn general(
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        intercepts: Vec<f64>,
    ) -> Result<Self, DriftError> {
        let m = breakpoints.len();
        if slopes.len() != m + 1 || intercepts.len() != m + 1 {
            return Err(DriftError::LengthMismatch {
                breakpoints: m,
                expected: m + 1,
                slopes: slopes.len(),
                intercepts: intercepts.len(),
            });
        }
        if slopes.iter().chain(&intercepts).any(|v| !v.is_finite()) {
            return Err(DriftError::NonFiniteCoefficient);
        }
        for (i, x) in breakpoints.iter().enumerate() {
            if !x.is_finite() || (i > 0 && *x <= breakpoints[i - 1]) {
                return Err(DriftError::NonMonotoneBreakpoints(i));
            }
        }
        for (k, &x) in breakpoints.iter().enumerate() {
            let left = slopes[k] * x + intercepts[k];
            let right = slopes[k + 1] * x + intercepts[k + 1];
            let scale = [
                (slopes[k] * x).abs(),
                intercepts[k].abs(),
                (slopes[k + 1] * x).abs(),
                intercepts[k + 1].abs(),
            ]
            .into_iter()
            .fold(0.0f64, f64::max);
            if (left - right).abs() > CONTINUITY_TOL * scale {
                return Err(DriftError::DiscontinuousDrift { x, left, right });
            }
        }
        Ok(Self {
            breakpoints,
            slopes,
            intercepts,
        })
    }

    /// `μ ≡ value`.
    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            slopes: vec![0.0],
            intercepts: vec![value],
        }
    }

    /// `clamp(−x, −1, 1)`, the standard bounded mean-reverting test drift.
    pub fn clamped_reversion() -> Self {
        Self::new(vec![-1.0, 1.0], vec![0.0, -1.0, 0.0], vec![1.0, 0.0, -1.0])
            .expect("valid clamp drift")
    }

    pub fn check_canonical(&self) -> Result<(), DriftError> {
        let first = self.slopes[0];
        let last = *self.slopes.last().expect("at least one segment");
        if first != 0.0 {
            return Err(DriftError::NonConstantTail(first));
        }
        if last != 0.0 {
            return Err(DriftError::NonConstantTail(last));
        }
        Ok(())
    }

    pub fn is_canonical(&self) -> bool {
        self.check_canonical().is_ok()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn segment_count(&self) -> usize {
        self.slopes.len()
    }

    /// Index of the segment containing `x`; at a breakpoint the segment to
    /// its right.
    pub fn segment_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    /// `(slope, intercept)` of segment `i`.
    pub fn segment(&self, i: usize) -> (f64, f64) {
        (self.slopes[i], self.intercepts[i])
    }

    /// Closed interval covered by segment `i` (infinite ends for the tails).
    pub fn segment_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.breakpoints[i - 1]
        };
        let hi = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.segment(self.segment_index(x));
        a * x + b
    }

    /// `G(hi) − G(lo)` for `G′ = μ`, summed exactly over segments.
    pub fn antiderivative_diff(&self, lo: f64, hi: f64) -> f64 {
        if lo > hi {
            return -self.antiderivative_diff(hi, lo);
        }
        let mut total = 0.0;
        let mut start = lo;
        let mut i = self.segment_index(lo);
        while start < hi {
            let (_, seg_hi) = self.segment_bounds(i);
            let end = seg_hi.min(hi);
            let (a, b) = self.segment(i);
            total += 0.5 * a * (end * end - start * start) + b * (end - start);
            start = end;
            i += 1;
        }
        total
    }

    /// `inf_y { μ(y)² + μ′₋(y)/3 }` where `μ′₋` is the lower derivative
    /// (the smaller adjacent slope at a kink).
    pub fn m_constant(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                let (lo, hi) = self.segment_bounds(i);
                let min_sq = if a == 0.0 {
                    b * b
                } else {
                    let vertex = -b / a;
                    if vertex >= lo && vertex <= hi {
                        0.0
                    } else {
                        [lo, hi]
                            .into_iter()
                            .filter(|v| v.is_finite())
                            .map(|v| (a * v + b).powi(2))
                            .fold(f64::INFINITY, f64::min)
                    }
                };
                min_sq + a / 3.0
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `(inf μ, sup μ)` over the real line.
    pub fn extremes(&self) -> Result<(f64, f64), DriftError> {
        self.check_canonical()?;
        let values = std::iter::once(self.intercepts[0])
            .chain(self.breakpoints.iter().map(|&x| self.eval(x)))
            .chain(std::iter::once(*self.intercepts.last().unwrap()));
        Ok(
            values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            }),
        )
    }

    /// Largest absolute slope.
    pub fn max_abs_slope(&self) -> f64 {
        self.slopes.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

impl fmt::Display for PiecewiseLinearDrift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "piecewise-linear drift ({} breakpoints)",
            self.breakpoints.len()
        )
    }
}

/// Real evaluator used for drifts, diffusion coefficients and their
/// derivatives.
pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// General drift with declared or estimated bounds `sup|μ| ≤ M₁` and
/// Lipschitz constant `M₂`.
#[derive(Clone)]
pub struct DriftFunction {
    eval: Evaluator,
    m1: f64,
    m2: f64,
}

impl fmt::Debug for DriftFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftFunction")
            .field("m1", &self.m1)
            .field("m2", &self.m2)
            .finish_non_exhaustive()
    }
}

/// Number of sample points used to estimate `M₁` and `M₂`.
pub const ESTIMATION_POINTS: usize = 10_000;
/// Multiplicative safety margin on estimated constants.
pub const ESTIMATION_MARGIN: f64 = 1.1;

impl DriftFunction {
    pub fn new(eval: Evaluator, m1: f64, m2: f64) -> Self {
        Self {
            eval,
            m1: m1.max(0.0),
            m2: m2.max(0.0),
        }
    }

    pub fn from_fn<F>(f: F, m1: f64, m2: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(Arc::new(f), m1, m2)
    }

    /// Estimate `M₁` and `M₂` from `ESTIMATION_POINTS` samples on `[lo, hi]`
    /// with a 10% margin. Declared values, when given, take precedence.
    pub fn estimated(
        eval: Evaluator,
        lo: f64,
        hi: f64,
        declared_m1: Option<f64>,
        declared_m2: Option<f64>,
    ) -> Result<Self, DriftError> {
        if !(lo < hi) {
            return Err(DriftError::EmptyDomain(lo, hi));
        }
        let n = ESTIMATION_POINTS;
        let step = (hi - lo) / (n - 1) as f64;
        let mut prev: Option<(f64, f64)> = None;
        let (mut m1, mut m2) = (0.0f64, 0.0f64);
        for i in 0..n {
            let x = if i + 1 == n { hi } else { lo + i as f64 * step };
            let v = eval(x);
            if !v.is_finite() {
                return Err(DriftError::UnboundedValue(x));
            }
            m1 = m1.max(v.abs());
            if let Some((px, pv)) = prev {
                m2 = m2.max((v - pv).abs() / (x - px));
            }
            prev = Some((x, v));
        }
        Ok(Self::new(
            eval,
            declared_m1.unwrap_or(m1 * ESTIMATION_MARGIN),
            declared_m2.unwrap_or(m2 * ESTIMATION_MARGIN),
        ))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn evaluator(&self) -> Evaluator {
        Arc::clone(&self.eval)
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }
}

/// Piecewise-linear interpolant of `drift` on the nodes `lo + i/n`, extended
/// by constants outside `[lo, hi]`. The last cell is shortened when
/// `(hi − lo)·n` is not an integer.
pub fn linearize(
    drift: &DriftFunction,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<PiecewiseLinearDrift, DriftError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(DriftError::EmptyDomain(lo, hi));
    }
    if n == 0 {
        return Err(DriftError::InvalidResolution);
    }
    let step = 1.0 / n as f64;
    let cells = (hi - lo) * n as f64;
    let full = (cells - 1e-9).ceil().max(1.0) as usize;
    let mut nodes: Vec<f64> = (0..full).map(|i| lo + i as f64 * step).collect();
    nodes.push(hi);

    let values = nodes
        .iter()
        .map(|&x| {
            let v = drift.eval(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(DriftError::UnboundedValue(x))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut slopes = Vec::with_capacity(nodes.len() + 1);
    let mut intercepts = Vec::with_capacity(nodes.len() + 1);
    slopes.push(0.0);
    intercepts.push(values[0]);
    for w in 0..nodes.len() - 1 {
        let (x0, x1) = (nodes[w], nodes[w + 1]);
        let (v0, v1) = (values[w], values[w + 1]);
        let a = (v1 - v0) / (x1 - x0);
        // Anchor each chord at its midpoint so rounding is symmetric at
        // both ends.
        let xm = 0.5 * (x0 + x1);
        let vm = 0.5 * (v0 + v1);
        slopes.push(a);
        intercepts.push(vm - a * xm);
    }
    slopes.push(0.0);
    intercepts.push(*values.last().unwrap());
    PiecewiseLinearDrift::new(nodes, slopes, intercepts)
}

/// Unit-noise reduction of `dX = μ dt + σ dW`: returns
/// `(F(point), μ(point)/σ(point) − σ′(point)/2)` with `F(y) = ∫_{y₀}^{y} du/σ(u)`.
/// The second component is the transformed drift evaluated at `F(point)`.
pub fn lamperti(
    mu: &dyn Fn(f64) -> f64,
    sigma: &dyn Fn(f64) -> f64,
    sigma_prime: &dyn Fn(f64) -> f64,
    y0: f64,
    point: f64,
) -> Result<(f64, f64), DriftError> {
    for x in [y0, point] {
        if !(sigma(x) > 0.0) {
            return Err(DriftError::SigmaVanishes(x));
        }
    }
    let bad = std::cell::Cell::new(None);
    let integrand = |u: f64| {
        let s = sigma(u);
        if !(s > 0.0) {
            bad.set(Some(u));
            return 0.0;
        }
        1.0 / s
    };
    let f = quad::integrate(integrand, y0, point, 1e-10, 1e-300)?;
    if let Some(u) = bad.get() {
        return Err(DriftError::SigmaVanishes(u));
    }
    let s = sigma(point);
    Ok((f.value, mu(point) / s - 0.5 * sigma_prime(point)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_piecewise_examples() {
        let zero = PiecewiseLinearDrift::new(vec![], vec![0.0], vec![0.0]).unwrap();
        assert_eq!(zero.eval(3.7), 0.0);
        assert!(matches!(
            PiecewiseLinearDrift::new(vec![-1.0, 1.0], vec![0.0, -1.0, 0.0], vec![-1.0, 0.0, 1.0]),
            Err(DriftError::DiscontinuousDrift { .. })
        ));
        let clamp =
            PiecewiseLinearDrift::new(vec![-1.0, 1.0], vec![0.0, -1.0, 0.0], vec![1.0, 0.0, -1.0])
                .unwrap();
        for x in [-3.0, -1.0, -0.2, 0.0, 0.9, 1.0, 5.0] {
            assert_eq!(clamp.eval(x), (-x).clamp(-1.0, 1.0));
        }
    }

    #[test]
    fn make_piecewise_errors() {
        assert!(matches!(
            PiecewiseLinearDrift::new(vec![1.0, 1.0], vec![0.0; 3], vec![0.0; 3]),
            Err(DriftError::NonMonotoneBreakpoints(1))
        ));
        assert!(matches!(
            PiecewiseLinearDrift::new(vec![], vec![1.0], vec![0.0]),
            Err(DriftError::NonConstantTail(_))
        ));
        assert!(matches!(
            PiecewiseLinearDrift::new(vec![0.0], vec![0.0], vec![0.0]),
            Err(DriftError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn antiderivative_examples() {
        assert_eq!(
            PiecewiseLinearDrift::constant(1.0).antiderivative_diff(0.0, 1.0),
            1.0
        );
        let neg_x = PiecewiseLinearDrift::general(vec![], vec![-1.0], vec![0.0]).unwrap();
        assert!((neg_x.antiderivative_diff(0.0, 1.0) + 0.5).abs() < 1e-15);
        assert_eq!(
            PiecewiseLinearDrift::constant(0.0).antiderivative_diff(-4.0, 9.0),
            0.0
        );
        let clamp = PiecewiseLinearDrift::clamped_reversion();
        // ∫_{-2}^{2} clamp(−x) = 0 by oddness; ∫_0^2 = −1/2 − 1
        assert!(clamp.antiderivative_diff(-2.0, 2.0).abs() < 1e-15);
        assert!((clamp.antiderivative_diff(0.0, 2.0) + 1.5).abs() < 1e-15);
        assert!((clamp.antiderivative_diff(2.0, 0.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn m_constant_examples() {
        assert_eq!(PiecewiseLinearDrift::constant(1.0).m_constant(), 1.0);
        assert_eq!(PiecewiseLinearDrift::constant(0.0).m_constant(), 0.0);
        let neg_x = PiecewiseLinearDrift::general(vec![], vec![-1.0], vec![0.0]).unwrap();
        assert!((neg_x.m_constant() + 1.0 / 3.0).abs() < 1e-15);
        let clamp = PiecewiseLinearDrift::clamped_reversion();
        assert!((clamp.m_constant() + 1.0 / 3.0).abs() < 1e-15);
        // vertex outside the segment: μ = x + 2 on [0, 1], inf attained on the left tail
        let d = PiecewiseLinearDrift::new(vec![0.0, 1.0], vec![0.0, 1.0, 0.0], vec![2.0, 2.0, 3.0])
            .unwrap();
        assert_eq!(d.m_constant(), 4.0);
        // μ = x − 2 on [0, 1]: segment infimum (−1)² + 1/3 at x = 1 beats both tails
        let d =
            PiecewiseLinearDrift::new(vec![0.0, 1.0], vec![0.0, 1.0, 0.0], vec![-2.0, -2.0, -1.0])
                .unwrap();
        assert!((d.m_constant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn extremes_examples() {
        assert_eq!(
            PiecewiseLinearDrift::constant(0.0).extremes().unwrap(),
            (0.0, 0.0)
        );
        assert_eq!(
            PiecewiseLinearDrift::constant(2.0).extremes().unwrap(),
            (2.0, 2.0)
        );
        assert_eq!(
            PiecewiseLinearDrift::clamped_reversion()
                .extremes()
                .unwrap(),
            (-1.0, 1.0)
        );
        let neg_x = PiecewiseLinearDrift::general(vec![], vec![-1.0], vec![0.0]).unwrap();
        assert!(matches!(
            neg_x.extremes(),
            Err(DriftError::NonConstantTail(_))
        ));
    }

    #[test]
    fn linearize_linear_and_constant() {
        let id = DriftFunction::from_fn(|x| x, 1.0, 1.0);
        let lin = linearize(&id, -1.0, 1.0, 4).unwrap();
        assert_eq!(lin.breakpoints().len(), 9);
        for i in 0..=200 {
            let x = -1.0 + i as f64 * 0.01;
            assert!((lin.eval(x) - x).abs() < 1e-15);
        }
        assert_eq!(lin.eval(-5.0), -1.0);
        assert_eq!(lin.eval(5.0), 1.0);

        let c = DriftFunction::from_fn(|_| 0.7, 0.7, 0.0);
        let lin = linearize(&c, -3.0, 2.5, 3).unwrap();
        for x in [-10.0, -3.0, 0.1, 2.5, 8.0] {
            assert!((lin.eval(x) - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn linearize_tanh_error_bound() {
        let f = DriftFunction::from_fn(f64::tanh, 1.0, 1.0);
        let lin = linearize(&f, -4.0, 4.0, 8).unwrap();
        assert_eq!(lin.breakpoints().len(), 65);
        for &x in lin.breakpoints() {
            assert!((lin.eval(x) - x.tanh()).abs() < 1e-15);
        }
        // dense-grid maximization
        let sup = (0..=10_000)
            .map(|i| -4.0 + 8.0 * i as f64 / 10_000.0)
            .map(|x| (lin.eval(x) - x.tanh()).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 1.0 / 8.0 + 1e-12);
        // tanh is C², so the interpolation error is in fact ≤ h²·max|μ″|/8
        assert!(sup < 0.77 / 64.0 / 8.0 + 1e-9, "sup = {sup}");
    }

    #[test]
    fn linearize_errors() {
        let f = DriftFunction::from_fn(|x| 1.0 / x, 1.0, 1.0);
        assert!(matches!(
            linearize(&f, -1.0, 1.0, 2),
            Err(DriftError::UnboundedValue(_))
        ));
        assert!(matches!(
            linearize(&f, 1.0, 1.0, 2),
            Err(DriftError::EmptyDomain(..))
        ));
        assert!(matches!(
            linearize(&f, 1.0, 2.0, 0),
            Err(DriftError::InvalidResolution)
        ));
    }

    #[test]
    fn linearize_partial_last_cell() {
        let f = DriftFunction::from_fn(f64::sin, 1.0, 1.0);
        let lin = linearize(&f, 0.0, 1.3, 2).unwrap();
        assert_eq!(lin.breakpoints(), &[0.0, 0.5, 1.0, 1.3]);
    }

    #[test]
    fn estimated_constants() {
        let f = DriftFunction::estimated(Arc::new(|x: f64| 2.0 * x.sin()), -4.0, 4.0, None, None)
            .unwrap();
        assert!(f.m1() >= 2.0 && f.m1() <= 2.0 * 1.1 + 1e-12);
        assert!(f.m2() >= 2.0 && f.m2() <= 2.0 * 1.1 + 1e-9);
        let g = DriftFunction::estimated(Arc::new(f64::sin), 0.0, 1.0, Some(5.0), None).unwrap();
        assert_eq!(g.m1(), 5.0);
    }

    #[test]
    fn lamperti_examples() {
        let zero = |_: f64| 0.0;
        let (f, d) = lamperti(&zero, &|_| 2.0, &zero, 0.0, 1.0).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
        assert_eq!(d, 0.0);

        let (f, d) = lamperti(&zero, &|x| x, &|_| 1.0, 1.0, std::f64::consts::E).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
        assert_eq!(d, -0.5);

        let (f, d) = lamperti(&|x| x, &|_| 1.0, &zero, 0.3, 2.0).unwrap();
        assert!((f - 1.7).abs() < 1e-12);
        assert_eq!(d, 2.0);

        assert!(matches!(
            lamperti(&zero, &|x| x, &|_| 1.0, -1.0, 1.0),
            Err(DriftError::SigmaVanishes(_))
        ));
    }
}
