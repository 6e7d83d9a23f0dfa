//! Per-segment fundamental solutions of `½u″ + (ax + b)u′ − λu = 0`.

use num_complex::Complex64;

use super::SolveError;
use crate::specfun::{self, KummerBasis};

/// Largest `|z| = |a|(x − x*)²` at which the vertex-centred Kummer pair is
/// used.
pub const KUMMER_MAX_Z: f64 = 30.0;
/// Largest tolerated cancellation loss in any hypergeometric evaluation.
pub const KUMMER_MAX_LOSS: f64 = 1e2;
/// Largest tolerated condition number of the 2×2 basis matrix.
pub const KUMMER_MAX_COND: f64 = 1e4;
/// Relative tolerance on the Wronskian identity `W = e^{z}`.
pub const KUMMER_WRONSKIAN_TOL: f64 = 1e-11;
/// Root separation below which the repeated-root basis is used.
pub const DEGENERATE_ROOT_GAP: f64 = 1e-8;

const SERIES_MAX_TERMS: usize = 400;

/// `(u, u′)` scaled by `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledState {
    pub u: Complex64,
    pub du: Complex64,
    pub log_scale: f64,
}

impl ScaledState {
    pub fn new(u: Complex64, du: Complex64) -> Self {
        Self {
            u,
            du,
            log_scale: 0.0,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.u.norm().max(self.du.norm())
    }

    /// Rescale so that `max(|u|, |u′|) = 1`.
    pub fn normalized(self) -> Result<Self, SolveError> {
        let m = self.magnitude();
        if !(m.is_finite()) {
            return Err(SolveError::Overflow);
        }
        if m == 0.0 {
            return Err(SolveError::SingularBasisMatrix);
        }
        let out = Self {
            u: self.u / m,
            du: self.du / m,
            log_scale: self.log_scale + m.ln(),
        };
        if !out.log_scale.is_finite() {
            return Err(SolveError::Overflow);
        }
        Ok(out)
    }

    /// `(u, u′)` expressed at another log scale.
    pub fn at_scale(&self, log_scale: f64) -> (Complex64, Complex64) {
        let f = (self.log_scale - log_scale).exp();
        (self.u * f, self.du * f)
    }

    /// `log u` (complex, branch unspecified in the imaginary part).
    pub fn ln_u(&self) -> Complex64 {
        self.u.ln() + self.log_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    /// `C₁e^{r₊(x−x_l)} + C₂e^{r₋(x−x_l)}`, `r± = −b ± √(b² + 2λ)`.
    Exponential {
        intercept: f64,
        root_plus: Complex64,
        root_minus: Complex64,
    },
    /// Repeated root: `e^{−b(x−x_l)}(C₁(x−x_l) + C₂)`.
    RepeatedRoot { intercept: f64 },
    /// `C₁M(κ, ½; z) + C₂(x − x*)M(κ+½, 3/2; z)` with `z = −a(x − x*)²`,
    /// `κ = −λ/(2a)`.
    Kummer {
        slope: f64,
        vertex: f64,
        kummer_a: Complex64,
    },
    /// Power series of the same equation re-expanded about sub-step starts;
    /// `C₁ = u(x_l)`, `C₂ = u′(x_l)`. Used where the vertex-centred Kummer
    /// pair is numerically ill-conditioned.
    LocalSeries { slope: f64, intercept: f64 },
}

/// Fundamental pair on `[left, right]` with matched coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentBasis {
    pub kind: BasisKind,
    pub left: f64,
    pub right: f64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub log_scale: f64,
}

impl SegmentBasis {
    pub fn is_kummer(&self) -> bool {
        matches!(self.kind, BasisKind::Kummer { .. })
    }

    /// `(u, u′)` at `x` from the stored coefficients.
    pub fn eval(&self, x: f64, lambda: Complex64) -> Result<ScaledState, SolveError> {
        let s = x - self.left;
        match self.kind {
            BasisKind::Exponential {
                root_plus,
                root_minus,
                ..
            } => Ok(exponential_eval(
                self.c1,
                self.c2,
                root_plus,
                root_minus,
                s,
                self.log_scale,
            )),
            BasisKind::RepeatedRoot { intercept } => {
                let g = -intercept * s;
                let lin = self.c1 * s + self.c2;
                Ok(ScaledState {
                    u: lin,
                    du: self.c1 - intercept * lin,
                    log_scale: self.log_scale + g,
                })
            }
            BasisKind::Kummer {
                slope,
                vertex,
                kummer_a: _,
            } => {
                let b = kummer_at(slope, vertex, lambda, x)?;
                Ok(ScaledState {
                    u: self.c1 * b.e1 + self.c2 * b.e2,
                    du: self.c1 * b.de1 + self.c2 * b.de2,
                    log_scale: self.log_scale,
                })
            }
            BasisKind::LocalSeries { slope, intercept } => {
                let start = ScaledState {
                    u: self.c1,
                    du: self.c2,
                    log_scale: self.log_scale,
                };
                series_propagate(slope, intercept, lambda, self.left, x, start)
            }
        }
    }
}

fn exponential_eval(
    c1: Complex64,
    c2: Complex64,
    rp: Complex64,
    rm: Complex64,
    s: f64,
    log_scale: f64,
) -> ScaledState {
    // factor out the growth of the dominant mode
    let g = (rp.re * s).max(rm.re * s);
    let ep = (rp * s - g).exp();
    let em = (rm * s - g).exp();
    ScaledState {
        u: c1 * ep + c2 * em,
        du: rp * c1 * ep + rm * c2 * em,
        log_scale: log_scale + g,
    }
}

/// Roots `r± = −b ± √(b² + 2λ)` (principal square root).
pub fn exponential_roots(intercept: f64, lambda: Complex64) -> (Complex64, Complex64) {
    let s = (intercept * intercept + 2.0 * lambda).sqrt();
    (-intercept + s, -intercept - s)
}

fn kummer_at(
    slope: f64,
    vertex: f64,
    lambda: Complex64,
    x: f64,
) -> Result<KummerBasis, SolveError> {
    Ok(specfun::kummer_basis(slope, -slope * vertex, lambda, x)?)
}

/// Matched basis on `[left, right]` for constant drift `b`, and the state
/// at `right`.
fn exponential_segment(
    intercept: f64,
    lambda: Complex64,
    left: f64,
    right: f64,
    state: ScaledState,
) -> Result<(SegmentBasis, ScaledState), SolveError> {
    let (rp, rm) = exponential_roots(intercept, lambda);
    let (u0, du0) = (state.u, state.du);
    let (kind, c1, c2) = if (rp - rm).norm() < DEGENERATE_ROOT_GAP {
        (
            BasisKind::RepeatedRoot { intercept },
            du0 + intercept * u0,
            u0,
        )
    } else {
        let gap = rp - rm;
        (
            BasisKind::Exponential {
                intercept,
                root_plus: rp,
                root_minus: rm,
            },
            (du0 - rm * u0) / gap,
            (rp * u0 - du0) / gap,
        )
    };
    let basis = SegmentBasis {
        kind,
        left,
        right,
        c1,
        c2,
        log_scale: state.log_scale,
    };
    let out = basis.eval(right, lambda)?.normalized()?;
    Ok((basis, out))
}

fn basis_condition(b: &KummerBasis) -> f64 {
    let frob2 = b.e1.norm_sqr() + b.e2.norm_sqr() + b.de1.norm_sqr() + b.de2.norm_sqr();
    frob2 / b.wronskian().norm()
}

fn kummer_usable(b: &KummerBasis, slope: f64, d: f64) -> bool {
    let z = -slope * d * d;
    let w_exact = z.exp();
    b.loss <= KUMMER_MAX_LOSS
        && basis_condition(b) <= KUMMER_MAX_COND
        && ((b.wronskian() - w_exact).norm() / w_exact) <= KUMMER_WRONSKIAN_TOL
}

/// Kummer-pair segment, or `None` when the pair is ill-conditioned on
/// `[left, right]`.
fn kummer_segment(
    slope: f64,
    intercept: f64,
    lambda: Complex64,
    left: f64,
    right: f64,
    state: ScaledState,
) -> Result<Option<(SegmentBasis, ScaledState)>, SolveError> {
    let vertex = -intercept / slope;
    let (dl, dr) = (left - vertex, right - vertex);
    if slope.abs() * dl.max(dr).powi(2).max(dl.min(dr).powi(2)) > KUMMER_MAX_Z {
        return Ok(None);
    }
    let (bl, br) = match (
        specfun::kummer_basis(slope, intercept, lambda, left),
        specfun::kummer_basis(slope, intercept, lambda, right),
    ) {
        (Ok(l), Ok(r)) => (l, r),
        _ => return Ok(None),
    };
    if !kummer_usable(&bl, slope, dl) || !kummer_usable(&br, slope, dr) {
        return Ok(None);
    }
    let w = bl.wronskian();
    let c1 = (bl.de2 * state.u - bl.e2 * state.du) / w;
    let c2 = (bl.e1 * state.du - bl.de1 * state.u) / w;
    let basis = SegmentBasis {
        kind: BasisKind::Kummer {
            slope,
            vertex,
            kummer_a: -lambda / (2.0 * slope),
        },
        left,
        right,
        c1,
        c2,
        log_scale: state.log_scale,
    };
    let out = ScaledState {
        u: c1 * br.e1 + c2 * br.e2,
        du: c1 * br.de1 + c2 * br.de2,
        log_scale: state.log_scale,
    }
    .normalized()?;
    Ok(Some((basis, out)))
}

/// Local power-series propagation of `(u, u′)` from `from` to `to` under
/// drift `ax + b`, in sub-steps short enough that the series converges
/// without cancellation.
pub(crate) fn series_propagate(
    slope: f64,
    intercept: f64,
    lambda: Complex64,
    from: f64,
    to: f64,
    start: ScaledState,
) -> Result<ScaledState, SolveError> {
    let span = to - from;
    if span == 0.0 {
        return Ok(start);
    }
    let m_max = (slope * from + intercept)
        .abs()
        .max((slope * to + intercept).abs());
    let rate = m_max + (m_max * m_max + 2.0 * lambda.norm()).sqrt() + slope.abs().sqrt();
    let steps = (span.abs() * rate).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut state = start;
    for i in 0..steps {
        let x = from + i as f64 * h;
        let m = slope * x + intercept;
        state = series_step(slope, m, lambda, h, state)?.normalized()?;
    }
    Ok(state)
}

/// One Taylor step: `d_k = c_k h^k` with
/// `c_{k+2} = [2(λ − a k)c_k − 2m(k+1)c_{k+1}] / ((k+1)(k+2))`.
fn series_step(
    slope: f64,
    m: f64,
    lambda: Complex64,
    h: f64,
    state: ScaledState,
) -> Result<ScaledState, SolveError> {
    let mut d0 = state.u;
    let mut d1 = state.du * h;
    let mut u = d0 + d1;
    let mut du_h = d1; // Σ k d_k
    let scale = state.u.norm() + (state.du * h).norm();
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        let d2 = (2.0 * (lambda - slope * kf) * d0 * h * h - 2.0 * m * (kf + 1.0) * d1 * h)
            / ((kf + 1.0) * (kf + 2.0));
        u += d2;
        du_h += (kf + 2.0) * d2;
        if k >= 2 && d1.norm() + d2.norm() <= 1e-17 * (u.norm() + scale) {
            return Ok(ScaledState {
                u,
                du: du_h / h,
                log_scale: state.log_scale,
            });
        }
        d0 = d1;
        d1 = d2;
    }
    Err(SolveError::SeriesNotConverged)
}

/// How sloped segments are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisPolicy {
    /// Kummer pair when well-conditioned, local series otherwise.
    #[default]
    Auto,
    /// Local series only (cross-check).
    SeriesOnly,
    /// Kummer pair only; ill-conditioning is an error.
    KummerOnly,
}

/// Match `state` at `left`, build the segment basis for drift `ax + b` on
/// `[left, right]`, and return it with the normalized state at `right`.
pub fn propagate_segment(
    slope: f64,
    intercept: f64,
    lambda: Complex64,
    left: f64,
    right: f64,
    state: ScaledState,
    policy: BasisPolicy,
) -> Result<(SegmentBasis, ScaledState), SolveError> {
    if !(right >= left) || !left.is_finite() || !right.is_finite() {
        return Err(SolveError::InvalidSegment(left, right));
    }
    if state.magnitude() == 0.0 {
        return Err(SolveError::SingularBasisMatrix);
    }
    if slope == 0.0 {
        return exponential_segment(intercept, lambda, left, right, state);
    }
    if policy != BasisPolicy::SeriesOnly {
        if let Some(done) = kummer_segment(slope, intercept, lambda, left, right, state)? {
            return Ok(done);
        }
        if policy == BasisPolicy::KummerOnly {
            return Err(SolveError::SingularBasisMatrix);
        }
    }
    let basis = SegmentBasis {
        kind: BasisKind::LocalSeries { slope, intercept },
        left,
        right,
        c1: state.u,
        c2: state.du,
        log_scale: state.log_scale,
    };
    let out = series_propagate(slope, intercept, lambda, left, right, state)?;
    Ok((basis, out))
}
