//! Kummer's confluent hypergeometric function
//!
//! ```text
//! M(a, b; x) = 1 + Σ_{k≥1} (a)_k / (b)_k · x^k / k!
//! ```
//!
//! Evaluation strategy:
//! - `|x| ≤ 30`: direct series with term-ratio recursion
//! - `Re x < 0` with detected cancellation, or `30 < |x| ≤ 60`: Kummer's
//!   transformation `M(a, b; x) = eˣ M(b−a, b; −x)`
//! - `|x| > 60`: asymptotic expansion (both exponential and algebraic parts),
//!   falling back to the series when the expansion cannot reach full accuracy
//!
//! Every path also reports a *loss factor*: the ratio of the largest summand
//! magnitude to the magnitude of the result. `loss ≈ 1` means no cancellation;
//! `loss ≈ 10^k` means roughly `k` digits were lost.

use num_complex::Complex64;

use super::gamma::ln_gamma;
use super::{is_nonpositive_integer, SpecfunError};

const SERIES_RADIUS: f64 = 30.0;
const ASYMPTOTIC_RADIUS: f64 = 60.0;
const TERM_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 500;
/// Loss factor above which the transformed series is tried for `Re x < 0`.
const CANCELLATION_LOSS: f64 = 1e2;

#[derive(Debug, Clone, Copy)]
struct Evaluated {
    value: Complex64,
    loss: f64,
}

fn series(a: Complex64, b: f64, x: Complex64) -> Result<Evaluated, SpecfunError> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_abs = 1.0f64;
    let mut small_run = 0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let num = (a + kf) * x;
        let den = (b + kf) * (kf + 1.0);
        term *= num / den;
        sum += term;
        let t = term.norm();
        max_abs = max_abs.max(t);
        if t == 0.0 {
            break;
        }
        // Stop only once terms are monotonically shrinking.
        let decreasing = num.norm() < den.abs();
        if decreasing && t <= TERM_TOL * sum.norm() {
            small_run += 1;
            if small_run >= 2 {
                return Ok(finish(sum, max_abs));
            }
        } else {
            small_run = 0;
        }
        if k + 1 == MAX_TERMS {
            return Err(SpecfunError::SeriesDiverged {
                a: a.to_string(),
                b,
                x: x.to_string(),
                terms: MAX_TERMS,
            });
        }
    }
    Ok(finish(sum, max_abs))
}

fn finish(sum: Complex64, max_abs: f64) -> Evaluated {
    let n = sum.norm();
    let loss = if n > 0.0 {
        (max_abs / n).max(1.0)
    } else {
        f64::INFINITY
    };
    Evaluated { value: sum, loss }
}

/// Sum of an asymptotic series `Σ_k (p)_k (q)_k / k! · w^k`, truncated at the
/// smallest term. Returns `None` when the smallest term is not negligible.
fn asymptotic_sum(p: Complex64, q: Complex64, w: Complex64) -> Option<(Complex64, f64)> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_abs = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 0..200 {
        let kf = k as f64;
        term *= (p + kf) * (q + kf) * w / (kf + 1.0);
        let t = term.norm();
        if t == 0.0 {
            return Some((sum, max_abs));
        }
        if t > prev {
            break;
        }
        sum += term;
        max_abs = max_abs.max(t);
        if t <= 1e-17 * sum.norm() {
            return Some((sum, max_abs));
        }
        prev = t;
    }
    if prev <= 1e-15 * sum.norm() {
        Some((sum, max_abs))
    } else {
        None
    }
}

/// DLMF 13.7.2 for large `|x|` with `Re x ≥ 0`.
fn asymptotic(a: Complex64, b: f64, x: Complex64) -> Option<Evaluated> {
    let bc = Complex64::new(b, 0.0);
    let ln_gb = ln_gamma(bc).ok()?;
    let one = Complex64::new(1.0, 0.0);
    let lnx = x.ln();

    let mut value = Complex64::new(0.0, 0.0);
    let mut max_abs = 0.0f64;

    // e^x x^{a−b} Γ(b)/Γ(a) Σ (b−a)_k (1−a)_k / k! x^{−k}
    if !(a.im == 0.0 && is_nonpositive_integer(a.re)) {
        let (s1, m1) = asymptotic_sum(bc - a, one - a, 1.0 / x)?;
        let pref = (ln_gb - ln_gamma(a).ok()? + x + (a - b) * lnx).exp();
        value += pref * s1;
        max_abs = max_abs.max(pref.norm() * m1);
    }
    // Γ(b)/Γ(b−a) e^{±iπa} x^{−a} Σ (a)_k (a−b+1)_k / k! (−x)^{−k}
    let bma = bc - a;
    if !(bma.im == 0.0 && is_nonpositive_integer(bma.re)) {
        let (s2, m2) = asymptotic_sum(a, a - b + 1.0, -1.0 / x)?;
        let ipa = Complex64::i() * std::f64::consts::PI * a;
        let phase = if x.im > 0.0 {
            ipa.exp()
        } else if x.im < 0.0 {
            (-ipa).exp()
        } else {
            (std::f64::consts::PI * a).cos()
        };
        let pref = (ln_gb - ln_gamma(bma).ok()? - a * lnx).exp() * phase;
        value += pref * s2;
        max_abs = max_abs.max(pref.norm() * m2);
    }
    if !value.is_finite() {
        return None;
    }
    Some(finish(value, max_abs))
}

fn transformed<F>(a: Complex64, b: f64, x: Complex64, inner: F) -> Result<Evaluated, SpecfunError>
where
    F: Fn(Complex64, f64, Complex64) -> Result<Evaluated, SpecfunError>,
{
    let e = inner(Complex64::new(b, 0.0) - a, b, -x)?;
    Ok(Evaluated {
        value: x.exp() * e.value,
        loss: e.loss,
    })
}

/// `M(a, b; x)` together with its cancellation loss factor.
pub fn kummer_psi_with_loss(
    a: Complex64,
    b: f64,
    x: Complex64,
) -> Result<(Complex64, f64), SpecfunError> {
    if is_nonpositive_integer(b) {
        return Err(SpecfunError::BNonPositiveInteger(b));
    }
    if x == Complex64::new(0.0, 0.0) || a == Complex64::new(0.0, 0.0) {
        return Ok((Complex64::new(1.0, 0.0), 1.0));
    }
    let r = x.norm();

    if r > ASYMPTOTIC_RADIUS {
        let asym = if x.re >= 0.0 {
            asymptotic(a, b, x)
        } else {
            asymptotic(Complex64::new(b, 0.0) - a, b, -x).map(|e| Evaluated {
                value: x.exp() * e.value,
                loss: e.loss,
            })
        };
        if let Some(e) = asym {
            return Ok((e.value, e.loss));
        }
    }

    if x.re < 0.0 && r > SERIES_RADIUS {
        let t = transformed(a, b, x, series)?;
        return Ok((t.value, t.loss));
    }
    let direct = series(a, b, x);
    if x.re < 0.0 && direct.as_ref().map_or(true, |d| d.loss > CANCELLATION_LOSS) {
        let t = transformed(a, b, x, series);
        let best = match (direct, t) {
            (Ok(d), Ok(t)) => {
                if t.loss < d.loss {
                    t
                } else {
                    d
                }
            }
            (Ok(d), Err(_)) => d,
            (Err(_), Ok(t)) => t,
            (Err(e), Err(_)) => return Err(e),
        };
        return Ok((best.value, best.loss));
    }
    direct.map(|d| (d.value, d.loss))
}

/// Kummer's confluent hypergeometric function `M(a, b; x)`.
pub fn kummer_psi(a: Complex64, b: f64, x: Complex64) -> Result<Complex64, SpecfunError> {
    kummer_psi_with_loss(a, b, x).map(|(v, _)| v)
}

/// Even/odd fundamental solutions of `½y″ + (αx + β)y′ − λy = 0`, `α ≠ 0`,
/// and their derivatives at one point.
///
/// With vertex `x* = −β/α`, `d = x − x*`, `z = −α d²` and `a = −λ/(2α)`:
/// `e₁ = M(a, ½; z)`, `e₂ = d · M(a+½, 3/2; z)`. At the vertex the pair is
/// `(1, 0, 0, 1)` and its Wronskian is `e^{z}` everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KummerBasis {
    pub e1: Complex64,
    pub de1: Complex64,
    pub e2: Complex64,
    pub de2: Complex64,
    /// Worst cancellation loss among the four hypergeometric evaluations.
    pub loss: f64,
}

impl KummerBasis {
    pub fn wronskian(&self) -> Complex64 {
        self.e1 * self.de2 - self.de1 * self.e2
    }
}

pub fn kummer_basis(
    slope: f64,
    intercept: f64,
    lambda: Complex64,
    x: f64,
) -> Result<KummerBasis, SpecfunError> {
    if slope == 0.0 {
        return Err(SpecfunError::ZeroSlope);
    }
    let d = x + intercept / slope;
    kummer_basis_centered(slope, lambda, d)
}

/// Same as [`kummer_basis`] with the offset from the vertex given directly.
pub(crate) fn kummer_basis_centered(
    slope: f64,
    lambda: Complex64,
    d: f64,
) -> Result<KummerBasis, SpecfunError> {
    let z = Complex64::new(-slope * d * d, 0.0);
    let dz = -2.0 * slope * d;
    let ka = -lambda / (2.0 * slope);
    let (m_even, l1) = kummer_psi_with_loss(ka, 0.5, z)?;
    let (m_even_next, l2) = kummer_psi_with_loss(ka + 1.0, 1.5, z)?;
    let (m_odd, l3) = kummer_psi_with_loss(ka + 0.5, 1.5, z)?;
    let (m_odd_next, l4) = kummer_psi_with_loss(ka + 1.5, 2.5, z)?;
    // d/dz M(a, b; z) = (a/b) M(a+1, b+1; z)
    let de1 = 2.0 * ka * m_even_next * dz;
    let de2 = m_odd + d * ((ka + 0.5) / 1.5) * m_odd_next * dz;
    Ok(KummerBasis {
        e1: m_even,
        de1,
        e2: d * m_odd,
        de2,
        loss: l1.max(l2).max(l3).max(l4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn trivial_values() {
        assert_eq!(kummer_psi(c(0.3), 0.7, c(0.0)).unwrap(), c(1.0));
        let e = kummer_psi(c(1.0), 1.0, c(1.0)).unwrap();
        assert!((e.re - 2.718_281_828_5).abs() < 1e-10);
        assert!(rel(e, c(std::f64::consts::E)) < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_integer_b() {
        assert_eq!(
            kummer_psi(c(1.0), -2.0, c(0.5)),
            Err(SpecfunError::BNonPositiveInteger(-2.0))
        );
        assert!(kummer_psi(c(1.0), 0.0, c(0.5)).is_err());
    }

    #[test]
    fn polynomial_case_terminates() {
        // M(−2, b; x) = 1 − 2x/b + x²/(b(b+1))
        let (b, x) = (1.5, 3.0);
        let exact = 1.0 - 2.0 * x / b + x * x / (b * (b + 1.0));
        assert!(rel(kummer_psi(c(-2.0), b, c(x)).unwrap(), c(exact)) < 1e-14);
        let x = 250.0;
        let exact = 1.0 - 2.0 * x / b + x * x / (b * (b + 1.0));
        assert!(rel(kummer_psi(c(-2.0), b, c(x)).unwrap(), c(exact)) < 1e-13);
    }

    #[test]
    fn negative_argument_uses_transformation() {
        // M(b, b; x) = e^x for any b
        let (v, loss) = kummer_psi_with_loss(c(0.5), 0.5, c(-25.0)).unwrap();
        assert!(rel(v, c((-25.0f64).exp())) < 1e-13);
        assert!(loss < 10.0);
    }

    #[test]
    fn asymptotic_region_matches_closed_form() {
        // M(1, 2; x) = (e^x − 1)/x
        for x in [61.0f64, 80.0, 150.0, 400.0] {
            let exact = (x.exp() - 1.0) / x;
            let v = kummer_psi(c(1.0), 2.0, c(x)).unwrap();
            assert!(rel(v, c(exact)) < 1e-13, "x={x}");
            let v = kummer_psi(c(1.0), 2.0, c(-x)).unwrap();
            let exact = (1.0 - (-x).exp()) / x;
            assert!(rel(v, c(exact)) < 1e-13, "x=-{x}");
        }
    }

    #[test]
    fn basis_at_vertex_and_symmetry() {
        let lam = Complex64::new(0.7, 0.3);
        let b = kummer_basis(-1.3, 0.65, lam, 0.5).unwrap();
        assert!(rel(b.e1, c(1.0)) < 1e-15);
        assert!(b.de1.norm() < 1e-15);
        assert!(b.e2.norm() < 1e-15);
        assert!(rel(b.de2, c(1.0)) < 1e-15);

        let (slope, icpt) = (2.0, -1.0); // vertex 0.5
        let h = 0.3;
        let p = kummer_basis(slope, icpt, lam, 0.5 + h).unwrap();
        let m = kummer_basis(slope, icpt, lam, 0.5 - h).unwrap();
        assert!(rel(p.e1, m.e1) < 1e-14);
        assert!(rel(p.e2, -m.e2) < 1e-14);
    }

    #[test]
    fn basis_wronskian_is_exp_z() {
        let lam = Complex64::new(1.2, -0.4);
        for (slope, x) in [(-1.0, 0.8), (0.5, -1.4), (3.0, 0.2)] {
            let b = kummer_basis(slope, 0.0, lam, x).unwrap();
            let z = -slope * x * x;
            assert!(rel(b.wronskian(), c(z.exp())) < 1e-13);
        }
    }

    #[test]
    fn basis_solves_segment_ode() {
        // ½y″ − x y′ − 0.5 y = 0 at x = 1 by central differences
        let (slope, icpt, lam, x, h) = (-1.0, 0.0, c(0.5), 1.0, 1e-4);
        let at = |x| kummer_basis(slope, icpt, lam, x).unwrap();
        let (bm, b0, bp) = (at(x - h), at(x), at(x + h));
        for (ym, y0, yp) in [(bm.e1, b0.e1, bp.e1), (bm.e2, b0.e2, bp.e2)] {
            let d2 = (yp - 2.0 * y0 + ym) / (h * h);
            let d1 = (yp - ym) / (2.0 * h);
            let res = 0.5 * d2 + (slope * x + icpt) * d1 - lam * y0;
            assert!(res.norm() / y0.norm() < 1e-7, "residual {}", res.norm());
        }
        // analytic derivatives agree with differences
        assert!(rel(b0.de1, (bp.e1 - bm.e1) / (2.0 * h)) < 1e-7);
        assert!(rel(b0.de2, (bp.e2 - bm.e2) / (2.0 * h)) < 1e-7);
    }
}
