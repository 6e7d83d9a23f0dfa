use std::f64::consts::PI;

use num_complex::Complex64;

use super::{is_nonpositive_integer, SpecfunError};

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
// published coefficients, kept digit for digit
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn pole_check(z: Complex64) -> Result<(), SpecfunError> {
    if z.im == 0.0 && is_nonpositive_integer(z.re) {
        return Err(SpecfunError::PoleAtNonPositiveInteger(z.re));
    }
    Ok(())
}

/// Lanczos series `A_g(z)` for `Re z ≥ ½`, argument already shifted by one.
fn lanczos_sum(zm1: Complex64) -> Complex64 {
    let mut acc = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (zm1 + i as f64);
    }
    acc
}

/// `ln sin(w)` without overflow for large `|Im w|`. Branch of the imaginary
/// part is unspecified; only `exp` of the result is meaningful.
fn ln_sin(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    if w.im > 1.0 {
        // sin w = e^{-iw} (e^{2iw} - 1) / (2i)
        -i * w + ((2.0 * i * w).exp() - 1.0).ln() - (2.0 * i).ln()
    } else if w.im < -1.0 {
        // sin w = e^{iw} (1 - e^{-2iw}) / (2i)
        i * w + (1.0 - (-2.0 * i * w).exp()).ln() - (2.0 * i).ln()
    } else {
        w.sin().ln()
    }
}

/// Complex log-gamma. The imaginary part is correct modulo `2π`.
pub fn ln_gamma(z: Complex64) -> Result<Complex64, SpecfunError> {
    pole_check(z)?;
    if z.re < 0.5 {
        // Γ(z) Γ(1−z) = π / sin(πz)
        let refl = ln_gamma(1.0 - z)?;
        return Ok(Complex64::new(PI.ln(), 0.0) - ln_sin(PI * z) - refl);
    }
    let zm1 = z - 1.0;
    let t = zm1 + LANCZOS_G + 0.5;
    Ok(LN_SQRT_2PI + (zm1 + 0.5) * t.ln() - t + lanczos_sum(zm1).ln())
}

/// Complex gamma function.
pub fn gamma(z: Complex64) -> Result<Complex64, SpecfunError> {
    pole_check(z)?;
    if z.re < 0.5 {
        let g = gamma(1.0 - z)?;
        return Ok(PI / ((PI * z).sin() * g));
    }
    if z.norm() > 140.0 {
        return Ok(ln_gamma(z)?.exp());
    }
    let zm1 = z - 1.0;
    let t = zm1 + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powc(zm1 + 0.5) * (-t).exp() * lanczos_sum(zm1))
}

/// Reciprocal gamma `1/Γ(z)`, zero at the poles of `Γ`.
pub fn rgamma(z: Complex64) -> Complex64 {
    match gamma(z) {
        Ok(g) => 1.0 / g,
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

/// Rising factorial `(a)_k = a(a+1)…(a+k−1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: Complex64, k: usize) -> Complex64 {
    (0..k).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (a + j as f64))
}
