use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, PI};

const SERIES_CUTOFF: f64 = 2.0;

/// `erf(x)` for `0 ≤ x < 2` from the positive-term series
/// `erf x = 2/√π · e^{−x²} Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term < 1e-17 * sum || n > 200.0 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// `e^{x²} erfc(x)` for `x ≥ 2` by modified Lentz evaluation of
/// `1/√π · 1/(x + ½/(x + 1/(x + 3/2/(x + …))))`.
fn erfcx_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (PI.sqrt() * f)
}

/// Complementary error function, relative accuracy near machine precision
/// for `x ≥ 2` and absolute accuracy `~1e-16` elsewhere.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < SERIES_CUTOFF {
        1.0 - erf_series(x)
    } else if x > 27.3 {
        0.0
    } else {
        (-x * x).exp() * erfcx_cf(x)
    }
}

/// Scaled complementary error function `e^{x²} erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        let x2 = x * x;
        return 2.0 * x2.exp() - erfcx(-x);
    }
    if x < SERIES_CUTOFF {
        (x * x).exp() * (1.0 - erf_series(x))
    } else {
        erfcx_cf(x)
    }
}

/// Standard normal density.
pub fn normal_pdf(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF `Φ(y) = ½ erfc(−y/√2)`.
pub fn normal_cdf(y: f64) -> f64 {
    0.5 * erfc(-y * FRAC_1_SQRT_2)
}

/// Inverse of [`normal_cdf`]: rational initial guess (Acklam) followed by one
/// Halley step against `normal_cdf` itself.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    // Halley refinement on e = Φ(x) − p, evaluated on the smaller tail.
    let e = if x <= 0.0 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_cdf(-x)
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson quadrature of the Gaussian density on [-40, y].
    fn cdf_by_quadrature(y: f64) -> f64 {
        let (a, n) = (-40.0, 400_000);
        let h = (y - a) / n as f64;
        let mut s = normal_pdf(a) + normal_pdf(y);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.7) + normal_cdf(-1.7) - 1.0).abs() < 1e-15);
        let oracle = cdf_by_quadrature(1.0);
        assert!((oracle - 0.841_344_746_1).abs() < 1e-10);
        assert!((normal_cdf(1.0) - oracle).abs() < 1e-12);
        for y in [-6.0, -3.3, -1.99, -0.4, 0.8, 2.5, 4.0] {
            assert!((normal_cdf(y) - cdf_by_quadrature(y)).abs() < 1e-12, "{y}");
        }
    }

    #[test]
    fn erfc_tail_is_relatively_accurate() {
        // erfc(5) = 1.5374597944280349e-12
        assert!((erfc(5.0) / 1.537_459_794_428_035e-12 - 1.0).abs() < 1e-13);
        // asymptotic 1/(x√π) Σ (−1)ⁿ (2n−1)!! / (2x²)ⁿ at x = 10
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for n in 1..=10 {
            term *= -(2.0 * n as f64 - 1.0) / 200.0;
            sum += term;
        }
        let asym = sum / (10.0 * PI.sqrt());
        assert!((erfcx(10.0) / asym - 1.0).abs() < 1e-14);
        assert!((erfcx(1.0) - 0.427_583_576_155_807).abs() < 1e-14);
        assert!((erfcx(-1.0) - (2.0 * 1f64.exp() - 0.427_583_576_155_807)).abs() < 1e-13);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [1e-12, 1e-6, 0.01, 0.0243, 0.2] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) / p - 1.0).abs() < 1e-12, "p={p} x={x}");
            if p >= 1e-6 {
                assert!((normal_quantile(1.0 - p) + x).abs() < 1e-9);
            }
        }
        for p in [0.5, 0.77, 0.99] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-15);
        }
        assert_eq!(normal_quantile(0.5), 0.0);
    }
}
