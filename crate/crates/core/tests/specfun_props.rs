use fpt::specfun::{gamma, kummer_basis, kummer_psi, pochhammer};
use fpt::Complex64;
use proptest::prelude::*;

type C = Complex64;

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn param() -> impl Strategy<Value = C> {
    (-4.0f64..4.0, -3.0f64..3.0).prop_map(|(re, im)| C::new(re, im))
}

fn b_param() -> impl Strategy<Value = f64> {
    (0.2f64..4.0).prop_filter("away from integers", |b| {
        (b - b.round()).abs() > 1e-3 || *b >= 1.0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kummer_ode_residual(a in param(), b in b_param(), x in -25.0f64..25.0) {
        let x = C::new(x, 0.0);
        let m = kummer_psi(a, b, x).unwrap();
        let m1 = a / b * kummer_psi(a + 1.0, b + 1.0, x).unwrap();
        let m2 = a * (a + 1.0) / (b * (b + 1.0)) * kummer_psi(a + 2.0, b + 2.0, x).unwrap();
        let terms = [x * m2, (b - x) * m1, a * m];
        let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        prop_assume!(scale > 0.0);
        let res = (terms[0] + terms[1] - terms[2]).norm() / scale;
        prop_assert!(res <= 1e-9, "residual {:e}", res);
    }

    #[test]
    fn kummer_transformation(a in param(), b in b_param(), x in -20.0f64..20.0) {
        let lhs = kummer_psi(a, b, C::new(x, 0.0)).unwrap();
        let rhs = x.exp() * kummer_psi(C::new(b, 0.0) - a, b, C::new(-x, 0.0)).unwrap();
        // near a zero of M the relative error is meaningless; compare against
        // the larger side
        let err = (lhs - rhs).norm() / lhs.norm().max(rhs.norm());
        prop_assume!(lhs.norm() > 1e-6 * (1.0 + x.exp()));
        prop_assert!(err <= 1e-10, "{:e}: {} vs {}", err, lhs, rhs);
    }

    #[test]
    fn contiguous_derivative(a in param(), b in b_param(), x in -10.0f64..10.0) {
        let h = 1e-5 * (1.0 + x.abs());
        let fd = (kummer_psi(a, b, C::new(x + h, 0.0)).unwrap() - kummer_psi(a, b, C::new(x - h, 0.0)).unwrap()) / (2.0 * h);
        let exact = a / b * kummer_psi(a + 1.0, b + 1.0, C::new(x, 0.0)).unwrap();
        let scale = exact.norm().max(kummer_psi(a, b, C::new(x, 0.0)).unwrap().norm());
        prop_assert!((fd - exact).norm() <= 1e-7 * scale, "{} vs {}", fd, exact);
    }

    #[test]
    fn gamma_recurrence(re in -6.0f64..12.0, im in -8.0f64..8.0) {
        let z = C::new(re, im);
        prop_assume!((z - z.re.round()).norm() > 1e-3 || z.re > 0.5);
        let g = gamma(z).unwrap();
        prop_assert!(rel(gamma(z + 1.0).unwrap(), z * g) <= 1e-12);
    }

    #[test]
    fn gamma_reflection(re in -3.0f64..3.0, im in -4.0f64..4.0) {
        let z = C::new(re, im);
        prop_assume!((z - z.re.round()).norm() > 1e-3);
        let lhs = gamma(z).unwrap() * gamma(1.0 - z).unwrap();
        prop_assert!(rel(lhs, std::f64::consts::PI / (std::f64::consts::PI * z).sin()) <= 1e-10);
    }

    #[test]
    fn pochhammer_is_gamma_ratio(a in 0.1f64..5.0, k in 0usize..12) {
        let a = C::new(a, 0.0);
        let ratio = gamma(a + k as f64).unwrap() / gamma(a).unwrap();
        prop_assert!(rel(pochhammer(a, k), ratio) <= 1e-12);
    }

    #[test]
    fn basis_wronskian_is_exponential(slope in -3.0f64..3.0, intercept in -2.0f64..2.0, lre in 0.1f64..20.0, lim in -20.0f64..20.0, d in -2.0f64..2.0) {
        prop_assume!(slope.abs() > 0.05);
        let x = d - intercept / slope;
        let basis = kummer_basis(slope, intercept, C::new(lre, lim), x).unwrap();
        prop_assume!(basis.loss < 1e3);
        // W = e^{z} with z = −slope·d², measured against the size of the two
        // products it is the difference of
        let expected = C::new((-slope * d * d).exp(), 0.0);
        let scale = (basis.e1 * basis.de2).norm() + (basis.de1 * basis.e2).norm();
        let err = (basis.wronskian() - expected).norm() / scale;
        prop_assert!(err <= 1e-11, "{:e}: {} vs {}", err, basis.wronskian(), expected);
    }
}
