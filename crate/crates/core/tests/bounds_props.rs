use fpt::bounds::{anderson_crossing, crossing_diff_bound};
use fpt::drift::{linearize, DriftFunction};
use fpt::invert::{FirstPassageQuery, InversionConfig};
use proptest::prelude::*;

proptest! {
    #[test]
    fn crossing_bound_increases_in_each_argument(
        m1 in 0.1f64..2.0,
        m2 in 0.1f64..2.0,
        t in 0.1f64..3.0,
        eps in 1e-4f64..0.5,
        bump in 1.01f64..2.0,
    ) {
        let base = crossing_diff_bound(m1, m2, 0.0, 1.0, t, eps).unwrap().bound_value;
        for (a, b, h, e) in [
            (m1 * bump, m2, t, eps),
            (m1, m2 * bump, t, eps),
            (m1, m2, t * bump, eps),
            (m1, m2, t, eps * bump),
        ] {
            let v = crossing_diff_bound(a, b, 0.0, 1.0, h, e).unwrap().bound_value;
            prop_assert!(v > base, "{} <= {}", v, base);
        }
    }
}

#[test]
fn anderson_monotonicity_on_grids() {
    let mus: Vec<f64> = (-20..=20).map(|i| 0.2 * i as f64).collect();
    let hs: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
    let ds: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
    for &d in &ds {
        for &h in &hs {
            let v: Vec<f64> = mus.iter().map(|&m| anderson_crossing(m, h, d)).collect();
            assert!(v.windows(2).all(|w| w[1] > w[0]), "μ at h = {h}, d = {d}");
        }
    }
    for &m in &mus {
        for &d in &ds {
            let v: Vec<f64> = hs.iter().map(|&h| anderson_crossing(m, h, d)).collect();
            assert!(v.windows(2).all(|w| w[1] > w[0]), "h at μ = {m}, d = {d}");
        }
        for &h in &hs {
            let v: Vec<f64> = ds.iter().map(|&d| anderson_crossing(m, h, d)).collect();
            assert!(v.windows(2).all(|w| w[1] < w[0]), "d at μ = {m}, h = {h}");
        }
    }
}

#[test]
fn linearized_tanh_within_crossing_bound() {
    let f = DriftFunction::from_fn(f64::tanh, 1.0, 1.0);
    let cfg = InversionConfig::euler();
    let survival = |n: usize| {
        let q = FirstPassageQuery::new(linearize(&f, -4.0, 4.0, n).unwrap(), 0.0, 1.0).unwrap();
        1.0 - q.cdf(1.0, &cfg).unwrap()
    };
    let reference = survival(256);
    for n in [8, 16, 32] {
        let gap = (survival(n) - reference).abs();
        let bound = crossing_diff_bound(1.0, 1.0, 0.0, 1.0, 1.0, f.m2() / n as f64).unwrap();
        assert!(
            gap <= bound.bound_value,
            "n = {n}: {gap} > {}",
            bound.bound_value
        );
    }
}
