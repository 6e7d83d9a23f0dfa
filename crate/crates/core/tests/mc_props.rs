use fpt::bounds::anderson_crossing;
use fpt::mc::{estimate_crossing, estimate_crossing_antithetic, McConfig};

fn brownian_targets() -> [(f64, f64); 2] {
    // (drift, exact crossing probability from 0 to 1 by T = 1)
    [
        (0.0, anderson_crossing(0.0, 1.0, 1.0)),
        (1.0, anderson_crossing(1.0, 1.0, 1.0)),
    ]
}

#[test]
fn independent_of_worker_count() {
    let cfg = McConfig::new(4000, 0.01, 1.0, 11);
    let drift = |x: f64| -x.clamp(-1.0, 1.0);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            (
                estimate_crossing(&drift, 0.0, 1.0, &cfg).unwrap(),
                estimate_crossing_antithetic(&drift, 0.0, 1.0, &cfg).unwrap(),
            )
        })
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.0.p_hat.to_bits(), four.0.p_hat.to_bits());
    assert_eq!(one.1.p_hat.to_bits(), four.1.p_hat.to_bits());
}

#[test]
fn bridge_correction_removes_discretization_bias() {
    for (mu, exact) in brownian_targets() {
        let mut cfg = McConfig::new(40_000, 1e-2, 1.0, 20240601);
        cfg.bridge_correction = false;
        let raw = estimate_crossing(&|_: f64| mu, 0.0, 1.0, &cfg).unwrap();
        cfg.bridge_correction = true;
        let corrected = estimate_crossing(&|_: f64| mu, 0.0, 1.0, &cfg).unwrap();
        assert!(
            raw.p_hat < exact - 3.0 * raw.std_err,
            "μ = {mu}: {} vs {exact}",
            raw.p_hat
        );
        assert!((corrected.p_hat - exact).abs() < (raw.p_hat - exact).abs());
        assert!(
            (corrected.p_hat - exact).abs() <= 3.0 * corrected.std_err,
            "μ = {mu}"
        );
    }
}

#[test]
fn halving_dt_is_within_two_standard_errors() {
    for (mu, _) in brownian_targets() {
        let coarse = McConfig::new(40_000, 1e-2, 1.0, 20240601);
        let fine = McConfig { dt: 5e-3, ..coarse };
        let a = estimate_crossing(&|_: f64| mu, 0.0, 1.0, &coarse).unwrap();
        let b = estimate_crossing(&|_: f64| mu, 0.0, 1.0, &fine).unwrap();
        assert!(
            (a.p_hat - b.p_hat).abs() < 2.0 * a.std_err,
            "μ = {mu}: {} vs {}",
            a.p_hat,
            b.p_hat
        );
    }
}

#[test]
fn antithetic_estimate_is_consistent() {
    for (mu, exact) in brownian_targets() {
        let cfg = McConfig::new(40_000, 1e-2, 1.0, 3);
        let e = estimate_crossing_antithetic(&|_: f64| mu, 0.0, 1.0, &cfg).unwrap();
        assert_eq!(e.n_paths, 40_000);
        assert!(
            (e.p_hat - exact).abs() <= 3.0 * e.std_err,
            "μ = {mu}: {} vs {exact}",
            e.p_hat
        );
    }
}
