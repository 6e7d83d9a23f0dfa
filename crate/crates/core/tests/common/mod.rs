#![allow(dead_code)]

use fpt::drift::PiecewiseLinearDrift;
use proptest::prelude::*;

/// Continuous drift with constant tails: breakpoints in `[-3, 3]` at least
/// 0.05 apart, interior slopes in `[-max_slope, max_slope]`.
pub fn canonical_drift(
    max_breaks: usize,
    max_slope: f64,
) -> impl Strategy<Value = PiecewiseLinearDrift> {
    (0..=max_breaks)
        .prop_flat_map(move |m| {
            (
                proptest::collection::vec(0.05f64..1.5, m),
                -3.0f64..0.0,
                proptest::collection::vec(-max_slope..max_slope, m.saturating_sub(1)),
                -2.0f64..2.0,
            )
        })
        .prop_map(|(gaps, start, slopes, v0)| build(&gaps, start, &slopes, v0, false))
}

/// As [`canonical_drift`] but the outer segments may have nonzero slope.
pub fn general_drift(max_breaks: usize) -> impl Strategy<Value = PiecewiseLinearDrift> {
    (1..=max_breaks)
        .prop_flat_map(|m| {
            (
                proptest::collection::vec(0.05f64..1.5, m),
                -3.0f64..0.0,
                proptest::collection::vec(-3.0f64..3.0, m + 1),
                -2.0f64..2.0,
            )
        })
        .prop_map(|(gaps, start, slopes, v0)| build(&gaps, start, &slopes, v0, true))
}

fn build(
    gaps: &[f64],
    start: f64,
    slopes: &[f64],
    v0: f64,
    tails_from_slopes: bool,
) -> PiecewiseLinearDrift {
    let mut bps = Vec::with_capacity(gaps.len());
    let mut x = start;
    for g in gaps {
        bps.push(x);
        x += g;
    }
    if bps.is_empty() {
        return PiecewiseLinearDrift::constant(v0);
    }
    let m = bps.len();
    let mut seg_slopes = vec![0.0; m + 1];
    if tails_from_slopes {
        seg_slopes.copy_from_slice(&slopes[..m + 1]);
    } else {
        seg_slopes[1..m].copy_from_slice(&slopes[..m - 1]);
    }
    // value at each breakpoint, walking right from v0 at the first
    let mut values = vec![v0];
    for k in 1..m {
        values.push(values[k - 1] + seg_slopes[k] * (bps[k] - bps[k - 1]));
    }
    let mut intercepts = Vec::with_capacity(m + 1);
    intercepts.push(values[0] - seg_slopes[0] * bps[0]);
    for k in 1..m {
        intercepts.push(values[k] - seg_slopes[k] * bps[k]);
    }
    intercepts.push(values[m - 1] - seg_slopes[m] * bps[m - 1]);
    PiecewiseLinearDrift::general(bps, seg_slopes, intercepts).expect("continuous by construction")
}
