use proptest::prelude::*;
use semalloc::numerics::{bisect_root_report, normal_pdf, q_function, q_inverse, ToleranceConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn q_strictly_decreasing(a in -8.0f64..8.0, gap in 1e-6f64..4.0) {
        prop_assert!(q_function(a) > q_function(a + gap));
    }

    #[test]
    fn q_inverse_round_trip(x in -6.0f64..6.0) {
        let back = q_inverse(q_function(x)).unwrap();
        // For x < 0, Q(x) is within 1e-9 of 1 and the round trip is limited
        // by the rounding of Q(x) itself: |dx| ≈ ulp(1)/φ(x).
        let conditioning = if x < 0.0 { f64::EPSILON / normal_pdf(x) } else { 0.0 };
        prop_assert!(
            (back - x).abs() <= 1e-9 * x.abs().max(1.0) + conditioning,
            "x = {}, back = {}", x, back
        );
    }

    #[test]
    fn q_round_trip_in_probability(log_p in -300.0f64..-0.31) {
        let p = 10f64.powf(log_p);
        let back = q_function(q_inverse(p).unwrap());
        prop_assert!(((back - p) / p).abs() < 1e-9);
    }

    #[test]
    fn bisection_width_within_tolerance(root in -50.0f64..50.0, span in 0.1f64..100.0, skew in 0.01f64..0.99) {
        let tol = ToleranceConfig::default();
        let lo = root - skew * span;
        let hi = root + (1.0 - skew) * span;
        let r = bisect_root_report(|x| (x - root).tanh(), lo, hi, &tol).unwrap();
        prop_assert!(r.width < tol.width_for(r.root) || r.width == 0.0);
        prop_assert!((r.root - root).abs() <= tol.width_for(root) + 1e-12);
    }
}

#[test]
fn q_inverse_round_trip_on_positive_half_is_tight() {
    // Without the conditioning allowance on x >= -5.5 the identity holds at
    // 1e-9 relative.
    for k in 0..=11_500 {
        let x = -5.5 + k as f64 * 1e-3;
        let back = q_inverse(q_function(x)).unwrap();
        assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0), "x = {x}");
    }
}
