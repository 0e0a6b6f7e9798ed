//! Structural invariants over randomly drawn inputs.

use proptest::prelude::*;
use relay_dde::maps::{composite_double, phi2, single_coefficients, AffineMap};
use relay_dde::params::{
    coefficient_at, fold_time, relay, shape_conditions_double, shape_conditions_single,
};
use relay_dde::{solve_exact, Params};

fn params() -> impl Strategy<Value = Params> {
    (
        0.5..5.0f64,
        0.05..3.0f64,
        0.2..6.0f64,
        0.5..3.0f64,
        0.01..1.0f64,
    )
        .prop_map(|(a1, a2, p1, p2, mu)| Params::new(a1, a2, p1, p2, mu).unwrap())
}

proptest! {
    #[test]
    fn coefficient_is_periodic(p in params(), s in 0.0..1.0f64, k in -5i32..5) {
        let t = s * p.period();
        // stay clear of the switches where rounding of t + kT may cross them
        prop_assume!(t.abs() > 1e-9 && (t - p.p1()).abs() > 1e-9 && (p.period() - t) > 1e-9);
        let shifted = t + k as f64 * p.period();
        prop_assert_eq!(coefficient_at(&p, shifted), coefficient_at(&p, t));
        let expected = if t < p.p1() { p.a1() } else { p.a2() };
        prop_assert_eq!(coefficient_at(&p, t), expected);
    }

    #[test]
    fn folded_time_lies_in_one_period(t in -1e3..1e3f64, period in 0.1..10.0f64) {
        let r = fold_time(t, period);
        prop_assert!((0.0..period).contains(&r));
        let k = ((t - r) / period).round();
        prop_assert!((t - r - k * period).abs() <= 1e-9 * t.abs().max(1.0));
    }

    #[test]
    fn relay_is_odd(x in -1e6..1e6f64) {
        prop_assert_eq!(relay(-x), -relay(x));
        prop_assert_eq!(relay(x).abs(), if x == 0.0 { 0.0 } else { 1.0 });
    }

    #[test]
    fn shape_verdict_is_the_conjunction(p in params(), h in 0.01..10.0f64) {
        for rep in [shape_conditions_single(&p, h), shape_conditions_double(&p, h)] {
            prop_assert_eq!(rep.satisfied, rep.details.iter().all(|c| c.holds));
            prop_assert_eq!(rep.failed_names().is_empty(), rep.satisfied);
        }
    }

    #[test]
    fn affine_identities(p in params(), h in -10.0..10.0f64) {
        let phi1 = AffineMap::double(&p);
        let lhs = composite_double(&p, h);
        let rhs = phi2(&p, phi1.apply(h));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let (m, b) = single_coefficients(&p);
        if m.abs() < 1.0 {
            let h_star = b / (1.0 - m);
            prop_assert!((AffineMap::single(&p).apply(h_star) - h_star).abs() <= 1e-12 * (1.0 + h_star.abs()));
        }
    }

    #[test]
    fn solutions_are_odd_in_the_history(p in params(), h in 0.01..5.0f64, s in 0.0..1.0f64) {
        let horizon = 2.0 * p.period();
        let up = solve_exact(&p, h, horizon).unwrap();
        let down = solve_exact(&p, -h, horizon).unwrap();
        let t = s * horizon;
        let (a, b) = (up.eval(t).unwrap(), down.eval(t).unwrap());
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()), "t = {}: {} vs {}", t, a, b);
        prop_assert!(up.max_join_mismatch() <= 1e-12 * (1.0 + h));
    }
}
