//! Closed-form transit values against the event-driven solver.

mod common;

use common::{rel_err, rng, sample_double, sample_single};
use relay_dde::maps::{double_transit, single_transit};
use relay_dde::{oracle_crosscheck, solve_exact, Regime};

#[test]
fn single_transit_matches_simulation() {
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (p, h) = sample_single(&mut r);
        let tr = single_transit(&p, h);
        let ex = solve_exact(&p, h, p.period()).unwrap();
        let got = ex.eval(p.period()).unwrap();
        worst = worst.max(rel_err(got, tr.x4));
        let zeros = ex.zeros();
        assert!((zeros[0] - tr.t1).abs() < 1e-10, "{p:?} h={h}");
        assert!((zeros[1] - tr.t2).abs() < 1e-10, "{p:?} h={h}");
    }
    assert!(worst <= 1e-10, "worst relative error {worst:e}");
}

#[test]
fn double_transit_matches_simulation() {
    let mut r = rng(12);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (p, h) = sample_double(&mut r);
        let tr = double_transit(&p, h);
        let ex = solve_exact(&p, h, p.period()).unwrap();
        worst = worst.max(rel_err(ex.eval(p.period()).unwrap(), tr.x3));
        worst = worst.max(rel_err(ex.eval(p.p1()).unwrap(), tr.x1));
        assert_eq!(ex.zeros().len(), 1, "{p:?} h={h}");
    }
    assert!(worst <= 1e-10, "worst relative error {worst:e}");
}

#[test]
fn crosscheck_ties_the_three_paths_together() {
    let p = common::p1();
    let h = relay_dde::maps::fixed_point_single(&p).unwrap().h_star;
    let rep = oracle_crosscheck(&p, h, Regime::SinglePeriod, 1e-3).unwrap();
    assert!(rep.passed, "{rep:?}");
    assert!(rep.transit_residual < 1e-12);

    let q = common::p2();
    let hd = relay_dde::maps::fixed_point_double(&q).unwrap().h_star;
    let rep = oracle_crosscheck(&q, hd, Regime::DoublePeriod, 1e-3).unwrap();
    assert!(rep.passed, "{rep:?}");
    assert!(rep.antiperiodic_residual.unwrap() < 1e-9);
}
