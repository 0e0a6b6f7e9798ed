//! The smoothed period map against its first-order prediction, and the
//! smoothed solution against the relay solution off the exceptional windows.

mod common;

use common::p1;
use relay_dde::experiments::exceptional_comparison;
use relay_dde::maps::single_coefficients;
use relay_dde::smoothing::{eta, SmoothingSpec};
use relay_dde::{smoothing_convergence_study, StudyOptions};

#[test]
fn probed_map_matches_prediction_and_errors_shrink() {
    let p = p1();
    let rep =
        smoothing_convergence_study(&p, &[1e-2, 1e-3, 1e-4], StudyOptions::default()).unwrap();
    assert_eq!(rep.probes.len(), 9);
    for pr in &rep.probes {
        assert!(pr.ok, "{pr:?}");
    }
    assert!(rep.monotone_lambda && rep.monotone_h, "{:?}", rep.rows);
    assert!(rep.passed());
    // delta = 0 sentinel carries the unperturbed values
    assert_eq!(rep.rows[0].delta, 0.0);
    assert_eq!(rep.rows[0].h_tilde, rep.h_star);
    assert_eq!(rep.rows[0].lambda, rep.m);
}

#[test]
fn fixed_point_displacement_is_within_the_affine_bound() {
    let p = p1();
    let (m, _) = single_coefficients(&p);
    let rep = smoothing_convergence_study(&p, &[1e-3], StudyOptions::default()).unwrap();
    let row = &rep.rows[1];
    let spec = SmoothingSpec::build(&p, 1e-3, row.rho).unwrap();
    let bound = (eta(rep.h_star, 1e-3, &p).unwrap() * spec.r_delta).abs() / (1.0 - m.abs()) + 1e-7;
    assert!(
        row.abs_err_hstar <= bound,
        "{} > {bound}",
        row.abs_err_hstar
    );
    assert!((row.h_tilde - row.h_tilde_predicted).abs() <= 1e-9);
}

#[test]
fn smoothed_solution_agrees_off_the_exceptional_windows() {
    let p = p1();
    let delta = 1e-3;
    let rep = exceptional_comparison(&p, delta, delta, None, None).unwrap();
    assert!(rep.sup_outside <= 1e-6, "{rep:?}");
    assert!(rep.sup_outside_corrected <= 1e-8, "{rep:?}");
    assert!(rep.empirical_c <= rep.c_bound, "{rep:?}");
    assert!(rep.sup_all <= rep.c_bound * delta);
    assert!(rep.tail_residual <= 1e-8);
    assert_eq!(rep.intervals.len(), 4);
}
