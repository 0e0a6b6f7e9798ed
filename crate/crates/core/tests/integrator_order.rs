//! Fourth-order convergence of the fixed-step scheme, including grids far
//! coarser than the smoothing windows.

mod common;

use common::p1;
use relay_dde::integrator::align_steps;
use relay_dde::{integrate_smoothed, SmoothingSpec};

fn end_error(spec: &SmoothingSpec, h: f64, n: usize, reference: f64) -> f64 {
    let t = spec.params.period();
    (integrate_smoothed(spec, h, t, n).unwrap().last() - reference).abs()
}

#[test]
fn fourth_order_from_coarse_grids_on_the_reference_set() {
    // windows of width 1e-2 and a coefficient drop over ~3e-4 sit far below
    // the step at N = 100; split steps keep the order regardless
    let p = p1();
    let spec = SmoothingSpec::build(&p, 1e-2, 1e-2).unwrap();
    let h = spec.admissibility.h_star;
    let end = |n: usize| integrate_smoothed(&spec, h, p.period(), n).unwrap().last();
    let (fine, finer) = (end(51_200), end(102_400));
    let reference = finer + (finer - fine) / 15.0;
    let errs: Vec<f64> = [100, 200, 400, 800]
        .iter()
        .map(|&n| (end(n) - reference).abs())
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 4.0).abs() <= 0.5, "order {order} from {errs:?}");
    }
}

#[test]
fn coarse_and_fine_grids_agree_across_narrow_windows() {
    let p = p1();
    let narrow = SmoothingSpec::build(&p, 1e-2, 1e-2).unwrap();
    let x = integrate_smoothed(&narrow, 1.0, p.period(), 200).unwrap();
    let y = integrate_smoothed(&narrow, 1.0, p.period(), 3200).unwrap();
    assert!((x.last() - y.last()).abs() < 1e-8);
}

#[test]
fn smooth_forcing_converges_at_fourth_order_from_coarse_grids() {
    // wide windows and a mild coefficient contrast keep the data resolved
    // even at N = 200
    let p = relay_dde::Params::new(2.0, 1.0, 3.0, 1.0, 0.1).unwrap();
    let spec = SmoothingSpec::build(&p, 0.2, 0.2).unwrap();
    assert!(spec.a_tilde.windows.iter().all(|w| w.kappa == 1.0));
    let h = spec.admissibility.h_star;
    let reference = integrate_smoothed(&spec, h, p.period(), 51_200)
        .unwrap()
        .last();
    let e200 = end_error(&spec, h, 200, reference);
    let e400 = end_error(&spec, h, 400, reference);
    let order = (e200 / e400).log2();
    assert!(
        (order - 4.0).abs() <= 0.5,
        "order {order}: {e200:e} {e400:e}"
    );
}

#[test]
fn grid_is_aligned_to_the_switch_times() {
    // p1 = 3.05 and rho = 0.05 both need N divisible by 20
    let p = relay_dde::Params::new(2.0, 0.1, 3.05, 1.0, 0.1).unwrap();
    let spec = SmoothingSpec::build(&p, 1e-3, 0.05).unwrap();
    let n = align_steps(&spec, 150).unwrap();
    assert_eq!(n, 160);
    assert_eq!(
        integrate_smoothed(&spec, 1.0, 1.0, 150)
            .unwrap()
            .steps_per_unit,
        160
    );
    let fine = SmoothingSpec::build(&p, 1e-3, 1e-3).unwrap();
    assert_eq!(align_steps(&fine, 150).unwrap(), 1000);
}
