//! Convergence studies for the smoothed problem and three-way cross-checks
//! between the closed forms, the exact solver and the integrator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exact::solve_exact;
use crate::integrator::{
    default_steps, estimate_lambda, find_fixed_point_numeric, integrate_smoothed, period_map,
    LAMBDA_EPS_REL,
};
use crate::maps::{self, double_transit, single_transit};
use crate::params::{Params, Regime};
use crate::smoothing::SmoothingSpec;
use crate::tables::antiperiodic_residual;

/// Coefficient window width used by the study unless overridden.
pub const STUDY_RHO: f64 = 1e-2;
/// Offsets of the probe starts around `h*`.
pub const PROBE_OFFSETS: [f64; 3] = [-0.05, 0.0, 0.05];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub rho: Option<f64>,
    pub steps_per_unit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub rho: f64,
    pub steps_per_unit: usize,
    #[serde(rename = "R_delta")]
    pub r_delta: f64,
    pub h_tilde: f64,
    pub h_tilde_predicted: f64,
    pub lambda: f64,
    pub lambda_predicted: f64,
    pub abs_err_m: f64,
    pub abs_err_hstar: f64,
    pub fixed_point_iterations: usize,
}

/// Probed period map against `F~` at one start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeCheck {
    pub delta: f64,
    pub h: f64,
    #[serde(rename = "xT")]
    pub x_t: f64,
    pub predicted: f64,
    pub abs_diff: f64,
    /// `1e-6 + 0.1 |R(delta)|`
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub params: Params,
    pub m: f64,
    pub h_star: f64,
    /// Leading `delta = 0` sentinel row, then one row per requested delta.
    pub rows: Vec<ConvergenceRow>,
    pub probes: Vec<ProbeCheck>,
    /// Least-squares slopes of `log |.|` against `log delta`.
    pub slope_lambda: Option<f64>,
    pub slope_h: Option<f64>,
    pub slope_r: Option<f64>,
    pub monotone_lambda: bool,
    pub monotone_h: bool,
}

impl ConvergenceReport {
    pub fn probes_ok(&self) -> bool {
        self.probes.iter().all(|p| p.ok)
    }

    pub fn passed(&self) -> bool {
        self.probes_ok() && self.monotone_lambda && self.monotone_h
    }
}

fn study_point(
    params: &Params,
    delta: f64,
    opts: &StudyOptions,
) -> Result<(ConvergenceRow, Vec<ProbeCheck>)> {
    let (m, _) = maps::single_coefficients(params);
    let probe_spec = SmoothingSpec::build(params, delta, 1e-6)?;
    let rho = opts
        .rho
        .unwrap_or(STUDY_RHO.min(probe_spec.admissibility.rho_limit));
    let spec = SmoothingSpec::build(params, delta, rho)?;
    let n = opts.steps_per_unit.unwrap_or_else(|| default_steps(&spec));
    let h_star = spec.admissibility.h_star;
    let fp = find_fixed_point_numeric(&spec, n)?;
    let lambda = estimate_lambda(&spec, fp.h_tilde, n, LAMBDA_EPS_REL)?;
    let tolerance = 1e-6 + 0.1 * spec.r_delta.abs();
    let probes = PROBE_OFFSETS
        .par_iter()
        .map(|off| {
            let h = h_star + off;
            let x_t = period_map(&spec, h, n)?.x_t;
            let predicted = spec.predict(h);
            let abs_diff = (x_t - predicted).abs();
            Ok(ProbeCheck {
                delta,
                h,
                x_t,
                predicted,
                abs_diff,
                tolerance,
                ok: abs_diff <= tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let row = ConvergenceRow {
        delta,
        rho,
        steps_per_unit: crate::integrator::align_steps(&spec, n)?,
        r_delta: spec.r_delta,
        h_tilde: fp.h_tilde,
        h_tilde_predicted: spec.predicted_h_tilde(),
        lambda,
        lambda_predicted: spec.predicted_slope(),
        abs_err_m: (lambda - m).abs(),
        abs_err_hstar: (fp.h_tilde - h_star).abs(),
        fixed_point_iterations: fp.iterations,
    };
    Ok((row, probes))
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn strictly_decreasing_as_delta_shrinks(
    rows: &[ConvergenceRow],
    key: impl Fn(&ConvergenceRow) -> f64,
) -> bool {
    let mut sorted: Vec<&ConvergenceRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    sorted.windows(2).all(|w| key(w[1]) < key(w[0]))
}

/// For each delta: builds the spec, finds `h~` numerically, estimates `lambda`
/// and probes the period map at `h* - 0.05, h*, h* + 0.05`. Points run in
/// parallel; rows come back in input order after the sentinel.
pub fn smoothing_convergence_study(
    params: &Params,
    deltas: &[f64],
    opts: StudyOptions,
) -> Result<ConvergenceReport> {
    let fp = maps::fixed_point_single(params)?;
    let (m, _) = maps::single_coefficients(params);
    let results = deltas
        .par_iter()
        .map(|&d| study_point(params, d, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = vec![ConvergenceRow {
        delta: 0.0,
        rho: 0.0,
        steps_per_unit: 0,
        r_delta: 0.0,
        h_tilde: fp.h_star,
        h_tilde_predicted: fp.h_star,
        lambda: m,
        lambda_predicted: m,
        abs_err_m: 0.0,
        abs_err_hstar: 0.0,
        fixed_point_iterations: 0,
    }];
    let mut probes = Vec::new();
    for (row, p) in results {
        rows.push(row);
        probes.extend(p);
    }
    let data = &rows[1..];
    let fit = |key: &dyn Fn(&ConvergenceRow) -> f64| {
        loglog_slope(&data.iter().map(|r| (r.delta, key(r))).collect::<Vec<_>>())
    };
    Ok(ConvergenceReport {
        params: *params,
        m,
        h_star: fp.h_star,
        slope_lambda: fit(&|r| r.abs_err_m),
        slope_h: fit(&|r| r.abs_err_hstar),
        slope_r: fit(&|r| r.r_delta.abs()),
        monotone_lambda: strictly_decreasing_as_delta_shrinks(data, |r| r.abs_err_m),
        monotone_h: strictly_decreasing_as_delta_shrinks(data, |r| r.abs_err_hstar),
        rows,
        probes,
    })
}

/// Smoothed vs exact solution from the same `h` over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalReport {
    pub delta: f64,
    pub rho: f64,
    pub h: f64,
    pub steps_per_unit: usize,
    /// `[t1+1+theta+, t1+1+theta-]`, `[t2+1+vartheta-, t2+1+vartheta+]`,
    /// `[0, rho]`, `[p1, p1+rho]`.
    pub intervals: Vec<(f64, f64)>,
    pub sup_all: f64,
    pub sup_outside: f64,
    /// As `sup_outside` after removing the predicted tail
    /// `e^{-mu (t - (t2 + vartheta+ + 1))} R` past the second window.
    pub sup_outside_corrected: f64,
    /// `sup_all / delta`
    pub empirical_c: f64,
    /// `max(2 a1 (theta- - theta+), 2 a2 (vartheta+ - vartheta-), 2 max(a) rho) / delta`
    pub c_bound: f64,
    /// `max |(x~ - x) - e^{-mu (t - (t2 + vartheta+ + 1))} R|` on `[t2+1+vartheta+, T]`.
    pub tail_residual: f64,
    #[serde(rename = "R_delta")]
    pub r_delta: f64,
}

pub fn exceptional_comparison(
    params: &Params,
    delta: f64,
    rho: f64,
    h: Option<f64>,
    steps: Option<usize>,
) -> Result<ExceptionalReport> {
    let spec = SmoothingSpec::build(params, delta, rho)?;
    let h = h.unwrap_or(spec.admissibility.h_star);
    let n = steps.unwrap_or_else(|| default_steps(&spec));
    let period = params.period();
    let num = integrate_smoothed(&spec, h, period, n)?;
    let exact = solve_exact(params, h, period)?;
    let tr = single_transit(params, h);
    let th = spec.thetas;
    let intervals = vec![
        (tr.t1 + 1.0 + th.theta_plus, tr.t1 + 1.0 + th.theta_minus),
        (
            tr.t2 + 1.0 + th.vartheta_minus,
            tr.t2 + 1.0 + th.vartheta_plus,
        ),
        (0.0, rho),
        (params.p1(), params.p1() + rho),
    ];
    let tail_start = tr.t2 + 1.0 + th.vartheta_plus;
    let mut sup_all: f64 = 0.0;
    let mut sup_outside: f64 = 0.0;
    let mut sup_outside_corrected: f64 = 0.0;
    let mut tail_residual: f64 = 0.0;
    for (t, x, _) in num.nodes() {
        let t = t.min(period);
        let diff = x - exact.eval(t)?;
        let model = if t >= tail_start {
            (-params.mu() * (t - tail_start)).exp() * spec.r_delta
        } else {
            0.0
        };
        sup_all = sup_all.max(diff.abs());
        if !intervals.iter().any(|&(a, b)| t >= a && t <= b) {
            sup_outside = sup_outside.max(diff.abs());
            sup_outside_corrected = sup_outside_corrected.max((diff - model).abs());
        }
        if t >= tail_start {
            tail_residual = tail_residual.max((diff - model).abs());
        }
    }
    let amax = params.a1().max(params.a2());
    let c_bound = (2.0 * params.a1() * (th.theta_minus - th.theta_plus))
        .max(2.0 * params.a2() * (th.vartheta_plus - th.vartheta_minus))
        .max(2.0 * amax * rho)
        / delta;
    Ok(ExceptionalReport {
        delta,
        rho,
        h,
        steps_per_unit: num.steps_per_unit,
        intervals,
        sup_all,
        sup_outside,
        sup_outside_corrected,
        empirical_c: sup_all / delta,
        c_bound,
        tail_residual,
        r_delta: spec.r_delta,
    })
}

pub const TRANSIT_THRESHOLD: f64 = 1e-10;
pub const SMOOTHED_THRESHOLD: f64 = 1e-8;
pub const MAP_THRESHOLD: f64 = 1e-6;
pub const ANTIPERIODIC_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub params: Params,
    pub regime: Regime,
    pub h: f64,
    /// Closed-form transit values vs the exact solver.
    pub transit_residual: f64,
    /// Exact vs smoothed numerical solution off the exceptional intervals,
    /// net of the predicted tail.
    pub smoothed_residual: Option<f64>,
    /// `F~(h)` vs the probed period map.
    pub map_residual: Option<f64>,
    pub antiperiodic_residual: Option<f64>,
    pub exceptional: Option<ExceptionalReport>,
    pub passed: bool,
}

/// Ties the three computation paths together at one start `h`.
pub fn oracle_crosscheck(
    params: &Params,
    h: f64,
    regime: Regime,
    delta: f64,
) -> Result<CrosscheckReport> {
    let period = params.period();
    match regime {
        Regime::SinglePeriod => {
            let tr = single_transit(params, h);
            let ex = solve_exact(params, h, period)?;
            let zeros = ex.zeros();
            let mut res: f64 = 0.0;
            for (want, got) in [(tr.t1, zeros.first()), (tr.t2, zeros.get(1))] {
                res = res.max(got.map_or(f64::INFINITY, |z| (z - want).abs()));
            }
            for (t, want) in [
                (tr.t1 + 1.0, tr.x1),
                (params.p1(), tr.x2),
                (tr.t2 + 1.0, tr.x3),
                (period, tr.x4),
            ] {
                res = res.max((ex.eval(t)? - want).abs());
            }
            let exc = exceptional_comparison(params, delta, delta, Some(h), None)?;
            let spec = SmoothingSpec::build(params, delta, delta)?;
            let probe = period_map(&spec, h, default_steps(&spec))?;
            let map_res = (probe.x_t - spec.predict(h)).abs();
            let passed = res <= TRANSIT_THRESHOLD
                && exc.sup_outside_corrected <= SMOOTHED_THRESHOLD
                && map_res <= MAP_THRESHOLD;
            Ok(CrosscheckReport {
                params: *params,
                regime,
                h,
                transit_residual: res,
                smoothed_residual: Some(exc.sup_outside_corrected),
                map_residual: Some(map_res),
                antiperiodic_residual: None,
                exceptional: Some(exc),
                passed,
            })
        }
        Regime::DoublePeriod => {
            let tr = double_transit(params, h);
            let ex = solve_exact(params, h, 3.0 * period)?;
            let mut res = ex
                .zeros()
                .first()
                .map_or(f64::INFINITY, |z| (z - tr.t1).abs());
            for (t, want) in [(params.p1(), tr.x1), (tr.t1 + 1.0, tr.x2), (period, tr.x3)] {
                res = res.max((ex.eval(t)? - want).abs());
            }
            let anti = antiperiodic_residual(&ex, period).unwrap_or(f64::INFINITY);
            Ok(CrosscheckReport {
                params: *params,
                regime,
                h,
                transit_residual: res,
                smoothed_residual: None,
                map_residual: None,
                antiperiodic_residual: Some(anti),
                exceptional: None,
                passed: res <= TRANSIT_THRESHOLD && anti <= ANTIPERIODIC_THRESHOLD,
            })
        }
    }
}
