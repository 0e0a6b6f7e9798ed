//! Method-of-steps RK4 for `x' = -mu x + a~(t) f~(x(t - 1))` on a uniform grid
//! `1/N` that also contains every breakpoint of `a~`. Delayed half-step values
//! come from cubic Hermite interpolation of stored values and derivatives.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::fold_time;
use crate::report::fmt_f64;
use crate::smoothing::SmoothingSpec;

pub const MAX_STEPS_PER_UNIT: usize = 1_000_000;
pub const MIN_STEPS_PER_UNIT: usize = 100;
/// Substeps per smoothing-window width (or per `delta` of delayed-state travel).
pub const SUBSTEP_RESOLUTION: f64 = 16.0;
pub const MAX_SUBSTEPS: usize = 4096;
const ALIGN_TOL: f64 = 1e-9;

/// Steps per unit used when none is given. Narrow smoothing features are
/// handled by substeps, so this does not depend on `delta` or `rho`.
pub const DEFAULT_STEPS_PER_UNIT: usize = 3200;

pub fn default_steps(_spec: &SmoothingSpec) -> usize {
    DEFAULT_STEPS_PER_UNIT
}

fn on_grid(x: f64, n: usize) -> bool {
    let v = x * n as f64;
    (v - v.round()).abs() <= ALIGN_TOL
}

/// Smallest `N' >= n` with `p1 N'`, `p2 N'` and `rho N'` integral.
pub fn align_steps(spec: &SmoothingSpec, n: usize) -> Result<usize> {
    let p = &spec.params;
    let n = n.max(MIN_STEPS_PER_UNIT);
    (n..=MAX_STEPS_PER_UNIT)
        .find(|&k| on_grid(p.p1(), k) && on_grid(p.p2(), k) && on_grid(spec.rho, k))
        .ok_or_else(|| Error::GridMisaligned {
            max_n: MAX_STEPS_PER_UNIT,
            detail: format!(
                "p1 = {}, p2 = {}, rho = {} from N = {n}",
                p.p1(),
                p.p2(),
                spec.rho
            ),
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledTrajectory {
    /// Grid spacing `1/N`.
    pub step: f64,
    pub steps_per_unit: usize,
    pub h: f64,
    pub xs: Vec<f64>,
    /// `x'` at each node.
    pub dxs: Vec<f64>,
}

impl SampledTrajectory {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.steps_per_unit as f64
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.xs.len() - 1)
    }

    pub fn last(&self) -> f64 {
        *self.xs.last().expect("non-empty")
    }

    /// `x` at the node nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        let i = (t * self.steps_per_unit as f64).round() as usize;
        self.xs[i.min(self.xs.len() - 1)]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.xs
            .iter()
            .zip(&self.dxs)
            .enumerate()
            .map(|(i, (x, d))| (self.time(i), *x, *d))
    }

    /// `t,x` rows, every `stride`-th node plus the last.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x"])?;
        let last = self.xs.len() - 1;
        for i in (0..=last).filter(|i| i % stride == 0 || *i == last) {
            w.write_record([fmt_f64(self.time(i)), fmt_f64(self.xs[i])])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Node storage: either the full trajectory or a ring holding one delay.
struct Store {
    xs: Vec<f64>,
    dxs: Vec<f64>,
    ring: Option<usize>,
}

impl Store {
    fn slot(&self, i: usize) -> usize {
        match self.ring {
            Some(cap) => i % cap,
            None => i,
        }
    }

    fn push(&mut self, i: usize, x: f64, d: f64) {
        match self.ring {
            Some(_) => {
                let s = self.slot(i);
                self.xs[s] = x;
                self.dxs[s] = d;
            }
            None => {
                self.xs.push(x);
                self.dxs.push(d);
            }
        }
    }

    fn x(&self, i: usize) -> f64 {
        self.xs[self.slot(i)]
    }

    fn d(&self, i: usize) -> f64 {
        self.dxs[self.slot(i)]
    }
}

/// Cubic Hermite interpolant of the stored solution at `t_j + theta dt`.
fn hermite(store: &Store, j: usize, theta: f64, dt: f64) -> f64 {
    let (x0, x1) = (store.x(j), store.x(j + 1));
    let (d0, d1) = (dt * store.d(j), dt * store.d(j + 1));
    let t2 = theta * theta;
    let t3 = t2 * theta;
    (2.0 * t3 - 3.0 * t2 + 1.0) * x0
        + (t3 - 2.0 * t2 + theta) * d0
        + (3.0 * t2 - 2.0 * t3) * x1
        + (t3 - t2) * d1
}

/// Substeps for step `i`. Steps meeting a feature of the smoothed data (a
/// coefficient window, or the stretch where the delayed state passes
/// through `[-delta, delta]`) are split finely enough that the coarsest
/// grid resolves it; others are not split.
fn substeps(spec: &SmoothingSpec, store: &Store, i: usize, n: usize, dt: f64) -> usize {
    let mut target = f64::INFINITY;
    let a = &spec.a_tilde;
    let s = fold_time(i as f64 * dt, a.period);
    for w in &a.windows {
        if s < w.start + a.rho - ALIGN_TOL * dt && s + dt > w.start + ALIGN_TOL * dt {
            target = target.min(w.kappa * a.rho / SUBSTEP_RESOLUTION);
        }
    }
    if i >= n {
        let j = i - n;
        let (x0, x1) = (store.x(j), store.x(j + 1));
        let slope = store.d(j).abs().max(store.d(j + 1).abs());
        let delta = spec.delta;
        if x0.min(x1) < delta + dt * slope && x0.max(x1) > -delta - dt * slope && slope > 0.0 {
            target = target.min(delta / (SUBSTEP_RESOLUTION * slope));
        }
    }
    if !target.is_finite() {
        return 1;
    }
    // the split ratio depends on the feature only, never on N, so the
    // substep shrinks with the step and the error keeps scaling like dt^4
    let coarsest = 1.0 / MIN_STEPS_PER_UNIT as f64;
    ((coarsest / target).ceil() as usize).clamp(1, MAX_SUBSTEPS)
}

fn run(
    spec: &SmoothingSpec,
    h: f64,
    horizon: f64,
    steps_per_unit: usize,
    keep: bool,
) -> Result<(Store, usize, f64)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon = {horizon} must be > 0"
        )));
    }
    if !h.is_finite() {
        return Err(Error::InvalidArgument(format!("h = {h} must be finite")));
    }
    let n = align_steps(spec, steps_per_unit)?;
    let dt = 1.0 / n as f64;
    let total = (horizon * n as f64 - ALIGN_TOL).ceil() as usize;
    let mu = spec.params.mu();
    let f = &spec.f_tilde;
    let a = &spec.a_tilde;
    let rhs = |t: f64, x: f64, xd: f64| -mu * x + a.value(t) * f.value(xd);

    let mut store = if keep {
        Store {
            xs: Vec::with_capacity(total + 1),
            dxs: Vec::with_capacity(total + 1),
            ring: None,
        }
    } else {
        Store {
            xs: vec![0.0; n + 2],
            dxs: vec![0.0; n + 2],
            ring: Some(n + 2),
        }
    };

    // delayed value at node index i - n, history h before 0
    let delayed = |store: &Store, i: usize| if i < n { h } else { store.x(i - n) };
    let delayed_mid = |store: &Store, i: usize| {
        if i < n {
            h
        } else {
            let j = i - n;
            0.5 * (store.x(j) + store.x(j + 1)) + dt / 8.0 * (store.d(j) - store.d(j + 1))
        }
    };
    let delayed_at = |store: &Store, i: usize, theta: f64| {
        if i < n {
            h
        } else {
            hermite(store, i - n, theta, dt)
        }
    };

    let mut x = h;
    let mut comp = 0.0;
    store.push(0, x, rhs(0.0, x, h));
    for i in 0..total {
        let t = i as f64 * dt;
        let t1 = (i + 1) as f64 * dt;
        let xd1 = delayed(&store, i + 1);
        let subs = substeps(spec, &store, i, n, dt);
        if subs == 1 {
            let tm = t + 0.5 * dt;
            let xdm = delayed_mid(&store, i);
            let k1 = store.d(i);
            let k2 = rhs(tm, x + 0.5 * dt * k1, xdm);
            let k3 = rhs(tm, x + 0.5 * dt * k2, xdm);
            let k4 = rhs(t1, x + dt * k3, xd1);
            // compensated x += dt (k1 + 2 k2 + 2 k3 + k4)/6
            let incr = dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - comp;
            let next = x + incr;
            comp = (next - x) - incr;
            x = next;
        } else {
            let ds = dt / subs as f64;
            let frac = 1.0 / subs as f64;
            for k in 0..subs {
                let ts = t + k as f64 * ds;
                let th = k as f64 * frac;
                let xdm = delayed_at(&store, i, th + 0.5 * frac);
                let xde = delayed_at(&store, i, th + frac);
                let k1 = if k == 0 {
                    store.d(i)
                } else {
                    rhs(ts, x, delayed_at(&store, i, th))
                };
                let k2 = rhs(ts + 0.5 * ds, x + 0.5 * ds * k1, xdm);
                let k3 = rhs(ts + 0.5 * ds, x + 0.5 * ds * k2, xdm);
                let k4 = rhs(ts + ds, x + ds * k3, xde);
                let incr = ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - comp;
                let next = x + incr;
                comp = (next - x) - incr;
                x = next;
            }
        }
        if !x.is_finite() {
            return Err(Error::NonFiniteState { t: t1 });
        }
        store.push(i + 1, x, rhs(t1, x, xd1));
    }
    Ok((store, n, x))
}

/// Integrates from the constant history `h` up to `horizon` (rounded up to
/// the grid), keeping every node.
pub fn integrate_smoothed(
    spec: &SmoothingSpec,
    h: f64,
    horizon: f64,
    steps_per_unit: usize,
) -> Result<SampledTrajectory> {
    let (store, n, _) = run(spec, h, horizon, steps_per_unit, true)?;
    Ok(SampledTrajectory {
        step: 1.0 / n as f64,
        steps_per_unit: n,
        h,
        xs: store.xs,
        dxs: store.dxs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMapProbe {
    pub h: f64,
    #[serde(rename = "xT")]
    pub x_t: f64,
    pub lambda_estimate: Option<f64>,
}

/// `x(T)` from a fresh integration with history `h`.
pub fn period_map(spec: &SmoothingSpec, h: f64, steps_per_unit: usize) -> Result<PeriodMapProbe> {
    let (_, _, x) = run(spec, h, spec.params.period(), steps_per_unit, false)?;
    Ok(PeriodMapProbe {
        h,
        x_t: x,
        lambda_estimate: None,
    })
}

/// Relative finite-difference step for [`estimate_lambda`].
pub const LAMBDA_EPS_REL: f64 = 1e-3;

/// Central difference of the period map at `h_center` with step
/// `eps_rel * max(1, |h_center|)`; the two probes run in parallel.
pub fn estimate_lambda(
    spec: &SmoothingSpec,
    h_center: f64,
    steps_per_unit: usize,
    eps_rel: f64,
) -> Result<f64> {
    let eps = eps_rel * h_center.abs().max(1.0);
    let probes = [h_center + eps, h_center - eps]
        .par_iter()
        .map(|&h| period_map(spec, h, steps_per_unit).map(|p| p.x_t))
        .collect::<Result<Vec<_>>>()?;
    Ok((probes[0] - probes[1]) / (2.0 * eps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointTrace {
    pub h_tilde: f64,
    pub iterations: usize,
    /// Every iterate, starting point first.
    pub trace: Vec<f64>,
}

/// Fixed point of the numerical period map, starting at the analytic `h*`.
/// Iterates `h <- P(h)` with Aitken extrapolation every third iterate when
/// `|m| < 1`; secant iteration otherwise. Stops at `|dh| <= 1e-10`.
pub fn find_fixed_point_numeric(
    spec: &SmoothingSpec,
    steps_per_unit: usize,
) -> Result<FixedPointTrace> {
    let (m, _) = crate::maps::single_coefficients(&spec.params);
    let start = spec.admissibility.h_star;
    let p = |h: f64| period_map(spec, h, steps_per_unit).map(|r| r.x_t);
    let mut trace = vec![start];
    let tol = 1e-10;
    if m.abs() < 1.0 {
        let mut h0 = start;
        for _ in 0..200 / 3 {
            let h1 = p(h0)?;
            trace.push(h1);
            if (h1 - h0).abs() <= tol {
                return Ok(done(h1, trace));
            }
            let h2 = p(h1)?;
            trace.push(h2);
            if (h2 - h1).abs() <= tol {
                return Ok(done(h2, trace));
            }
            let denom = h2 - 2.0 * h1 + h0;
            let next = if denom != 0.0 {
                h0 - (h1 - h0) * (h1 - h0) / denom
            } else {
                h2
            };
            trace.push(next);
            if (next - h2).abs() <= tol {
                // confirm with one plain step
                let check = p(next)?;
                trace.push(check);
                if (check - next).abs() <= tol {
                    return Ok(done(check, trace));
                }
                h0 = check;
                continue;
            }
            h0 = next;
        }
    } else {
        let mut a = start;
        let mut ga = p(a)? - a;
        let mut b = start + 1e-3 * start.abs().max(1.0);
        trace.push(b);
        for _ in 0..200 {
            let gb = p(b)? - b;
            if gb == ga {
                break;
            }
            let c = b - gb * (b - a) / (gb - ga);
            trace.push(c);
            if (c - b).abs() <= tol {
                return Ok(done(c, trace));
            }
            a = b;
            ga = gb;
            b = c;
        }
    }
    Err(Error::NoConvergence { trace })
}

fn done(h: f64, trace: Vec<f64>) -> FixedPointTrace {
    FixedPointTrace {
        h_tilde: h,
        iterations: trace.len() - 1,
        trace,
    }
}
