//! Event-driven exact integration of the relay equation with the step
//! coefficient. Between events the right-hand side is a constant `A`, so the
//! solution is `A/mu + (x0 - A/mu) e^{-mu (t - t0)}`; zeros are located by a
//! logarithm and every forcing change is scheduled one delay later.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{coefficient_at, relay, shape_conditions_single, Params};

/// Events closer than this are treated as simultaneous.
pub const MERGE_EPS: f64 = 1e-13;

/// `x(t) = alpha + beta e^{-mu (t - t_start)}` on `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub x_start: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Active `a(t)`.
    pub coefficient: f64,
    /// Active `f0(x(t-1))`, one of -1, 0, +1.
    pub feedback: f64,
}

impl ExpSegment {
    /// Evaluated as `x_start e^{-mu s} - alpha expm1(-mu s)`, exact at `s = 0`.
    pub fn value(&self, t: f64, mu: f64) -> f64 {
        let s = -mu * (t - self.t_start);
        self.x_start * s.exp() - self.alpha * s.exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    ZeroCrossing,
    CoefficientSwitch,
    DelayedSignSwitch,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::ZeroCrossing => "zero",
            EventKind::CoefficientSwitch => "coefficient_switch",
            EventKind::DelayedSignSwitch => "delayed_sign_switch",
        }
    }
}

/// One event instant. Several kinds share an instant when they coincide
/// within [`MERGE_EPS`]; `merged` flags that the tie rule was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kinds: Vec<EventKind>,
    pub merged: bool,
}

impl Event {
    pub fn has(&self, kind: EventKind) -> bool {
        self.kinds.contains(&kind)
    }
}

/// Sign of the initial history on `[-1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistorySign {
    Positive,
    Negative,
    Zero,
}

impl HistorySign {
    pub fn of(h: f64) -> Self {
        if h > 0.0 {
            HistorySign::Positive
        } else if h < 0.0 {
            HistorySign::Negative
        } else {
            HistorySign::Zero
        }
    }

    fn feedback(self) -> f64 {
        match self {
            HistorySign::Positive => -1.0,
            HistorySign::Negative => 1.0,
            HistorySign::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub h: f64,
    pub mu: f64,
    pub history: HistorySign,
    pub segments: Vec<ExpSegment>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    /// Evaluates the segment containing `t` (`[t_start, t_end)`, last closed).
    pub fn eval(&self, t: f64) -> Result<f64> {
        let end = self.horizon();
        if !(0.0..=end).contains(&t) {
            return Err(Error::OutOfRange { t, start: 0.0, end });
        }
        let idx = self.segment_index(t);
        Ok(self.segments[idx].value(t, self.mu))
    }

    pub fn segment_index(&self, t: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.t_end <= t);
        idx.min(self.segments.len() - 1)
    }

    pub fn end_value(&self) -> f64 {
        let last = self.segments.last().expect("non-empty trajectory");
        last.value(last.t_end, self.mu)
    }

    pub fn zeros(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.has(EventKind::ZeroCrossing))
            .map(|e| e.t)
            .collect()
    }

    /// Largest jump of `x` across segment joins.
    pub fn max_join_mismatch(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| (w[0].value(w[0].t_end, self.mu) - w[1].value(w[1].t_start, self.mu)).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `t,x,segment_index,event` rows: a uniform sample with spacing
    /// `dt` merged with every event instant.
    pub fn write_csv<W: Write>(&self, out: W, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample spacing {dt} must be > 0"
            )));
        }
        let end = self.horizon();
        let mut rows: Vec<(f64, String)> = Vec::new();
        let n = (end / dt).floor() as usize;
        for i in 0..=n {
            let t = i as f64 * dt;
            if t <= end {
                rows.push((t, String::new()));
            }
        }
        if rows.last().is_some_and(|r| r.0 < end) {
            rows.push((end, String::new()));
        }
        for e in &self.events {
            let label = e
                .kinds
                .iter()
                .map(|k| k.label())
                .collect::<Vec<_>>()
                .join("+");
            rows.push((e.t, label));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        // a grid sample landing on an event is covered by the event row
        rows.dedup_by(|later, earlier| later.0 == earlier.0 && later.1.is_empty());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "segment_index", "event"])?;
        for (t, label) in rows {
            let x = self.eval(t)?;
            w.write_record([
                crate::report::fmt_f64(t),
                crate::report::fmt_f64(x),
                self.segment_index(t).to_string(),
                label,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves from the constant-sign history with `x(0) = h`; the history sign
/// follows the sign of `h`.
pub fn solve_exact(params: &Params, h: f64, t_end: f64) -> Result<Trajectory> {
    solve_exact_with_history(params, h, HistorySign::of(h), t_end)
}

pub fn solve_exact_with_history(
    params: &Params,
    h: f64,
    history: HistorySign,
    t_end: f64,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} must be finite and > 0"
        )));
    }
    if !h.is_finite() {
        return Err(Error::InvalidArgument(format!("h = {h} must be finite")));
    }
    let mu = params.mu();
    let period = params.period();

    let mut segments = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    // (time, feedback after the switch)
    let mut pending: VecDeque<(f64, f64)> = VecDeque::new();
    let mut feedback = history.feedback();
    let mut t = 0.0;
    let mut x = h;

    while t < t_end {
        let coefficient = coefficient_at(params, t);
        if feedback == 0.0 && x == 0.0 {
            return Err(Error::DegenerateSegment { t });
        }
        let alpha = coefficient * feedback / mu;
        let beta = x - alpha;

        let next_switch = next_coefficient_switch(t, params.p1(), period);
        let next_delayed = pending.front().map_or(f64::INFINITY, |p| p.0);
        let scheduled = next_switch.min(next_delayed).min(t_end);
        let zero = if x * alpha < 0.0 {
            Some(t + (-x / alpha).ln_1p() / mu)
        } else {
            None
        };
        let end = match zero {
            Some(tz) if tz <= scheduled + MERGE_EPS => tz.min(scheduled),
            _ => scheduled,
        };
        let hits_zero = zero.is_some_and(|tz| tz <= end + MERGE_EPS);

        segments.push(ExpSegment {
            t_start: t,
            t_end: end,
            x_start: x,
            alpha,
            beta,
            coefficient,
            feedback,
        });

        let mut kinds = Vec::new();
        let mut times = Vec::new();
        if hits_zero {
            let tz = zero.unwrap_or(end);
            kinds.push(EventKind::ZeroCrossing);
            times.push(tz);
            // after the zero the solution carries the sign of alpha
            pending.push_back((end + 1.0, relay(alpha)));
        }
        while let Some(&(ts, new_feedback)) = pending.front() {
            if ts > end + MERGE_EPS {
                break;
            }
            pending.pop_front();
            feedback = new_feedback;
            kinds.push(EventKind::DelayedSignSwitch);
            times.push(ts);
        }
        if next_switch <= end + MERGE_EPS {
            kinds.push(EventKind::CoefficientSwitch);
            times.push(next_switch);
        }
        if !kinds.is_empty() {
            let merged = times.iter().any(|&s| s != end) || kinds.len() > 1;
            events.push(Event {
                t: end,
                kinds,
                merged,
            });
        }

        x = if hits_zero {
            0.0
        } else {
            segments.last().expect("just pushed").value(end, mu)
        };
        // when a scheduled event lands within MERGE_EPS before t_end, stop there
        if t_end - end <= MERGE_EPS {
            break;
        }
        t = end;
    }

    Ok(Trajectory {
        h,
        mu,
        history,
        segments,
        events,
    })
}

/// Smallest `kT` or `kT + p1` strictly after `t`.
fn next_coefficient_switch(t: f64, p1: f64, period: f64) -> f64 {
    let k = (t / period).floor();
    let base = k * period;
    [base + p1, base + period, base + period + p1]
        .into_iter()
        .find(|&s| s > t + MERGE_EPS)
        .unwrap_or(base + 2.0 * period)
}

/// `x(T), x(2T), ..., x(nT)` by restarting the exact solver every period from
/// the positive endpoint value; fails as soon as an iterate leaves the
/// single-period shape.
pub fn period_iterate(params: &Params, h: f64, n: usize) -> Result<Vec<f64>> {
    let period = params.period();
    let mut out = Vec::with_capacity(n);
    let mut current = h;
    for index in 0..n {
        let shape = shape_conditions_single(params, current);
        if !shape.satisfied {
            return Err(Error::ShapeViolated {
                index,
                h: current,
                failed: shape.failed_names().join(", "),
            });
        }
        current = solve_exact(params, current, period)?.end_value();
        out.push(current);
    }
    Ok(out)
}
