//! Closed-form one-dimensional return maps of the relay equation.
//!
//! Single period: a positive start `h` makes one negative semi-cycle inside
//! `[0, p1)` and returns positive at `T`; `x(T) = m h + b`.
//! Double period: the solution crosses zero once before `p1` and is still
//! negative at `T`; `x(T) = k h + d`, and oddness gives the second half.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{shape_conditions_double, shape_conditions_single, Params, ShapeReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    SingleF,
    DoublePhi1,
}

/// `h -> slope * h + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub slope: f64,
    pub intercept: f64,
    pub kind: MapKind,
}

impl AffineMap {
    pub fn single(params: &Params) -> Self {
        let (m, b) = single_coefficients(params);
        AffineMap {
            slope: m,
            intercept: b,
            kind: MapKind::SingleF,
        }
    }

    pub fn double(params: &Params) -> Self {
        let (k, d) = double_coefficients(params);
        AffineMap {
            slope: k,
            intercept: d,
            kind: MapKind::DoublePhi1,
        }
    }

    pub fn apply(&self, h: f64) -> f64 {
        self.slope * h + self.intercept
    }
}

/// First zero `t1` of the solution started from `h > 0` (forcing `-a1`).
fn first_zero(params: &Params, h: f64) -> f64 {
    let (a1, mu) = (params.a1(), params.mu());
    (h * mu / a1).ln_1p() / mu
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleTransit {
    pub t1: f64,
    pub t2: f64,
    /// `x(t1 + 1)`
    pub x1: f64,
    /// `x(p1)`
    pub x2: f64,
    /// `x(t2 + 1)`
    pub x3: f64,
    /// `x(T)`
    pub x4: f64,
}

pub fn single_transit(params: &Params, h: f64) -> SingleTransit {
    let (a1, a2, p1, mu) = (params.a1(), params.a2(), params.p1(), params.mu());
    let t = params.period();
    let t1 = first_zero(params, h);
    let x1 = (a1 / mu) * (-mu).exp_m1();
    let t2 = t1 + 1.0 + (-mu * x1 / a1).ln_1p() / mu;
    let x2 = a1 / mu + (x1 - a1 / mu) * (-mu * (p1 - t1 - 1.0)).exp();
    let x3 = a2 / mu + (x2 - a2 / mu) * (-mu * (t2 + 1.0 - p1)).exp();
    let x4 = -a2 / mu + (x3 + a2 / mu) * (-mu * (t - t2 - 1.0)).exp();
    SingleTransit {
        t1,
        t2,
        x1,
        x2,
        x3,
        x4,
    }
}

/// `(m, b)` of `F(h) = m h + b`.
pub fn single_coefficients(params: &Params) -> (f64, f64) {
    let (a1, a2, p2, mu) = (params.a1(), params.a2(), params.p2(), params.mu());
    let e = (-mu).exp();
    let tail = (2.0 - e) * (-mu * (params.period() - 2.0)).exp();
    let m = (2.0 * a2 / a1 - e) * tail;
    let b = (2.0 * a2 - a1 * e) / mu * tail + (a1 - a2) / mu * (-mu * p2).exp() - a2 / mu;
    (m, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleTransit {
    pub t1: f64,
    /// `x(p1)`
    pub x1: f64,
    /// `x(t1 + 1)`
    pub x2: f64,
    /// `x(T)`
    pub x3: f64,
}

pub fn double_transit(params: &Params, h: f64) -> DoubleTransit {
    let (a1, a2, p1, mu) = (params.a1(), params.a2(), params.p1(), params.mu());
    let t = params.period();
    let t1 = first_zero(params, h);
    let x1 = -a1 / mu + (h + a1 / mu) * (-mu * p1).exp();
    let x2 = -a2 / mu + (x1 + a2 / mu) * (-mu * (t1 + 1.0 - p1)).exp();
    let x3 = a2 / mu + (x2 - a2 / mu) * (-mu * (t - t1 - 1.0)).exp();
    DoubleTransit { t1, x1, x2, x3 }
}

/// `(k, d)` of `Phi1(h) = k h + d`.
pub fn double_coefficients(params: &Params) -> (f64, f64) {
    let (a1, a2, p2, mu) = (params.a1(), params.a2(), params.p2(), params.mu());
    let t = params.period();
    let k = (1.0 - 2.0 * a2 / a1 * mu.exp()) * (-mu * t).exp();
    let d = (a2 - a1) / mu * (-mu * p2).exp()
        + a1 / mu * (-mu * t).exp()
        + a2 / mu * (1.0 - 2.0 * (-mu * (t - 1.0)).exp());
    (k, d)
}

/// Return map on negative starts: `Phi2(h) = -Phi1(-h)`.
pub fn phi2(params: &Params, h: f64) -> f64 {
    -AffineMap::double(params).apply(-h)
}

/// `Phi2(Phi1(h)) = k^2 h + k d - d`.
pub fn composite_double(params: &Params, h: f64) -> f64 {
    let (k, d) = double_coefficients(params);
    k * k * h + k * d - d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

impl Stability {
    pub fn classify(multiplier: f64) -> Self {
        let a = multiplier.abs();
        if a < 1.0 {
            Stability::Stable
        } else if a == 1.0 {
            Stability::Marginal
        } else {
            Stability::Unstable
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub h_star: f64,
    /// `m` for the single map, `k^2` for the composite double map.
    pub multiplier: f64,
    pub stable: bool,
    pub stability: Stability,
    pub shape: ShapeReport,
}

pub fn fixed_point_single(params: &Params) -> Result<FixedPointResult> {
    let (m, b) = single_coefficients(params);
    let mut failed = Vec::new();
    if !(m.abs() < 1.0) {
        failed.push(format!("|m|<1 (m = {m})"));
    }
    if !(b > 0.0) {
        failed.push(format!("b>0 (b = {b})"));
    }
    if !failed.is_empty() {
        return Err(Error::HypothesisFailed(failed));
    }
    let h_star = b / (1.0 - m);
    finish(h_star, m, shape_conditions_single(params, h_star))
}

pub fn fixed_point_double(params: &Params) -> Result<FixedPointResult> {
    let (k, d) = double_coefficients(params);
    let mut failed = Vec::new();
    if !(k.abs() < 1.0) {
        failed.push(format!("|k|<1 (k = {k})"));
    }
    if !(d < 0.0) {
        failed.push(format!("d<0 (d = {d})"));
    }
    if !failed.is_empty() {
        return Err(Error::HypothesisFailed(failed));
    }
    let h_star = -d / (1.0 + k);
    finish(h_star, k * k, shape_conditions_double(params, h_star))
}

fn finish(h_star: f64, multiplier: f64, shape: ShapeReport) -> Result<FixedPointResult> {
    if !shape.satisfied {
        return Err(Error::ShapeFailed(Box::new(shape)));
    }
    let stability = Stability::classify(multiplier);
    Ok(FixedPointResult {
        h_star,
        multiplier,
        stable: stability == Stability::Stable,
        stability,
        shape,
    })
}
