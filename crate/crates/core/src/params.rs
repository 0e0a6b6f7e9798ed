//! Equation constants, the step coefficient, the relay nonlinearity and the
//! shape predicates that decide whether the closed-form return maps apply.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParamViolation, Result};
use crate::maps;

/// The five constants of `x'(t) = -mu x(t) + a(t) f(x(t-1))` with a two-level
/// step coefficient. The coefficient period `T = p1 + p2` is always recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    a1: f64,
    a2: f64,
    p1: f64,
    p2: f64,
    mu: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    a1: f64,
    a2: f64,
    p1: f64,
    p2: f64,
    mu: f64,
    #[serde(rename = "T", default, skip_deserializing)]
    period: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        Params::new(r.a1, r.a2, r.p1, r.p2, r.mu)
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams {
            a1: p.a1,
            a2: p.a2,
            p1: p.p1,
            p2: p.p2,
            mu: p.mu,
            period: p.period(),
        }
    }
}

impl Params {
    /// Validates all positivity constraints, reporting every violation at once.
    pub fn new(a1: f64, a2: f64, p1: f64, p2: f64, mu: f64) -> Result<Self> {
        let mut violations = Vec::new();
        for (name, value) in [("a1", a1), ("a2", a2), ("p1", p1), ("p2", p2)] {
            if !(value > 0.0 && value.is_finite()) {
                violations.push(ParamViolation::NonPositiveParameter { name, value });
            }
        }
        if mu == 0.0 {
            violations.push(ParamViolation::ZeroDecayRate);
        } else if !(mu > 0.0 && mu.is_finite()) {
            violations.push(ParamViolation::NonPositiveParameter {
                name: "mu",
                value: mu,
            });
        }
        if violations.is_empty() {
            Ok(Params { a1, a2, p1, p2, mu })
        } else {
            Err(Error::InvalidParams(violations))
        }
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Coefficient period `p1 + p2`.
    pub fn period(&self) -> f64 {
        self.p1 + self.p2
    }

    /// Returns a copy with one field replaced, re-validated.
    pub fn with(&self, name: &str, value: f64) -> Result<Self> {
        let mut p = *self;
        match name {
            "a1" => p.a1 = value,
            "a2" => p.a2 = value,
            "p1" => p.p1 = value,
            "p2" => p.p2 = value,
            "mu" => p.mu = value,
            other => {
                return Err(Error::Config {
                    line: 0,
                    message: format!("unknown parameter '{other}'"),
                })
            }
        }
        Params::new(p.a1, p.a2, p.p1, p.p2, p.mu)
    }

    pub fn coefficient(&self) -> StepCoefficient {
        StepCoefficient { params: *self }
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "a1={} a2={} p1={} p2={} mu={}",
            self.a1, self.a2, self.p1, self.p2, self.mu
        )
    }
}

/// Parses the plain-text `key = value` format (`#` starts a comment).
impl FromStr for Params {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut slots: [Option<f64>; 5] = [None; 5];
        const KEYS: [&str; 5] = ["a1", "a2", "p1", "p2", "mu"];
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let config_err = |message: String| Error::Config {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| config_err(format!("unknown key '{key}'")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| config_err(format!("bad value for {key}: {e}")))?;
            if slots[slot].replace(value).is_some() {
                return Err(config_err(format!("duplicate key '{key}'")));
            }
        }
        let mut vals = [0.0; 5];
        for (i, slot) in slots.iter().enumerate() {
            vals[i] = slot.ok_or_else(|| Error::Config {
                line: 0,
                message: format!("missing key '{}'", KEYS[i]),
            })?;
        }
        Params::new(vals[0], vals[1], vals[2], vals[3], vals[4])
    }
}

/// Reduces `t` into `[0, period)`.
pub fn fold_time(t: f64, period: f64) -> f64 {
    let shifted = if t < 0.0 {
        t + (-t / period).ceil() * period
    } else {
        t
    };
    let r = shifted % period;
    if r >= period || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// The T-periodic two-level step coefficient, right-continuous at switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoefficient {
    params: Params,
}

impl StepCoefficient {
    pub fn value(&self, t: f64) -> f64 {
        coefficient_at(&self.params, t)
    }
}

pub fn coefficient_at(params: &Params, t: f64) -> f64 {
    if fold_time(t, params.period()) < params.p1 {
        params.a1
    } else {
        params.a2
    }
}

/// `f0(x) = -sign(x)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RelayNonlinearity;

impl RelayNonlinearity {
    pub fn value(&self, x: f64) -> f64 {
        relay(x)
    }
}

pub fn relay(x: f64) -> f64 {
    if x > 0.0 {
        -1.0
    } else if x < 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SinglePeriod,
    DoublePeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessEq,
}

impl Relation {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Relation::Less => lhs < rhs,
            Relation::LessEq => lhs <= rhs,
        }
    }
}

/// One inequality `lhs (<|<=) rhs` evaluated numerically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCondition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub kind: Regime,
    pub h: f64,
    pub satisfied: bool,
    pub details: Vec<ShapeCondition>,
}

impl ShapeReport {
    fn from_rows(kind: Regime, h: f64, rows: Vec<(&str, f64, Relation, f64)>) -> Self {
        let details: Vec<ShapeCondition> = rows
            .into_iter()
            .map(|(name, lhs, relation, rhs)| ShapeCondition {
                name: name.to_string(),
                lhs,
                rhs,
                relation,
                holds: relation.holds(lhs, rhs),
            })
            .collect();
        let satisfied = details.iter().all(|c| c.holds);
        ShapeReport {
            kind,
            h,
            satisfied,
            details,
        }
    }

    pub fn failed_names(&self) -> Vec<String> {
        self.details
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.clone())
            .collect()
    }
}

/// Shape of the single-period orbit: both zeros inside `[0, p1)`, slowly
/// oscillating, second delayed switch inside `(p1, T)` and `x(T) > 0`.
pub fn shape_conditions_single(params: &Params, h: f64) -> ShapeReport {
    let tr = maps::single_transit(params, h);
    let t = params.period();
    ShapeReport::from_rows(
        Regime::SinglePeriod,
        h,
        vec![
            ("0<t1", 0.0, Relation::Less, tr.t1),
            ("t1+1<t2", tr.t1 + 1.0, Relation::Less, tr.t2),
            ("t2<p1", tr.t2, Relation::Less, params.p1),
            ("p1-t2<1", params.p1 - tr.t2, Relation::Less, 1.0),
            ("t2+1<T", tr.t2 + 1.0, Relation::Less, t),
            ("x4>0", 0.0, Relation::Less, tr.x4),
        ],
    )
}

/// Shape of the half-orbit of the double-period solution: one zero before
/// `p1`, negative from there through `T`.
pub fn shape_conditions_double(params: &Params, h: f64) -> ShapeReport {
    let tr = maps::double_transit(params, h);
    let t = params.period();
    ShapeReport::from_rows(
        Regime::DoublePeriod,
        h,
        vec![
            ("t1<p1", tr.t1, Relation::Less, params.p1),
            ("p1<t1+1", params.p1, Relation::Less, tr.t1 + 1.0),
            ("t1+1<T", tr.t1 + 1.0, Relation::Less, t),
            ("T-p1>=1", 1.0, Relation::LessEq, params.p2),
            ("x2<0", tr.x2, Relation::Less, 0.0),
            ("x3<0", tr.x3, Relation::Less, 0.0),
        ],
    )
}

pub fn shape_conditions(params: &Params, h: f64, regime: Regime) -> ShapeReport {
    match regime {
        Regime::SinglePeriod => shape_conditions_single(params, h),
        Regime::DoublePeriod => shape_conditions_double(params, h),
    }
}
