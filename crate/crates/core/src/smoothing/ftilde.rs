//! Smooth replacement for the relay `-sign` on `[-delta, delta]`:
//! `f~_c(u) = -S(u/delta) + c (1 - (u/delta)^2)^3` with the odd quintic
//! smoothstep `S(s) = (15 s - 10 s^3 + 3 s^5)/8`.

use serde::{Deserialize, Serialize};

use super::jfunc::{j, Integrand};
use crate::error::{Error, Result};
use crate::roots;

/// Largest `|c|` tried for the mixing constant. Beyond it the bump can push
/// `f~` outside `[-1, 1]` near the origin.
pub const MIXING_BRACKET: f64 = 5.0 / 16.0;

pub fn smoothstep(s: f64) -> f64 {
    let s2 = s * s;
    s * (15.0 - 10.0 * s2 + 3.0 * s2 * s2) / 8.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTilde {
    pub delta: f64,
    pub mixing: f64,
}

impl FTilde {
    pub fn new(delta: f64, mixing: f64) -> Self {
        FTilde { delta, mixing }
    }

    pub fn value(&self, u: f64) -> f64 {
        let s = u / self.delta;
        if s >= 1.0 {
            -1.0
        } else if s <= -1.0 {
            1.0
        } else {
            let b = 1.0 - s * s;
            -smoothstep(s) + self.mixing * b * b * b
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        let s = u / self.delta;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let b = 1.0 - s * s;
        (-15.0 / 8.0 * b * b - 6.0 * self.mixing * s * b * b) / self.delta
    }

    /// Coefficients of `f~` in `s`, increasing degree.
    pub fn coefficients(&self) -> [f64; 7] {
        coefficients(self.mixing)
    }
}

fn coefficients(c: f64) -> [f64; 7] {
    [
        c,
        -15.0 / 8.0,
        -3.0 * c,
        10.0 / 8.0,
        3.0 * c,
        -3.0 / 8.0,
        -c,
    ]
}

/// `J(alpha, f~_c)` in closed form.
pub fn j_of(alpha: f64, delta: f64, mu: f64, c: f64) -> Result<f64> {
    j(alpha, delta, mu, &Integrand::Poly(&coefficients(c)))
}

/// Solves `J(alpha, f~_c) = J(alpha, -sign)` for `c`; returns the function and
/// the residual.
pub fn build(delta: f64, alpha: f64, mu: f64) -> Result<(FTilde, f64)> {
    let target = j(alpha, delta, mu, &Integrand::NegSign)?;
    let residual = |c: f64| j_of(alpha, delta, mu, c).map(|v| v - target);
    let lo = residual(-MIXING_BRACKET)?;
    let hi = residual(MIXING_BRACKET)?;
    if lo.signum() == hi.signum() {
        return Err(Error::NoAdmissibleMixing(format!(
            "J residual keeps its sign on [-{MIXING_BRACKET}, {MIXING_BRACKET}] \
             (delta = {delta}, alpha = {alpha}: {lo:e}, {hi:e})"
        )));
    }
    let c = roots::bracketed(
        |c| residual(c).unwrap_or(f64::NAN),
        -MIXING_BRACKET,
        MIXING_BRACKET,
        1e-16,
    )?;
    let f = FTilde::new(delta, c);
    let (min, max) = sample_range(&f, 10_000);
    if min < -1.0 - 1e-15 || max > 1.0 + 1e-15 {
        return Err(Error::NoAdmissibleMixing(format!(
            "f~ leaves [-1, 1] with c = {c}: range [{min}, {max}]"
        )));
    }
    Ok((f, residual(c)?))
}

/// Min and max of `f~` over `n + 1` equispaced points of `[-delta, delta]`.
pub fn sample_range(f: &FTilde, n: usize) -> (f64, f64) {
    (0..=n)
        .map(|i| f.value(f.delta * (-1.0 + 2.0 * i as f64 / n as f64)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}
