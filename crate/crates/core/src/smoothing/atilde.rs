//! Smooth replacement for the step coefficient. Each switch is replaced on a
//! window of width `rho` starting at the switch by
//! `a_start + (a_end - a_start) S01(min(tau/kappa, 1)) + c 64 (tau (1 - tau))^3`,
//! `tau` in `[0, 1]`, where `c` makes the `e^{-mu (rho - s)}`-weighted integral
//! over the window equal to that of the constant `a_end`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{fold_time, Params};
use crate::quad::GaussRule;
use crate::roots;

/// `6 t^5 - 15 t^4 + 10 t^3`
pub fn smoothstep01(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

fn bump(tau: f64) -> f64 {
    let b = tau * (1.0 - tau);
    64.0 * b * b * b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub start: f64,
    pub a_start: f64,
    pub a_end: f64,
    /// Fraction of the window over which the smoothstep runs.
    pub kappa: f64,
    pub mixing: f64,
    /// Weighted-integral mismatch at the solved `mixing`.
    pub residual: f64,
}

impl Transition {
    fn value_at_tau(&self, tau: f64) -> f64 {
        self.a_start
            + (self.a_end - self.a_start) * smoothstep01(tau / self.kappa)
            + self.mixing * bump(tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ATilde {
    pub a1: f64,
    pub a2: f64,
    pub p1: f64,
    pub period: f64,
    pub rho: f64,
    /// `a2 -> a1` on `[0, rho]` and `a1 -> a2` on `[p1, p1 + rho]`.
    pub windows: [Transition; 2],
}

impl ATilde {
    pub fn value(&self, t: f64) -> f64 {
        let s = fold_time(t, self.period);
        if s < self.rho {
            self.windows[0].value_at_tau(s / self.rho)
        } else if s < self.p1 {
            self.a1
        } else if s < self.p1 + self.rho {
            self.windows[1].value_at_tau((s - self.p1) / self.rho)
        } else {
            self.a2
        }
    }

    pub fn bound(&self) -> f64 {
        2.0 * self.a1.max(self.a2)
    }
}

/// `rho * int_0^1 (a~(tau) - a_end) e^{-mu rho (1 - tau)} dtau` split at `kappa`.
fn weighted_mismatch(tr: &Transition, rho: f64, mu: f64) -> f64 {
    let rule = GaussRule::new(20);
    let w = |tau: f64| (tr.value_at_tau(tau) - tr.a_end) * (-mu * rho * (1.0 - tau)).exp();
    let mut total = rule.integrate_composite(w, 0.0, tr.kappa, 4);
    if tr.kappa < 1.0 {
        total += rule.integrate_composite(w, tr.kappa, 1.0, 8);
    }
    rho * total
}

fn solve_window(
    start: f64,
    a_start: f64,
    a_end: f64,
    rho: f64,
    mu: f64,
    bound: f64,
) -> Result<Transition> {
    let mut kappa = 1.0;
    for _ in 0..40 {
        let mut tr = Transition {
            start,
            a_start,
            a_end,
            kappa,
            mixing: 0.0,
            residual: 0.0,
        };
        let reach = 4.0 * (a_end - a_start).abs() + 1.0;
        let c = roots::bracketed(
            |c| {
                let t = Transition { mixing: c, ..tr };
                weighted_mismatch(&t, rho, mu)
            },
            -reach,
            reach,
            1e-15,
        )?;
        tr.mixing = c;
        tr.residual = weighted_mismatch(&tr, rho, mu);
        let (lo, hi) = sample_range(&tr, 10_000);
        if lo > 0.0 && hi <= bound {
            return Ok(tr);
        }
        kappa *= 0.5;
    }
    Err(Error::NoAdmissibleMixing(format!(
        "coefficient transition {a_start} -> {a_end} on a window of width {rho} \
         cannot stay within (0, {bound}]"
    )))
}

/// Min and max over `n + 1` equispaced points of the window.
pub fn sample_range(tr: &Transition, n: usize) -> (f64, f64) {
    (0..=n)
        .map(|i| tr.value_at_tau(i as f64 / n as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

pub fn build(params: &Params, rho: f64) -> Result<ATilde> {
    let (a1, a2, p1, mu) = (params.a1(), params.a2(), params.p1(), params.mu());
    let bound = 2.0 * a1.max(a2);
    let w1 = solve_window(0.0, a2, a1, rho, mu, bound)?;
    let w2 = solve_window(p1, a1, a2, rho, mu, bound)?;
    Ok(ATilde {
        a1,
        a2,
        p1,
        period: params.period(),
        rho,
        windows: [w1, w2],
    })
}
