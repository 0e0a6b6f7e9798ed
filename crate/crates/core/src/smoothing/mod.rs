//! Smoothed nonlinearity and coefficient, and the perturbed return map they
//! induce: `F~(h) = F(h) + eta(h, delta) R(delta)`.

pub mod atilde;
pub mod ftilde;
pub mod jfunc;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{self, single_transit};
use crate::params::Params;
use crate::report::fmt_f64;
use crate::roots;

pub use atilde::{ATilde, Transition};
pub use ftilde::FTilde;
pub use jfunc::{j, Integrand};

/// `(theta+, theta-) = (-ln(1 - delta/alpha)/mu, -ln(1 + delta/alpha)/mu)`.
pub fn theta_pm(alpha: f64, delta: f64, mu: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) || !(delta < alpha.abs()) {
        return Err(Error::DeltaTooLarge {
            delta,
            limit: alpha.abs(),
        });
    }
    let r = delta / alpha;
    Ok((-(-r).ln_1p() / mu, -r.ln_1p() / mu))
}

/// Offsets of the exceptional windows from the delayed crossings `t1 + 1` and
/// `t2 + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thetas {
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub vartheta_plus: f64,
    pub vartheta_minus: f64,
}

impl Thetas {
    pub fn new(params: &Params, delta: f64) -> Result<Self> {
        let alpha = params.a1() / params.mu();
        let (theta_plus, theta_minus) = theta_pm(-alpha, delta, params.mu())?;
        let (vartheta_plus, vartheta_minus) = theta_pm(alpha, delta, params.mu())?;
        Ok(Thetas {
            theta_plus,
            theta_minus,
            vartheta_plus,
            vartheta_minus,
        })
    }
}

/// `eta(h, delta) = e^{mu (1 - T)} (2 e^mu - 1) (a1 + mu h)/(a1 - mu delta)`.
pub fn eta(h: f64, delta: f64, params: &Params) -> Result<f64> {
    let (intercept, slope) = eta_affine(delta, params)?;
    Ok(intercept + slope * h)
}

/// `eta` as `intercept + slope h`.
pub fn eta_affine(delta: f64, params: &Params) -> Result<(f64, f64)> {
    let (a1, mu) = (params.a1(), params.mu());
    if !(mu * delta < a1) {
        return Err(Error::DeltaTooLarge {
            delta,
            limit: a1 / mu,
        });
    }
    let g = (mu * (1.0 - params.period())).exp() * (2.0 * mu.exp() - 1.0) / (a1 - mu * delta);
    Ok((a1 * g, mu * g))
}

/// Admissibility data recorded with a spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub h_star: f64,
    pub x1: f64,
    /// Largest admissible `delta` for these parameters.
    pub delta_limit: f64,
    /// Largest admissible `rho`.
    pub rho_limit: f64,
    /// `2 a1 (theta- - theta+)`, the size of the first-crossing defect.
    pub c1_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub params: Params,
    pub delta: f64,
    pub rho: f64,
    pub f_tilde: FTilde,
    pub a_tilde: ATilde,
    /// Mixing constant of `f~`.
    pub mixing: f64,
    /// `J(-a1/mu, f~) - J(-a1/mu, -sign)`.
    pub f_residual: f64,
    #[serde(rename = "R_delta")]
    pub r_delta: f64,
    pub thetas: Thetas,
    pub admissibility: Admissibility,
}

fn delta_limit(params: &Params, h_star: f64, x1: f64) -> f64 {
    let cap = params.a1() / params.mu() * (1.0 - 1e-6);
    let excess = |d: f64| match Thetas::new(params, d) {
        _ if d <= 0.0 => -x1.abs(),
        Ok(th) => d + 2.0 * params.a1() * (th.theta_minus - th.theta_plus) - x1.abs(),
        Err(_) => f64::INFINITY,
    };
    let x1_limit = if excess(cap) < 0.0 {
        cap
    } else {
        roots::bracketed(excess, 0.0, cap, 1e-14).unwrap_or(0.0)
    };
    cap.min(x1_limit).min(h_star / 2.0)
}

impl SmoothingSpec {
    /// Builds `f~` and `a~` around the single-period orbit of `params`.
    pub fn build(params: &Params, delta: f64, rho: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "delta = {delta} must be > 0"
            )));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho = {rho} must be > 0")));
        }
        let fp = maps::fixed_point_single(params)?;
        let tr = single_transit(params, fp.h_star);
        let limit = delta_limit(params, fp.h_star, tr.x1);
        if !(delta < limit) {
            return Err(Error::DeltaTooLarge { delta, limit });
        }
        let rho_limit = 0.9 * tr.t1.min(tr.t2 + 1.0 - params.p1());
        if !(rho <= rho_limit) {
            return Err(Error::WindowTooWide {
                rho,
                limit: rho_limit,
            });
        }
        let thetas = Thetas::new(params, delta)?;
        let alpha = params.a1() / params.mu();
        let (f_tilde, f_residual) = ftilde::build(delta, -alpha, params.mu())?;
        let a_tilde = atilde::build(params, rho)?;
        let r_delta = r_of(&f_tilde, params)?;
        Ok(SmoothingSpec {
            params: *params,
            delta,
            rho,
            f_tilde,
            a_tilde,
            mixing: f_tilde.mixing,
            f_residual,
            r_delta,
            thetas,
            admissibility: Admissibility {
                h_star: fp.h_star,
                x1: tr.x1,
                delta_limit: limit,
                rho_limit,
                c1_delta: 2.0 * params.a1() * (thetas.theta_minus - thetas.theta_plus),
            },
        })
    }

    /// `R(delta) = a2 J(a1/mu, f~ - f)`.
    pub fn r_delta(&self) -> f64 {
        self.r_delta
    }

    /// `F~(h) = m h + b + eta(h, delta) R(delta)`.
    pub fn predict(&self, h: f64) -> f64 {
        let (m, b) = maps::single_coefficients(&self.params);
        let (e0, e1) = eta_affine(self.delta, &self.params).expect("checked at build");
        m * h + b + (e0 + e1 * h) * self.r_delta
    }

    /// Slope of `F~`.
    pub fn predicted_slope(&self) -> f64 {
        let (m, _) = maps::single_coefficients(&self.params);
        let (_, e1) = eta_affine(self.delta, &self.params).expect("checked at build");
        m + e1 * self.r_delta
    }

    /// Fixed point of the affine `F~`.
    pub fn predicted_h_tilde(&self) -> f64 {
        let (m, b) = maps::single_coefficients(&self.params);
        let (e0, e1) = eta_affine(self.delta, &self.params).expect("checked at build");
        (b + e0 * self.r_delta) / (1.0 - m - e1 * self.r_delta)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `u,f_tilde` over `[-2 delta, 2 delta]` with `n + 1` points.
    pub fn write_f_tilde_csv<W: Write>(&self, out: W, n: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "f_tilde"])?;
        let n = n.max(1);
        for i in 0..=n {
            let u = self.delta * (-2.0 + 4.0 * i as f64 / n as f64);
            w.write_record([fmt_f64(u), fmt_f64(self.f_tilde.value(u))])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `t,a_tilde` over `[0, T]` with `n + 1` points.
    pub fn write_a_tilde_csv<W: Write>(&self, out: W, n: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "a_tilde"])?;
        let n = n.max(1);
        let period = self.params.period();
        for i in 0..=n {
            let t = period * i as f64 / n as f64;
            w.write_record([fmt_f64(t), fmt_f64(self.a_tilde.value(t))])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `a2 (J(a1/mu, f~) - J(a1/mu, -sign))`.
pub fn r_of(f: &FTilde, params: &Params) -> Result<f64> {
    let alpha = params.a1() / params.mu();
    let jt = ftilde::j_of(alpha, f.delta, params.mu(), f.mixing)?;
    let js = j(alpha, f.delta, params.mu(), &Integrand::NegSign)?;
    Ok(params.a2() * (jt - js))
}
