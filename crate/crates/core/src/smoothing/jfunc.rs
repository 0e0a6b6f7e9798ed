//! The weighted functional `J(alpha, g) = (alpha - delta)/mu * int g(u)/(alpha - u)^2 du`
//! over `[-delta, delta]`.
//!
//! With `u = delta s` and `eps = delta/alpha` it becomes
//! `(alpha - delta) delta / (mu alpha^2) * int_{-1}^{1} g(delta s)/(1 - eps s)^2 ds`,
//! and polynomial integrands reduce to the moments `I_j(eps) = int_0^1 s^j/(1 - eps s)^2`.

use crate::error::{Error, Result};
use crate::quad;

/// Integrand for [`j`]. Polynomials are in the scaled variable `s = u/delta`,
/// coefficients in increasing degree.
pub enum Integrand<'a> {
    Constant(f64),
    /// `-sign(u)`
    NegSign,
    Poly(&'a [f64]),
    /// Separate polynomials on `[-1, 0)` and `[0, 1]`.
    Piecewise {
        left: &'a [f64],
        right: &'a [f64],
    },
    /// Arbitrary `g(u)` in unscaled `u`; evaluated by adaptive quadrature.
    Function(&'a dyn Fn(f64) -> f64),
}

fn check(alpha: f64, delta: f64) -> Result<()> {
    if !(delta > 0.0) || !(alpha.abs() > delta) {
        return Err(Error::DeltaTooLarge {
            delta,
            limit: alpha.abs(),
        });
    }
    Ok(())
}

pub fn j(alpha: f64, delta: f64, mu: f64, g: &Integrand<'_>) -> Result<f64> {
    check(alpha, delta)?;
    let eps = delta / alpha;
    let pref = (alpha - delta) * delta / (mu * alpha * alpha);
    let value = match g {
        Integrand::Constant(c) => 2.0 * c * delta / (mu * (alpha + delta)),
        Integrand::NegSign => -2.0 * delta * delta / (mu * alpha * (alpha + delta)),
        Integrand::Poly(p) => pref * (half_poly(p, eps) + mirrored_half_poly(p, eps)),
        Integrand::Piecewise { left, right } => {
            pref * (half_poly(right, eps) + mirrored_half_poly(left, eps))
        }
        Integrand::Function(f) => {
            let w = |u: f64| f(u) / ((alpha - u) * (alpha - u));
            let (a, _) = quad::adaptive(w, -delta, 0.0, 1e-15, 1e-14);
            let (b, _) = quad::adaptive(w, 0.0, delta, 1e-15, 1e-14);
            (alpha - delta) / mu * (a + b)
        }
    };
    Ok(value)
}

/// `int_0^1 p(s)/(1 - eps s)^2 ds`
fn half_poly(p: &[f64], eps: f64) -> f64 {
    p.iter()
        .enumerate()
        .map(|(k, c)| if *c == 0.0 { 0.0 } else { c * moment(k, eps) })
        .sum()
}

/// `int_{-1}^0 p(s)/(1 - eps s)^2 ds = sum_k c_k (-1)^k I_k(-eps)`
fn mirrored_half_poly(p: &[f64], eps: f64) -> f64 {
    p.iter()
        .enumerate()
        .map(|(k, c)| {
            if *c == 0.0 {
                0.0
            } else {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * c * moment(k, -eps)
            }
        })
        .sum()
}

/// `I_j(eps) = sum_n (n + 1) eps^n / (j + n + 1)` for `|eps| <= 1/2`,
/// quadrature beyond.
pub fn moment(j: usize, eps: f64) -> f64 {
    if eps.abs() > 0.5 {
        let (v, _) = quad::adaptive(
            |s: f64| s.powi(j as i32) / ((1.0 - eps * s) * (1.0 - eps * s)),
            0.0,
            1.0,
            1e-16,
            1e-15,
        );
        return v;
    }
    let mut sum = 0.0;
    let mut pow = 1.0;
    for n in 0..400 {
        let term = (n as f64 + 1.0) * pow / (j as f64 + n as f64 + 1.0);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || pow == 0.0 {
            break;
        }
        pow *= eps;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let v = j(20.0, 0.1, 0.1, &Integrand::NegSign).unwrap();
        let expect = -199.0 * (1.0 / 19.9 + 1.0 / 20.1 - 0.1);
        assert!((v - expect).abs() < 1e-10 * v.abs());
        assert!((v + 4.975e-4).abs() < 1e-6);
        assert_eq!(j(20.0, 0.1, 0.1, &Integrand::Constant(0.0)).unwrap(), 0.0);
        let c = j(-3.0, 0.2, 0.5, &Integrand::Constant(1.5)).unwrap();
        assert!((c - 2.0 * 1.5 * 0.2 / (0.5 * (-3.0 + 0.2))).abs() < 1e-15);
    }

    #[test]
    fn series_matches_quadrature() {
        let p = [0.3, -1.875, -0.9, 1.25, 0.9, -0.375, -0.3];
        for (alpha, delta) in [(20.0, 0.1), (-20.0, 0.01), (1.5, 1.0), (-2.0, 1.2)] {
            let poly = |u: f64| {
                let s = u / delta;
                p.iter().rev().fold(0.0, |acc, c| acc * s + c)
            };
            let a = j(alpha, delta, 0.7, &Integrand::Poly(&p)).unwrap();
            let b = j(alpha, delta, 0.7, &Integrand::Function(&poly)).unwrap();
            assert!(
                (a - b).abs() <= 1e-13 * a.abs().max(1e-12),
                "{alpha} {a} {b}"
            );
        }
        let sign = j(
            -5.0,
            0.3,
            0.2,
            &Integrand::Piecewise {
                left: &[1.0],
                right: &[-1.0],
            },
        )
        .unwrap();
        let closed = j(-5.0, 0.3, 0.2, &Integrand::NegSign).unwrap();
        assert!((sign - closed).abs() < 1e-15);
    }

    #[test]
    fn rejects_wide_window() {
        assert!(matches!(
            j(0.1, 0.2, 1.0, &Integrand::NegSign),
            Err(Error::DeltaTooLarge { .. })
        ));
    }
}
