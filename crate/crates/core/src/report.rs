//! Analysis reports and CSV writers. Reports print floats in shortest
//! round-trip form; golden files use a fixed 17 significant digits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::ConvergenceReport;
use crate::maps::{self, Stability};
use crate::params::{shape_conditions, Params, Regime, ShapeReport};
use crate::tables::TableRow;

/// Shortest representation that round-trips; scientific notation for very
/// small or large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// 17 significant digits, used for golden files.
pub fn fmt_golden(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FloatFormat {
    #[default]
    Shortest,
    Fixed17,
}

impl FloatFormat {
    pub fn fmt(self, x: f64) -> String {
        match self {
            FloatFormat::Shortest => fmt_f64(x),
            FloatFormat::Fixed17 => fmt_golden(x),
        }
    }

    fn opt(self, x: Option<f64>) -> String {
        x.map(|v| self.fmt(v)).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub value: f64,
    pub holds: bool,
}

/// One regime of an analysis: map coefficients, hypotheses and the shape of
/// the orbit through the fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeAnalysis {
    pub regime: Regime,
    pub slope: f64,
    pub intercept: f64,
    pub h_star: f64,
    /// `m` or `k^2`
    pub multiplier: f64,
    pub stability: Stability,
    pub hypotheses: Vec<HypothesisCheck>,
    pub hypotheses_ok: bool,
    pub shape: ShapeReport,
}

impl RegimeAnalysis {
    pub fn ok(&self) -> bool {
        self.hypotheses_ok && self.shape.satisfied
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub params: Params,
    pub single: RegimeAnalysis,
    pub double: RegimeAnalysis,
}

impl AnalysisReport {
    pub fn regime(&self, regime: Regime) -> &RegimeAnalysis {
        match regime {
            Regime::SinglePeriod => &self.single,
            Regime::DoublePeriod => &self.double,
        }
    }
}

pub fn analyze(params: &Params) -> AnalysisReport {
    let (m, b) = maps::single_coefficients(params);
    let (k, d) = maps::double_coefficients(params);
    let single_h = b / (1.0 - m);
    let double_h = -d / (1.0 + k);
    let single_hyp = vec![
        HypothesisCheck {
            name: "|m|<1".into(),
            value: m.abs(),
            holds: m.abs() < 1.0,
        },
        HypothesisCheck {
            name: "b>0".into(),
            value: b,
            holds: b > 0.0,
        },
    ];
    let double_hyp = vec![
        HypothesisCheck {
            name: "|k|<1".into(),
            value: k.abs(),
            holds: k.abs() < 1.0,
        },
        HypothesisCheck {
            name: "d<0".into(),
            value: d,
            holds: d < 0.0,
        },
    ];
    AnalysisReport {
        params: *params,
        single: RegimeAnalysis {
            regime: Regime::SinglePeriod,
            slope: m,
            intercept: b,
            h_star: single_h,
            multiplier: m,
            stability: Stability::classify(m),
            hypotheses_ok: single_hyp.iter().all(|h| h.holds),
            hypotheses: single_hyp,
            shape: shape_conditions(params, single_h, Regime::SinglePeriod),
        },
        double: RegimeAnalysis {
            regime: Regime::DoublePeriod,
            slope: k,
            intercept: d,
            h_star: double_h,
            multiplier: k * k,
            stability: Stability::classify(k * k),
            hypotheses_ok: double_hyp.iter().all(|h| h.holds),
            hypotheses: double_hyp,
            shape: shape_conditions(params, double_h, Regime::DoublePeriod),
        },
    }
}

pub const TABLE_HEADER: [&str; 23] = [
    "row",
    "a1",
    "a2",
    "p1",
    "p2",
    "mu",
    "printed_T",
    "reported_slope",
    "reported_intercept",
    "computed_slope",
    "computed_intercept",
    "dev_slope",
    "dev_intercept",
    "class",
    "match",
    "h_star",
    "shape_ok",
    "failed_shape",
    "return_residual",
    "antiperiodic_residual",
    "observed_rate",
    "alternative_mu",
    "note",
];

pub fn write_table_csv<W: Write>(out: W, rows: &[TableRow], ff: FloatFormat) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        let p = &r.params;
        w.write_record([
            r.row.to_string(),
            ff.fmt(p.a1()),
            ff.fmt(p.a2()),
            ff.fmt(p.p1()),
            ff.fmt(p.p2()),
            ff.fmt(p.mu()),
            ff.fmt(r.printed_period),
            ff.fmt(r.reported.0),
            ff.fmt(r.reported.1),
            ff.fmt(r.computed.0),
            ff.fmt(r.computed.1),
            ff.fmt(r.deviation.0),
            ff.fmt(r.deviation.1),
            r.class.label().to_string(),
            r.matched.to_string(),
            ff.fmt(r.h_star),
            r.shape_ok.to_string(),
            r.failed_shape.join(" "),
            ff.opt(r.return_residual),
            ff.opt(r.antiperiodic_residual),
            ff.opt(r.observed_rate),
            ff.opt(r.alternative_mu),
            r.note.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const CONVERGENCE_HEADER: [&str; 10] = [
    "delta",
    "lambda",
    "h_tilde",
    "abs_err_m",
    "abs_err_hstar",
    "h_tilde_predicted",
    "lambda_predicted",
    "R_delta",
    "rho",
    "steps_per_unit",
];

pub fn write_convergence_csv<W: Write>(
    out: W,
    report: &ConvergenceReport,
    ff: FloatFormat,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONVERGENCE_HEADER)?;
    for r in &report.rows {
        w.write_record([
            ff.fmt(r.delta),
            ff.fmt(r.lambda),
            ff.fmt(r.h_tilde),
            ff.fmt(r.abs_err_m),
            ff.fmt(r.abs_err_hstar),
            ff.fmt(r.h_tilde_predicted),
            ff.fmt(r.lambda_predicted),
            ff.fmt(r.r_delta),
            ff.fmt(r.rho),
            r.steps_per_unit.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Counts by match class plus the rows outside rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub rows: usize,
    pub rounding_consistent: usize,
    pub tolerated: usize,
    pub mismatch: usize,
    pub shape_ok: usize,
    pub flagged: Vec<usize>,
}

pub fn summarize(rows: &[TableRow]) -> TableSummary {
    use crate::tables::MatchClass::*;
    let count = |c| rows.iter().filter(|r| r.class == c).count();
    TableSummary {
        rows: rows.len(),
        rounding_consistent: count(RoundingConsistent),
        tolerated: count(Tolerated),
        mismatch: count(Mismatch),
        shape_ok: rows.iter().filter(|r| r.shape_ok).count(),
        flagged: rows
            .iter()
            .filter(|r| r.class != RoundingConsistent)
            .map(|r| r.row)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formats() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(6.4e-9), "6.4e-9");
        assert_eq!(fmt_f64(4.0), "4.0");
        assert_eq!(fmt_golden(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_golden(-1.0), "-1.0000000000000000e0");
        let x = 1.0216173412814022;
        assert_eq!(fmt_golden(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn analysis_of_examples() {
        let p1 = Params::new(2.0, 0.1, 3.0, 1.0, 0.1).unwrap();
        let a = analyze(&p1);
        assert!(a.single.ok());
        assert!(!a.double.ok());
        assert!((a.single.slope.abs() - 0.72).abs() < 0.005);
        let p2 = Params::new(4.0, 2.0, 0.5, 1.0, 0.1).unwrap();
        let a = analyze(&p2);
        assert!(a.double.ok());
        assert!(!a.single.ok());
    }

    #[test]
    fn table_csv_shape() {
        let rows = crate::tables::reproduce_table2();
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &rows, FloatFormat::Shortest).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 19);
        assert!(text.lines().next().unwrap().starts_with("row,a1,a2"));
        let s = summarize(&rows);
        assert_eq!(s.rows, 18);
        assert_eq!(s.mismatch, 0);
        assert!(s.flagged.contains(&1));
    }
}
