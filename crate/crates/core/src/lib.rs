//! Periodic-coefficient relay delay equation
//! `x'(t) = -mu x(t) + a(t) f(x(t-1))`: exact event-driven solutions,
//! closed-form return maps, smoothed approximations and a numerical
//! integrator for the smoothed problem.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod experiments;
pub mod integrator;
pub mod maps;
pub mod params;
pub mod quad;
pub mod report;
pub mod roots;
pub mod smoothing;
pub mod tables;

pub use error::{Error, ParamViolation, Result};
pub use exact::{period_iterate, solve_exact, solve_exact_with_history, HistorySign, Trajectory};
pub use experiments::{oracle_crosscheck, smoothing_convergence_study, StudyOptions};
pub use integrator::{estimate_lambda, find_fixed_point_numeric, integrate_smoothed, period_map};
pub use maps::{AffineMap, FixedPointResult, Stability};
pub use params::{Params, Regime, ShapeReport};
pub use smoothing::SmoothingSpec;
pub use tables::{reproduce_table1, reproduce_table2, MatchClass, TableRow};
