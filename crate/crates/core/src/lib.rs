//! Solver for delay differential equations with constant delays, built on
//! segmentwise Taylor recurrences (the method of steps driven by the
//! differential transformation).
//!
//! The pipeline: parse a model file ([`parse`]), plan the segment grid from
//! the delays ([`schedule`]), compile the right-hand side into a coefficient
//! recurrence ([`lowering`]), then march segment by segment ([`solver`]).
//! A fixed-step Runge-Kutta integrator with dense output ([`oracle`]) serves
//! as an independent cross-check.

pub mod cli;
pub mod error;
pub mod lowering;
pub mod model;
pub mod oracle;
pub mod parse;
pub mod schedule;
pub mod series;
pub mod solver;

pub use error::{Error, Result};
pub use lowering::{compile_rhs, run_plan, RecurrencePlan, Slot};
pub use oracle::{compare, rk_solve, CompareReport, CompareRow, DenseTrajectory};
pub use model::{DelayModel, DelaySpec, Diagnostic, Expr, ModelClass, OrderSpec};
pub use parse::{parse_expr, parse_model};
pub use schedule::{DelaySource, Rational, ScheduleMode, SegmentSchedule};
pub use series::TruncatedSeries;
pub use solver::{build_schedule, eval_solution, sample, solve, PiecewiseSolution};
