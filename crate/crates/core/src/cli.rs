//! Command implementations behind the `dde-steps` binary.
//!
//! Each command is a thin pipeline over the library: load and validate the
//! model, solve, then write CSV or a JSON coefficient dump. The writing
//! helpers take `dyn Write` so the output surface is testable without
//! touching the filesystem; the `*_command` wrappers add file plumbing and
//! map errors to process exit codes.
//!
//! Exit codes: 1 for anything wrong with the input (unreadable file, parse
//! error, structural violation), 2 when the solve itself degenerates, 3 when
//! a comparison exceeds its tolerance.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DelayModel, OrderSpec};
use crate::oracle::{compare, rk_solve, CompareReport};
use crate::parse::parse_model;
use crate::solver::{solve, PiecewiseSolution};

/// Maps an error to the binary's exit code: 2 for failures of the numerical
/// process on a structurally valid model, 1 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFiniteCoefficient { .. }
        | Error::NonFiniteState { .. }
        | Error::DivisionBySmallLeadingCoefficient { .. }
        | Error::TooManySegments { .. }
        | Error::StepTooLarge { .. } => 2,
        _ => 1,
    }
}

/// Reads and parses a model file, applying the truncation override when one
/// was given on the command line.
pub fn load_model(path: &Path, order: Option<usize>) -> Result<DelayModel> {
    let src = fs::read_to_string(path)?;
    let mut m = parse_model(&src)?;
    if let Some(n) = order {
        m.trunc = OrderSpec::Uniform(n);
        m.check_structure()?;
    }
    Ok(m)
}

/// CSV field: 17 significant digits, enough to round-trip any f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the sampled solution as `t,u` CSV over the whole domain.
pub fn write_samples(sol: &PiecewiseSolution, step: f64, out: &mut dyn Write) -> Result<()> {
    let (t0, terminal) = (sol.schedule().t0(), sol.schedule().terminal());
    writeln!(out, "t,u")?;
    for (t, u) in sol.sample(t0, terminal, step)? {
        writeln!(out, "{},{}", num(t), num(u))?;
    }
    Ok(())
}

/// Writes segment count, per-segment truncation orders, and the worst
/// residual to the log stream.
pub fn write_summary(sol: &PiecewiseSolution, log: &mut dyn Write) -> Result<()> {
    for w in sol.warnings() {
        writeln!(log, "warning: {w}")?;
    }
    let segs = sol.segments();
    writeln!(log, "segments: {}", segs.len())?;
    let orders: Vec<String> = segs.iter().map(|s| s.order().to_string()).collect();
    writeln!(log, "orders: {}", orders.join(" "))?;
    let (worst, at) = sol
        .residuals()
        .iter()
        .enumerate()
        .fold((0.0f64, 0), |(m, a), (j, &r)| if r > m { (r, j) } else { (m, a) });
    writeln!(log, "max residual: {:.2e} (segment {})", worst, at + 1)?;
    Ok(())
}

#[derive(Serialize)]
struct SegmentDump {
    index: usize,
    center: f64,
    interval: [f64; 2],
    seeds: Vec<f64>,
    coefficients: Vec<f64>,
}

#[derive(Serialize)]
struct CoeffDump {
    t0: f64,
    terminal: f64,
    order: usize,
    segments: Vec<SegmentDump>,
}

/// Writes per-segment centers, intervals, seed coefficients, and the full
/// coefficient lists as JSON.
pub fn write_coeff_dump(sol: &PiecewiseSolution, out: &mut dyn Write) -> Result<()> {
    let n = sol.model().order as usize;
    let sched = sol.schedule();
    let segments = sol
        .segments()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (lo, hi) = sched.interval(i + 1);
            SegmentDump {
                index: i + 1,
                center: s.center(),
                interval: [lo, hi],
                seeds: s.coeffs()[..n].to_vec(),
                coefficients: s.coeffs().to_vec(),
            }
        })
        .collect();
    let dump = CoeffDump {
        t0: sched.t0(),
        terminal: sched.terminal(),
        order: n,
        segments,
    };
    serde_json::to_writer_pretty(&mut *out, &dump)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(out)?;
    Ok(())
}

/// Writes the per-sample comparison table as `t,u_dtm,u_rk,abs_diff` CSV.
pub fn write_comparison(report: &CompareReport, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "t,u_dtm,u_rk,abs_diff")?;
    for row in &report.table {
        writeln!(
            out,
            "{},{},{},{}",
            num(row.t),
            num(row.left),
            num(row.right),
            num(row.diff.abs())
        )?;
    }
    Ok(())
}

/// Opens `path` for writing, or hands back standard output.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn report(e: &Error) -> i32 {
    // A closed pipe on the consuming side is not our failure.
    if let Error::Io(io) = e {
        if io.kind() == std::io::ErrorKind::BrokenPipe {
            return 0;
        }
    }
    eprintln!("error: {e}");
    exit_code(e)
}

fn default_step(m: &DelayModel) -> f64 {
    (m.terminal - m.t0) / 100.0
}

/// `solve` command: sample to CSV, optionally dump coefficients alongside.
pub fn solve_command(
    model: &Path,
    out: Option<&Path>,
    step: Option<f64>,
    order: Option<usize>,
    dump_coeffs: Option<&Path>,
) -> i32 {
    let run = || -> Result<()> {
        let m = load_model(model, order)?;
        let sol = solve(&m)?;
        let step = step.unwrap_or_else(|| default_step(&m));
        write_samples(&sol, step, &mut *sink(out)?)?;
        write_summary(&sol, &mut std::io::stderr().lock())?;
        if let Some(p) = dump_coeffs {
            write_coeff_dump(&sol, &mut fs::File::create(p)?)?;
        }
        Ok(())
    };
    match run() {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

/// `coeffs` command: the coefficient dump alone.
pub fn coeffs_command(model: &Path, out: Option<&Path>, order: Option<usize>) -> i32 {
    let run = || -> Result<()> {
        let m = load_model(model, order)?;
        let sol = solve(&m)?;
        write_coeff_dump(&sol, &mut *sink(out)?)?;
        Ok(())
    };
    match run() {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

/// `compare` command: series solution against the Runge-Kutta integrator.
/// Exit 0 when the largest deviation stays at or below `tol`, 3 otherwise.
pub fn compare_command(
    model: &Path,
    out: Option<&Path>,
    h: f64,
    step: Option<f64>,
    tol: f64,
    order: Option<usize>,
) -> i32 {
    let run = || -> Result<bool> {
        let m = load_model(model, order)?;
        let sol = solve(&m)?;
        let traj = rk_solve(&m, h)?;
        let report = compare(&sol, &traj, step.unwrap_or_else(|| default_step(&m)))?;
        write_comparison(&report, &mut *sink(out)?)?;
        eprintln!("max_abs_diff: {:e} at t = {}", report.max_abs_diff, report.argmax);
        Ok(report.max_abs_diff <= tol)
    };
    match run() {
        Ok(true) => 0,
        Ok(false) => 3,
        Err(e) => report(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOGISTIC: &str = "\
order = 1
delays = [1/10]
rhs = \"u * (2 - 4*u[1])\"
history = \"1\"
t0 = 0
T = 0.5
N = [3, 4, 5, 6, 7]
";

    fn solved(src: &str) -> PiecewiseSolution {
        solve(&parse_model(src).unwrap()).unwrap()
    }

    #[test]
    fn sample_csv_has_exact_header_and_full_grid() {
        let sol = solved(LOGISTIC);
        let mut buf = Vec::new();
        write_samples(&sol, 0.05, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,u");
        assert_eq!(lines.len(), 12);
        let first: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(first, vec![0.0, 1.0]);
    }

    #[test]
    fn sample_csv_is_byte_deterministic() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_samples(&solved(LOGISTIC), 0.05, &mut a).unwrap();
        write_samples(&solved(LOGISTIC), 0.05, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coefficient_dump_round_trips_the_first_segment() {
        let sol = solved(LOGISTIC);
        let mut buf = Vec::new();
        write_coeff_dump(&sol, &mut buf).unwrap();
        let dump: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(dump["order"], 1);
        assert_eq!(dump["segments"].as_array().unwrap().len(), 5);
        let seg1 = &dump["segments"][0];
        assert_eq!(seg1["center"], 0.0);
        assert_eq!(seg1["interval"][1], 0.1);
        let coeffs: Vec<f64> = seg1["coefficients"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert_eq!(coeffs[..3], [1.0, -2.0, 2.0]);
        assert!((coeffs[3] + 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(seg1["seeds"][0], 1.0);
    }

    #[test]
    fn summary_reports_segments_orders_and_residual() {
        let mut buf = Vec::new();
        write_summary(&solved(LOGISTIC), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("segments: 5"));
        assert!(text.contains("orders: 3 4 5 6 7"));
        assert!(text.contains("max residual:"));
    }

    #[test]
    fn exit_codes_split_input_errors_from_numerical_failures() {
        assert_eq!(exit_code(&Error::ModelInvariant("x".into())), 1);
        assert_eq!(
            exit_code(&Error::Syntax { line: 1, col: 1, msg: "x".into() }),
            1
        );
        assert_eq!(
            exit_code(&Error::NonFiniteCoefficient { segment: 1, index: 0 }),
            2
        );
        assert_eq!(exit_code(&Error::StepTooLarge { h: 1.0, min_delay: 0.1 }), 2);
    }

    #[test]
    fn order_override_replaces_the_model_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model");
        fs::write(&path, LOGISTIC).unwrap();
        let m = load_model(&path, Some(12)).unwrap();
        assert_eq!(m.trunc, OrderSpec::Uniform(12));
        let m = load_model(&path, None).unwrap();
        assert_eq!(m.trunc, OrderSpec::PerSegment(vec![3, 4, 5, 6, 7]));
    }
}
