//! Binary entry point: argument parsing only, all behavior lives in
//! [`dde_steps::cli`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dde_steps::cli;

#[derive(Parser)]
#[command(
    name = "dde-steps",
    version,
    about = "Solve delay differential equations by segmentwise Taylor recurrences"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a model and write the sampled solution as CSV.
    Solve {
        /// Model file to solve.
        model: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sampling step; defaults to a hundredth of the domain.
        #[arg(long)]
        step: Option<f64>,
        /// Overrides the model's truncation order with a uniform value.
        #[arg(long)]
        order: Option<usize>,
        /// Additionally write the per-segment coefficient dump here.
        #[arg(long, value_name = "PATH")]
        dump_coeffs: Option<PathBuf>,
    },
    /// Write per-segment centers, intervals, seeds and coefficients as JSON.
    Coeffs {
        /// Model file to solve.
        model: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the model's truncation order with a uniform value.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Solve and independently integrate, then compare on a shared grid.
    Compare {
        /// Model file to solve.
        model: PathBuf,
        /// Output path for the comparison CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Runge-Kutta step size.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Comparison grid step; defaults to a hundredth of the domain.
        #[arg(long)]
        step: Option<f64>,
        /// Largest acceptable deviation; beyond it the exit code is 3.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Overrides the model's truncation order with a uniform value.
        #[arg(long)]
        order: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let code = match cli.cmd {
        Cmd::Solve { model, out, step, order, dump_coeffs } => cli::solve_command(
            &model,
            out.as_deref(),
            step,
            order,
            dump_coeffs.as_deref(),
        ),
        Cmd::Coeffs { model, out, order } => cli::coeffs_command(&model, out.as_deref(), order),
        Cmd::Compare { model, out, h, step, tol, order } => {
            cli::compare_command(&model, out.as_deref(), h, step, tol, order)
        }
    };
    ExitCode::from(code as u8)
}
