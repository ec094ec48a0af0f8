//! Command-line front end: parse models, run equilibration, tropicalization
//! and simulation pipelines, emit reports and plot-ready CSV.
//!
//! Exit codes: 0 success, 1 error, 2 no solution found. All outputs are
//! written atomically (temp file + rename) and deterministically: same
//! inputs and flags give byte-identical files.

mod output;
mod runs;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "tropkin",
    about = "Tropical dominance analysis, equilibration and hybrid simulation of ε-graded ODE models",
    version
)]
struct Cli {
    /// Seed for randomized harnesses; the shipped subcommands are
    /// deterministic and ignore it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find renormalization exponents balancing every equation.
    Equilibrate {
        /// Model file path or the builtin name `tyson`.
        #[arg(long, default_value = "tyson")]
        model: String,
        /// Apply the model's conservation laws as a feasibility filter.
        #[arg(long)]
        conservation: bool,
        /// Comma-separated variable names to balance (default: all).
        #[arg(long)]
        subset: Option<String>,
        /// Disable the permanency screen.
        #[arg(long)]
        no_screen: bool,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Summarize the dominant-monomial structure of a model.
    Tropicalize {
        #[arg(long, default_value = "tyson")]
        model: String,
        /// `complete` or `two-terms`.
        #[arg(long, default_value = "complete")]
        kind: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Integrate a model and write trajectory and event CSVs.
    Simulate {
        #[arg(long, default_value = "tyson")]
        model: String,
        /// `full`, `complete`, `two-terms` or `hybrid3` (builtin only).
        #[arg(long, default_value = "full")]
        kind: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        /// Comma-separated initial state (defaults to a model-specific
        /// generic point).
        #[arg(long)]
        x0: Option<String>,
        /// Record interval (default: every accepted step).
        #[arg(long)]
        record_dt: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Truncate a model under its equilibrations; for the builtin, also emit
    /// the two-variable reduction.
    Reduce {
        #[arg(long, default_value = "tyson")]
        model: String,
        #[arg(long)]
        conservation: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sup-norm error between two integration kinds over an ε list.
    Compare {
        #[arg(long, default_value = "tyson")]
        model: String,
        #[arg(long, default_value = "full")]
        kind_a: String,
        #[arg(long, default_value = "complete")]
        kind_b: String,
        /// Comma-separated ε values.
        #[arg(long, default_value = "0.3,0.2,0.1")]
        eps_list: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 3.0)]
        t_end: f64,
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the built-in cell-cycle case study end to end.
    TysonDemo {
        /// Rate-constant profile file (JSON with k1..k9 and epsilon).
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Equilibrate {
            model,
            conservation,
            subset,
            no_screen,
            out,
        } => runs::equilibrate(&model, conservation, subset.as_deref(), !no_screen, &out),
        Command::Tropicalize {
            model,
            kind,
            eps,
            out,
        } => runs::tropicalize_cmd(&model, &kind, eps, &out),
        Command::Simulate {
            model,
            kind,
            eps,
            tol,
            t_end,
            x0,
            record_dt,
            out,
        } => runs::simulate(
            &model,
            &kind,
            eps,
            tol,
            t_end,
            x0.as_deref(),
            record_dt,
            &out,
        ),
        Command::Reduce {
            model,
            conservation,
            out,
        } => runs::reduce(&model, conservation, &out),
        Command::Compare {
            model,
            kind_a,
            kind_b,
            eps_list,
            tol,
            t_end,
            x0,
            out,
        } => runs::compare_cmd(
            &model,
            &kind_a,
            &kind_b,
            &eps_list,
            tol,
            t_end,
            x0.as_deref(),
            &out,
        ),
        Command::TysonDemo {
            profile,
            eps,
            tol,
            out,
        } => runs::tyson_demo(profile.as_deref(), eps, tol, &out),
    };
    match outcome {
        Ok(runs::Outcome::Done) => ExitCode::SUCCESS,
        Ok(runs::Outcome::NoSolution(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
