//! Command-line front end: `build` turns integral files into SDPA files,
//! `solve` runs a solver on either input kind, `fci` prints the oracle
//! energy. Exit codes: 0 converged, 2 iteration budget exhausted, 1 on
//! usage, parse or runtime errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::firstorder::{run_first_order, FirstOrderParams};
use crate::io;
use crate::rdm::{self, ConditionSet};
use crate::sdpmodel::{normalize, SdpProblem};
use crate::ssnewton::{run_assn, NewtonParams};
use crate::trace::SolveResult;
use crate::Result;

#[derive(Parser, Debug)]
#[command(
    name = "rdmsdp",
    about = "Ground-state-energy lower bounds from reduced density matrices",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble an integral file into an SDPA sparse problem file.
    Build {
        /// Integral file (RDM-INT v1).
        input: PathBuf,
        /// Output path for the SDPA text.
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Conditions::Pqg)]
        conditions: Conditions,
    },
    /// Solve an SDPA or integral file.
    Solve {
        /// Problem file; integral files are detected by their header.
        input: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Exact sector diagonalization of an integral file.
    Fci {
        /// Integral file (RDM-INT v1).
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Conditions {
    Pqg,
    Pqgt1,
    Pqgt1t2,
}

impl From<Conditions> for ConditionSet {
    fn from(c: Conditions) -> ConditionSet {
        match c {
            Conditions::Pqg => ConditionSet::PQG,
            Conditions::Pqgt1 => ConditionSet::PQGT1,
            Conditions::Pqgt1t2 => ConditionSet::PQGT1T2,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Method {
    /// First-order splitting viewed from the dual.
    Admm,
    /// First-order splitting on the primal (same iteration as admm).
    Drs,
    /// Semi-smooth Newton, lower-accuracy thresholds.
    SsnL,
    /// Semi-smooth Newton, high-accuracy dual thresholds.
    SsnH,
}

#[derive(Args, Debug)]
struct SolveOpts {
    #[arg(long, value_enum, default_value_t = Method::SsnL)]
    method: Method,
    /// Condition set for integral inputs.
    #[arg(long, value_enum, default_value_t = Conditions::Pqg)]
    conditions: Conditions,
    #[arg(long)]
    max_iter: Option<usize>,
    /// First-order warmup sweeps before Newton iterations.
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    tol_primal: Option<f64>,
    #[arg(long)]
    tol_dual: Option<f64>,
    /// Seed for a random starting point (first-order methods).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON solution summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare the bound against the oracle energy (integral inputs).
    #[arg(long)]
    fci_check: bool,
}

fn run_solver(problem: SdpProblem, opts: &SolveOpts) -> Result<(SolveResult, Vec<String>)> {
    // ranks are reported for matrix blocks; align the labels with them
    let labels: Vec<String> = problem
        .block_info
        .iter()
        .zip(problem.cone.blocks())
        .filter(|(_, kind)| kind.is_matrix())
        .map(|(info, _)| info.label.clone())
        .collect();
    let norm = normalize(problem)?;
    let result = match opts.method {
        Method::Admm | Method::Drs => {
            let mut params = FirstOrderParams {
                random_start: opts.seed,
                ..Default::default()
            };
            if let Some(v) = opts.max_iter {
                params.max_iter = v;
            }
            if let Some(v) = opts.tol_primal {
                params.tol_primal = v;
            }
            if let Some(v) = opts.tol_dual {
                params.tol_dual = v;
            }
            run_first_order(&norm, &params)?
        }
        Method::SsnL | Method::SsnH => {
            let mut params = if opts.method == Method::SsnL {
                NewtonParams::profile_l()
            } else {
                NewtonParams::profile_h()
            };
            if let Some(v) = opts.max_iter {
                params.max_iter = v;
            }
            if let Some(v) = opts.warmup {
                params.warmup_iters = v;
            }
            if let Some(v) = opts.tol_primal {
                params.eta_p_tol = v;
            }
            if let Some(v) = opts.tol_dual {
                params.eta_d_tol = v;
            }
            run_assn(&norm, &params)?
        }
    };
    Ok((result, labels))
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Admm => "admm",
        Method::Drs => "drs",
        Method::SsnL => "ssn-l",
        Method::SsnH => "ssn-h",
    }
}

fn looks_like_integrals(text: &str) -> bool {
    text.lines()
        .next()
        .map(|l| l.trim_start().starts_with("RDM-INT"))
        .unwrap_or(false)
}

fn solve_command(input: &Path, opts: &SolveOpts) -> Result<i32> {
    let text = std::fs::read_to_string(input)?;
    let (problem, fci_energy) = if looks_like_integrals(&text) {
        let data = io::read_integrals(&text)?;
        let fci = if opts.fci_check {
            Some(rdm::fci_oracle(&data)?.energy)
        } else {
            None
        };
        (rdm::build_sdp(&data, opts.conditions.into())?, fci)
    } else {
        (io::read_sdpa(&text)?, None)
    };

    let (result, labels) = run_solver(problem, opts)?;
    let mut solution = io::Solution::from_result(method_name(opts.method), &result, &labels);
    if let Some(e) = fci_energy {
        solution.fci_energy = Some(e);
        solution.err = Some(solution.objective - e);
    }

    if let Some(path) = &opts.trace {
        io::write_atomic(path, &io::write_trace_csv(&result.trace))?;
    }
    let json = solution.to_json();
    match &opts.out {
        Some(path) => io::write_atomic(path, &json)?,
        None => println!("{json}"),
    }
    if !result.converged {
        eprintln!(
            "iteration budget exhausted: eta_p = {:.3e}, eta_d = {:.3e}",
            result.report.eta_p, result.report.eta_d
        );
        return Ok(2);
    }
    Ok(0)
}

fn run_command(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Build {
            input,
            out,
            conditions,
        } => {
            let text = std::fs::read_to_string(&input)?;
            let data = io::read_integrals(&text)?;
            let problem = rdm::build_sdp(&data, conditions.into())?;
            io::write_atomic(&out, &io::write_sdpa(&problem))?;
            Ok(0)
        }
        Command::Solve { input, opts } => solve_command(&input, &opts),
        Command::Fci { input } => {
            let text = std::fs::read_to_string(&input)?;
            let data = io::read_integrals(&text)?;
            let sol = rdm::fci_oracle(&data)?;
            println!("{:.16e}", sol.energy);
            Ok(0)
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success exits
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
