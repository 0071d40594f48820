//! Per-iteration trace records and the common solver result type.

use crate::sdpmodel::ResidualReport;
use crate::symcore::SymBlockElement;

/// What a solver iteration did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Plain first-order sweep of a standalone run.
    Drs,
    /// First-order sweep inside the Newton warmup phase.
    Warmup,
    /// Accepted regularized Newton step.
    Newton,
    /// Hyperplane projection of a rejected Newton trial.
    Projection,
    /// Fallback first-order sweep after a rejected trial.
    DrsFallback,
    /// Iterate left unchanged.
    Unsuccessful,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Drs => "drs",
            Stage::Warmup => "warmup",
            Stage::Newton => "newton",
            Stage::Projection => "projection",
            Stage::DrsFallback => "drs-fallback",
            Stage::Unsuccessful => "unsuccessful",
        }
    }
}

/// One row of the iteration trace. The CSV serialization keeps a fixed
/// column subset; the extra fields (`mu`, `ranks`) stay available to
/// library callers and feed the JSON solution summary.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iter: usize,
    pub stage: Stage,
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_g: f64,
    pub norm_f: f64,
    pub penalty: f64,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub cg_iters: Option<usize>,
    /// Numerical rank of each matrix block of the primal iterate (count of
    /// eigenvalues >= 1e-8).
    pub ranks: Vec<usize>,
    /// Cumulative fixed-point residual evaluations up to this row.
    pub f_evals_total: usize,
    pub wall_seconds: f64,
}

/// Solver output: final iterates, diagnostics and the full trace.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x: SymBlockElement,
    pub s: SymBlockElement,
    /// Dual vector in the normalized row space of the solved problem.
    pub y: Vec<f64>,
    /// Dual vector lifted back to the original (pre-normalization) rows.
    pub y_original: Vec<f64>,
    pub report: ResidualReport,
    pub iterations: usize,
    pub converged: bool,
    /// Number of fixed-point residual evaluations performed.
    pub f_evals: usize,
    pub final_norm_f: f64,
    /// Longest run of consecutive unsuccessful iterations observed.
    pub max_consecutive_unsuccessful: usize,
    /// Per matrix block: (side length, numerical rank of the final X block).
    pub block_ranks: Vec<(usize, usize)>,
    pub trace: Vec<TraceRow>,
    pub wall_seconds: f64,
}

impl SolveResult {
    pub fn objective(&self) -> f64 {
        self.report.dual_obj
    }
}
