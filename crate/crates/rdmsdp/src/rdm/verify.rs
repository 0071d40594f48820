use super::conditions::{assemble_conditions, assemble_equalities};
use super::ConditionSet;
use crate::symcore::{spectral_decompose, svec, SymMatrix};
use crate::Result;

/// Outcome of checking a (gamma, pair Gamma) point against the assembled
/// conditions: smallest eigenvalue per positivity block and the absolute
/// equality residuals.
#[derive(Clone, Debug)]
pub struct RepresentabilityReport {
    pub block_min_eigs: Vec<(String, f64)>,
    pub equality_residuals: Vec<(String, f64)>,
}

impl RepresentabilityReport {
    pub fn min_eigenvalue(&self) -> f64 {
        self.block_min_eigs
            .iter()
            .map(|&(_, e)| e)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_equality_residual(&self) -> f64 {
        self.equality_residuals
            .iter()
            .map(|&(_, r)| r)
            .fold(0.0, f64::max)
    }
}

/// Evaluates every condition block and equality row at the given point.
pub fn verify_representable(
    gamma: &SymMatrix,
    pair_gamma: &SymMatrix,
    d: usize,
    n_elec: usize,
    conds: ConditionSet,
) -> Result<RepresentabilityReport> {
    let mut y = svec(gamma);
    y.extend(svec(pair_gamma));

    let mut block_min_eigs = Vec::new();
    for block in assemble_conditions(d, n_elec, conds) {
        let s = block.evaluate(&y);
        let dec = spectral_decompose(&s)?;
        let min_eig = dec.lambda.last().copied().unwrap_or(0.0);
        block_min_eigs.push((block.label, min_eig));
    }
    let mut equality_residuals = Vec::new();
    for row in assemble_equalities(d, n_elec) {
        equality_residuals.push((row.label.clone(), (row.evaluate(&y) - row.rhs).abs()));
    }
    Ok(RepresentabilityReport {
        block_min_eigs,
        equality_residuals,
    })
}
