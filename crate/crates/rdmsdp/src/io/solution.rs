use serde::Serialize;

use crate::trace::SolveResult;

/// JSON solution summary. The schema is identical across methods: fields
/// that do not apply are null, never missing.
#[derive(Clone, Debug, Serialize)]
pub struct Solution {
    pub method: String,
    pub objective: f64,
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_g: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_seconds: f64,
    pub blocks: Vec<BlockSummary>,
    /// objective - fci_energy, when an oracle check ran.
    pub err: Option<f64>,
    pub fci_energy: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSummary {
    pub label: Option<String>,
    pub size: usize,
    pub rank: usize,
}

impl Solution {
    pub fn from_result(method: &str, result: &SolveResult, labels: &[String]) -> Self {
        let blocks = result
            .block_ranks
            .iter()
            .enumerate()
            .map(|(k, &(size, rank))| BlockSummary {
                label: labels.get(k).filter(|l| !l.is_empty()).cloned(),
                size,
                rank,
            })
            .collect();
        Solution {
            method: method.to_string(),
            objective: result.report.dual_obj,
            eta_p: result.report.eta_p,
            eta_d: result.report.eta_d,
            eta_g: result.report.eta_g,
            iterations: result.iterations,
            converged: result.converged,
            wall_seconds: result.wall_seconds,
            blocks,
            err: None,
            fci_energy: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_fields_serialize_as_null() {
        let sol = Solution {
            method: "drs".into(),
            objective: -1.0,
            eta_p: 1e-7,
            eta_d: 1e-8,
            eta_g: 1e-9,
            iterations: 12,
            converged: true,
            wall_seconds: 0.5,
            blocks: vec![BlockSummary {
                label: None,
                size: 4,
                rank: 2,
            }],
            err: None,
            fci_energy: None,
        };
        let json = sol.to_json();
        assert!(json.contains("\"err\": null"));
        assert!(json.contains("\"fci_energy\": null"));
        assert!(json.contains("\"label\": null"));
    }
}
