//! Variational 2-RDM problem assembly and the brute-force full-CI oracle.
//!
//! The energy of an N-electron system is linear in the one-body density
//! matrix gamma and the pair-indexed two-body density matrix: minimizing it
//! over (gamma, Gamma) subject to the P/Q/G/T1/T2 positivity conditions and
//! the trace equalities is an SDP whose optimum lower-bounds the true ground
//! state energy. [`build_sdp`] assembles that SDP in the solver's standard
//! form; [`fci_oracle`] diagonalizes the fixed-particle-number sector
//! exactly and returns the representable reference point.

mod conditions;
mod fci;
mod integrals;
mod pairmap;
mod spin;
mod verify;

pub use conditions::{
    assemble_conditions, assemble_equalities, build_sdp, energy_vector, ConditionBlock,
    EqualityRow,
};
pub use fci::{apply_hamiltonian, fci_oracle, sector_dimension, state_rdms, FciSolution};
pub use integrals::IntegralData;
pub use pairmap::{pair_index, PairIndexMap};
pub use spin::orbital_sectors;
pub use verify::{verify_representable, RepresentabilityReport};

/// Which N-representability conditions enter the SDP. P, Q and G are always
/// on; T1 and T2 are optional extras.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionSet {
    pub t1: bool,
    pub t2: bool,
}

impl ConditionSet {
    pub const PQG: ConditionSet = ConditionSet {
        t1: false,
        t2: false,
    };
    pub const PQGT1: ConditionSet = ConditionSet {
        t1: true,
        t2: false,
    };
    pub const PQGT1T2: ConditionSet = ConditionSet { t1: true, t2: true };

    pub fn from_name(name: &str) -> Option<ConditionSet> {
        match name {
            "pqg" => Some(Self::PQG),
            "pqgt1" => Some(Self::PQGT1),
            "pqgt1t2" => Some(Self::PQGT1T2),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.t1, self.t2) {
            (false, false) => "pqg",
            (true, false) => "pqgt1",
            (true, true) => "pqgt1t2",
            (false, true) => "pqgt2",
        }
    }
}
