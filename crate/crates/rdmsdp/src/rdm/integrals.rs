use crate::symcore::SymMatrix;
use crate::{Error, Result};

/// One- and two-electron integrals of a d spin-orbital system with N
/// electrons. The two-electron tensor is stored dense; `v(i,j,k,l)` is the
/// coefficient of a_i^+ a_j^+ a_l a_k in the Hamiltonian, and Hermiticity
/// requires V_{ij,kl} = V_{kl,ij}.
#[derive(Clone, Debug)]
pub struct IntegralData {
    d: usize,
    n_elec: usize,
    t: SymMatrix,
    v: Vec<f64>,
}

impl IntegralData {
    pub fn new(d: usize, n_elec: usize, t: SymMatrix, v: Vec<f64>) -> Result<Self> {
        if d == 0 || d % 2 != 0 {
            return Err(Error::InvalidParam(format!(
                "spin-orbital count must be positive and even, got {d}"
            )));
        }
        if n_elec == 0 || n_elec > d {
            return Err(Error::InvalidParam(format!(
                "electron count {n_elec} outside 1..={d}"
            )));
        }
        if t.dim() != d {
            return Err(Error::Shape(format!(
                "one-electron matrix is {}x{}, expected {d}x{d}",
                t.dim(),
                t.dim()
            )));
        }
        if v.len() != d * d * d * d {
            return Err(Error::Shape(format!(
                "two-electron tensor has {} entries, expected d^4 = {}",
                v.len(),
                d * d * d * d
            )));
        }
        let data = IntegralData { d, n_elec, t, v };
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let a = data.v(i, j, k, l);
                        let b = data.v(k, l, i, j);
                        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                            return Err(Error::InvalidParam(format!(
                                "two-electron tensor breaks Hermiticity at ({i},{j},{k},{l})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(data)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_elec(&self) -> usize {
        self.n_elec
    }

    pub fn t(&self) -> &SymMatrix {
        &self.t
    }

    #[inline]
    pub fn v(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.v[((i * self.d + j) * self.d + k) * self.d + l]
    }

    pub fn v_raw(&self) -> &[f64] {
        &self.v
    }

    /// Energy of a given (gamma, pair-matrix Gamma) point: the trace pairing
    /// with T plus the two-electron contraction.
    pub fn energy_of(&self, gamma: &SymMatrix, pair_gamma: &SymMatrix) -> f64 {
        let d = self.d;
        let map = super::PairIndexMap::new(d);
        let mut e = self.t.frob_dot(gamma);
        for (p, (i, j)) in map.pairs() {
            for (q, (k, l)) in map.pairs() {
                let w = self.v(i, j, k, l) - self.v(j, i, k, l) - self.v(i, j, l, k)
                    + self.v(j, i, l, k);
                e += w * pair_gamma.get(p, q);
            }
        }
        e
    }
}
