use std::collections::HashMap;

use super::{IntegralData, PairIndexMap};
use crate::symcore::{spectral_decompose, Mat, SymMatrix};
use crate::{Error, Result};

/// Determinant cap for the brute-force oracle.
const SECTOR_CAP: u128 = 100_000;

/// Number of determinants in the fixed-particle-number sector.
pub fn sector_dimension(d: usize, n_elec: usize) -> u128 {
    let mut acc: u128 = 1;
    for k in 0..n_elec.min(d - n_elec) {
        acc = acc * (d - k) as u128 / (k + 1) as u128;
    }
    if n_elec > d {
        0
    } else {
        acc
    }
}

/// Occupation-number basis of the sector, as bitmasks in ascending order.
fn sector_basis(d: usize, n_elec: usize) -> Vec<u64> {
    // Gosper's hack walks n-bit subsets in increasing numeric order
    let mut states = Vec::new();
    if n_elec == 0 || n_elec > d {
        return states;
    }
    let limit: u64 = 1 << d;
    let mut s: u64 = (1 << n_elec) - 1;
    while s < limit {
        states.push(s);
        let c = s & s.wrapping_neg();
        let r = s + c;
        if r >= limit || c == 0 {
            break;
        }
        s = (((r ^ s) >> 2) / c) | r;
    }
    states
}

/// a_i applied to a determinant: sign from the occupied modes below i.
#[inline]
fn annihilate(state: u64, i: usize) -> Option<(f64, u64)> {
    if state & (1 << i) == 0 {
        return None;
    }
    let below = (state & ((1u64 << i) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, state & !(1 << i)))
}

/// a_i^+ applied to a determinant.
#[inline]
fn create(state: u64, i: usize) -> Option<(f64, u64)> {
    if state & (1 << i) != 0 {
        return None;
    }
    let below = (state & ((1u64 << i) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, state | (1 << i)))
}

/// a_i^+ a_j^+ a_l a_k applied right to left.
#[inline]
fn two_body(state: u64, i: usize, j: usize, k: usize, l: usize) -> Option<(f64, u64)> {
    let (s1, t1) = annihilate(state, k)?;
    let (s2, t2) = annihilate(t1, l)?;
    let (s3, t3) = create(t2, j)?;
    let (s4, t4) = create(t3, i)?;
    Some((s1 * s2 * s3 * s4, t4))
}

/// Dense Hamiltonian action on a sector coefficient vector.
pub fn apply_hamiltonian(data: &IntegralData, psi: &[f64]) -> Result<Vec<f64>> {
    let d = data.d();
    let basis = sector_basis(d, data.n_elec());
    if basis.len() != psi.len() {
        return Err(Error::Shape(format!(
            "coefficient vector has {} entries, sector has {}",
            psi.len(),
            basis.len()
        )));
    }
    let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let mut out = vec![0.0; basis.len()];
    for (col, &s) in basis.iter().enumerate() {
        let c = psi[col];
        if c == 0.0 {
            continue;
        }
        for j in 0..d {
            let Some((sign_j, tj)) = annihilate(s, j) else {
                continue;
            };
            for i in 0..d {
                let tij = data.t().get(i, j);
                if tij == 0.0 {
                    continue;
                }
                if let Some((sign_i, t)) = create(tj, i) {
                    out[index[&t]] += sign_j * sign_i * tij * c;
                }
            }
        }
        for k in 0..d {
            for l in 0..d {
                let Some((skl, tkl)) = annihilate(s, k).and_then(|(sk, tk)| {
                    annihilate(tk, l).map(|(sl, tl)| (sk * sl, tl))
                }) else {
                    continue;
                };
                for j in 0..d {
                    let Some((sj, tj)) = create(tkl, j) else {
                        continue;
                    };
                    for i in 0..d {
                        let v = data.v(i, j, k, l);
                        if v == 0.0 {
                            continue;
                        }
                        if let Some((si, t)) = create(tj, i) {
                            out[index[&t]] += skl * sj * si * v * c;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One- and two-body reduced density matrices of an arbitrary sector state:
/// gamma_{ij} = <a_i^+ a_j> and the pair matrix with entries
/// <a_i^+ a_j^+ a_l a_k> at (pair(i,j), pair(k,l)) for i<j, k<l.
pub fn state_rdms(d: usize, n_elec: usize, psi: &[f64]) -> Result<(SymMatrix, SymMatrix)> {
    let basis = sector_basis(d, n_elec);
    if basis.len() != psi.len() {
        return Err(Error::Shape(format!(
            "coefficient vector has {} entries, sector has {}",
            psi.len(),
            basis.len()
        )));
    }
    let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(k, &s)| (s, k)).collect();

    let mut gamma = SymMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for (col, &s) in basis.iter().enumerate() {
                if psi[col] == 0.0 {
                    continue;
                }
                if let Some((sj, t)) = annihilate(s, j) {
                    if let Some((si, t2)) = create(t, i) {
                        acc += sj * si * psi[index[&t2]] * psi[col];
                    }
                }
            }
            gamma.set(i, j, acc);
        }
    }

    let map = PairIndexMap::new(d);
    let np = map.len();
    let mut pair_gamma = SymMatrix::zeros(np);
    for p in 0..np {
        let (i, j) = map.pair(p);
        for q in p..np {
            let (k, l) = map.pair(q);
            let mut acc = 0.0;
            for (col, &s) in basis.iter().enumerate() {
                if psi[col] == 0.0 {
                    continue;
                }
                if let Some((sign, t)) = two_body(s, i, j, k, l) {
                    acc += sign * psi[index[&t]] * psi[col];
                }
            }
            pair_gamma.set(p, q, acc);
        }
    }
    Ok((gamma, pair_gamma))
}

/// Ground state of the fixed-N sector together with its density matrices.
#[derive(Clone, Debug)]
pub struct FciSolution {
    pub energy: f64,
    pub gamma: SymMatrix,
    /// Pair-indexed two-body density matrix over strict pairs i < j.
    pub pair_gamma: SymMatrix,
    /// Ground-state coefficients over the ascending-bitmask basis.
    pub coefficients: Vec<f64>,
}

/// Builds the sector Hamiltonian densely, diagonalizes it and returns the
/// lowest eigenvalue with the ground state's density matrices. The sector
/// may hold at most 10^5 determinants.
pub fn fci_oracle(data: &IntegralData) -> Result<FciSolution> {
    let d = data.d();
    let n_elec = data.n_elec();
    let dim128 = sector_dimension(d, n_elec);
    if dim128 > SECTOR_CAP {
        return Err(Error::SectorTooLarge {
            d,
            n: n_elec,
            size: dim128,
        });
    }
    let basis = sector_basis(d, n_elec);
    let dim = basis.len();
    let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(k, &s)| (s, k)).collect();

    let mut h = Mat::zeros(dim, dim);
    for (col, &s) in basis.iter().enumerate() {
        for j in 0..d {
            let Some((sj, tj)) = annihilate(s, j) else {
                continue;
            };
            for i in 0..d {
                let tij = data.t().get(i, j);
                if tij == 0.0 {
                    continue;
                }
                if let Some((si, t)) = create(tj, i) {
                    let row = index[&t];
                    h.set(row, col, h.get(row, col) + sj * si * tij);
                }
            }
        }
        for k in 0..d {
            for l in 0..d {
                let Some((skl, tkl)) = annihilate(s, k).and_then(|(sk, tk)| {
                    annihilate(tk, l).map(|(sl, tl)| (sk * sl, tl))
                }) else {
                    continue;
                };
                for j in 0..d {
                    let Some((sjj, tj)) = create(tkl, j) else {
                        continue;
                    };
                    for i in 0..d {
                        let v = data.v(i, j, k, l);
                        if v == 0.0 {
                            continue;
                        }
                        if let Some((si, t)) = create(tj, i) {
                            let row = index[&t];
                            h.set(row, col, h.get(row, col) + skl * sjj * si * v);
                        }
                    }
                }
            }
        }
    }

    let hsym = SymMatrix::from_mat_symmetrized(&h);
    let dec = spectral_decompose(&hsym)?;
    let energy = *dec.lambda.last().expect("sector is nonempty");
    let psi: Vec<f64> = (0..dim).map(|r| dec.q.get(r, dim - 1)).collect();
    let (gamma, pair_gamma) = state_rdms(d, n_elec, &psi)?;
    Ok(FciSolution {
        energy,
        gamma,
        pair_gamma,
        coefficients: psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn sector_sizes() {
        assert_eq!(sector_dimension(4, 2), 6);
        assert_eq!(sector_dimension(6, 3), 20);
        assert_eq!(sector_dimension(8, 4), 70);
    }

    #[test]
    fn basis_is_ascending_and_complete() {
        let b = sector_basis(4, 2);
        assert_eq!(b.len(), 6);
        for w in b.windows(2) {
            assert!(w[0] < w[1]);
        }
        for s in b {
            assert_eq!(s.count_ones(), 2);
        }
    }

    #[test]
    fn one_electron_no_interaction_ground_state_is_min_eigenvalue() {
        // d=2, N=1, V=0: the sector Hamiltonian is T itself
        let t = SymMatrix::from_fn(2, |i, j| if i == j { (i as f64) - 0.3 } else { 0.45 });
        let v = vec![0.0; 16];
        let data = IntegralData::new(2, 1, t.clone(), v).unwrap();
        let sol = fci_oracle(&data).unwrap();
        let dec = spectral_decompose(&t).unwrap();
        assert!((sol.energy - dec.lambda[1]).abs() <= 1e-12);
    }

    #[test]
    fn full_shell_energy_matches_closed_form() {
        // d=4, N=4: single determinant |1111>; the energy is
        // sum_i T_ii + sum_{i != j} (V_{ij,ij} - V_{ij,ji})
        let data = instances::random_hermitian_integrals(4, 4, 100);
        let sol = fci_oracle(&data).unwrap();
        let mut expect: f64 = (0..4).map(|i| data.t().get(i, i)).sum();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    expect += data.v(i, j, i, j) - data.v(i, j, j, i);
                }
            }
        }
        assert!((sol.energy - expect).abs() <= 1e-10 * expect.abs().max(1.0));
    }

    #[test]
    fn gamma_is_representable() {
        let data = instances::random_hermitian_integrals(4, 2, 101);
        let sol = fci_oracle(&data).unwrap();
        let n_elec = 2.0;
        assert!((sol.gamma.trace() - n_elec).abs() <= 1e-10);
        let dec = spectral_decompose(&sol.gamma).unwrap();
        for &l in &dec.lambda {
            assert!(l >= -1e-10 && l <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn energy_is_linear_in_rdms() {
        let data = instances::random_hermitian_integrals(4, 2, 102);
        let sol = fci_oracle(&data).unwrap();
        let e = data.energy_of(&sol.gamma, &sol.pair_gamma);
        assert!((e - sol.energy).abs() <= 1e-10 * sol.energy.abs().max(1.0));
    }

    #[test]
    fn trace_identities_of_the_pair_matrix() {
        let data = instances::random_hermitian_integrals(6, 3, 103);
        let sol = fci_oracle(&data).unwrap();
        let n = 3.0;
        assert!((sol.pair_gamma.trace() - n * (n - 1.0) / 2.0).abs() <= 1e-10);
        // partial trace: sum_k Gamma_{ik,jk} = (N-1) gamma_{ij}
        let map = PairIndexMap::new(6);
        for i in 0..6 {
            for j in i..6 {
                let mut acc = 0.0;
                for k in 0..6 {
                    if let (Some((p, sp)), Some((q, sq))) = (map.signed(i, k), map.signed(j, k)) {
                        acc += sp * sq * sol.pair_gamma.get(p, q);
                    }
                }
                assert!(
                    (acc - (n - 1.0) * sol.gamma.get(i, j)).abs() <= 1e-10,
                    "partial trace violated at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn oversized_sector_is_rejected() {
        let t = SymMatrix::zeros(40);
        let v = vec![0.0; 40 * 40 * 40 * 40];
        let data = IntegralData::new(40, 20, t, v).unwrap();
        assert!(matches!(
            fci_oracle(&data),
            Err(Error::SectorTooLarge { .. })
        ));
    }

    #[test]
    fn hamiltonian_action_matches_oracle_energy() {
        let data = instances::random_hermitian_integrals(4, 2, 104);
        let sol = fci_oracle(&data).unwrap();
        let hpsi = apply_hamiltonian(&data, &sol.coefficients).unwrap();
        let e: f64 = hpsi
            .iter()
            .zip(sol.coefficients.iter())
            .map(|(a, b)| a * b)
            .sum();
        assert!((e - sol.energy).abs() <= 1e-10 * sol.energy.abs().max(1.0));
    }
}
