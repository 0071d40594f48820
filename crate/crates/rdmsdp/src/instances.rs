//! Seeded instance generators shared by the examples, tests and the
//! acceptance suite.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::rdm::IntegralData;
use crate::sdpmodel::{OperatorBuilder, SdpProblem};
use crate::symcore::{
    project_cone, svec, svec_dim, BlockKind, ConeSpec, Mat, SymBlockElement, SymMatrix,
};

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random orthogonal matrix as a product of n Householder reflectors.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> Mat {
    let mut q = Mat::identity(n);
    for _ in 0..n {
        let v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv < 1e-12 {
            continue;
        }
        // q <- (I - 2 v v^T / v'v) q
        for col in 0..n {
            let mut dot = 0.0;
            for r in 0..n {
                dot += v[r] * q.get(r, col);
            }
            let f = 2.0 * dot / vv;
            for r in 0..n {
                let val = q.get(r, col) - f * v[r];
                q.set(r, col, val);
            }
        }
    }
    q
}

/// Orthonormalizes dense rows in place with two modified Gram-Schmidt
/// passes. Panics if the rows are numerically dependent, which the random
/// generators here never produce.
fn orthonormalize_rows(rows: &mut [Vec<f64>]) {
    for _pass in 0..2 {
        for i in 0..rows.len() {
            for j in 0..i {
                let dot: f64 = rows[i]
                    .iter()
                    .zip(rows[j].iter())
                    .map(|(a, b)| a * b)
                    .sum();
                let rj = rows[j].clone();
                for (a, b) in rows[i].iter_mut().zip(rj.iter()) {
                    *a -= dot * b;
                }
            }
            let norm: f64 = rows[i].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm > 1e-10, "random rows became dependent");
            for a in rows[i].iter_mut() {
                *a /= norm;
            }
        }
    }
}

/// Instance with a known primal-dual optimum, built from a chosen
/// complementary pair: X* psd of the requested rank, S* psd supported on the
/// orthogonal complement, b = A X* and C = A* y* - S*. The rows of A are
/// orthonormal, so `normalize` keeps them untouched and Z* = X* - t S* is a
/// fixed point of the splitting for any positive t.
#[derive(Clone, Debug)]
pub struct ConstructedInstance {
    pub problem: SdpProblem,
    pub x_star: SymBlockElement,
    pub s_star: SymBlockElement,
    pub y_star: Vec<f64>,
    pub optimal_value: f64,
    pub t_star: f64,
}

impl ConstructedInstance {
    pub fn z_star(&self) -> SymBlockElement {
        let mut z = self.x_star.clone();
        z.axpy(-self.t_star, &self.s_star);
        z
    }
}

pub fn constructed_optimum(n: usize, m: usize, rank_x: usize, seed: u64) -> ConstructedInstance {
    assert!(rank_x < n);
    assert!(m <= svec_dim(n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = ConeSpec::new(vec![BlockKind::Psd(n)]);

    let q = random_orthogonal(n, &mut rng);
    let mut x_mat = SymMatrix::zeros(n);
    for k in 0..rank_x {
        let w: f64 = rng.gen_range(0.5..2.0);
        for i in 0..n {
            for j in 0..=i {
                x_mat.add_to(i, j, w * q.get(i, k) * q.get(j, k));
            }
        }
    }
    let mut s_mat = SymMatrix::zeros(n);
    for k in rank_x..n {
        let w: f64 = rng.gen_range(0.5..2.0);
        for i in 0..n {
            for j in 0..=i {
                s_mat.add_to(i, j, w * q.get(i, k) * q.get(j, k));
            }
        }
    }

    let dim = svec_dim(n);
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..dim).map(|_| gaussian(&mut rng)).collect())
        .collect();
    orthonormalize_rows(&mut rows);

    let mut x_star = SymBlockElement::zeros(&spec);
    x_star.set_block_matrix(0, &x_mat);
    let mut s_star = SymBlockElement::zeros(&spec);
    s_star.set_block_matrix(0, &s_mat);
    let y_star: Vec<f64> = (0..m).map(|_| gaussian(&mut rng)).collect();

    let mut builder = OperatorBuilder::new(&spec, m);
    for (p, row) in rows.iter().enumerate() {
        builder.add_svec_row(p, row);
    }
    let operator = {
        let mut op = builder.build();
        let b = op.apply(&x_star);
        op.b = b;
        op
    };
    let astar_y = operator.apply_adjoint(&y_star, &spec);
    let mut cost = astar_y.clone();
    cost.axpy(-1.0, &s_star);

    let optimal_value = y_star
        .iter()
        .zip(operator.b.iter())
        .map(|(a, b)| a * b)
        .sum();
    ConstructedInstance {
        problem: SdpProblem::new(spec, operator, cost),
        x_star,
        s_star,
        y_star,
        optimal_value,
        t_star: 1.0,
    }
}

/// Random SDP with orthonormal rows, a feasible right-hand side (b = A X0
/// for a random PSD X0) and a random cost element.
pub fn random_normalized_sdp(psd_sizes: &[usize], m: usize, seed: u64) -> SdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<BlockKind> = psd_sizes.iter().map(|&n| BlockKind::Psd(n)).collect();
    let spec = ConeSpec::new(blocks);
    let dim = spec.svec_dim();
    assert!(m <= dim);

    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..dim).map(|_| gaussian(&mut rng)).collect())
        .collect();
    orthonormalize_rows(&mut rows);

    let mut builder = OperatorBuilder::new(&spec, m);
    for (p, row) in rows.iter().enumerate() {
        builder.add_svec_row(p, row);
    }

    let raw = SymBlockElement::from_coords(
        &spec,
        (0..dim).map(|_| gaussian(&mut rng)).collect(),
    )
    .expect("dimension matches by construction");
    let x0 = project_cone(&raw).expect("random element decomposes");

    let mut cost = SymBlockElement::zeros(&spec);
    for c in cost.coords_mut() {
        *c = gaussian(&mut rng);
    }

    let mut op = builder.build();
    op.b = op.apply(&x0);
    SdpProblem::new(spec, op, cost)
}

/// The smallest meaningful instance: max <-I, X> s.t. tr X = 1 over psd(n),
/// normalized rows. The optimum is -1, attained by any unit-trace psd X.
pub fn trace_instance(n: usize) -> SdpProblem {
    let spec = ConeSpec::new(vec![BlockKind::Psd(n)]);
    let mut builder = OperatorBuilder::new(&spec, 1);
    let scale = 1.0 / (n as f64).sqrt();
    let row: Vec<f64> = svec(&SymMatrix::identity(n))
        .iter()
        .map(|v| v * scale)
        .collect();
    builder.add_svec_row(0, &row);
    builder.set_rhs(0, scale);
    let mut cost = SymBlockElement::zeros(&spec);
    let mut neg_i = SymMatrix::identity(n);
    neg_i.scale(-1.0);
    cost.set_block_matrix(0, &neg_i);
    SdpProblem::new(spec, builder.build(), cost)
}

/// Random one- and two-electron integrals with the Hermiticity the
/// Hamiltonian requires (T symmetric, V_{ij,kl} = V_{kl,ij}).
pub fn random_hermitian_integrals(d: usize, n_elec: usize, seed: u64) -> IntegralData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
    let mut v = vec![0.0; d * d * d * d];
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * d + j) * d + k) * d + l;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    if idx(i, j, k, l) <= idx(k, l, i, j) {
                        let val = rng.gen_range(-0.5..0.5);
                        v[idx(i, j, k, l)] = val;
                        v[idx(k, l, i, j)] = val;
                    }
                }
            }
        }
    }
    IntegralData::new(d, n_elec, t, v).expect("construction satisfies the symmetries")
}

/// Spin-conserving integrals: d/2 spatial orbitals each carrying an up and a
/// down spin orbital (up block first). T is block diagonal in spin with the
/// same spatial part in both blocks; V couples only equal spins in each of
/// its two index pairings.
pub fn random_spin_conserving_integrals(d: usize, n_elec: usize, seed: u64) -> IntegralData {
    assert!(d % 2 == 0, "spin-orbital count must be even");
    let ns = d / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_spatial = SymMatrix::from_fn(ns, |_, _| rng.gen_range(-1.0..1.0));
    let mut v_spatial = vec![0.0; ns * ns * ns * ns];
    let sidx = |i: usize, j: usize, k: usize, l: usize| ((i * ns + j) * ns + k) * ns + l;
    for i in 0..ns {
        for j in 0..ns {
            for k in 0..ns {
                for l in 0..ns {
                    if sidx(i, j, k, l) <= sidx(k, l, i, j) {
                        let val = rng.gen_range(-0.5..0.5);
                        v_spatial[sidx(i, j, k, l)] = val;
                        v_spatial[sidx(k, l, i, j)] = val;
                    }
                }
            }
        }
    }

    let spin = |p: usize| p / ns; // 0 = up block, 1 = down block
    let spatial = |p: usize| p % ns;
    let t = SymMatrix::from_fn(d, |p, q| {
        if spin(p) == spin(q) {
            t_spatial.get(spatial(p), spatial(q))
        } else {
            0.0
        }
    });
    let mut v = vec![0.0; d * d * d * d];
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * d + j) * d + k) * d + l;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    // V_{ij,kl}: i pairs with k, j pairs with l
                    if spin(i) == spin(k) && spin(j) == spin(l) {
                        v[idx(i, j, k, l)] =
                            v_spatial[sidx(spatial(i), spatial(j), spatial(k), spatial(l))];
                    }
                }
            }
        }
    }
    IntegralData::new(d, n_elec, t, v).expect("construction satisfies the symmetries")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpmodel::residuals;

    #[test]
    fn constructed_optimum_satisfies_kkt() {
        let inst = constructed_optimum(8, 10, 2, 5);
        let rep = residuals(&inst.x_star, &inst.y_star, &inst.s_star, &inst.problem);
        assert!(rep.eta_p <= 1e-12);
        assert!(rep.eta_d <= 1e-12);
        assert!(rep.eta_g <= 1e-12);
        assert!((inst.x_star.dot(&inst.s_star)).abs() <= 1e-12);
        assert!((rep.dual_obj - inst.optimal_value).abs() <= 1e-12);
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = random_orthogonal(7, &mut rng);
        let g = q.tr_matmul(&q);
        for i in 0..7 {
            for j in 0..7 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - target).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn normalized_sdp_rows_are_orthonormal() {
        let prob = random_normalized_sdp(&[5, 3], 9, 7);
        let op = &prob.operator;
        for p in 0..9 {
            for q in p..9 {
                let (pc, pv) = op.row(p);
                let mut dense = std::collections::HashMap::new();
                for (c, v) in pc.iter().zip(pv.iter()) {
                    dense.insert(*c, *v);
                }
                let (qc, qv) = op.row(q);
                let mut acc = 0.0;
                for (c, v) in qc.iter().zip(qv.iter()) {
                    acc += dense.get(c).copied().unwrap_or(0.0) * v;
                }
                let target = if p == q { 1.0 } else { 0.0 };
                assert!((acc - target).abs() <= 1e-12);
            }
        }
    }
}
