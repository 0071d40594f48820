//! Shared test oracles: an independent dual-ADMM implementation, dense
//! reconstructions of the Newton operators, and a small Gaussian solver.

#![allow(dead_code)]

use rdmsdp::sdpmodel::NormalizedProblem;
use rdmsdp::ssnewton::JacobianInfo;
use rdmsdp::symcore::{project_cone, BlockKind, SymBlockElement};

/// Dual ADMM iteration written directly from its defining subproblems, kept
/// independent of the splitting implementation. The cone projection for the
/// dual slack uses the dual cone: PSD blocks project to PSD, nonnegative
/// blocks clamp, free blocks force zero.
pub struct AdmmOracle {
    pub y: Vec<f64>,
    pub s: SymBlockElement,
    pub x: SymBlockElement,
    pub mu: f64,
}

impl AdmmOracle {
    pub fn new(prob: &NormalizedProblem, mu: f64) -> Self {
        AdmmOracle {
            y: vec![0.0; prob.m()],
            s: SymBlockElement::zeros(prob.cone()),
            x: SymBlockElement::zeros(prob.cone()),
            mu,
        }
    }

    fn project_dual_cone(v: &SymBlockElement) -> SymBlockElement {
        let mut out = project_cone(v).expect("projection");
        for j in 0..v.spec().nblocks() {
            if let BlockKind::Free(_) = v.spec().block(j) {
                for c in out.block_coords_mut(j) {
                    *c = 0.0;
                }
            }
        }
        out
    }

    /// One sweep: the y minimizer in closed form (rows are orthonormal),
    /// the S projection, then the multiplier update.
    pub fn step(&mut self, prob: &NormalizedProblem) {
        let mu = self.mu;
        // y = A(S + C + X/mu) - b/mu
        let mut w = self.s.clone();
        w.axpy(1.0, prob.cost());
        w.axpy(1.0 / mu, &self.x);
        let mut y = prob.apply(&w);
        for (yi, bi) in y.iter_mut().zip(prob.b.iter()) {
            *yi -= bi / mu;
        }
        // S = P_{dual cone}(A* y - C - X/mu)
        let mut arg = prob.apply_adjoint(&y);
        arg.axpy(-1.0, prob.cost());
        arg.axpy(-1.0 / mu, &self.x);
        let s = Self::project_dual_cone(&arg);
        // X <- X + mu (S - A* y + C)
        let mut resid = s.clone();
        resid.axpy(-1.0, &prob.apply_adjoint(&y));
        resid.axpy(1.0, prob.cost());
        self.x.axpy(mu, &resid);
        self.y = y;
        self.s = s;
    }
}

/// Dense matrix of a linear operator on svec coordinates, built by applying
/// it to the canonical basis.
pub fn dense_operator(
    dim: usize,
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
) -> Vec<Vec<f64>> {
    let mut cols = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        cols.push(apply(&e));
    }
    // transpose columns into rows
    let mut rows = vec![vec![0.0; dim]; dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            rows[r][c] = v;
        }
    }
    rows
}

/// Dense action of the regularized Jacobian (J + mu I) via the library's
/// weighted operators, one basis vector at a time.
pub fn dense_regularized_jacobian(
    info: &JacobianInfo,
    prob: &NormalizedProblem,
    dim: usize,
) -> Vec<Vec<f64>> {
    dense_operator(dim, |e| {
        let elem = SymBlockElement::from_coords(prob.cone(), e.to_vec()).unwrap();
        rdmsdp::ssnewton::apply_regularized_jacobian(info, prob, &elem)
            .coords()
            .to_vec()
    })
}

/// Plain Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
            .unwrap();
        m.swap(k, piv);
        rhs.swap(k, piv);
        let d = m[k][k];
        assert!(d.abs() > 1e-14, "dense solve hit a singular pivot");
        for i in k + 1..n {
            let f = m[i][k] / d;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= m[i][j] * x[j];
        }
        x[i] = acc / m[i][i];
    }
    x
}

/// Dense mat-vec for row-major dense matrices.
pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x.iter()).map(|(r, v)| r * v).sum())
        .collect()
}

/// Dense matrix product.
pub fn dense_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i][j] += ail * b[l][j];
            }
        }
    }
    c
}

pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let col = dense_solve(a, &e);
        for (r, &v) in col.iter().enumerate() {
            inv[r][k] = v;
        }
    }
    inv
}
