//! Adaptive semi-smooth Newton method on the splitting's fixed-point
//! residual.
//!
//! The generalized Jacobian of F at Z is J = M + D(I - 2M), where M is the
//! directional derivative of the cone projection (a Hadamard-weighted
//! congruence per block) and D = I - A*A. The regularized system
//! (J + mu I) S = -F collapses, through the binomial inverse identity, to an
//! m-by-m symmetric positive semidefinite system solved by conjugate
//! gradients; trial steps are accepted directly, corrected by a hyperplane
//! projection, or replaced by a plain splitting sweep.

use std::time::Instant;

use crate::firstorder::{drs_iterate, prox_affine, DrsState, FirstOrderParams, RANK_EPS};
use crate::sdpmodel::{residuals_normalized, NormalizedProblem};
use crate::symcore::{
    decompose_blocks, project_from_decomps, BlockKind, Mat, SpectralDecomp, SymBlockElement,
    SymMatrix,
};
use crate::trace::{SolveResult, Stage, TraceRow};
use crate::{Error, Result};

/// Parameters of the Newton loop. `eta_p_tol`/`eta_d_tol` are the stopping
/// thresholds; the named profiles carry the published pairs.
#[derive(Clone, Debug)]
pub struct NewtonParams {
    pub tau: f64,
    pub nu: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda_floor: f64,
    pub lambda0: f64,
    pub cg_max: usize,
    pub warmup_iters: usize,
    pub eta_p_tol: f64,
    pub eta_d_tol: f64,
    /// Newton iteration budget after the warmup.
    pub max_iter: usize,
    /// First-order parameters for the warmup phase (penalty bounds included).
    pub first_order: FirstOrderParams,
}

impl Default for NewtonParams {
    fn default() -> Self {
        NewtonParams {
            tau: 0.1,
            nu: 0.9,
            eta1: 0.2,
            eta2: 0.8,
            gamma1: 2.0,
            gamma2: 10.0,
            lambda_floor: 1e-6,
            lambda0: 1.0,
            cg_max: 300,
            warmup_iters: 300,
            eta_p_tol: 1e-6,
            eta_d_tol: 1e-6,
            max_iter: 2000,
            first_order: FirstOrderParams::default(),
        }
    }
}

impl NewtonParams {
    /// Lower-accuracy profile: eta_p < 3e-6 and eta_d < 3e-7.
    pub fn profile_l() -> Self {
        NewtonParams {
            eta_p_tol: 3e-6,
            eta_d_tol: 3e-7,
            ..Default::default()
        }
    }

    /// High-accuracy dual profile: eta_p < 1e-4 and eta_d < 1e-9, with the
    /// penalty clamp raised tenfold to bias toward larger penalties.
    pub fn profile_h() -> Self {
        let mut p = NewtonParams {
            eta_p_tol: 1e-4,
            eta_d_tol: 1e-9,
            ..Default::default()
        };
        p.first_order.t_min = 1e-3;
        p.first_order.t_max = 1e5;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tau > 0.0
            && self.tau < 1.0
            && self.nu > 0.0
            && self.nu < 1.0
            && self.eta1 > 0.0
            && self.eta1 <= self.eta2
            && self.eta2 < 1.0
            && self.gamma1 > 1.0
            && self.gamma1 <= self.gamma2
            && self.lambda_floor > 0.0
            && self.lambda0 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(
                "Newton parameters violate their range constraints".into(),
            ))
        }
    }
}

/// Per-block generalized Jacobian data at a point Z: the spectral
/// decomposition with the Hadamard weight table k_ij = l_i/(l_i - l_j) on
/// alpha x alphabar, or 0/1 derivative weights for vector blocks.
#[derive(Clone, Debug)]
pub enum BlockJacobian {
    Matrix {
        decomp: SpectralDecomp,
        /// k_ij for i in alpha, j in alphabar, row major |alpha| x |alphabar|.
        kweights: Vec<f64>,
    },
    Diag {
        weights: Vec<f64>,
    },
}

/// Generalized Jacobian of the cone projection at Z plus the regularization
/// weight mu of the current Newton system.
#[derive(Clone, Debug)]
pub struct JacobianInfo {
    blocks: Vec<BlockJacobian>,
    pub mu: f64,
}

impl JacobianInfo {
    /// Builds the weight tables from precomputed block decompositions of Z.
    /// Box blocks are rejected: callers convert them to split form first.
    pub fn from_decomps(
        z: &SymBlockElement,
        decomps: &[Option<SpectralDecomp>],
        mu: f64,
    ) -> Result<Self> {
        let spec = z.spec();
        let mut blocks = Vec::with_capacity(spec.nblocks());
        for j in 0..spec.nblocks() {
            match spec.block(j) {
                BlockKind::Psd(_) => {
                    let decomp = decomps[j].as_ref().expect("psd decomp").clone();
                    let na = decomp.nonneg_count();
                    let nb = decomp.dim() - na;
                    let mut kweights = vec![0.0; na * nb];
                    for i in 0..na {
                        let li = decomp.lambda[i];
                        for jb in 0..nb {
                            let lj = decomp.lambda[na + jb];
                            kweights[i * nb + jb] = li / (li - lj);
                        }
                    }
                    blocks.push(BlockJacobian::Matrix { decomp, kweights });
                }
                BlockKind::Box01(_) => {
                    return Err(Error::InvalidParam(
                        "box blocks must be split before building Newton data".into(),
                    ))
                }
                BlockKind::Nonneg(_) => {
                    let weights = z
                        .block_coords(j)
                        .iter()
                        .map(|&v| if v >= 0.0 { 1.0 } else { 0.0 })
                        .collect();
                    blocks.push(BlockJacobian::Diag { weights });
                }
                BlockKind::Free(k) => {
                    blocks.push(BlockJacobian::Diag {
                        weights: vec![1.0; k],
                    });
                }
            }
        }
        Ok(JacobianInfo { blocks, mu })
    }

    pub fn new(z: &SymBlockElement, mu: f64) -> Result<Self> {
        let decomps = decompose_blocks(z)?;
        Self::from_decomps(z, &decomps, mu)
    }

    /// M(Z)[S]: the directional derivative of the cone projection.
    pub fn apply_proj_jacobian(&self, s: &SymBlockElement) -> SymBlockElement {
        self.apply_weighted(s, false)
    }

    /// T(Z)[S]: the kernel of the inverse identities, with eigen weights
    /// w -> mu w / (mu + 1 - w) applied to the projection-derivative table.
    pub fn apply_newton_kernel(&self, s: &SymBlockElement) -> SymBlockElement {
        self.apply_weighted(s, true)
    }

    fn apply_weighted(&self, s: &SymBlockElement, kernel: bool) -> SymBlockElement {
        let mut out = s.clone();
        for (j, bj) in self.blocks.iter().enumerate() {
            match bj {
                BlockJacobian::Diag { weights } => {
                    for (c, w) in out.block_coords_mut(j).iter_mut().zip(weights.iter()) {
                        let weight = if kernel { kernel_weight(*w, self.mu) } else { *w };
                        *c *= weight;
                    }
                }
                BlockJacobian::Matrix { decomp, kweights } => {
                    let sm = s.block_matrix(j);
                    let table = |i: usize, jb: usize| {
                        let k = kweights[i * (decomp.dim() - decomp.nonneg_count()) + jb];
                        if kernel {
                            kernel_weight(k, self.mu)
                        } else {
                            k
                        }
                    };
                    let res = weighted_congruence(decomp, &sm, &table);
                    out.set_block_matrix(j, &res);
                }
            }
        }
        out
    }
}

/// Eigen weight transform w -> mu w / (mu + 1 - w); maps 1 to 1 and 0 to 0.
#[inline]
fn kernel_weight(w: f64, mu: f64) -> f64 {
    mu * w / (mu + 1.0 - w)
}

/// Q (Omega o (Q^T S Q)) Q^T where Omega is 1 on alpha x alpha, `table` on
/// alpha x alphabar and 0 on alphabar x alphabar. Uses the rank-|alpha| form
/// when alpha is the smaller side and the complementary form otherwise; the
/// two agree to roundoff.
fn weighted_congruence(
    decomp: &SpectralDecomp,
    s: &SymMatrix,
    table: &dyn Fn(usize, usize) -> f64,
) -> SymMatrix {
    let n = decomp.dim();
    let na = decomp.nonneg_count();
    let nb = n - na;
    if na == 0 {
        return SymMatrix::zeros(n);
    }
    if nb == 0 {
        return s.clone();
    }
    if na <= n / 2 {
        weighted_small_side(decomp, s, table, false)
    } else {
        // complementary form: S - congruence with weights 1 - table over the
        // swapped index split
        let mut res = weighted_small_side(decomp, s, table, true);
        let mut out = s.clone();
        res.scale(-1.0);
        out.axpy(1.0, &res);
        out
    }
}

/// The G + G^T evaluation. With `complement` false this is the weighted
/// congruence driven by the alpha side; with true it is the complementary
/// congruence (weights 1 - table) driven by the alphabar side.
fn weighted_small_side(
    decomp: &SpectralDecomp,
    s: &SymMatrix,
    table: &dyn Fn(usize, usize) -> f64,
    complement: bool,
) -> SymMatrix {
    let n = decomp.dim();
    let na = decomp.nonneg_count();
    let q = &decomp.q;
    let (drive, other): (std::ops::Range<usize>, std::ops::Range<usize>) = if complement {
        (na..n, 0..na)
    } else {
        (0..na, na..n)
    };
    let nd = drive.len();
    let no = other.len();

    // U = Q_drive^T S  (nd x n)
    let mut u = Mat::zeros(nd, n);
    for (r, qc) in drive.clone().enumerate() {
        for col in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += q.get(i, qc) * s.get(i, col);
            }
            u.set(r, col, acc);
        }
    }
    // W1 = U Q_drive (nd x nd), W2 = weights o (U Q_other) (nd x no)
    let mut w1 = Mat::zeros(nd, nd);
    for r in 0..nd {
        for (c, qc) in drive.clone().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                acc += u.get(r, i) * q.get(i, qc);
            }
            w1.set(r, c, acc);
        }
    }
    let mut w2 = Mat::zeros(nd, no);
    for r in 0..nd {
        for (c, qc) in other.clone().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                acc += u.get(r, i) * q.get(i, qc);
            }
            let w = if complement {
                1.0 - table(c, r)
            } else {
                table(r, c)
            };
            w2.set(r, c, w * acc);
        }
    }
    // P = 0.5 W1 Q_drive^T + W2 Q_other^T  (nd x n)
    let mut p = Mat::zeros(nd, n);
    for r in 0..nd {
        for col in 0..n {
            let mut acc = 0.0;
            for (c, qc) in drive.clone().enumerate() {
                acc += 0.5 * w1.get(r, c) * q.get(col, qc);
            }
            for (c, qc) in other.clone().enumerate() {
                acc += w2.get(r, c) * q.get(col, qc);
            }
            p.set(r, col, acc);
        }
    }
    // G = Q_drive P, result = G + G^T
    let mut g = Mat::zeros(n, n);
    for i in 0..n {
        for (r, qc) in drive.clone().enumerate() {
            let qi = q.get(i, qc);
            if qi == 0.0 {
                continue;
            }
            for col in 0..n {
                let val = g.get(i, col) + qi * p.get(r, col);
                g.set(i, col, val);
            }
        }
    }
    SymMatrix::from_fn(n, |i, j| g.get(i, j) + g.get(j, i))
}

/// Full regularized Jacobian action (J + mu I)[S] with
/// J = M + (I - A*A)(I - 2M).
pub fn apply_regularized_jacobian(
    info: &JacobianInfo,
    prob: &NormalizedProblem,
    s: &SymBlockElement,
) -> SymBlockElement {
    let ms = info.apply_proj_jacobian(s);
    let mut v = s.clone();
    v.axpy(-2.0, &ms);
    let av = prob.apply(&v);
    let corr = prob.apply_adjoint(&av);
    let mut out = ms;
    out.axpy(1.0, &v);
    out.axpy(-1.0, &corr);
    out.axpy(info.mu, s);
    out
}

/// Newton direction result. `satisfied` reports whether the inexactness
/// contract ||r|| <= tau min(1, lambda ||F||_F ||S||_F) was met within the
/// iteration budget.
#[derive(Clone, Debug)]
pub struct NewtonDirection {
    pub s: SymBlockElement,
    pub r_norm: f64,
    pub cg_iters: usize,
    pub satisfied: bool,
}

/// Solves (J + mu I) S = -F through the reduced m x m system
/// (mu^2/(2mu+1) I + A T A*) d = -A (mu/(2mu+1) I - T) F by conjugate
/// gradients, then recovers S = (mu I + T)(-F + A* d) / (mu (mu+1)).
pub fn newton_direction(
    info: &JacobianInfo,
    f: &SymBlockElement,
    lambda: f64,
    fnorm: f64,
    prob: &NormalizedProblem,
    params: &NewtonParams,
) -> Result<NewtonDirection> {
    let mu = info.mu;
    if fnorm <= 1e-300 {
        return Ok(NewtonDirection {
            s: SymBlockElement::zeros(f.spec()),
            r_norm: 0.0,
            cg_iters: 0,
            satisfied: true,
        });
    }

    let m = prob.m();
    // the reduced system is m x m; in exact arithmetic CG terminates within
    // m steps, so the budget allows a few restarts beyond that for roundoff
    let cg_cap = params.cg_max.max(1);
    let scale_reduced = mu * mu / (2.0 * mu + 1.0);
    let scale_front = mu / (2.0 * mu + 1.0);

    // right-hand side a = -A (mu/(2mu+1) F - T F)
    let tf = info.apply_newton_kernel(f);
    let mut front = f.scaled(scale_front);
    front.axpy(-1.0, &tf);
    let a: Vec<f64> = prob.apply(&front).iter().map(|v| -v).collect();

    let reduced_apply = |d: &[f64]| -> Vec<f64> {
        let ad = prob.apply_adjoint(d);
        let tad = info.apply_newton_kernel(&ad);
        let mut out = prob.apply(&tad);
        for (o, di) in out.iter_mut().zip(d.iter()) {
            *o += scale_reduced * di;
        }
        out
    };

    let recover = |d: &[f64]| -> SymBlockElement {
        let mut v = prob.apply_adjoint(d);
        v.axpy(-1.0, f);
        let tv = info.apply_newton_kernel(&v);
        let mut s = v.scaled(mu);
        s.axpy(1.0, &tv);
        s.scale(1.0 / (mu * (mu + 1.0)));
        s
    };

    // conjugate gradients with a shrinking target until the full residual
    // contract holds; every outer pass restarts from a freshly computed
    // residual so roundoff drift cannot accumulate. The target combines the
    // inexactness bound with a relative forcing term: the bound alone turns
    // vacuous once lambda ||F||^2 passes 1 and would let CG exit at d = 0.
    let mut d = vec![0.0; m];
    let mut iters = 0usize;
    let a_norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let forcing = fnorm.sqrt().min(0.1);
    let mut tol = (params.tau * (lambda * fnorm * fnorm).min(1.0)).min(forcing * a_norm);
    loop {
        let mut r: Vec<f64> = {
            let rd = reduced_apply(&d);
            a.iter().zip(rd.iter()).map(|(ai, ri)| ai - ri).collect()
        };
        let mut p = r.clone();
        let mut rs: f64 = r.iter().map(|v| v * v).sum();
        while rs.sqrt() > tol && iters < cg_cap {
            let ap = reduced_apply(&p);
            let pap: f64 = p.iter().zip(ap.iter()).map(|(x, y)| x * y).sum();
            if pap <= 0.0 {
                return Err(Error::NumericalFault(format!(
                    "conjugate gradients observed nonpositive curvature {pap:e}"
                )));
            }
            let alpha = rs / pap;
            for (di, pi) in d.iter_mut().zip(p.iter()) {
                *di += alpha * pi;
            }
            for (ri, api) in r.iter_mut().zip(ap.iter()) {
                *ri -= alpha * api;
            }
            let rs_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rs_new / rs;
            for (pi, ri) in p.iter_mut().zip(r.iter()) {
                *pi = ri + beta * *pi;
            }
            rs = rs_new;
            iters += 1;
        }
        let s = recover(&d);
        let mut resid = apply_regularized_jacobian(info, prob, &s);
        resid.axpy(1.0, f);
        let r_norm = resid.norm();
        let bound = params.tau * (lambda * fnorm * s.norm()).min(1.0);
        if r_norm <= bound {
            return Ok(NewtonDirection {
                s,
                r_norm,
                cg_iters: iters,
                satisfied: true,
            });
        }
        if iters >= cg_cap || rs.sqrt() <= 1e-17 * (1.0 + tol) {
            return Ok(NewtonDirection {
                s,
                r_norm,
                cg_iters: iters,
                satisfied: false,
            });
        }
        tol *= 0.1;
    }
}

/// Projection of Z onto the hyperplane {W : <F(U), W - U> = 0}, which
/// separates Z from the solution set whenever the trial step made progress.
pub fn hyperplane_project(
    z: &SymBlockElement,
    u: &SymBlockElement,
    fu: &SymBlockElement,
) -> Result<SymBlockElement> {
    let denom = fu.dot(fu);
    if denom == 0.0 {
        return Err(Error::InvalidParam(
            "hyperplane projection needs a nonzero residual".into(),
        ));
    }
    let offset = fu.dot(&z.minus(u)) / denom;
    let mut v = z.clone();
    v.axpy(-offset, fu);
    Ok(v)
}

/// Spectral-norm estimate of a block element: a few power-iteration rounds
/// per matrix block, exact maxima on vector blocks, floored by the norm
/// relation ||B||_2 >= ||B||_F / sqrt(dim).
fn spec_norm_estimate(f: &SymBlockElement, rounds: usize) -> f64 {
    let spec = f.spec();
    let mut best = 0.0f64;
    let mut total_side = 0usize;
    for j in 0..spec.nblocks() {
        match spec.block(j) {
            BlockKind::Psd(n) | BlockKind::Box01(n) => {
                total_side += n;
                if n == 0 {
                    continue;
                }
                let b = f.block_matrix(j);
                let mut v = vec![1.0 / (n as f64).sqrt(); n];
                let mut est = 0.0;
                for _ in 0..rounds {
                    let mut w = vec![0.0; n];
                    for (i, wi) in w.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (k, vk) in v.iter().enumerate() {
                            acc += b.get(i, k) * vk;
                        }
                        *wi = acc;
                    }
                    let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm <= 1e-300 {
                        est = 0.0;
                        break;
                    }
                    est = norm;
                    for (vi, wi) in v.iter_mut().zip(w.iter()) {
                        *vi = wi / norm;
                    }
                }
                best = best.max(est);
            }
            BlockKind::Nonneg(k) | BlockKind::Free(k) => {
                total_side += k;
                for &c in f.block_coords(j) {
                    best = best.max(c.abs());
                }
            }
        }
    }
    let floor = f.norm() / (total_side.max(1) as f64).sqrt();
    best.max(floor)
}

/// Iteration state of the Newton loop. The cached (F, X, U, decomps) always
/// belong to the current Z.
#[derive(Clone, Debug)]
pub struct AssnState {
    pub z: SymBlockElement,
    pub t: f64,
    pub lambda: f64,
    pub xi: f64,
    pub f: SymBlockElement,
    pub x: SymBlockElement,
    pub u: SymBlockElement,
    pub fnorm: f64,
    decomps: Vec<Option<SpectralDecomp>>,
    /// X of the previous iterate, for the dual recovery difference term.
    prev_x: SymBlockElement,
    pub consecutive_unsuccessful: usize,
    pub f_evals: usize,
}

struct Evaluation {
    f: SymBlockElement,
    x: SymBlockElement,
    u: SymBlockElement,
    fnorm: f64,
    decomps: Vec<Option<SpectralDecomp>>,
}

fn evaluate(z: &SymBlockElement, t: f64, prob: &NormalizedProblem) -> Result<Evaluation> {
    let decomps = decompose_blocks(z)?;
    let x = project_from_decomps(z, &decomps);
    // U = prox_tf(2X - Z) with the shared reflection arithmetic
    let mut refl = z.minus(&x);
    refl.scale(-1.0);
    refl.axpy(1.0, &x);
    let u = prox_affine(&refl, t, prob);
    let f = x.minus(&u);
    let fnorm = f.norm();
    Ok(Evaluation {
        f,
        x,
        u,
        fnorm,
        decomps,
    })
}

impl AssnState {
    pub fn from_z(
        z: SymBlockElement,
        t: f64,
        params: &NewtonParams,
        prob: &NormalizedProblem,
    ) -> Result<Self> {
        let ev = evaluate(&z, t, prob)?;
        Ok(AssnState {
            prev_x: ev.x.clone(),
            z,
            t,
            lambda: params.lambda0,
            xi: ev.fnorm,
            f: ev.f,
            x: ev.x,
            u: ev.u,
            fnorm: ev.fnorm,
            decomps: ev.decomps,
            consecutive_unsuccessful: 0,
            f_evals: 1,
        })
    }

    fn adopt(&mut self, z: SymBlockElement, ev: Evaluation) {
        self.prev_x = std::mem::replace(&mut self.x, ev.x);
        self.z = z;
        self.f = ev.f;
        self.u = ev.u;
        self.fnorm = ev.fnorm;
        self.decomps = ev.decomps;
    }

    /// Recovered (X, S, y) of the current iterate.
    pub fn recover(&self, prob: &NormalizedProblem) -> (SymBlockElement, SymBlockElement, Vec<f64>) {
        let x = self.x.clone();
        let mut s = x.minus(&self.z);
        s.scale(1.0 / self.t);
        let mut w = s.clone();
        w.axpy(1.0, prob.cost());
        let mut dx = self.prev_x.minus(&x);
        dx.scale(1.0 / self.t);
        w.axpy(1.0, &dx);
        let y = prob.apply(&w);
        (x, s, y)
    }

    /// Moves the splitting penalty from t to t_new, rescaling the negative
    /// part of Z so its projection is preserved exactly: since X = P(Z) and
    /// X - Z lie on complementary eigenspaces, Z' = X + (t'/t)(Z - X) keeps
    /// P(Z') = X while the implied dual slack scales to the new penalty.
    pub fn rescale_penalty(&mut self, t_new: f64, prob: &NormalizedProblem) -> Result<()> {
        if t_new <= 0.0 {
            return Err(Error::InvalidParam("penalty must be positive".into()));
        }
        let ratio = t_new / self.t;
        let mut z_new = self.z.minus(&self.x);
        z_new.scale(ratio);
        z_new.axpy(1.0, &self.x);
        let ev = evaluate(&z_new, t_new, prob)?;
        self.f_evals += 1;
        self.z = z_new;
        self.t = t_new;
        self.f = ev.f;
        self.x = ev.x;
        self.u = ev.u;
        self.fnorm = ev.fnorm;
        self.decomps = ev.decomps;
        // the residual scale changed with the penalty, so the success
        // reference is re-anchored
        self.xi = ev.fnorm;
        Ok(())
    }

    pub fn block_ranks(&self) -> Vec<usize> {
        self.decomps
            .iter()
            .flatten()
            .map(|d| d.lambda.iter().filter(|&&l| l >= RANK_EPS).count())
            .collect()
    }
}

/// What one Newton iteration did.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub stage: Stage,
    pub mu: f64,
    pub rho: Option<f64>,
    pub cg_iters: usize,
    pub newton_residual: f64,
}

/// One iteration of the adaptive loop: solve the regularized system, try
/// U = Z + S, and either accept it (sufficient residual decrease), fall back
/// to the hyperplane projection or a plain sweep, or leave Z unchanged. The
/// regularization weight lambda shrinks on strong steps and grows on poor
/// ones.
pub fn assn_iterate(
    state: &mut AssnState,
    params: &NewtonParams,
    prob: &NormalizedProblem,
) -> Result<StepOutcome> {
    assn_step_with_direction(state, params, prob, None)
}

/// Test hook: `forced` overrides the Newton direction.
fn assn_step_with_direction(
    state: &mut AssnState,
    params: &NewtonParams,
    prob: &NormalizedProblem,
    forced: Option<SymBlockElement>,
) -> Result<StepOutcome> {
    let spec_est = spec_norm_estimate(&state.f, 5);
    let mu = state.lambda * spec_est;
    let (s, cg_iters, r_norm) = match forced {
        Some(s) => (s, 0, f64::NAN),
        None => {
            let info = JacobianInfo::from_decomps(&state.z, &state.decomps, mu)?;
            let dir = newton_direction(&info, &state.f, state.lambda, state.fnorm, prob, params)?;
            (dir.s, dir.cg_iters, dir.r_norm)
        }
    };

    let u_trial = state.z.plus(&s);
    let ev_u = evaluate(&u_trial, state.t, prob)?;
    state.f_evals += 1;

    if ev_u.fnorm <= params.nu * state.xi {
        state.xi = ev_u.fnorm;
        state.adopt(u_trial, ev_u);
        state.consecutive_unsuccessful = 0;
        // accepted steps relax the regularization; without this no branch
        // ever decreases lambda once the ratio test stops reaching eta2, and
        // a single early escalation would pin the method in a damped regime
        state.lambda = (state.lambda / 2.0).max(params.lambda_floor);
        return Ok(StepOutcome {
            stage: Stage::Newton,
            mu,
            rho: None,
            cg_iters,
            newton_residual: r_norm,
        });
    }

    let s_sq = s.dot(&s);
    let rho = if s_sq > 0.0 {
        -ev_u.f.dot(&s) / s_sq
    } else {
        -f64::INFINITY
    };

    let stage;
    if rho >= params.eta1 {
        let v = hyperplane_project(&state.z, &u_trial, &ev_u.f)?;
        let ev_v = evaluate(&v, state.t, prob)?;
        state.f_evals += 1;
        if ev_v.fnorm <= state.fnorm {
            state.adopt(v, ev_v);
            stage = Stage::Projection;
        } else {
            let w = state.z.minus(&state.f);
            let ev_w = evaluate(&w, state.t, prob)?;
            state.f_evals += 1;
            state.adopt(w, ev_w);
            stage = Stage::DrsFallback;
        }
        state.consecutive_unsuccessful = 0;
    } else {
        stage = Stage::Unsuccessful;
        state.consecutive_unsuccessful += 1;
    }

    // strong steps shrink the regularization, poor directions grow it; the
    // middle branch keeps lambda, which stops benign projection phases from
    // inflating it geometrically
    state.lambda = if rho >= params.eta2 {
        (state.lambda / 2.0).max(params.lambda_floor)
    } else if rho >= params.eta1 {
        state.lambda
    } else {
        state.lambda * params.gamma2
    };

    Ok(StepOutcome {
        stage,
        mu,
        rho: Some(rho),
        cg_iters,
        newton_residual: r_norm,
    })
}

/// Full solve: a first-order warmup followed by the adaptive Newton loop,
/// stopping when both infeasibilities reach the profile thresholds. Box
/// blocks are not supported here; convert the problem with
/// [`crate::sdpmodel::convert_box_to_split`] first (the assembler and the
/// file reader only produce split forms).
pub fn run_assn(prob: &NormalizedProblem, params: &NewtonParams) -> Result<SolveResult> {
    params.validate()?;
    if prob.cone().has_box() {
        return Err(Error::InvalidParam(
            "Newton solver requires the split form; convert box blocks first".into(),
        ));
    }
    let start = Instant::now();
    let mut trace: Vec<TraceRow> = Vec::new();

    // warmup: plain first-order sweeps with penalty adaptation
    let fo_params = FirstOrderParams {
        max_iter: params.warmup_iters,
        tol_primal: params.eta_p_tol,
        tol_dual: params.eta_d_tol,
        ..params.first_order.clone()
    };
    let mut fo_state = DrsState::new(
        SymBlockElement::zeros(prob.cone()),
        fo_params.t0,
        prob,
    )?;
    let mut f_evals = 0usize;
    let mut warm_converged = false;
    let mut pending_t: Option<f64> = None;
    for k in 1..=fo_params.max_iter {
        match pending_t.take() {
            Some(t2) => {
                let t1 = fo_state.t;
                crate::firstorder::drs_iterate_rescaled(&mut fo_state, t1, t2, prob)?;
            }
            None => {
                drs_iterate(&mut fo_state, prob)?;
            }
        }
        f_evals += 1;
        let (x, s, y) = crate::firstorder::recover_unchecked(&mut fo_state, prob)?;
        let rep = residuals_normalized(&x, &y, &s, prob);
        let norm_f = fo_state.cur_x.minus(&fo_state.cur_u).norm();
        trace.push(TraceRow {
            iter: k,
            stage: Stage::Warmup,
            eta_p: rep.eta_p,
            eta_d: rep.eta_d,
            eta_g: rep.eta_g,
            norm_f,
            penalty: fo_state.t,
            lambda: None,
            mu: None,
            cg_iters: None,
            ranks: Vec::new(),
            f_evals_total: f_evals,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        if rep.eta_p <= params.eta_p_tol && rep.eta_d <= params.eta_d_tol {
            warm_converged = true;
            break;
        }
        let ratio = rep.eta_p / rep.eta_d.max(f64::MIN_POSITIVE);
        fo_state.ratio_window.push_back(ratio);
        while fo_state.ratio_window.len() > fo_params.window {
            fo_state.ratio_window.pop_front();
        }
        if k % fo_params.window == 0 && fo_state.ratio_window.len() == fo_params.window {
            let t_new = crate::firstorder::update_penalty(&fo_state.ratio_window, fo_state.t, &fo_params);
            if t_new != fo_state.t {
                pending_t = Some(t_new);
                fo_state.ratio_window.clear();
            }
        }
    }
    let warm_iters = fo_state.iter;

    // Newton phase; the penalty stays frozen at the warmup's final value
    let mut state = AssnState::from_z(fo_state.z.clone(), fo_state.t, params, prob)?;
    state.f_evals = f_evals + 1;
    let mut converged = warm_converged;
    let mut max_unsuccessful = 0usize;
    let mut iterations = warm_iters;

    if !converged {
        let mut ratio_window: std::collections::VecDeque<f64> = std::collections::VecDeque::new();
        for k in 1..=params.max_iter {
            let outcome = assn_iterate(&mut state, params, prob)?;
            max_unsuccessful = max_unsuccessful.max(state.consecutive_unsuccessful);
            iterations = warm_iters + k;
            let (x, s, y) = state.recover(prob);
            let rep = residuals_normalized(&x, &y, &s, prob);
            trace.push(TraceRow {
                iter: iterations,
                stage: outcome.stage,
                eta_p: rep.eta_p,
                eta_d: rep.eta_d,
                eta_g: rep.eta_g,
                norm_f: state.fnorm,
                penalty: state.t,
                lambda: Some(state.lambda),
                mu: Some(outcome.mu),
                cg_iters: Some(outcome.cg_iters),
                ranks: state.block_ranks(),
                f_evals_total: state.f_evals,
                wall_seconds: start.elapsed().as_secs_f64(),
            });
            if rep.eta_p <= params.eta_p_tol && rep.eta_d <= params.eta_d_tol {
                converged = true;
                break;
            }
            // the same balancing rule as the first-order loop keeps the
            // penalty moving while Newton iterations run
            ratio_window.push_back(rep.eta_p / rep.eta_d.max(f64::MIN_POSITIVE));
            while ratio_window.len() > params.first_order.window {
                ratio_window.pop_front();
            }
            if k % params.first_order.window == 0
                && ratio_window.len() == params.first_order.window
            {
                let t_new = crate::firstorder::update_penalty(
                    &ratio_window,
                    state.t,
                    &params.first_order,
                );
                if t_new != state.t {
                    state.rescale_penalty(t_new, prob)?;
                    ratio_window.clear();
                }
            }
        }
    }

    let (x, s, y) = state.recover(prob);
    let report = residuals_normalized(&x, &y, &s, prob);
    let sides: Vec<usize> = prob
        .cone()
        .blocks()
        .iter()
        .filter(|b| b.is_matrix())
        .map(|b| b.side())
        .collect();
    Ok(SolveResult {
        y_original: prob.restore_y(&y),
        x,
        s,
        y,
        report,
        iterations,
        converged,
        f_evals: state.f_evals,
        final_norm_f: state.fnorm,
        max_consecutive_unsuccessful: max_unsuccessful,
        block_ranks: sides.into_iter().zip(state.block_ranks()).collect(),
        trace,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firstorder::fixed_point_residual;
    use crate::instances;
    use crate::sdpmodel::normalize;
    use crate::symcore::ConeSpec;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn psd_element(spec: &std::sync::Arc<ConeSpec>, m: &SymMatrix) -> SymBlockElement {
        let mut e = SymBlockElement::zeros(spec);
        e.set_block_matrix(0, m);
        e
    }

    #[test]
    fn profiles_carry_published_thresholds() {
        let l = NewtonParams::profile_l();
        assert_eq!(l.eta_p_tol, 3e-6);
        assert_eq!(l.eta_d_tol, 3e-7);
        let h = NewtonParams::profile_h();
        assert_eq!(h.eta_p_tol, 1e-4);
        assert_eq!(h.eta_d_tol, 1e-9);
        assert_eq!(h.first_order.t_min, 1e-3);
        assert_eq!(h.first_order.t_max, 1e5);
    }

    #[test]
    fn params_validate_ranges() {
        let mut p = NewtonParams::default();
        assert!(p.validate().is_ok());
        p.nu = 1.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn proj_jacobian_is_identity_on_definite_blocks() {
        let spec = ConeSpec::new(vec![BlockKind::Psd(5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        // strictly positive definite Z
        let a = random_sym(5, &mut rng);
        let g = a.as_mat().tr_matmul(&a.as_mat());
        let mut zpos = SymMatrix::from_fn(5, |i, j| g.get(i, j));
        for i in 0..5 {
            zpos.add_to(i, i, 1.0);
        }
        let z = psd_element(&spec, &zpos);
        let info = JacobianInfo::new(&z, 0.5).unwrap();
        let s = psd_element(&spec, &random_sym(5, &mut rng));
        let ms = info.apply_proj_jacobian(&s);
        assert!(ms.minus(&s).norm() <= 1e-12 * s.norm());
        let ts = info.apply_newton_kernel(&s);
        assert!(ts.minus(&s).norm() <= 1e-12 * s.norm());

        // strictly negative definite: both maps vanish
        let mut zneg = zpos.clone();
        zneg.scale(-1.0);
        let zn = psd_element(&spec, &zneg);
        let info_n = JacobianInfo::new(&zn, 0.5).unwrap();
        assert!(info_n.apply_proj_jacobian(&s).norm() <= 1e-14);
        assert!(info_n.apply_newton_kernel(&s).norm() <= 1e-14);
    }

    #[test]
    fn proj_jacobian_matches_finite_differences() {
        let spec = ConeSpec::new(vec![BlockKind::Psd(6)]);
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        // distinct nonzero eigenvalues keep the projection differentiable
        let z = psd_element(&spec, &random_sym(6, &mut rng));
        let s = psd_element(&spec, &random_sym(6, &mut rng));
        let info = JacobianInfo::new(&z, 1.0).unwrap();
        let ms = info.apply_proj_jacobian(&s);

        let h = 1e-6;
        let mut zh = z.clone();
        zh.axpy(h, &s);
        let p1 = crate::symcore::project_cone(&zh).unwrap();
        let p0 = crate::symcore::project_cone(&z).unwrap();
        let mut fd = p1.minus(&p0);
        fd.scale(1.0 / h);
        let err = fd.minus(&ms).norm() / ms.norm().max(1.0);
        assert!(err <= 1e-5, "finite-difference mismatch {err}");
    }

    #[test]
    fn kernel_paths_agree_on_both_sides_of_the_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        for n in [4usize, 7] {
            let spec = ConeSpec::new(vec![BlockKind::Psd(n)]);
            for shift in [-1.5f64, 1.5] {
                // shift moves most eigenvalues to one side, exercising both
                // the alpha-driven and complement-driven paths
                let mut zm = random_sym(n, &mut rng);
                for i in 0..n {
                    zm.add_to(i, i, shift);
                }
                let z = psd_element(&spec, &zm);
                let s = psd_element(&spec, &random_sym(n, &mut rng));
                let info = JacobianInfo::new(&z, 0.7).unwrap();
                let decomp = match &info.blocks[0] {
                    BlockJacobian::Matrix { decomp, .. } => decomp.clone(),
                    _ => unreachable!(),
                };
                let table = |i: usize, jb: usize| match &info.blocks[0] {
                    BlockJacobian::Matrix { kweights, .. } => {
                        let nb = decomp.dim() - decomp.nonneg_count();
                        kernel_weight(kweights[i * nb + jb], 0.7)
                    }
                    _ => unreachable!(),
                };
                if decomp.nonneg_count() == 0 || decomp.nonneg_count() == n {
                    continue;
                }
                let small = weighted_small_side(&decomp, &s.block_matrix(0), &table, false);
                let mut large = weighted_small_side(&decomp, &s.block_matrix(0), &table, true);
                large.scale(-1.0);
                large.axpy(1.0, &s.block_matrix(0));
                let mut diff = small.clone();
                diff.axpy(-1.0, &large);
                assert!(diff.frob_norm() <= 1e-11 * small.frob_norm().max(1.0));
            }
        }
    }

    #[test]
    fn kweights_stay_in_unit_interval() {
        let spec = ConeSpec::new(vec![BlockKind::Psd(8)]);
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let z = psd_element(&spec, &random_sym(8, &mut rng));
        let mu = 0.3;
        let info = JacobianInfo::new(&z, mu).unwrap();
        match &info.blocks[0] {
            BlockJacobian::Matrix { kweights, .. } => {
                for &k in kweights {
                    assert!(k > 0.0 && k <= 1.0, "k weight {k} outside (0,1]");
                    let l = kernel_weight(k, mu);
                    assert!((0.0..=1.0).contains(&l) && l <= k + 1e-15);
                }
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn jacobian_is_positive_semidefinite() {
        let inst = instances::random_normalized_sdp(&[6], 8, 65);
        let prob = normalize(inst).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        for _ in 0..20 {
            let z = SymBlockElement::from_coords(
                prob.cone(),
                (0..prob.cone().svec_dim())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect(),
            )
            .unwrap();
            let s = SymBlockElement::from_coords(
                prob.cone(),
                (0..prob.cone().svec_dim())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect(),
            )
            .unwrap();
            let info = JacobianInfo::new(&z, 0.0).unwrap();
            let js = apply_regularized_jacobian(&info, &prob, &s);
            let quad = s.dot(&js);
            assert!(quad >= -1e-10 * s.dot(&s));
        }
    }

    #[test]
    fn hyperplane_projection_identities() {
        let spec = ConeSpec::new(vec![BlockKind::Psd(4)]);
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let z = psd_element(&spec, &random_sym(4, &mut rng));
        let u = psd_element(&spec, &random_sym(4, &mut rng));
        let fu = psd_element(&spec, &random_sym(4, &mut rng));
        let v = hyperplane_project(&z, &u, &fu).unwrap();
        // residue check: <F(U), V - U> = 0
        let res = fu.dot(&v.minus(&u)).abs();
        assert!(res <= 1e-10 * fu.norm() * v.minus(&u).norm().max(1.0));
        // a point already on the hyperplane stays put
        let v2 = hyperplane_project(&v, &u, &fu).unwrap();
        assert!(v2.minus(&v).norm() <= 1e-12 * v.norm().max(1.0));
        // zero residual is rejected
        let zero = SymBlockElement::zeros(&spec);
        assert!(hyperplane_project(&z, &u, &zero).is_err());
    }

    #[test]
    fn hyperplane_projection_moves_toward_solution() {
        let inst = instances::constructed_optimum(8, 10, 2, 68);
        let prob = normalize(inst.problem.clone()).unwrap();
        let z_star = inst.z_star();
        let mut rng = ChaCha8Rng::seed_from_u64(69);
        let mut z = z_star.clone();
        for c in z.coords_mut() {
            *c += rng.gen_range(-0.3..0.3);
        }
        // a plain sweep as trial step
        let (f, _, _) = fixed_point_residual(&z, 1.0, &prob).unwrap();
        let u = z.minus(&f);
        let (fu, _, _) = fixed_point_residual(&u, 1.0, &prob).unwrap();
        if fu.dot(&z.minus(&u)) > 0.0 {
            let v = hyperplane_project(&z, &u, &fu).unwrap();
            assert!(v.minus(&z_star).norm() < z.minus(&z_star).norm());
        }
    }

    #[test]
    fn newton_residual_contract_on_converged_solves() {
        let inst = instances::constructed_optimum(8, 10, 2, 70);
        let prob = normalize(inst.problem.clone()).unwrap();
        let params = NewtonParams::default();
        let mut z = inst.z_star();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for c in z.coords_mut() {
            *c += rng.gen_range(-0.05..0.05);
        }
        let state = AssnState::from_z(z, 1.0, &params, &prob).unwrap();
        let spec_est = spec_norm_estimate(&state.f, 5);
        let mu = params.lambda0 * spec_est;
        let info = JacobianInfo::from_decomps(&state.z, &state.decomps, mu).unwrap();
        let dir =
            newton_direction(&info, &state.f, params.lambda0, state.fnorm, &prob, &params)
                .unwrap();
        assert!(dir.satisfied);
        let bound = params.tau * (params.lambda0 * state.fnorm * dir.s.norm()).min(1.0);
        assert!(dir.r_norm <= bound);
    }

    #[test]
    fn near_optimum_newton_step_succeeds() {
        let inst = instances::constructed_optimum(8, 10, 2, 72);
        let prob = normalize(inst.problem.clone()).unwrap();
        let params = NewtonParams::default();
        let mut z = inst.z_star();
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for c in z.coords_mut() {
            *c += rng.gen_range(-1e-4..1e-4);
        }
        let mut state = AssnState::from_z(z, 1.0, &params, &prob).unwrap();
        let before = state.fnorm;
        let outcome = assn_iterate(&mut state, &params, &prob).unwrap();
        assert_eq!(outcome.stage, Stage::Newton);
        assert!(state.fnorm <= params.nu * before);
    }

    #[test]
    fn forced_bad_direction_is_unsuccessful() {
        let inst = instances::constructed_optimum(8, 10, 2, 74);
        let prob = normalize(inst.problem.clone()).unwrap();
        let params = NewtonParams::default();
        let mut z = inst.z_star();
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        for c in z.coords_mut() {
            *c += rng.gen_range(-0.2..0.2);
        }
        let mut state = AssnState::from_z(z, 1.0, &params, &prob).unwrap();
        let z_before = state.z.clone();
        let lambda_before = state.lambda;
        // moving along +F goes against the monotone field, so rho < 0
        let forced = state.f.clone();
        let outcome =
            assn_step_with_direction(&mut state, &params, &prob, Some(forced)).unwrap();
        assert_eq!(outcome.stage, Stage::Unsuccessful);
        assert!(outcome.rho.unwrap() < 0.0);
        assert_eq!(state.z.coords(), z_before.coords());
        assert!((state.lambda - params.gamma2 * lambda_before).abs() <= 1e-15);
        assert!(state.lambda > params.gamma1 * lambda_before);
        assert_eq!(state.consecutive_unsuccessful, 1);
    }

    #[test]
    fn local_model_error_is_second_order() {
        // at a Z with distinct nonzero eigenvalues F is differentiable, so
        // ||F(Z+S) - F(Z) - J S|| should shrink quadratically; halve ||S||
        // three times and fit the observed order
        let inst = instances::constructed_optimum(6, 8, 2, 76);
        let prob = normalize(inst.problem.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut z = inst.z_star();
        for c in z.coords_mut() {
            *c += rng.gen_range(-0.3..0.3);
        }
        let (f0, _, _) = fixed_point_residual(&z, 1.0, &prob).unwrap();
        let info = JacobianInfo::new(&z, 0.0).unwrap();
        let dir = SymBlockElement::from_coords(
            prob.cone(),
            (0..prob.cone().svec_dim())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        )
        .unwrap();
        let mut errors = Vec::new();
        let mut h = 1e-2;
        for _ in 0..4 {
            let mut zh = z.clone();
            zh.axpy(h, &dir);
            let (fh, _, _) = fixed_point_residual(&zh, 1.0, &prob).unwrap();
            let mut model = info.apply_proj_jacobian(&dir);
            // J = M + D(I - 2M)
            let mut v = dir.clone();
            v.axpy(-2.0, &model);
            let av = prob.apply(&v);
            let corr = prob.apply_adjoint(&av);
            model.axpy(1.0, &v);
            model.axpy(-1.0, &corr);
            model.scale(h);
            let mut err = fh.minus(&f0);
            err.axpy(-1.0, &model);
            errors.push(err.norm());
            h /= 2.0;
        }
        let mut orders = Vec::new();
        for w in errors.windows(2) {
            if w[1] > 0.0 {
                orders.push((w[0] / w[1]).log2());
            }
        }
        let mean_order = orders.iter().sum::<f64>() / orders.len() as f64;
        assert!(
            mean_order >= 1.7,
            "observed order {mean_order}, errors {errors:?}"
        );
    }

    #[test]
    fn run_assn_solves_constructed_instance() {
        let inst = instances::constructed_optimum(10, 15, 2, 90);
        let prob = normalize(inst.problem.clone()).unwrap();
        let params = NewtonParams {
            warmup_iters: 100,
            ..NewtonParams::profile_l()
        };
        let result = run_assn(&prob, &params).unwrap();
        assert!(result.converged);
        assert!(result.report.eta_p <= 3e-6);
        assert!(result.report.eta_d <= 3e-7);
        assert!((result.report.dual_obj - inst.optimal_value).abs() <= 1e-5);
    }

    #[test]
    fn warm_started_run_is_mostly_newton_steps() {
        let inst = instances::constructed_optimum(10, 15, 2, 91);
        let prob = normalize(inst.problem.clone()).unwrap();
        let params = NewtonParams {
            warmup_iters: 300,
            eta_p_tol: 1e-9,
            eta_d_tol: 1e-9,
            ..NewtonParams::default()
        };
        let result = run_assn(&prob, &params).unwrap();
        assert!(result.final_norm_f <= 1e-8);
        let newton_rows = result
            .trace
            .iter()
            .filter(|r| r.stage == Stage::Newton)
            .count();
        let post_warmup = result
            .trace
            .iter()
            .filter(|r| r.stage != Stage::Warmup)
            .count();
        assert!(post_warmup > 0);
        assert!(
            newton_rows * 10 >= post_warmup * 6,
            "only {newton_rows} of {post_warmup} iterations were Newton steps"
        );
    }
}
