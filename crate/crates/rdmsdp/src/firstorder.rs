//! Douglas-Rachford splitting on the primal SDP, with the equivalent dual
//! ADMM view used for iterate recovery, adaptive penalty balancing and the
//! rescaled sweep that keeps the fixed-point variable consistent after a
//! penalty change.
//!
//! One sweep with penalty t is
//!   X = P_cone(Z),  U = prox_{tf}(2X - Z),  Z' = Z + U - X,
//! where f is the linear cost plus the indicator of {A X = b}. The sweep is
//! the fixed-point map of F(Z) = X - U; zeros of F correspond to optimal
//! solutions.

use std::collections::VecDeque;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::sdpmodel::{residuals_normalized, NormalizedProblem};
use crate::symcore::{decompose_blocks, project_from_decomps, SpectralDecomp, SymBlockElement};
use crate::trace::{SolveResult, Stage, TraceRow};
use crate::{Error, Result};

/// Eigenvalue threshold for the numerical-rank diagnostics.
pub const RANK_EPS: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct FirstOrderParams {
    /// Initial penalty.
    pub t0: f64,
    /// Imbalance threshold for penalty updates.
    pub delta: f64,
    /// Multiplicative penalty factor in (0,1).
    pub gamma: f64,
    /// Length of the eta_p/eta_d history window.
    pub window: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Seeded random starting point instead of Z = 0.
    pub random_start: Option<u64>,
}

impl Default for FirstOrderParams {
    fn default() -> Self {
        FirstOrderParams {
            t0: 1.0,
            delta: 1.2,
            gamma: 0.9,
            window: 8,
            t_min: 1e-4,
            t_max: 1e4,
            max_iter: 20_000,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            random_start: None,
        }
    }
}

/// Proximal step of the affine part: the gradient shift by tC followed by
/// the projection onto {A X = b}, which is exact because the rows are
/// orthonormal.
pub fn prox_affine(y: &SymBlockElement, t: f64, prob: &NormalizedProblem) -> SymBlockElement {
    let mut w = y.clone();
    w.axpy(t, prob.cost());
    let mut r = prob.apply(&w);
    for (ri, bi) in r.iter_mut().zip(prob.b.iter()) {
        *ri -= bi;
    }
    let corr = prob.apply_adjoint(&r);
    w.axpy(-1.0, &corr);
    w
}

/// Reflection 2X - Z evaluated as X - (Z - X); both sweep variants share
/// this exact arithmetic.
fn reflect(x: &SymBlockElement, z: &SymBlockElement) -> SymBlockElement {
    let mut q = z.minus(x);
    q.scale(-1.0);
    q.axpy(1.0, x);
    q
}

/// Fixed-point residual F(Z) = P_cone(Z) - prox_{tf}(2 P_cone(Z) - Z),
/// returned together with the projection X and the affine point U.
pub fn fixed_point_residual(
    z: &SymBlockElement,
    t: f64,
    prob: &NormalizedProblem,
) -> Result<(SymBlockElement, SymBlockElement, SymBlockElement)> {
    let decomps = decompose_blocks(z)?;
    let x = project_from_decomps(z, &decomps);
    let u = prox_affine(&reflect(&x, z), t, prob);
    let f = x.minus(&u);
    Ok((f, x, u))
}

/// Splitting iteration state.
#[derive(Clone, Debug)]
pub struct DrsState {
    pub z: SymBlockElement,
    pub t: f64,
    pub iter: usize,
    /// X from the most recent sweep (the projection of the previous Z).
    pub cur_x: SymBlockElement,
    /// U from the most recent sweep.
    pub cur_u: SymBlockElement,
    /// Recent eta_p/eta_d ratios for penalty balancing.
    pub ratio_window: VecDeque<f64>,
    /// Decomposition of the current z, shared between the recovery and the
    /// next sweep so each iteration decomposes once.
    cache: Option<ProjectionCache>,
}

#[derive(Clone, Debug)]
struct ProjectionCache {
    decomps: Vec<Option<SpectralDecomp>>,
    x: SymBlockElement,
}

impl DrsState {
    pub fn new(z0: SymBlockElement, t0: f64, _prob: &NormalizedProblem) -> Result<Self> {
        let x0 = crate::symcore::project_cone(&z0)?;
        Ok(DrsState {
            z: z0,
            t: t0,
            iter: 0,
            cur_x: x0.clone(),
            cur_u: x0,
            ratio_window: VecDeque::new(),
            cache: None,
        })
    }

    fn ensure_cache(&mut self) -> Result<()> {
        if self.cache.is_none() {
            let decomps = decompose_blocks(&self.z)?;
            let x = project_from_decomps(&self.z, &decomps);
            self.cache = Some(ProjectionCache { decomps, x });
        }
        Ok(())
    }
}

/// One sweep that moves the penalty from t1 to t2; with t1 == t2 this is the
/// plain iteration (identical code path, so the outputs agree bitwise).
/// Returns the per-block numerical ranks of the new X iterate.
pub fn drs_iterate_rescaled(
    state: &mut DrsState,
    t1: f64,
    t2: f64,
    prob: &NormalizedProblem,
) -> Result<Vec<usize>> {
    if t1 <= 0.0 || t2 <= 0.0 {
        return Err(Error::InvalidParam("penalty must be positive".into()));
    }
    let ratio = t2 / t1;
    state.ensure_cache()?;
    let cache = state.cache.take().expect("cache just filled");
    let x = cache.x;
    let ranks = block_ranks(&cache.decomps);

    // q = (t2/t1) (Z - X)
    let mut q = state.z.minus(&x);
    q.scale(ratio);
    let mut arg = x.clone();
    arg.axpy(-1.0, &q);
    let u = prox_affine(&arg, t2, prob);
    let mut z_new = q;
    z_new.axpy(1.0, &u);

    state.z = z_new;
    state.t = t2;
    state.cur_x = x;
    state.cur_u = u;
    state.iter += 1;
    Ok(ranks)
}

/// One plain splitting sweep.
pub fn drs_iterate(state: &mut DrsState, prob: &NormalizedProblem) -> Result<Vec<usize>> {
    let t = state.t;
    drs_iterate_rescaled(state, t, t, prob)
}

fn block_ranks(decomps: &[Option<SpectralDecomp>]) -> Vec<usize> {
    decomps
        .iter()
        .flatten()
        .map(|d| d.lambda.iter().filter(|&&l| l >= RANK_EPS).count())
        .collect()
}

/// Recovers the dual-ADMM iterates from the splitting state after the k-th
/// sweep:
///   X^k = P(Z^k),   S^k = (X^k - Z^k)/t,
///   A* y^k = C + S^k + (P(Z^{k-1}) - X^k)/t,
/// and y is read off through A because the rows are orthonormal. S is the
/// scaled cone-complement of Z and therefore always lies in the dual cone.
pub fn recover_iterates(
    state: &mut DrsState,
    prob: &NormalizedProblem,
) -> Result<(SymBlockElement, SymBlockElement, Vec<f64>)> {
    if state.iter < 2 {
        return Err(Error::NotReady(format!(
            "iterate recovery needs two sweeps, have {}",
            state.iter
        )));
    }
    recover_unchecked(state, prob)
}

pub(crate) fn recover_unchecked(
    state: &mut DrsState,
    prob: &NormalizedProblem,
) -> Result<(SymBlockElement, SymBlockElement, Vec<f64>)> {
    state.ensure_cache()?;
    let x = state.cache.as_ref().expect("cache filled").x.clone();
    let mut s = x.minus(&state.z);
    s.scale(1.0 / state.t);

    let mut w = s.clone();
    w.axpy(1.0, prob.cost());
    let mut dx = state.cur_x.minus(&x);
    dx.scale(1.0 / state.t);
    w.axpy(1.0, &dx);
    let y = prob.apply(&w);
    Ok((x, s, y))
}

/// Penalty balancing: if the mean of eta_p/eta_d over the window exceeds
/// delta the penalty shrinks by gamma, if it falls below 1/delta it grows by
/// 1/gamma, and the result is clamped to [t_min, t_max].
pub fn update_penalty(history: &VecDeque<f64>, t: f64, params: &FirstOrderParams) -> f64 {
    if history.is_empty() {
        return t;
    }
    let mean = history.iter().sum::<f64>() / history.len() as f64;
    let mut t_new = t;
    if mean > params.delta {
        t_new = t * params.gamma;
    } else if mean < 1.0 / params.delta {
        t_new = t / params.gamma;
    }
    t_new.clamp(params.t_min, params.t_max)
}

fn starting_point(prob: &NormalizedProblem, params: &FirstOrderParams) -> SymBlockElement {
    let mut z0 = SymBlockElement::zeros(prob.cone());
    if let Some(seed) = params.random_start {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for c in z0.coords_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
    }
    z0
}

/// Runs the splitting loop until eta_p and eta_d fall below the configured
/// tolerances or the iteration budget runs out. The returned result carries
/// the recovered (X, S, y) triple and the full trace.
pub fn run_first_order(prob: &NormalizedProblem, params: &FirstOrderParams) -> Result<SolveResult> {
    let start = Instant::now();
    let mut state = DrsState::new(starting_point(prob, params), params.t0, prob)?;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut f_evals = 0usize;
    let mut converged = false;
    let mut pending_t: Option<f64> = None;
    let mut last_ranks: Vec<usize> = Vec::new();

    for k in 1..=params.max_iter {
        let ranks = match pending_t.take() {
            Some(t2) => {
                let t1 = state.t;
                drs_iterate_rescaled(&mut state, t1, t2, prob)?
            }
            None => drs_iterate(&mut state, prob)?,
        };
        f_evals += 1;
        last_ranks = ranks.clone();

        let (x, s, y) = recover_unchecked(&mut state, prob)?;
        let rep = residuals_normalized(&x, &y, &s, prob);
        let norm_f = state.cur_x.minus(&state.cur_u).norm();
        trace.push(TraceRow {
            iter: k,
            stage: Stage::Drs,
            eta_p: rep.eta_p,
            eta_d: rep.eta_d,
            eta_g: rep.eta_g,
            norm_f,
            penalty: state.t,
            lambda: None,
            mu: None,
            cg_iters: None,
            ranks,
            f_evals_total: f_evals,
            wall_seconds: start.elapsed().as_secs_f64(),
        });

        if rep.eta_p <= params.tol_primal && rep.eta_d <= params.tol_dual {
            converged = true;
            break;
        }

        let ratio = rep.eta_p / rep.eta_d.max(f64::MIN_POSITIVE);
        state.ratio_window.push_back(ratio);
        while state.ratio_window.len() > params.window {
            state.ratio_window.pop_front();
        }
        if k % params.window == 0 && state.ratio_window.len() == params.window {
            let t_new = update_penalty(&state.ratio_window, state.t, params);
            if t_new != state.t {
                pending_t = Some(t_new);
                state.ratio_window.clear();
            }
        }
    }

    let (x, s, y) = recover_unchecked(&mut state, prob)?;
    let report = residuals_normalized(&x, &y, &s, prob);
    let (f_final, _, _) = fixed_point_residual(&state.z, state.t, prob)?;
    f_evals += 1;
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
        iterations: state.iter,
        converged,
        f_evals,
        final_norm_f: f_final.norm(),
        max_consecutive_unsuccessful: 0,
        block_ranks: sides.into_iter().zip(last_ranks).collect(),
        trace,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::sdpmodel::normalize;
    use crate::symcore::{ConeSpec, SymMatrix};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::collections::VecDeque;

    fn random_element(
        spec: &std::sync::Arc<ConeSpec>,
        rng: &mut impl Rng,
    ) -> SymBlockElement {
        let coords = (0..spec.svec_dim())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        SymBlockElement::from_coords(spec, coords).unwrap()
    }

    /// Trace-constrained toy problem: max <-I, X> s.t. tr X = 1, X psd.
    fn trace_instance(n: usize) -> NormalizedProblem {
        normalize(instances::trace_instance(n)).unwrap()
    }

    #[test]
    fn prox_affine_keeps_feasible_points_with_zero_cost() {
        let mut prob = trace_instance(3);
        // zero the cost so prox is a pure projection
        let zero_cost = SymBlockElement::zeros(prob.cone());
        prob.problem.cost = zero_cost;
        // feasible point: I/3 has unit trace
        let mut y = SymBlockElement::zeros(prob.cone());
        let mut third = SymMatrix::identity(3);
        third.scale(1.0 / 3.0);
        y.set_block_matrix(0, &third);
        let out = prox_affine(&y, 0.7, &prob);
        assert!(out.minus(&y).norm() <= 1e-14);
    }

    #[test]
    fn prox_affine_output_is_feasible() {
        let prob = trace_instance(4);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let y = random_element(prob.cone(), &mut rng);
            let out = prox_affine(&y, 1.3, &prob);
            let res = prob.apply(&out);
            let bnorm = prob.b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let err: f64 = res
                .iter()
                .zip(prob.b.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-11 * bnorm.max(1.0));
        }
    }

    #[test]
    fn prox_affine_zero_penalty_is_least_squares_projection() {
        // with t = 0 the prox is the Euclidean projection onto {A X = b};
        // check the KKT system [I A*; A 0] [U; w] = [Y; b] directly
        let prob = trace_instance(3);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let y = random_element(prob.cone(), &mut rng);
        let u = prox_affine(&y, 0.0, &prob);
        // stationarity: U - Y must lie in range(A*), i.e. U - Y = A* w with
        // w = A(U - Y); feasibility: A U = b
        let d = u.minus(&y);
        let w = prob.apply(&d);
        let back = prob.apply_adjoint(&w);
        assert!(back.minus(&d).norm() <= 1e-12 * d.norm().max(1.0));
        let au = prob.apply(&u);
        for (a, b) in au.iter().zip(prob.b.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn fixed_point_residual_vanishes_at_constructed_optimum() {
        let inst = instances::constructed_optimum(10, 15, 2, 77);
        let prob = normalize(inst.problem.clone()).unwrap();
        let z_star = inst.z_star();
        let (f, _, _) = fixed_point_residual(&z_star, inst.t_star, &prob).unwrap();
        assert!(f.norm() <= 1e-10);
    }

    #[test]
    fn residual_equals_iteration_step() {
        let prob = trace_instance(4);
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let z = random_element(prob.cone(), &mut rng);
        let t = 0.9;
        let (f, _, _) = fixed_point_residual(&z, t, &prob).unwrap();
        let mut state = DrsState::new(z.clone(), t, &prob).unwrap();
        drs_iterate(&mut state, &prob).unwrap();
        let step = z.minus(&state.z);
        assert!(step.minus(&f).norm() <= 1e-13 * f.norm().max(1.0));
    }

    #[test]
    fn residual_is_monotone_operator() {
        let prob = trace_instance(5);
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for _ in 0..20 {
            let z1 = random_element(prob.cone(), &mut rng);
            let z2 = random_element(prob.cone(), &mut rng);
            let (f1, _, _) = fixed_point_residual(&z1, 1.1, &prob).unwrap();
            let (f2, _, _) = fixed_point_residual(&z2, 1.1, &prob).unwrap();
            let inner = z1.minus(&z2).dot(&f1.minus(&f2));
            assert!(inner >= -1e-10);
        }
    }

    #[test]
    fn iteration_fixed_point_stays_fixed() {
        let inst = instances::constructed_optimum(8, 10, 2, 78);
        let prob = normalize(inst.problem.clone()).unwrap();
        let z_star = inst.z_star();
        let mut state = DrsState::new(z_star.clone(), inst.t_star, &prob).unwrap();
        drs_iterate(&mut state, &prob).unwrap();
        assert!(state.z.minus(&z_star).norm() <= 1e-10);
    }

    #[test]
    fn iteration_map_is_nonexpansive() {
        let prob = trace_instance(5);
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..10 {
            let z1 = random_element(prob.cone(), &mut rng);
            let z2 = random_element(prob.cone(), &mut rng);
            let mut s1 = DrsState::new(z1.clone(), 1.0, &prob).unwrap();
            let mut s2 = DrsState::new(z2.clone(), 1.0, &prob).unwrap();
            drs_iterate(&mut s1, &prob).unwrap();
            drs_iterate(&mut s2, &prob).unwrap();
            let after = s1.z.minus(&s2.z).norm();
            let before = z1.minus(&z2).norm();
            assert!(after <= before * (1.0 + 1e-12));
        }
    }

    #[test]
    fn twenty_iterations_reduce_residual() {
        let inst = instances::random_normalized_sdp(&[6], 8, 51);
        let prob = normalize(inst).unwrap();
        let mut state = DrsState::new(
            SymBlockElement::zeros(prob.cone()),
            1.0,
            &prob,
        )
        .unwrap();
        let (f0, _, _) = fixed_point_residual(&state.z, state.t, &prob).unwrap();
        for _ in 0..20 {
            drs_iterate(&mut state, &prob).unwrap();
        }
        let (f, _, _) = fixed_point_residual(&state.z, state.t, &prob).unwrap();
        assert!(f.norm() < f0.norm());
    }

    #[test]
    fn rescaled_with_equal_penalties_matches_plain_bitwise() {
        let prob = trace_instance(4);
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let z = random_element(prob.cone(), &mut rng);
        let mut a = DrsState::new(z.clone(), 0.7, &prob).unwrap();
        let mut b = DrsState::new(z, 0.7, &prob).unwrap();
        drs_iterate(&mut a, &prob).unwrap();
        drs_iterate_rescaled(&mut b, 0.7, 0.7, &prob).unwrap();
        assert_eq!(a.z.coords(), b.z.coords());
    }

    #[test]
    fn rescaled_rejects_nonpositive_penalty() {
        let prob = trace_instance(3);
        let mut state =
            DrsState::new(SymBlockElement::zeros(prob.cone()), 1.0, &prob).unwrap();
        assert!(drs_iterate_rescaled(&mut state, 1.0, 0.0, &prob).is_err());
        assert!(drs_iterate_rescaled(&mut state, -1.0, 1.0, &prob).is_err());
    }

    /// Independent scalar evaluation of the rescaled sweep on a 2x2 block,
    /// using a closed-form 2x2 eigendecomposition.
    #[test]
    fn rescaled_step_matches_hand_evaluation() {
        let prob = trace_instance(2);
        let (t1, t2) = (0.8, 1.6);
        let mut zm = SymMatrix::zeros(2);
        zm.set(0, 0, 0.5);
        zm.set(0, 1, 0.2);
        zm.set(1, 1, -0.3);
        let mut z = SymBlockElement::zeros(prob.cone());
        z.set_block_matrix(0, &zm);

        // hand evaluation: eigenvalues of [[a,c],[c,b]]
        let (a, b, c) = (0.5f64, -0.3f64, 0.2f64);
        let mean = (a + b) / 2.0;
        let r = (((a - b) / 2.0) * ((a - b) / 2.0) + c * c).sqrt();
        let (l1, l2) = (mean + r, mean - r);
        // eigenvector for l1: (c, l1 - a) normalized
        let (v1x, v1y) = {
            let nx = c;
            let ny = l1 - a;
            let nn = (nx * nx + ny * ny).sqrt();
            (nx / nn, ny / nn)
        };
        let (v2x, v2y) = (-v1y, v1x);
        let w1 = l1.max(0.0);
        let w2 = l2.max(0.0);
        let x00 = w1 * v1x * v1x + w2 * v2x * v2x;
        let x01 = w1 * v1x * v1y + w2 * v2x * v2y;
        let x11 = w1 * v1y * v1y + w2 * v2y * v2y;
        // q = (t2/t1)(Z - X); arg = X - q
        let rho = t2 / t1;
        let q00 = rho * (a - x00);
        let q01 = rho * (c - x01);
        let q11 = rho * (b - x11);
        let (g00, g01, g11) = (x00 - q00, x01 - q01, x11 - q11);
        // prox_{t2 f}: shift by t2*C (C = -I) then project onto {tr = 1}
        let (h00, h01, h11) = (g00 - t2, g01, g11 - t2);
        let corr = (h00 + h11 - 1.0) / 2.0;
        let (u00, u01, u11) = (h00 - corr, h01, h11 - corr);
        let exp00 = q00 + u00;
        let exp01 = q01 + u01;
        let exp11 = q11 + u11;

        let mut state = DrsState::new(z, t1, &prob).unwrap();
        drs_iterate_rescaled(&mut state, t1, t2, &prob).unwrap();
        let got = state.z.block_matrix(0);
        assert!((got.get(0, 0) - exp00).abs() < 1e-12);
        assert!((got.get(0, 1) - exp01).abs() < 1e-12);
        assert!((got.get(1, 1) - exp11).abs() < 1e-12);
    }

    #[test]
    fn recovered_s_matches_identity_definition() {
        let prob = trace_instance(4);
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let z = random_element(prob.cone(), &mut rng);
        let mut state = DrsState::new(z, 1.3, &prob).unwrap();
        drs_iterate(&mut state, &prob).unwrap();
        drs_iterate(&mut state, &prob).unwrap();
        let (x, s, _) = recover_iterates(&mut state, &prob).unwrap();
        let mut expect = x.minus(&state.z);
        expect.scale(1.0 / state.t);
        assert!(s.minus(&expect).norm() <= 1e-14);
    }

    #[test]
    fn recover_requires_two_sweeps() {
        let prob = trace_instance(3);
        let mut state =
            DrsState::new(SymBlockElement::zeros(prob.cone()), 1.0, &prob).unwrap();
        assert!(recover_iterates(&mut state, &prob).is_err());
        drs_iterate(&mut state, &prob).unwrap();
        assert!(recover_iterates(&mut state, &prob).is_err());
        drs_iterate(&mut state, &prob).unwrap();
        assert!(recover_iterates(&mut state, &prob).is_ok());
    }

    #[test]
    fn recover_at_fixed_point_is_optimal() {
        let inst = instances::constructed_optimum(9, 12, 2, 79);
        let prob = normalize(inst.problem.clone()).unwrap();
        let z_star = inst.z_star();
        let mut state = DrsState::new(z_star, inst.t_star, &prob).unwrap();
        drs_iterate(&mut state, &prob).unwrap();
        drs_iterate(&mut state, &prob).unwrap();
        let (x, s, y) = recover_iterates(&mut state, &prob).unwrap();
        let rep = residuals_normalized(&x, &y, &s, &prob);
        assert!(rep.eta_p <= 1e-8);
        assert!(rep.eta_d <= 1e-8);
        assert!(rep.eta_g <= 1e-8);
    }

    #[test]
    fn dual_slack_stays_in_cone_after_rescale() {
        let inst = instances::random_normalized_sdp(&[5], 6, 53);
        let prob = normalize(inst).unwrap();
        let mut state =
            DrsState::new(SymBlockElement::zeros(prob.cone()), 1.0, &prob).unwrap();
        for _ in 0..10 {
            drs_iterate(&mut state, &prob).unwrap();
        }
        let t1 = state.t;
        drs_iterate_rescaled(&mut state, t1, 2.0 * t1, &prob).unwrap();
        for _ in 0..5 {
            drs_iterate(&mut state, &prob).unwrap();
        }
        let (_, s, _) = recover_iterates(&mut state, &prob).unwrap();
        let dec = crate::symcore::spectral_decompose(&s.block_matrix(0)).unwrap();
        let min_eig = dec.lambda.last().copied().unwrap_or(0.0);
        assert!(min_eig >= -1e-10);
    }

    #[test]
    fn penalty_update_rules() {
        let params = FirstOrderParams::default();
        let balanced: VecDeque<f64> = vec![1.0; 8].into();
        assert_eq!(update_penalty(&balanced, 1.0, &params), 1.0);
        let primal_heavy: VecDeque<f64> = vec![10.0; 8].into();
        assert!((update_penalty(&primal_heavy, 1.0, &params) - params.gamma).abs() < 1e-15);
        let dual_heavy: VecDeque<f64> = vec![0.01; 8].into();
        assert!((update_penalty(&dual_heavy, 1.0, &params) - 1.0 / params.gamma).abs() < 1e-15);
        // clamping at the floor
        let t = update_penalty(&primal_heavy, params.t_min, &params);
        assert_eq!(t, params.t_min);
    }

    #[test]
    fn run_converges_on_constructed_instance() {
        let inst = instances::constructed_optimum(10, 15, 2, 80);
        let prob = normalize(inst.problem.clone()).unwrap();
        let params = FirstOrderParams {
            max_iter: 5000,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            ..Default::default()
        };
        let result = run_first_order(&prob, &params).unwrap();
        assert!(result.converged, "eta_p/eta_d targets not reached");
        assert!(result.report.eta_p <= 1e-6);
        assert!(result.report.eta_d <= 1e-6);
    }

    #[test]
    fn run_trivial_trace_instance_reaches_analytic_optimum() {
        // max -tr X s.t. tr X = 1, X psd has value -1
        let prob = trace_instance(4);
        let params = FirstOrderParams {
            max_iter: 5000,
            tol_primal: 1e-9,
            tol_dual: 1e-9,
            ..Default::default()
        };
        let result = run_first_order(&prob, &params).unwrap();
        assert!(result.converged);
        assert!((result.report.primal_obj + 1.0).abs() <= 1e-6);
        assert!((result.report.dual_obj + 1.0).abs() <= 1e-6);
    }

    #[test]
    fn zero_and_random_starts_agree() {
        let inst = instances::constructed_optimum(8, 10, 2, 81);
        let prob = normalize(inst.problem.clone()).unwrap();
        let base = FirstOrderParams {
            max_iter: 20000,
            tol_primal: 1e-8,
            tol_dual: 1e-8,
            ..Default::default()
        };
        let from_zero = run_first_order(&prob, &base).unwrap();
        let params_rand = FirstOrderParams {
            random_start: Some(999),
            ..base
        };
        let from_rand = run_first_order(&prob, &params_rand).unwrap();
        assert!(from_zero.converged && from_rand.converged);
        assert!((from_zero.report.dual_obj - from_rand.report.dual_obj).abs() <= 1e-6);
    }
}
