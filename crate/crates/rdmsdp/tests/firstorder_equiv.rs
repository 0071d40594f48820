//! Behavioral checks of the splitting loop against the independently
//! implemented dual ADMM.

mod common;

use common::AdmmOracle;
use rdmsdp::firstorder::{drs_iterate, recover_iterates, DrsState};
use rdmsdp::instances;
use rdmsdp::sdpmodel::{normalize, residuals_normalized};
use rdmsdp::symcore::{project_cone, SymBlockElement};

/// The multiplier X produced by the dual ADMM matches the cone projection of
/// the splitting variable at every iteration, and the recovered dual pair
/// matches from the second sweep on.
#[test]
fn admm_and_drs_produce_identical_x_iterates() {
    for seed in [1u64, 2, 3] {
        let prob = normalize(instances::random_normalized_sdp(&[7], 9, 900 + seed)).unwrap();
        let mu = 1.0;
        let mut admm = AdmmOracle::new(&prob, mu);
        let mut state =
            DrsState::new(SymBlockElement::zeros(prob.cone()), mu, &prob).unwrap();
        for k in 0..20 {
            admm.step(&prob);
            drs_iterate(&mut state, &prob).unwrap();
            let x = project_cone(&state.z).unwrap();
            let diff = admm.x.minus(&x).norm();
            assert!(
                diff <= 1e-10 * admm.x.norm().max(1.0),
                "seed {seed}, iteration {k}: X iterates differ by {diff}"
            );
            if k >= 1 {
                let (xr, s, y) = recover_iterates(&mut state, &prob).unwrap();
                assert!(xr.minus(&x).norm() <= 1e-12);
                let sd = admm.s.minus(&s).norm();
                assert!(sd <= 1e-9 * admm.s.norm().max(1.0), "S differs by {sd}");
                let yd: f64 = admm
                    .y
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(yd <= 1e-9, "y differs by {yd}");
            }
        }
    }
}

/// Penalty rescaling keeps the recovered dual slack inside the cone.
#[test]
fn rescaled_sweep_recovers_dual_feasibility() {
    let prob = normalize(instances::random_normalized_sdp(&[6], 8, 950)).unwrap();
    let mut state = DrsState::new(SymBlockElement::zeros(prob.cone()), 1.0, &prob).unwrap();
    for _ in 0..15 {
        drs_iterate(&mut state, &prob).unwrap();
    }
    let t1 = state.t;
    rdmsdp::firstorder::drs_iterate_rescaled(&mut state, t1, 1.7 * t1, &prob).unwrap();
    for _ in 0..5 {
        drs_iterate(&mut state, &prob).unwrap();
    }
    let (_, s, _) = recover_iterates(&mut state, &prob).unwrap();
    let dec = rdmsdp::symcore::spectral_decompose(&s.block_matrix(0)).unwrap();
    assert!(dec.lambda.last().copied().unwrap() >= -1e-10);
}

/// Solving a duplicated/rescaled operator gives the same objective as the
/// original: normalization preserves the solution set.
#[test]
fn normalization_preserves_the_solution_set() {
    use rdmsdp::firstorder::{run_first_order, FirstOrderParams};
    use rdmsdp::sdpmodel::{OperatorBuilder, SdpProblem};

    let inst = instances::constructed_optimum(8, 10, 2, 960);
    let base = normalize(inst.problem.clone()).unwrap();
    let params = FirstOrderParams {
        max_iter: 20000,
        tol_primal: 1e-8,
        tol_dual: 1e-8,
        ..Default::default()
    };
    let r1 = run_first_order(&base, &params).unwrap();
    assert!(r1.converged);

    // rescale every row and duplicate one of them
    let op = &inst.problem.operator;
    let m = op.nrows();
    let mut builder = OperatorBuilder::new(&inst.problem.cone, m + 1);
    for p in 0..m {
        let (cols, vals) = op.row(p);
        let scale = 0.5 + p as f64;
        let scaled: Vec<f64> = vals.iter().map(|v| v * scale).collect();
        builder.add_raw(p, cols, &scaled);
        builder.set_rhs(p, op.b[p] * scale);
    }
    let (cols, vals) = op.row(3);
    builder.add_raw(m, cols, vals);
    builder.set_rhs(m, op.b[3]);
    let messy = SdpProblem::new(
        inst.problem.cone.clone(),
        builder.build(),
        inst.problem.cost.clone(),
    );
    let renorm = normalize(messy).unwrap();
    assert_eq!(renorm.dropped.len(), 1);
    let r2 = run_first_order(&renorm, &params).unwrap();
    assert!(r2.converged);
    assert!(
        (r1.report.primal_obj - r2.report.primal_obj).abs() <= 1e-7,
        "objectives differ: {} vs {}",
        r1.report.primal_obj,
        r2.report.primal_obj
    );
}

/// Residual diagnostics at the constructed optimum are zero-level.
#[test]
fn constructed_optimum_has_clean_diagnostics() {
    let inst = instances::constructed_optimum(10, 14, 2, 970);
    let prob = normalize(inst.problem.clone()).unwrap();
    let mut state = DrsState::new(inst.z_star(), inst.t_star, &prob).unwrap();
    drs_iterate(&mut state, &prob).unwrap();
    drs_iterate(&mut state, &prob).unwrap();
    let (x, s, y) = recover_iterates(&mut state, &prob).unwrap();
    let rep = residuals_normalized(&x, &y, &s, &prob);
    assert!(rep.eta_p <= 1e-10);
    assert!(rep.eta_d <= 1e-10);
    assert!(rep.eta_g <= 1e-10);
}
