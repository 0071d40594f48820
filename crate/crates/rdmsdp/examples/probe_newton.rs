//! Scratch probe used while tuning: inspect the first Newton trial after a
//! warmup on a small two-electron problem.

use rdmsdp::firstorder::{drs_iterate, fixed_point_residual, DrsState, FirstOrderParams};
use rdmsdp::instances;
use rdmsdp::rdm::{build_sdp, ConditionSet};
use rdmsdp::sdpmodel::normalize;
use rdmsdp::ssnewton::{newton_direction, JacobianInfo, NewtonParams};
use rdmsdp::symcore::SymBlockElement;

fn main() {
    let data = instances::random_spin_conserving_integrals(4, 2, 12345);
    let problem = build_sdp(&data, ConditionSet::PQG).unwrap();
    let prob = normalize(problem).unwrap();
    let params = NewtonParams::default();
    let fo = FirstOrderParams::default();

    let mut state = DrsState::new(SymBlockElement::zeros(prob.cone()), fo.t0, &prob).unwrap();
    for _ in 0..300 {
        drs_iterate(&mut state, &prob).unwrap();
    }
    let t = state.t;
    let (f, _x, _u) = fixed_point_residual(&state.z, t, &prob).unwrap();
    let fnorm = f.norm();
    println!("warmup done: ||F||_F = {fnorm:.3e}, t = {t:.3}");

    for lambda in [1.0, 0.1, 10.0, 100.0, 1000.0] {
        let mu = lambda * fnorm; // rough spectral proxy for the probe
        let info = JacobianInfo::new(&state.z, mu).unwrap();
        let dir = newton_direction(&info, &f, lambda, fnorm, &prob, &params).unwrap();
        let u = state.z.plus(&dir.s);
        let (fu, _, _) = fixed_point_residual(&u, t, &prob).unwrap();
        let rho = -fu.dot(&dir.s) / dir.s.dot(&dir.s);
        println!(
            "lambda {lambda:8.2}: mu {mu:.3e} |S| {:.3e} cg {} ok={} r {:.3e} |F(U)| {:.3e} (xi = {:.3e}) rho {rho:.3}",
            dir.s.norm(),
            dir.cg_iters,
            dir.satisfied,
            dir.r_norm,
            fu.norm(),
            fnorm
        );
    }
}
