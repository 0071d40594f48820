//! Scratch probe: one d=6, N=3 solve per condition set, timed.

use std::time::Instant;

use rdmsdp::firstorder::{run_first_order, FirstOrderParams};
use rdmsdp::instances;
use rdmsdp::rdm::{build_sdp, fci_oracle, ConditionSet};
use rdmsdp::sdpmodel::normalize;
use rdmsdp::ssnewton::{run_assn, NewtonParams};

fn main() {
    let data = instances::random_spin_conserving_integrals(6, 3, 777);
    let fci = fci_oracle(&data).unwrap();
    println!("FCI energy: {:.10}", fci.energy);
    for conds in [
        ConditionSet::PQG,
        ConditionSet::PQGT1,
        ConditionSet::PQGT1T2,
    ] {
        let t0 = Instant::now();
        let problem = build_sdp(&data, conds).unwrap();
        let build_s = t0.elapsed().as_secs_f64();
        let m = problem.m();
        let nnz = problem.operator.nnz();
        let t1 = Instant::now();
        let norm = normalize(problem).unwrap();
        let norm_s = t1.elapsed().as_secs_f64();
        let t2 = Instant::now();
        let params = NewtonParams::profile_l();
        let res = run_assn(&norm, &params).unwrap();
        println!(
            "{:9}: m={m} nnz={nnz} build {build_s:.2}s norm {norm_s:.2}s solve {:.2}s conv={} it={} obj={:.10} err={:+.3e} eta=({:.1e},{:.1e})",
            conds.name(),
            t2.elapsed().as_secs_f64(),
            res.converged,
            res.iterations,
            res.report.dual_obj,
            res.report.dual_obj - fci.energy,
            res.report.eta_p,
            res.report.eta_d,
        );
        if conds == ConditionSet::PQGT1 {
            let t3 = Instant::now();
            let fo = FirstOrderParams {
                max_iter: 40000,
                tol_primal: 3e-6,
                tol_dual: 3e-7,
                ..Default::default()
            };
            let norm2 = normalize(build_sdp(&data, conds).unwrap()).unwrap();
            let r2 = run_first_order(&norm2, &fo).unwrap();
            println!(
                "  plain first-order: {:.2}s conv={} it={} obj={:.10} etas=({:.1e},{:.1e})",
                t3.elapsed().as_secs_f64(),
                r2.converged,
                r2.iterations,
                r2.report.dual_obj,
                r2.report.eta_p,
                r2.report.eta_d
            );
            for wu in [1000usize, 3000, 6000] {
                let t4 = Instant::now();
                let mut pl = NewtonParams::profile_l();
                pl.warmup_iters = wu;
                let norm3 = normalize(build_sdp(&data, conds).unwrap()).unwrap();
                let r3 = run_assn(&norm3, &pl).unwrap();
                let newton_steps = r3
                    .trace
                    .iter()
                    .filter(|r| r.stage == rdmsdp::trace::Stage::Newton)
                    .count();
                println!(
                    "  ssn-l warmup={wu}: {:.2}s conv={} it={} newton={} obj={:.10} etas=({:.1e},{:.1e})",
                    t4.elapsed().as_secs_f64(),
                    r3.converged,
                    r3.iterations,
                    newton_steps,
                    r3.report.dual_obj,
                    r3.report.eta_p,
                    r3.report.eta_d
                );
            }
        }
    }
}
