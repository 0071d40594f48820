//! Scratch probe: full criterion-6 configuration check.

use std::time::Instant;

use rdmsdp::instances;
use rdmsdp::rdm::{build_sdp, fci_oracle, ConditionSet};
use rdmsdp::sdpmodel::normalize;
use rdmsdp::ssnewton::{run_assn, NewtonParams};

fn main() {
    let total = Instant::now();
    for trial in 0..5u64 {
        let data = instances::random_spin_conserving_integrals(6, 3, 6000 + trial);
        let fci = fci_oracle(&data).unwrap();
        let mut e = Vec::new();
        for conds in [
            ConditionSet::PQG,
            ConditionSet::PQGT1,
            ConditionSet::PQGT1T2,
        ] {
            let t0 = Instant::now();
            let norm = normalize(build_sdp(&data, conds).unwrap()).unwrap();
            let mut params = NewtonParams::profile_h();
            params.eta_p_tol = 1e-7;
            params.eta_d_tol = 1e-8;
            params.warmup_iters = 2000;
            params.max_iter = 30000;
            let r = run_assn(&norm, &params).unwrap();
            println!(
                "  seed {} {:9} {:6.1}s conv={} it={:6} obj={:.10} err={:+.3e}",
                6000 + trial,
                conds.name(),
                t0.elapsed().as_secs_f64(),
                r.converged,
                r.iterations,
                r.report.dual_obj,
                r.report.dual_obj - fci.energy
            );
            e.push(r.report.dual_obj);
        }
        let chain =
            e[0] <= e[1] + 1e-6 && e[1] <= e[2] + 1e-6 && e[2] <= fci.energy + 1e-6;
        println!("seed {}: chain holds: {chain}", 6000 + trial);
    }
    println!("total {:.1}s", total.elapsed().as_secs_f64());
}
