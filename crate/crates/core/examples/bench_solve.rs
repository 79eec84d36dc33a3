#[path = "../tests/common/mod.rs"]
mod common;
use common::*;
use energy_park_core::optimizer::ClarabelBackend;
use energy_park_core::optimizer::builder::DesignSolver;
use energy_park_core::scenario::*;
use energy_park_core::rng::derive_seed;
use std::time::Instant;

fn main() {
    let inputs = desk_inputs(168, 40);
    let seed = derive_seed(40, "scenario-uniforms");
    let full = assemble_scenario_set(&inputs.wind, &inputs.solar, &inputs.load, &inputs.techs,
        50, seed, Provenance::Prior, AssemblyOptions::default()).unwrap();
    let backend = ClarabelBackend::default();
    let solver = DesignSolver::new(&inputs.params, &backend);

    let t0 = Instant::now();
    let single = full.single(0);
    let sol = solver.optimize(&single, &[0,1,2,3], None).unwrap();
    println!("single-scenario 4-tech solve: {:?} obj {:.3e}", t0.elapsed(), sol.objective);

    let t1 = Instant::now();
    let sig = scenario_signature(&full, &inputs.params, &backend).unwrap();
    println!("signature of 50: {:?}", t1.elapsed());
    let red = reduce_scenarios(&full, &sig, 10).unwrap();

    let t2 = Instant::now();
    let sp = solver.optimize(&red.set, &[1], None).unwrap();
    println!("10-scenario 1-tech SP: {:?} obj {:.3e}", t2.elapsed(), sp.objective);

    let t3 = Instant::now();
    let sp2 = solver.optimize(&red.set, &[0, 3], None).unwrap();
    println!("10-scenario 2-tech SP: {:?} obj {:.3e}", t3.elapsed(), sp2.objective);
}
