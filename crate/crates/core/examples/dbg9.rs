#[path = "../tests/common/mod.rs"]
mod common;
use common::*;
use energy_park_core::optimizer::builder::DesignSolver;
use energy_park_core::optimizer::ClarabelBackend;
use energy_park_core::scenario::*;

fn main() {
    let inputs = desk_inputs(168, 301);
    let techs: Vec<_> = reference_catalogue().into_iter().filter(|t| t.name == "NaS" || t.name == "CAES").collect();
    let set = assemble_scenario_set(&inputs.wind, &inputs.solar, &inputs.load, &techs, 5, 301,
        Provenance::Prior, AssemblyOptions::default()).unwrap();
    let backend = ClarabelBackend::default();
    let solver = DesignSolver::new(&inputs.params, &backend);
    let solution = solver.optimize(&set, &[0, 1], None).unwrap();
    println!("pair_resolved={} obj {:.4e}", solution.pair_resolved, solution.objective);
    let plan = &solution.extract.plan;
    let design = &solution.extract.design;
    for (slot, tech) in set.techs.iter().enumerate() {
        let cap = design.storage_kwh[&tech.name];
        let pmaxdt = tech.discharge_ratio * cap;
        println!("{}: cap {cap:.3e} pmaxdt {pmaxdt:.3e} tol {:.3e}", tech.name, 1e-6*pmaxdt*pmaxdt);
        let mut worst: (f64, usize, usize) = (0.0, 0, 0);
        for m in 0..set.len() { for t in 0..168 {
            let p = plan.charge[slot][m][t] * plan.discharge[slot][m][t];
            if p > worst.0 { worst = (p, m, t); }
        }}
        println!("  worst pair product {:.3e} at m={} t={} (charge {:.3e}, discharge {:.3e})",
            worst.0, worst.1, worst.2, plan.charge[slot][worst.1][worst.2], plan.discharge[slot][worst.1][worst.2]);
    }
}
