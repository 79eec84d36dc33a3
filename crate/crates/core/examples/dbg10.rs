use energy_park_core::config::load_config;
use energy_park_core::optimizer::builder::*;
use energy_park_core::optimizer::lp::*;
use energy_park_core::optimizer::ClarabelBackend;
use energy_park_core::pipeline::*;
use std::path::Path;

fn main() {
    let config = load_config(Path::new("/tmp/c8/run.toml")).unwrap();
    let inputs = config.build_inputs(None).unwrap();
    let analysis = config.analysis_settings();
    let backend = ClarabelBackend::default();
    let pipeline = Pipeline::new(&inputs, &analysis, &backend, config.digest()).unwrap();
    let (reduced, _) = pipeline.prior_reduced_set().unwrap();
    // CAES-only SP
    let caes = reduced.set.tech_index("CAES").unwrap();
    let lp = build_stochastic_program(&inputs.params, &reduced.set, &[caes], None, None).unwrap();
    println!("vars {} rows {}", lp.num_vars(), lp.num_rows());
    for (tol, iters) in [(1e-8, 1000u32), (1e-7, 1000), (1e-8, 5000), (1e-6, 1000)] {
        let b = ClarabelBackend { tol, max_iter: iters };
        let raw = b.solve_raw(&lp).unwrap();
        println!("tol {tol:.0e} iters {iters}: {:?} obj {:.6e} its {}", raw.status, raw.objective, raw.iterations);
    }
    // scenario perf for CAES
    for (m, s) in reduced.set.scenarios.iter().enumerate() {
        println!("scenario {m}: rho {:.3} eta {:.4} ps {:.4}", s.probability, s.performance[caes].efficiency, s.performance[caes].annual_cost_per_kwh);
    }
}
