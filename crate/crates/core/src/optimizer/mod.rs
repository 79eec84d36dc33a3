//! Stochastic sizing/dispatch LP, CVaR objective, solver backends, and MPS
//! interchange.

pub mod backend;
pub mod builder;
pub mod lp;
pub mod mps;
pub mod simplex;

pub use backend::ClarabelBackend;
pub use builder::{
    build_stochastic_program, extract_design, risk_adjusted_cost, CvarConfig, DesignExtract,
    DesignSolution, DesignSolver, DesignVariables, OperationPlan, ScenarioCost, SystemParams,
};
pub use lp::{
    solve_lp, CanonicalLp, LpBackend, RawSolution, RowKind, Sense, SolveOutcome, SolveStatus,
    Solution, VarKey,
};
pub use mps::{parse_mps, write_mps};
pub use simplex::DenseSimplex;
