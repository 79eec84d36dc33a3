//! Sparse standard-form LP container and the solver backend contract.
//!
//! `CanonicalLp` is the bridge between the stochastic-program builder and
//! any solver: an objective vector, constraint triplets with row senses and
//! right-hand sides, variable bounds, and a typed name map from model
//! entities to columns. Backends return a raw solution; [`solve_lp`]
//! re-checks feasibility independently before reporting optimality.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Relative feasibility tolerance used by the post-solve re-check.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Typed column identity: model entity plus indices (technology, scenario,
/// hour). `Soc(i, m, s)` holds the state of charge after step `s`, so `s`
/// runs from 1 to the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKey {
    WindCap,
    SolarCap,
    StorageCap(u8),
    StorageIn(u8, u16, u16),
    StorageOut(u8, u16, u16),
    Soc(u8, u16, u16),
    Curtail(u16, u16),
    GridImport(u16, u16),
    GridExport(u16, u16),
    RiskThreshold,
    RiskExcess(u16),
    Aux(u32),
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKey::WindCap => write!(f, "wind_capacity"),
            VarKey::SolarCap => write!(f, "solar_capacity"),
            VarKey::StorageCap(i) => write!(f, "storage_capacity[{i}]"),
            VarKey::StorageIn(i, m, t) => write!(f, "charge[{i},{m},{t}]"),
            VarKey::StorageOut(i, m, t) => write!(f, "discharge[{i},{m},{t}]"),
            VarKey::Soc(i, m, s) => write!(f, "soc[{i},{m},{s}]"),
            VarKey::Curtail(m, t) => write!(f, "curtail[{m},{t}]"),
            VarKey::GridImport(m, t) => write!(f, "import[{m},{t}]"),
            VarKey::GridExport(m, t) => write!(f, "export[{m},{t}]"),
            VarKey::RiskThreshold => write!(f, "risk_threshold"),
            VarKey::RiskExcess(m) => write!(f, "risk_excess[{m}]"),
            VarKey::Aux(i) => write!(f, "aux[{i}]"),
        }
    }
}

/// Row identity, used in diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    SocDynamics { tech: u8, scenario: u16, step: u16 },
    PowerUpper { tech: u8, scenario: u16, step: u16 },
    PowerLower { tech: u8, scenario: u16, step: u16 },
    SocUpper { tech: u8, scenario: u16, step: u16 },
    SocLower { tech: u8, scenario: u16, step: u16 },
    Balance { scenario: u16, step: u16 },
    CurtailCap { scenario: u16, step: u16 },
    ImportCap { scenario: u16, step: u16 },
    ExportCap { scenario: u16, step: u16 },
    Budget { scenario: u16 },
    CyclicSoc { tech: u8, scenario: u16 },
    RiskExcess { scenario: u16 },
    Named(String),
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowKind::SocDynamics { tech, scenario, step } => {
                write!(f, "soc_dynamics[{tech},{scenario},{step}]")
            }
            RowKind::PowerUpper { tech, scenario, step } => {
                write!(f, "power_upper[{tech},{scenario},{step}]")
            }
            RowKind::PowerLower { tech, scenario, step } => {
                write!(f, "power_lower[{tech},{scenario},{step}]")
            }
            RowKind::SocUpper { tech, scenario, step } => {
                write!(f, "soc_upper[{tech},{scenario},{step}]")
            }
            RowKind::SocLower { tech, scenario, step } => {
                write!(f, "soc_lower[{tech},{scenario},{step}]")
            }
            RowKind::Balance { scenario, step } => write!(f, "balance[{scenario},{step}]"),
            RowKind::CurtailCap { scenario, step } => write!(f, "curtail_cap[{scenario},{step}]"),
            RowKind::ImportCap { scenario, step } => write!(f, "import_cap[{scenario},{step}]"),
            RowKind::ExportCap { scenario, step } => write!(f, "export_cap[{scenario},{step}]"),
            RowKind::Budget { scenario } => write!(f, "budget[{scenario}]"),
            RowKind::CyclicSoc { tech, scenario } => write!(f, "cyclic_soc[{tech},{scenario}]"),
            RowKind::RiskExcess { scenario } => write!(f, "risk_excess[{scenario}]"),
            RowKind::Named(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Sparse LP in `min c'x  s.t.  A x {<=,=,>=} b,  l <= x <= u` form.
#[derive(Debug, Clone)]
pub struct CanonicalLp {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    entries: Vec<(u32, u32, f64)>,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
    row_kinds: Vec<RowKind>,
    vars: BTreeMap<VarKey, u32>,
}

impl CanonicalLp {
    pub fn new() -> Self {
        CanonicalLp {
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            entries: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            row_kinds: Vec::new(),
            vars: BTreeMap::new(),
        }
    }

    pub fn add_var(&mut self, key: VarKey, objective: f64, lower: f64, upper: f64) -> u32 {
        let col = self.objective.len() as u32;
        let prev = self.vars.insert(key, col);
        assert!(prev.is_none(), "duplicate LP column for {key}");
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        col
    }

    pub fn add_row<I>(&mut self, kind: RowKind, sense: Sense, rhs: f64, terms: I) -> u32
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let row = self.rhs.len() as u32;
        for (col, coeff) in terms {
            if coeff != 0.0 {
                self.entries.push((row, col, coeff));
            }
        }
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.row_kinds.push(kind);
        row
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn col(&self, key: &VarKey) -> Option<u32> {
        self.vars.get(key).copied()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self, col: u32) -> (f64, f64) {
        (self.lower[col as usize], self.upper[col as usize])
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn senses(&self) -> &[Sense] {
        &self.senses
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_kind(&self, row: u32) -> &RowKind {
        &self.row_kinds[row as usize]
    }

    pub fn var_keys(&self) -> impl Iterator<Item = (&VarKey, u32)> {
        self.vars.iter().map(|(k, &c)| (k, c))
    }

    /// Add `penalty` to the objective coefficient of an existing column.
    pub fn bump_objective(&mut self, col: u32, penalty: f64) {
        self.objective[col as usize] += penalty;
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars() as u32;
        let m = self.num_rows() as u32;
        for (key, &col) in &self.vars {
            if col >= n {
                return Err(Error::MalformedLp(format!(
                    "name map entry {key} points at column {col} of {n}"
                )));
            }
        }
        for (i, c) in self.objective.iter().enumerate() {
            if c.is_nan() {
                return Err(Error::MalformedLp(format!("NaN objective coefficient at column {i}")));
            }
        }
        for &(row, col, coeff) in &self.entries {
            if row >= m || col >= n {
                return Err(Error::MalformedLp(format!(
                    "entry ({row},{col}) outside {m}x{n} LP"
                )));
            }
            if coeff.is_nan() {
                return Err(Error::MalformedLp(format!("NaN coefficient at ({row},{col})")));
            }
        }
        for (i, r) in self.rhs.iter().enumerate() {
            if r.is_nan() {
                return Err(Error::MalformedLp(format!("NaN right-hand side at row {i}")));
            }
        }
        for i in 0..self.num_vars() {
            if self.lower[i] > self.upper[i] {
                return Err(Error::MalformedLp(format!(
                    "column {i} has empty bound interval [{}, {}]",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn row_activities(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for &(row, col, coeff) in &self.entries {
            act[row as usize] += coeff * x[col as usize];
        }
        act
    }

    /// Relative-tolerance feasibility check; returns human-readable
    /// descriptions of every violated constraint or bound. Row tolerances
    /// scale with the row activity and right-hand side; bound tolerances
    /// scale with the solution norm (interior-point residuals live on the
    /// problem scale, not on an absolute one).
    pub fn feasibility_violations(&self, x: &[f64], rel_tol: f64) -> Vec<String> {
        let mut violations = Vec::new();
        let act = self.row_activities(x);
        // violation is judged against the row's absolute term magnitude, so
        // near-cancelling million-scale rows are not held to an absolute
        // micro tolerance
        let mut abs_act = vec![0.0f64; self.num_rows()];
        for &(row, col, coeff) in &self.entries {
            abs_act[row as usize] += (coeff * x[col as usize]).abs();
        }
        let x_scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (i, (&a, &b)) in act.iter().zip(&self.rhs).enumerate() {
            let scale = x_scale.max(b.abs()).max(abs_act[i]);
            let tol = rel_tol * scale;
            let violated = match self.senses[i] {
                Sense::Le => a > b + tol,
                Sense::Ge => a < b - tol,
                Sense::Eq => (a - b).abs() > tol,
            };
            if violated {
                violations.push(format!(
                    "{}: activity {a:.9e} vs rhs {b:.9e}",
                    self.row_kinds[i]
                ));
            }
        }
        for (i, &v) in x.iter().enumerate() {
            let (l, u) = (self.lower[i], self.upper[i]);
            let tol = rel_tol * x_scale.max(l.abs()).max(if u.is_finite() { u.abs() } else { 0.0 });
            if v < l - tol || v > u + tol {
                violations.push(format!("column {i}: value {v:.9e} outside [{l:.9e}, {u:.9e}]"));
            }
        }
        violations
    }
}

impl Default for CanonicalLp {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Optimal => write!(f, "optimal"),
            SolveStatus::Infeasible => write!(f, "infeasible"),
            SolveStatus::Unbounded => write!(f, "unbounded"),
            SolveStatus::NumericFailure => write!(f, "numeric-failure"),
        }
    }
}

/// What a backend hands back before the independent re-check.
#[derive(Debug, Clone)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverStats {
    pub iterations: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub objective: f64,
    pub values: Vec<f64>,
    pub stats: SolverStats,
}

/// Solve result: status, primal solution when optimal, diagnostics
/// otherwise.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub solution: Option<Solution>,
    pub diagnostics: Option<String>,
}

impl SolveOutcome {
    pub fn optimal(&self) -> Result<&Solution> {
        match (&self.status, &self.solution) {
            (SolveStatus::Optimal, Some(s)) => Ok(s),
            (SolveStatus::Infeasible, _) => Err(Error::Infeasible { context: self.diagnostics.clone() }),
            (SolveStatus::Unbounded, _) => Err(Error::Unbounded),
            _ => Err(Error::NonOptimal(
                self.diagnostics.clone().unwrap_or_else(|| self.status.to_string()),
            )),
        }
    }

    pub fn value(&self, lp: &CanonicalLp, key: &VarKey) -> Option<f64> {
        let col = lp.col(key)?;
        self.solution.as_ref().map(|s| s.values[col as usize])
    }
}

/// A solver backend: sparse standard form in, primal solution out.
pub trait LpBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve_raw(&self, lp: &CanonicalLp) -> Result<RawSolution>;
}

/// Solve through a backend and independently re-check feasibility before
/// reporting optimal. Backend claims are never passed through unchecked.
pub fn solve_lp(lp: &CanonicalLp, backend: &dyn LpBackend) -> Result<SolveOutcome> {
    lp.validate()?;
    let start = Instant::now();
    let raw = backend.solve_raw(lp).map_err(|e| Error::Backend(format!(
        "{}: {e}",
        backend.name()
    )))?;
    let wall_time = start.elapsed();

    match raw.status {
        SolveStatus::Optimal => {
            let violations = lp.feasibility_violations(&raw.values, FEASIBILITY_TOL);
            if violations.is_empty() {
                let objective = lp.objective_value(&raw.values);
                Ok(SolveOutcome {
                    status: SolveStatus::Optimal,
                    solution: Some(Solution {
                        objective,
                        values: raw.values,
                        stats: SolverStats { iterations: raw.iterations, wall_time },
                    }),
                    diagnostics: None,
                })
            } else {
                let shown = violations.iter().take(5).cloned().collect::<Vec<_>>().join("; ");
                Ok(SolveOutcome {
                    status: SolveStatus::NumericFailure,
                    solution: None,
                    diagnostics: Some(format!(
                        "{} reported optimal but {} constraint(s) fail the re-check: {shown}",
                        backend.name(),
                        violations.len()
                    )),
                })
            }
        }
        status => Ok(SolveOutcome {
            status,
            solution: None,
            diagnostics: Some(format!("{} reported {status}", backend.name())),
        }),
    }
}
