//! Production LP backend via the Clarabel interior-point solver.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus as ClarabelStatus,
    SupportedConeT,
};

use crate::error::{Error, Result};
use crate::optimizer::lp::{CanonicalLp, LpBackend, RawSolution, Sense, SolveStatus};

pub struct ClarabelBackend {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        ClarabelBackend { tol: 1e-8, max_iter: 1000 }
    }
}

impl LpBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve_raw(&self, lp: &CanonicalLp) -> Result<RawSolution> {
        let n = lp.num_vars();

        // Conic form: equality rows first (Zero cone), then every
        // inequality normalized to a'x <= b (Nonnegative cone), then finite
        // variable bounds as extra inequality rows. Pinned variables
        // (lower == upper) become equality rows.
        let mut rows: Vec<(Vec<(u32, f64)>, f64)> = Vec::new();
        let mut row_terms: Vec<Vec<(u32, f64)>> = vec![Vec::new(); lp.num_rows()];
        for &(row, col, coeff) in lp.entries() {
            row_terms[row as usize].push((col, coeff));
        }

        let mut n_eq = 0usize;
        for (i, terms) in row_terms.iter().enumerate() {
            if lp.senses()[i] == Sense::Eq {
                rows.push((terms.clone(), lp.rhs()[i]));
                n_eq += 1;
            }
        }
        for col in 0..n {
            let (l, u) = lp.bounds(col as u32);
            if l.is_finite() && l == u {
                rows.push((vec![(col as u32, 1.0)], l));
                n_eq += 1;
            }
        }
        for (i, terms) in row_terms.iter().enumerate() {
            match lp.senses()[i] {
                Sense::Eq => {}
                Sense::Le => rows.push((terms.clone(), lp.rhs()[i])),
                Sense::Ge => rows.push((
                    terms.iter().map(|&(c, a)| (c, -a)).collect(),
                    -lp.rhs()[i],
                )),
            }
        }
        for col in 0..n {
            let (l, u) = lp.bounds(col as u32);
            if l == u {
                continue; // already pinned by an equality row
            }
            if l.is_finite() {
                rows.push((vec![(col as u32, -1.0)], -l));
            }
            if u.is_finite() {
                rows.push((vec![(col as u32, 1.0)], u));
            }
        }
        let m = rows.len();
        let n_ineq = m - n_eq;

        // Column-major assembly with duplicate (row, col) entries summed.
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut b = Vec::with_capacity(m);
        for (i, (terms, rhs)) in rows.iter().enumerate() {
            for &(col, coeff) in terms {
                cols[col as usize].push((i, coeff));
            }
            b.push(*rhs);
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in cols.iter_mut() {
            col.sort_by_key(|&(r, _)| r);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(r, v) in col.iter() {
                match merged.last_mut() {
                    Some((lr, lv)) if *lr == r => *lv += v,
                    _ => merged.push((r, v)),
                }
            }
            for (r, v) in merged {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }

        let a = CscMatrix::new(m, n, colptr, rowval, nzval);
        let p = CscMatrix::zeros((n, n));
        let q = lp.objective().to_vec();
        let cones = [
            SupportedConeT::ZeroConeT(n_eq),
            SupportedConeT::NonnegativeConeT(n_ineq),
        ];
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .tol_feas(self.tol)
            .build()
            .map_err(|e| Error::Backend(format!("clarabel settings: {e}")))?;

        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings);
        solver.solve();

        let status = match solver.solution.status {
            ClarabelStatus::Solved | ClarabelStatus::AlmostSolved => SolveStatus::Optimal,
            ClarabelStatus::PrimalInfeasible | ClarabelStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            ClarabelStatus::DualInfeasible | ClarabelStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericFailure,
        };
        Ok(RawSolution {
            status,
            objective: solver.solution.obj_val,
            values: solver.solution.x.clone(),
            iterations: solver.solution.iterations as usize,
        })
    }
}
