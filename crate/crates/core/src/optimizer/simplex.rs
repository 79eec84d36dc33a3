//! Exact rational dense simplex, the desk-scale oracle backend.
//!
//! Two-phase primal simplex over `BigRational` arithmetic with Bland's
//! rule, so it neither cycles nor suffers roundoff: any claim it makes
//! about optimality, infeasibility, or unboundedness is exact. It is meant
//! for cross-checking the production backend on small instances and
//! refuses anything larger than [`DenseSimplex::max_variables`].

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::optimizer::lp::{CanonicalLp, LpBackend, RawSolution, Sense, SolveStatus};

type Rat = BigRational;

fn rat(v: f64) -> Result<Rat> {
    BigRational::from_float(v)
        .ok_or_else(|| Error::MalformedLp(format!("non-finite coefficient {v} in exact solve")))
}

/// How each original column is represented in nonnegative standard form.
enum VarClass {
    /// lower == upper: substituted out.
    Fixed(Rat),
    /// Finite lower bound: x = lb + y, y >= 0, optional row y <= ub - lb.
    Shifted { lb: Rat, col: usize },
    /// Only an upper bound: x = ub - y, y >= 0.
    Mirrored { ub: Rat, col: usize },
    /// No bounds: x = y_pos - y_neg.
    Free { pos: usize, neg: usize },
}

pub struct DenseSimplex {
    /// Largest column count accepted; the oracle is O(n^2 m) in exact
    /// arithmetic and is only meant for tiny instances.
    pub max_variables: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex { max_variables: 200 }
    }
}

struct Tableau {
    /// m x (n_cols + 1); last column is the rhs.
    rows: Vec<Vec<Rat>>,
    /// Reduced-cost row, length n_cols + 1; last cell is minus the objective.
    dual: Vec<Rat>,
    basis: Vec<usize>,
    n_cols: usize,
    pivots: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v /= piv.clone();
        }
        let pivot_row = self.rows[row].clone();
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..=self.n_cols {
                let delta = factor.clone() * pivot_row[j].clone();
                self.rows[i][j] -= delta;
            }
        }
        let factor = self.dual[col].clone();
        if !factor.is_zero() {
            for j in 0..=self.n_cols {
                let delta = factor.clone() * pivot_row[j].clone();
                self.dual[j] -= delta;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Recompute the reduced-cost row for cost vector `c`.
    fn price(&mut self, c: &[Rat]) {
        let mut dual = c.to_vec();
        dual.push(Rat::zero());
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = c[bi].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..=self.n_cols {
                let delta = cb.clone() * self.rows[i][j].clone();
                dual[j] -= delta;
            }
        }
        self.dual = dual;
    }

    /// Bland's rule: entering column is the lowest eligible index, the
    /// leaving row breaks ratio ties by the lowest basic column index.
    fn iterate(&mut self, banned_from: usize) -> Step {
        loop {
            let entering = (0..self.n_cols)
                .find(|&j| j < banned_from && self.dual[j].is_negative());
            let Some(col) = entering else {
                return Step::Optimal;
            };
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if a.is_positive() {
                    let ratio = self.rows[i][self.n_cols].clone() / a.clone();
                    let better = match &leave {
                        None => true,
                        Some((best_row, best)) => {
                            ratio < *best
                                || (ratio == *best && self.basis[i] < self.basis[*best_row])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return Step::Unbounded,
            }
        }
    }
}

impl LpBackend for DenseSimplex {
    fn name(&self) -> &'static str {
        "exact-simplex"
    }

    fn solve_raw(&self, lp: &CanonicalLp) -> Result<RawSolution> {
        if lp.num_vars() > self.max_variables {
            return Err(Error::Backend(format!(
                "exact simplex oracle accepts at most {} variables, LP has {}",
                self.max_variables,
                lp.num_vars()
            )));
        }

        // Classify columns and assign nonnegative y-columns.
        let n = lp.num_vars();
        let mut classes = Vec::with_capacity(n);
        let mut n_y = 0usize;
        let mut ub_rows: Vec<(usize, Rat)> = Vec::new(); // (y col, delta)
        for i in 0..n {
            let (l, u) = lp.bounds(i as u32);
            let class = if l.is_finite() && u.is_finite() && l == u {
                VarClass::Fixed(rat(l)?)
            } else if l.is_finite() {
                let col = n_y;
                n_y += 1;
                if u.is_finite() {
                    ub_rows.push((col, rat(u)? - rat(l)?));
                }
                VarClass::Shifted { lb: rat(l)?, col }
            } else if u.is_finite() {
                let col = n_y;
                n_y += 1;
                VarClass::Mirrored { ub: rat(u)?, col }
            } else {
                let pos = n_y;
                let neg = n_y + 1;
                n_y += 2;
                VarClass::Free { pos, neg }
            };
            classes.push(class);
        }

        // Objective over y plus a constant offset.
        let mut offset = Rat::zero();
        let mut cost_y = vec![Rat::zero(); n_y];
        for (i, class) in classes.iter().enumerate() {
            let c = rat(lp.objective()[i])?;
            if c.is_zero() {
                continue;
            }
            match class {
                VarClass::Fixed(v) => offset += c * v.clone(),
                VarClass::Shifted { lb, col } => {
                    offset += c.clone() * lb.clone();
                    cost_y[*col] += c;
                }
                VarClass::Mirrored { ub, col } => {
                    offset += c.clone() * ub.clone();
                    cost_y[*col] -= c;
                }
                VarClass::Free { pos, neg } => {
                    cost_y[*pos] += c.clone();
                    cost_y[*neg] -= c;
                }
            }
        }

        // Rows over y: original rows then upper-bound rows.
        struct RowBuild {
            coeffs: Vec<Rat>,
            rhs: Rat,
            sense: Sense,
        }
        let m0 = lp.num_rows();
        let mut rows: Vec<RowBuild> = (0..m0)
            .map(|i| {
                Ok(RowBuild {
                    coeffs: vec![Rat::zero(); n_y],
                    rhs: rat(lp.rhs()[i])?,
                    sense: lp.senses()[i],
                })
            })
            .collect::<Result<_>>()?;
        for &(row, col, coeff) in lp.entries() {
            let a = rat(coeff)?;
            let build = &mut rows[row as usize];
            match &classes[col as usize] {
                VarClass::Fixed(v) => build.rhs -= a * v.clone(),
                VarClass::Shifted { lb, col } => {
                    build.rhs -= a.clone() * lb.clone();
                    build.coeffs[*col] += a;
                }
                VarClass::Mirrored { ub, col } => {
                    build.rhs -= a.clone() * ub.clone();
                    build.coeffs[*col] -= a;
                }
                VarClass::Free { pos, neg } => {
                    build.coeffs[*pos] += a.clone();
                    build.coeffs[*neg] -= a;
                }
            }
        }
        for (ycol, delta) in ub_rows {
            let mut coeffs = vec![Rat::zero(); n_y];
            coeffs[ycol] = Rat::from_integer(1.into());
            rows.push(RowBuild { coeffs, rhs: delta, sense: Sense::Le });
        }

        // Attach slacks and orient rhs nonnegative. Slacks with a +1
        // coefficient after orientation start in the basis; only the
        // remaining rows need artificial columns in phase 1.
        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.sense != Sense::Eq).count();
        let n_struct = n_y + n_slack;
        let mut tab_rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
        let mut slack_basis: Vec<Option<usize>> = Vec::with_capacity(m);
        let mut slack_at = n_y;
        for row in rows.iter() {
            let mut full = vec![Rat::zero(); n_struct + 1];
            full[..n_y].clone_from_slice(&row.coeffs);
            let mut slack_col = None;
            match row.sense {
                Sense::Le => {
                    full[slack_at] = Rat::from_integer(1.into());
                    slack_col = Some((slack_at, true));
                    slack_at += 1;
                }
                Sense::Ge => {
                    full[slack_at] = Rat::from_integer((-1).into());
                    slack_col = Some((slack_at, false));
                    slack_at += 1;
                }
                Sense::Eq => {}
            }
            full[n_struct] = row.rhs.clone();
            if full[n_struct].is_negative() {
                for v in full.iter_mut() {
                    *v = -v.clone();
                }
                slack_col = slack_col.map(|(c, plus)| (c, !plus));
            }
            slack_basis.push(match slack_col {
                Some((c, true)) => Some(c),
                _ => None,
            });
            tab_rows.push(full);
        }
        let n_art = slack_basis.iter().filter(|s| s.is_none()).count();
        let n_cols = n_struct + n_art;
        let mut basis = Vec::with_capacity(m);
        let mut art_at = n_struct;
        for (i, slack) in slack_basis.iter().enumerate() {
            // widen each row to hold the artificial identity block
            let rhs = tab_rows[i].pop().expect("rhs cell");
            tab_rows[i].resize(n_cols, Rat::zero());
            tab_rows[i].push(rhs);
            match slack {
                Some(c) => basis.push(*c),
                None => {
                    tab_rows[i][art_at] = Rat::from_integer(1.into());
                    basis.push(art_at);
                    art_at += 1;
                }
            }
        }

        let mut tableau = Tableau { rows: tab_rows, dual: Vec::new(), basis, n_cols, pivots: 0 };

        if n_art > 0 {
            // Phase 1: minimize the artificial sum.
            let mut phase1_cost = vec![Rat::zero(); n_cols];
            for c in phase1_cost.iter_mut().skip(n_struct) {
                *c = Rat::from_integer(1.into());
            }
            tableau.price(&phase1_cost);
            match tableau.iterate(n_cols) {
                Step::Unbounded => {
                    return Err(Error::Backend(
                        "phase-1 simplex reported unbounded; artificial objective is bounded below"
                            .into(),
                    ))
                }
                Step::Optimal => {}
            }
            let artificial_sum = -tableau.dual[n_cols].clone();
            if artificial_sum.is_positive() {
                return Ok(RawSolution {
                    status: SolveStatus::Infeasible,
                    objective: f64::NAN,
                    values: Vec::new(),
                    iterations: tableau.pivots,
                });
            }
        }

        // Phase 2 over the original costs; artificial columns may not enter.
        let mut phase2_cost = vec![Rat::zero(); n_cols];
        phase2_cost[..n_y].clone_from_slice(&cost_y);
        tableau.price(&phase2_cost);
        if let Step::Unbounded = tableau.iterate(n_struct) {
            return Ok(RawSolution {
                status: SolveStatus::Unbounded,
                objective: f64::NAN,
                values: Vec::new(),
                iterations: tableau.pivots,
            });
        }

        // Read the y solution and map back to original coordinates.
        let mut y = vec![Rat::zero(); n_cols];
        for (i, &bi) in tableau.basis.iter().enumerate() {
            y[bi] = tableau.rows[i][n_cols].clone();
        }
        let mut objective = offset;
        for (j, c) in cost_y.iter().enumerate() {
            objective += c.clone() * y[j].clone();
        }
        let values: Vec<f64> = classes
            .iter()
            .map(|class| {
                let v = match class {
                    VarClass::Fixed(v) => v.clone(),
                    VarClass::Shifted { lb, col } => lb.clone() + y[*col].clone(),
                    VarClass::Mirrored { ub, col } => ub.clone() - y[*col].clone(),
                    VarClass::Free { pos, neg } => y[*pos].clone() - y[*neg].clone(),
                };
                v.to_f64().unwrap_or(f64::NAN)
            })
            .collect();

        Ok(RawSolution {
            status: SolveStatus::Optimal,
            objective: objective.to_f64().unwrap_or(f64::NAN),
            values,
            iterations: tableau.pivots,
        })
    }
}
