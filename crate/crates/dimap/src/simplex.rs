//! Dense two-phase tableau simplex for small linear programs.
//!
//! All problems are of the form: minimize c.x subject to row constraints
//! (<=, >=, =) and x >= 0. Phase one drives artificial variables to zero,
//! phase two optimizes the real objective. Entering columns follow Dantzig's
//! rule (most negative reduced cost) and permanently switch to Bland's rule
//! once the objective stalls, which rules out cycling.

use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

/// One row: sparse coefficients over the structural variables.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub coefs: Vec<(usize, f64)>,
    pub rel: Rel,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub num_vars: usize,
    /// Dense objective coefficients, length `num_vars`.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SimplexError {
    #[error("simplex exceeded {0} pivots without converging")]
    IterationLimit(usize),
    #[error("constraint references variable {var} but problem has {num_vars}")]
    BadIndex { var: usize, num_vars: usize },
}

const PIVOT_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-7;

struct Tableau {
    rows: usize,
    cols: usize, // total columns excluding the rhs
    a: Vec<f64>, // (rows + 1) x (cols + 1), last row is the objective
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let pivot = self.at(pr, pc);
        let inv = 1.0 / pivot;
        for c in 0..w {
            self.a[pr * w + c] *= inv;
        }
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let factor = self.at(r, pc);
            if factor == 0.0 {
                continue;
            }
            for c in 0..w {
                let sub = factor * self.a[pr * w + c];
                self.a[r * w + c] -= sub;
            }
            // Keep the pivot column numerically exact.
            self.a[r * w + pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Run pivots until no reduced cost is below -PIVOT_EPS. `allowed` caps
    /// the columns eligible to enter. Returns false if an unbounded ray is
    /// found.
    fn optimize(&mut self, allowed: usize, limit: usize) -> Result<bool, SimplexError> {
        let mut iters = 0usize;
        let mut bland = false;
        let mut last_obj = self.at(self.rows, self.cols);
        let mut stall = 0usize;
        loop {
            let mut entering = None;
            if bland {
                for c in 0..allowed {
                    if self.at(self.rows, c) < -PIVOT_EPS {
                        entering = Some(c);
                        break;
                    }
                }
            } else {
                let mut best = -PIVOT_EPS;
                for c in 0..allowed {
                    let rc = self.at(self.rows, c);
                    if rc < best {
                        best = rc;
                        entering = Some(c);
                    }
                }
            }
            let Some(pc) = entering else { return Ok(true) };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio < lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((pr, _)) = leaving else { return Ok(false) };
            self.pivot(pr, pc);

            iters += 1;
            if iters > limit {
                return Err(SimplexError::IterationLimit(limit));
            }
            // The stored entry is the negated objective, so progress on a
            // minimization shows up as an increase.
            let obj = self.at(self.rows, self.cols);
            if obj > last_obj + 1e-12 {
                last_obj = obj;
                stall = 0;
            } else {
                stall += 1;
                if stall > 2 * (self.rows + allowed) + 16 {
                    bland = true;
                }
            }
        }
    }
}

/// Solve the problem, returning the optimum, or infeasible/unbounded status.
pub fn solve(p: &Problem) -> Result<Outcome, SimplexError> {
    for con in &p.constraints {
        for &(var, _) in &con.coefs {
            if var >= p.num_vars {
                return Err(SimplexError::BadIndex { var, num_vars: p.num_vars });
            }
        }
    }

    let m = p.constraints.len();
    let n = p.num_vars;

    // Column layout: structural | slack/surplus | artificial.
    let mut num_slack = 0usize;
    for con in &p.constraints {
        if con.rel != Rel::Eq {
            num_slack += 1;
        }
    }
    // Normalize rows so rhs >= 0, then decide which rows need artificials.
    struct RowPlan {
        coefs: Vec<(usize, f64)>,
        rhs: f64,
        slack_sign: f64, // 0 for Eq
        slack_col: usize,
    }
    let mut plans = Vec::with_capacity(m);
    let mut next_slack = n;
    for con in &p.constraints {
        let mut coefs = con.coefs.clone();
        let mut rhs = con.rhs;
        let mut rel = con.rel;
        if rhs < 0.0 {
            for c in coefs.iter_mut() {
                c.1 = -c.1;
            }
            rhs = -rhs;
            rel = match rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
        }
        let (slack_sign, slack_col) = match rel {
            Rel::Le => {
                let col = next_slack;
                next_slack += 1;
                (1.0, col)
            }
            Rel::Ge => {
                let col = next_slack;
                next_slack += 1;
                (-1.0, col)
            }
            Rel::Eq => (0.0, usize::MAX),
        };
        plans.push(RowPlan { coefs, rhs, slack_sign, slack_col });
    }
    debug_assert_eq!(next_slack, n + num_slack);

    // A row starts with its slack basic only when the slack enters with +1;
    // >= and = rows get an artificial.
    let mut num_art = 0usize;
    for plan in &plans {
        if plan.slack_sign <= 0.0 {
            num_art += 1;
        }
    }
    let cols = n + num_slack + num_art;
    let width = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        a: vec![0.0; (m + 1) * width],
        basis: vec![0; m],
    };
    let mut next_art = n + num_slack;
    for (r, plan) in plans.iter().enumerate() {
        for &(var, coef) in &plan.coefs {
            *t.at_mut(r, var) += coef;
        }
        *t.at_mut(r, cols) = plan.rhs;
        if plan.slack_sign != 0.0 {
            *t.at_mut(r, plan.slack_col) = plan.slack_sign;
        }
        if plan.slack_sign > 0.0 {
            t.basis[r] = plan.slack_col;
        } else {
            let col = next_art;
            next_art += 1;
            *t.at_mut(r, col) = 1.0;
            t.basis[r] = col;
        }
    }

    let limit = 400 * (m + n) + 2000;

    // Phase one: minimize the sum of artificials. The objective row starts
    // as -(sum of artificial rows) so reduced costs of basic columns are 0.
    if num_art > 0 {
        for r in 0..m {
            if t.basis[r] >= n + num_slack {
                for c in 0..width {
                    let v = t.at(r, c);
                    *t.at_mut(m, c) -= v;
                }
            }
        }
        // Artificial columns never enter (all start basic), so only the
        // structural and slack columns are eligible.
        t.optimize(n + num_slack, limit)?;
        let phase1 = -t.at(m, cols);
        if phase1 > FEAS_EPS {
            return Ok(Outcome::Infeasible);
        }
        // Pivot any artificial still in the basis out if its row has a real
        // nonzero column; an all-zero row is redundant and stays harmless.
        for r in 0..m {
            if t.basis[r] >= n + num_slack {
                if let Some(pc) = (0..n + num_slack).find(|&c| t.at(r, c).abs() > PIVOT_EPS) {
                    t.pivot(r, pc);
                }
            }
        }
    }

    // Phase two: rebuild the objective row from the real costs expressed in
    // the current basis.
    for c in 0..width {
        *t.at_mut(m, c) = 0.0;
    }
    for (c, &cost) in p.objective.iter().enumerate() {
        *t.at_mut(m, c) = cost;
    }
    for r in 0..m {
        let b = t.basis[r];
        if b >= n + num_slack {
            continue; // artificial stuck at a redundant zero row
        }
        let cost = if b < n { p.objective[b] } else { 0.0 };
        if cost != 0.0 {
            for c in 0..width {
                let v = t.at(r, c);
                *t.at_mut(m, c) -= cost * v;
            }
        }
    }
    // Artificials may never re-enter.
    let bounded = t.optimize(n + num_slack, limit)?;
    if !bounded {
        return Ok(Outcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(Outcome::Optimal { x, objective })
}
