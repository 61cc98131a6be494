//! Dense two-phase simplex method.
//!
//! Solves `min c.x` subject to `A_ub x <= b_ub`, `A_eq x = b_eq`, `x >= 0`.
//! Pricing uses Dantzig's rule and falls back to Bland's rule once a run of
//! degenerate pivots is detected, which rules out cycling.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-10;
const FEASIBILITY_EPS: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint set is infeasible")]
    Infeasible,
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("pivot limit of {0} reached")]
    PivotLimit(usize),
    #[error("row has {got} coefficients, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub upper: Vec<(Vec<f64>, f64)>,
    pub equalities: Vec<(Vec<f64>, f64)>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    /// Adds `row . x <= rhs`.
    pub fn less_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.upper.push((row, rhs));
        self
    }

    /// Adds `row . x = rhs`.
    pub fn equal(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.equalities.push((row, rhs));
        self
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[c] = 0.0;
                let last = row.len() - 1;
                if row[last].abs() < 1e-13 {
                    row[last] = 0.0;
                }
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.cost[c] = 0.0;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the current cost row.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool) -> Result<(), LpError> {
        let mut bland = false;
        let mut degenerate = 0;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(LpError::PivotLimit(MAX_PIVOTS));
            }
            let candidates = (0..self.width).filter(|&j| allowed(j) && self.cost[j] < -PIVOT_EPS);
            let entering = if bland {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]))
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - 1e-12
                                || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio.abs() <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }

    fn set_cost(&mut self, c: &[f64]) {
        self.cost = c.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for (v, a) in self.cost.iter_mut().zip(row) {
                    *v -= cb * a;
                }
            }
        }
    }
}

/// Minimizes the program. All variables are non-negative.
pub fn minimize(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.objective.len();
    for (row, _) in lp.upper.iter().chain(&lp.equalities) {
        if row.len() != n {
            return Err(LpError::Dimension {
                expected: n,
                got: row.len(),
            });
        }
    }
    let m_ub = lp.upper.len();
    let m = m_ub + lp.equalities.len();
    let needs_artificial: Vec<bool> = lp
        .upper
        .iter()
        .map(|(_, b)| *b < 0.0)
        .chain(lp.equalities.iter().map(|_| true))
        .collect();
    let n_art = needs_artificial.iter().filter(|&&a| a).count();
    let slack0 = n;
    let art0 = n + m_ub;
    let width = art0 + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = art0;
    for (i, (coeffs, b)) in lp.upper.iter().chain(&lp.equalities).enumerate() {
        let mut row = vec![0.0; width + 1];
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for (v, a) in row.iter_mut().zip(coeffs) {
            *v = sign * a;
        }
        if i < m_ub {
            row[slack0 + i] = sign;
        }
        row[width] = sign * b;
        if needs_artificial[i] {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(slack0 + i);
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        cost: vec![0.0; width + 1],
        basis,
        width,
        pivots: 0,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; width + 1];
        for v in &mut phase1[art0..width] {
            *v = 1.0;
        }
        t.set_cost(&phase1);
        t.optimize(|_| true)?;
        let infeasibility = -t.cost[width];
        let scale = 1.0
            + lp.upper
                .iter()
                .chain(&lp.equalities)
                .map(|(_, b)| b.abs())
                .fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_EPS * scale {
            return Err(LpError::Infeasible);
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        for r in 0..t.rows.len() {
            if t.basis[r] >= art0 {
                if let Some(c) = (0..art0).find(|&j| t.rows[r][j].abs() > PIVOT_EPS) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut phase2 = vec![0.0; width + 1];
    phase2[..n].copy_from_slice(&lp.objective);
    t.set_cost(&phase2);
    t.optimize(|j| j < art0)?;

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots: t.pivots,
    })
}
