//! Dense two-phase simplex over exact rationals, with Bland's rule.
//!
//! Solves `min c·x` subject to linear rows (`≤`, `≥`, `=`) and `x ≥ 0`,
//! and returns a dual vector so optimality can be re-verified independently.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<BigRational>,
    pub relation: Relation,
    pub rhs: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<BigRational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("the program is infeasible")]
    Infeasible,
    #[error("the program is unbounded")]
    Unbounded,
    #[error("row {0} has the wrong number of coefficients")]
    Shape(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<BigRational>,
    pub value: BigRational,
    /// One multiplier per constraint: `≥` rows non-negative, `≤` rows non-positive.
    pub dual: Vec<BigRational>,
}

impl LinearProgram {
    pub fn new(objective: Vec<BigRational>) -> Self {
        LinearProgram {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<BigRational>, relation: Relation, rhs: BigRational) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    /// Checks `x` is feasible, `y` is dual feasible, and the objectives agree.
    pub fn verify(&self, solution: &Solution) -> bool {
        let n = self.vars();
        if solution.x.len() != n || solution.dual.len() != self.constraints.len() {
            return false;
        }
        if solution.x.iter().any(Signed::is_negative) {
            return false;
        }
        let mut reduced = self.objective.clone();
        let mut dual_value = BigRational::zero();
        for (row, y) in self.constraints.iter().zip(&solution.dual) {
            let lhs: BigRational = row.coeffs.iter().zip(&solution.x).map(|(a, x)| a * x).sum();
            let ok = match row.relation {
                Relation::Le => lhs <= row.rhs && !y.is_positive(),
                Relation::Ge => lhs >= row.rhs && !y.is_negative(),
                Relation::Eq => lhs == row.rhs,
            };
            if !ok {
                return false;
            }
            for (r, a) in reduced.iter_mut().zip(&row.coeffs) {
                *r -= a * y;
            }
            dual_value += &row.rhs * y;
        }
        let primal: BigRational = self
            .objective
            .iter()
            .zip(&solution.x)
            .map(|(c, x)| c * x)
            .sum();
        reduced.iter().all(|r| !r.is_negative()) && primal == dual_value && primal == solution.value
    }

    pub fn solve(&self) -> Result<Solution, LpError> {
        let n = self.vars();
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Shape(i));
            }
        }
        Tableau::build(self).run(self)
    }
}

/// Columns: structural `0..n`, one slack per inequality, then one artificial per row.
struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
    flipped: Vec<bool>,
    n: usize,
    artificial_start: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.vars();
        let m = lp.constraints.len();
        let slacks = lp
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let artificial_start = n + slacks;
        let width = artificial_start + m;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut flipped = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack = n;
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut row = vec![BigRational::zero(); width];
            row[..n].clone_from_slice(&c.coeffs);
            match c.relation {
                Relation::Le => {
                    row[slack] = BigRational::from_integer(1.into());
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = BigRational::from_integer((-1).into());
                    slack += 1;
                }
                Relation::Eq => {}
            }
            let mut b = c.rhs.clone();
            let flip = b.is_negative();
            if flip {
                for v in row.iter_mut() {
                    *v = -&*v;
                }
                b = -b;
            }
            row[artificial_start + i] = BigRational::from_integer(1.into());
            rows.push(row);
            rhs.push(b);
            flipped.push(flip);
            basis.push(artificial_start + i);
        }
        Tableau {
            rows,
            rhs,
            basis,
            flipped,
            n,
            artificial_start,
            width,
        }
    }

    fn pivot(
        &mut self,
        r: usize,
        col: usize,
        cost: &mut [BigRational],
        cost_value: &mut BigRational,
    ) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        self.rhs[r] /= &p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        let factor = cost[col].clone();
        if !factor.is_zero() {
            for (v, pv) in cost.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
            *cost_value -= &factor * &pivot_rhs;
        }
        self.basis[r] = col;
    }

    /// Reduced costs of `c` for the current basis, and `-c_B·x_B`.
    fn reduced(&self, c: &[BigRational]) -> (Vec<BigRational>, BigRational) {
        let mut cost = c.to_vec();
        let mut value = BigRational::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (v, a) in cost.iter_mut().zip(&self.rows[i]) {
                *v -= &cb * a;
            }
            value -= &cb * &self.rhs[i];
        }
        (cost, value)
    }

    /// Bland's rule iterations; `allowed` limits entering columns.
    fn optimize(
        &mut self,
        cost: &mut [BigRational],
        value: &mut BigRational,
        allowed: usize,
    ) -> Result<(), LpError> {
        loop {
            let Some(col) = (0..allowed).find(|&j| cost[j].is_negative()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((r, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, col, cost, value);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<Solution, LpError> {
        let mut phase1 = vec![BigRational::zero(); self.width];
        for v in &mut phase1[self.artificial_start..] {
            *v = BigRational::from_integer(1.into());
        }
        let (mut cost, mut value) = self.reduced(&phase1);
        self.optimize(&mut cost, &mut value, self.artificial_start)?;
        if !value.is_zero() {
            return Err(LpError::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..self.rows.len() {
            if self.basis[r] < self.artificial_start {
                continue;
            }
            if let Some(col) = (0..self.artificial_start).find(|&j| !self.rows[r][j].is_zero()) {
                self.pivot(r, col, &mut cost, &mut value);
            }
        }
        let mut phase2 = vec![BigRational::zero(); self.width];
        phase2[..self.n].clone_from_slice(&lp.objective);
        let (mut cost, mut value) = self.reduced(&phase2);
        self.optimize(&mut cost, &mut value, self.artificial_start)?;

        let mut x = vec![BigRational::zero(); self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rhs[i].clone();
            }
        }
        // Reduced cost of artificial i is −y'_i for the sign-normalized rows.
        let dual = (0..self.rows.len())
            .map(|i| {
                let y = -&cost[self.artificial_start + i];
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Ok(Solution {
            x,
            value: -value,
            dual,
        })
    }
}
