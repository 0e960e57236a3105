//! A small dense two-phase simplex solver for the welfare portioning rules.
//!
//! Problems are `minimize c.x` subject to linear rows and `x >= 0`. The solver also
//! reports one dual value per row, which the leximin refinement uses to tell which users
//! are tight at the optimum.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub n_vars: usize,
    /// Minimized objective, one coefficient per variable.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals in the orientation the rows were given.
    pub duals: Vec<f64>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram { n_vars, objective: vec![0.0; n_vars], constraints: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self)?.run(self)
    }
}

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;
/// After this many pivots without objective progress the entering rule switches to Bland's.
const STALL_LIMIT: usize = 50;

struct Tableau {
    rows: usize,
    cols: usize,
    /// rows x (cols + 1); the last entry of each row is the right-hand side.
    t: Vec<f64>,
    /// Reduced costs, last entry is minus the current objective.
    obj: Vec<f64>,
    basis: Vec<usize>,
    artificial_start: usize,
    /// Column whose tableau entries form column `r` of the basis inverse.
    identity_col: Vec<usize>,
    /// +1 or -1 depending on whether row `r` was negated to make its rhs nonnegative.
    sign: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self> {
        if lp.objective.len() != lp.n_vars {
            return Err(Error::Dimension { expected: lp.n_vars, got: lp.objective.len() });
        }
        let rows = lp.constraints.len();
        let mut relations = Vec::with_capacity(rows);
        let mut sign = Vec::with_capacity(rows);
        for c in &lp.constraints {
            if let Some(&(v, _)) = c.coeffs.iter().find(|(v, _)| *v >= lp.n_vars) {
                return Err(Error::Index { index: v, len: lp.n_vars });
            }
            if c.rhs < 0.0 {
                sign.push(-1.0);
                relations.push(match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                });
            } else {
                sign.push(1.0);
                relations.push(c.relation);
            }
        }
        let n_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
        let artificial_start = lp.n_vars + n_slack;
        let cols = artificial_start + n_art;
        let width = cols + 1;
        let mut t = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut identity_col = vec![0; rows];
        let (mut next_slack, mut next_art) = (lp.n_vars, artificial_start);
        for (r, c) in lp.constraints.iter().enumerate() {
            let row = &mut t[r * width..(r + 1) * width];
            for &(v, a) in &c.coeffs {
                row[v] += sign[r] * a;
            }
            row[cols] = sign[r] * c.rhs;
            match relations[r] {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[r] = next_slack;
                    identity_col[r] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[r] = next_art;
                    identity_col[r] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[r] = next_art;
                    identity_col[r] = next_art;
                    next_art += 1;
                }
            }
        }
        Ok(Tableau { rows, cols, t, obj: vec![0.0; width], basis, artificial_start, identity_col, sign })
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.width();
        self.obj.clear();
        self.obj.extend_from_slice(costs);
        self.obj.resize(w, 0.0);
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * w..(r + 1) * w];
                for (o, &v) in self.obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.t[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                let row = &mut self.t[r * w..(r + 1) * w];
                for (v, &p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (v, &p) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex pivots on the current cost row; columns at or beyond `enter_limit` never enter.
    fn optimize(&mut self, enter_limit: usize) -> Result<()> {
        let mut stall = 0;
        let mut last_obj = self.obj[self.cols];
        for _ in 0..MAX_PIVOTS {
            let bland = stall > STALL_LIMIT;
            let mut enter = None;
            let mut best = -COST_EPS;
            for c in 0..enter_limit {
                let d = self.obj[c];
                if d < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12 || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else {
                return Err(Error::SolverFailure("linear program is unbounded".into()));
            };
            self.pivot(pr, pc);
            let now = self.obj[self.cols];
            if (now - last_obj).abs() <= 1e-13 {
                stall += 1;
            } else {
                stall = 0;
                last_obj = now;
            }
        }
        Err(Error::SolverFailure("simplex pivot limit reached".into()))
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let mut phase1 = vec![0.0; self.cols];
        for c in phase1.iter_mut().skip(self.artificial_start) {
            *c = 1.0;
        }
        if self.artificial_start < self.cols {
            self.set_costs(&phase1);
            self.optimize(self.cols)?;
            let infeasibility = -self.obj[self.cols];
            let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
            if infeasibility > 1e-9 * scale {
                return Err(Error::SolverFailure("linear program is infeasible".into()));
            }
            for r in 0..self.rows {
                if self.basis[r] >= self.artificial_start {
                    if let Some(c) = (0..self.artificial_start).find(|&c| self.at(r, c).abs() > 1e-9) {
                        self.pivot(r, c);
                    }
                }
            }
        }
        let mut costs = lp.objective.clone();
        costs.resize(self.cols, 0.0);
        self.set_costs(&costs);
        self.optimize(self.artificial_start)?;

        let mut x = vec![0.0; lp.n_vars];
        for r in 0..self.rows {
            if self.basis[r] < lp.n_vars {
                x[self.basis[r]] = self.rhs(r).max(0.0);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let duals = (0..self.rows)
            .map(|r| {
                let col = self.identity_col[r];
                let y: f64 = (0..self.rows).map(|i| costs[self.basis[i]] * self.at(i, col)).sum();
                self.sign[r] * y
            })
            .collect();
        Ok(LpSolution { x, objective, duals })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max_problem() {
        // maximize 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        assert!((s.objective + 36.0).abs() < 1e-9);
        // duals of the maximization are (0, 1.5, 1); minimization flips the sign
        assert!(s.duals[0].abs() < 1e-9);
        assert!((s.duals[1] + 1.5).abs() < 1e-9);
        assert!((s.duals[2] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // minimize x + 2y s.t. x + y = 1, x >= 0.25, y >= 0.5
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add(vec![(0, 1.0)], Relation::Ge, 0.25);
        lp.add(vec![(1, -1.0)], Relation::Le, -0.5);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 0.5).abs() < 1e-9 && (s.x[1] - 0.5).abs() < 1e-9);
        assert!((s.objective - 1.5).abs() < 1e-9);
        // strong duality: b.y = c.x
        let b = [1.0, 0.25, -0.5];
        let dual_obj: f64 = b.iter().zip(&s.duals).map(|(b, y)| b * y).sum();
        assert!((dual_obj - s.objective).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add(vec![(0, 1.0)], Relation::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(Error::SolverFailure(_))));

        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.add(vec![(0, 1.0)], Relation::Ge, 1.0);
        assert!(matches!(lp.solve(), Err(Error::SolverFailure(_))));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // a classic cycling example under the largest-coefficient rule
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0);
        lp.add(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0);
        lp.add(vec![(2, 1.0)], Relation::Le, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9);
    }
}
