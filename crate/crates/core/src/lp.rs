//! Small linear-programming layer: a sparse model, its explicit dual, a dense
//! two-phase tableau simplex, and a sparse backend.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many variables times constraints the dense simplex is not used
/// by [`LpBackend::Auto`].
pub const DENSE_SIMPLEX_LIMIT: usize = 40_000;

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 50;
/// A dense solution violating a constraint by more than this, relative to
/// the largest right-hand side, is rejected.
const UNSTABLE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Free,
    NonNegative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpBackend {
    /// Tableau simplex; rejects its answer when rounding breaks feasibility.
    DenseSimplex,
    Sparse,
    /// Dense for small programs, falling back to sparse if the dense solve fails.
    Auto,
}

#[derive(Clone, Debug)]
struct Constraint {
    terms: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
}

/// `minimize c^T x` subject to sparse row constraints.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    kinds: Vec<VarKind>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, cost: f64, kind: VarKind) -> usize {
        self.objective.push(cost);
        self.kinds.push(kind);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Result<()> {
        if let Some((v, _)) = terms.iter().find(|(v, _)| *v >= self.objective.len()) {
            return Err(Error::Lp(format!("unknown variable {v}")));
        }
        self.constraints.push(Constraint { terms, sense, rhs });
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Objective value at `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or sign restriction at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, v) in self.kinds.iter().zip(x) {
            if *k == VarKind::NonNegative {
                worst = worst.max(-v);
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * x[*v]).sum();
            let viol = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// The dual program, written again as a minimization:
    /// for `min c^T x, A x (sense) b`, the dual is `max b^T y` with
    /// `y_i >= 0` for `>=` rows, `y_i <= 0` for `<=` rows, free for `=` rows,
    /// and `A^T y = c` on free columns, `A^T y <= c` on nonnegative ones.
    /// Returned as `min -b^T y'` with `<=` rows flipped so that every dual
    /// variable is nonnegative or free; its optimum is minus the primal one.
    pub fn dual(&self) -> LinearProgram {
        let mut dual = LinearProgram::new();
        let mut flip = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let (kind, sign) = match c.sense {
                Sense::Ge => (VarKind::NonNegative, 1.0),
                Sense::Le => (VarKind::NonNegative, -1.0),
                Sense::Eq => (VarKind::Free, 1.0),
            };
            dual.add_var(-sign * c.rhs, kind);
            flip.push(sign);
        }
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_vars()];
        for (i, c) in self.constraints.iter().enumerate() {
            for (v, a) in &c.terms {
                columns[*v].push((i, flip[i] * a));
            }
        }
        for (j, col) in columns.into_iter().enumerate() {
            let sense = match self.kinds[j] {
                VarKind::Free => Sense::Eq,
                VarKind::NonNegative => Sense::Le,
            };
            dual.constraints.push(Constraint {
                terms: col,
                sense,
                rhs: self.objective[j],
            });
        }
        dual
    }

    pub fn solve(&self, backend: LpBackend) -> Result<LpSolution> {
        match backend {
            LpBackend::DenseSimplex => self.solve_dense(),
            LpBackend::Sparse => self.solve_sparse(),
            LpBackend::Auto => {
                if self.num_vars() * self.num_constraints().max(1) <= DENSE_SIMPLEX_LIMIT {
                    self.solve_dense().or_else(|_| self.solve_sparse())
                } else {
                    self.solve_sparse()
                }
            }
        }
    }

    fn solve_sparse(&self) -> Result<LpSolution> {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&self.kinds)
            .map(|(c, k)| {
                let lo = match k {
                    VarKind::Free => f64::NEG_INFINITY,
                    VarKind::NonNegative => 0.0,
                };
                p.add_var(*c, (lo, f64::INFINITY))
            })
            .collect();
        for c in &self.constraints {
            let terms: Vec<_> = c.terms.iter().map(|(v, a)| (vars[*v], *a)).collect();
            let op = match c.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
                Sense::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(&terms[..], op, c.rhs);
        }
        let outcome = p.solve().map_err(|e| Error::Lp(e.to_string()))?;
        let solution = outcome
            .into_solution()
            .map_err(|_| Error::Lp("solver interrupted".into()))?;
        Ok(LpSolution {
            objective: solution.objective(),
            x: vars.iter().map(|v| solution.var_value(*v)).collect(),
            iterations: 0,
        })
    }

    fn solve_dense(&self) -> Result<LpSolution> {
        // equality form: each row gets a slack unless Eq; free columns stay free
        let n = self.num_vars();
        let m = self.constraints.len();
        let slacks = self.constraints.iter().filter(|c| c.sense != Sense::Eq).count();
        let total = n + slacks;
        let mut a = vec![vec![0.0; total]; m];
        let mut b = vec![0.0; m];
        let mut next_slack = n;
        for (i, c) in self.constraints.iter().enumerate() {
            for (v, coef) in &c.terms {
                a[i][*v] += coef;
            }
            match c.sense {
                Sense::Le => {
                    a[i][next_slack] = 1.0;
                    next_slack += 1;
                }
                Sense::Ge => {
                    a[i][next_slack] = -1.0;
                    next_slack += 1;
                }
                Sense::Eq => {}
            }
            b[i] = c.rhs;
            if b[i] < 0.0 {
                b[i] = -b[i];
                a[i].iter_mut().for_each(|x| *x = -*x);
            }
        }
        let mut cost = self.objective.clone();
        cost.resize(total, 0.0);
        let mut free: Vec<bool> = self.kinds.iter().map(|k| *k == VarKind::Free).collect();
        free.resize(total, false);
        let scale = b.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        let (xs, iterations) = two_phase_simplex(a, b, &cost, &free)?;
        let x = xs[..n].to_vec();
        let violation = self.max_violation(&x);
        if violation > UNSTABLE_TOL * scale || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LpUnstable(violation));
        }
        Ok(LpSolution {
            objective: self.evaluate(&x),
            x,
            iterations,
        })
    }
}

/// `min cost^T x, A x = b` with `b >= 0` and `x_j >= 0` unless `free[j]`,
/// via phase one on artificial variables. Free columns may enter in either
/// direction and never leave the basis through the ratio test.
fn two_phase_simplex(a: Vec<Vec<f64>>, b: Vec<f64>, cost: &[f64], free: &[bool]) -> Result<(Vec<f64>, usize)> {
    let m = a.len();
    let n = cost.len();
    let width = n + m + 1;
    // tableau rows: constraints, last column is rhs
    let mut t: Vec<Vec<f64>> = a
        .into_iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (mut row, bi))| {
            row.resize(width, 0.0);
            row[n + i] = 1.0;
            row[width - 1] = *bi;
            row
        })
        .collect();
    let original = t.clone();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut free = free.to_vec();
    free.resize(n + m, false);
    let max_iter = 50 * (n + m) + 1000;
    let mut iterations = 0;

    let mut phase1 = vec![0.0; width - 1];
    for c in phase1.iter_mut().skip(n).take(m) {
        *c = 1.0;
    }
    let scale = b.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let mut tableau = Tableau {
        t: &mut t,
        original: &original,
        basis: &mut basis,
        free: &free,
    };
    iterations += tableau.run(&phase1, n + m, max_iter, Some(1e-12 * scale))?;
    let infeas: f64 = tableau
        .basis
        .iter()
        .zip(tableau.t.iter())
        .filter(|(v, _)| **v >= n)
        .map(|(_, row)| row[width - 1])
        .sum();
    if infeas > 1e-8 * scale {
        return Err(Error::Lp("infeasible".into()));
    }
    // drive artificials out of the basis where possible
    for i in 0..m {
        if tableau.basis[i] >= n {
            let row = &tableau.t[i];
            let entering = (0..n)
                .filter(|j| !tableau.basis.contains(j))
                .max_by(|&j, &k| row[j].abs().total_cmp(&row[k].abs()))
                .filter(|&j| row[j].abs() > PIVOT_TOL);
            if let Some(j) = entering {
                pivot(tableau.t, tableau.basis, i, j);
            }
        }
    }
    let mut phase2 = cost.to_vec();
    phase2.resize(width - 1, 0.0);
    iterations += tableau.run(&phase2, n, max_iter, None)?;
    if !tableau.refactor() {
        return Err(Error::LpUnstable(f64::NAN));
    }
    let mut x = vec![0.0; n];
    for (i, v) in basis.iter().enumerate() {
        if *v < n {
            x[*v] = t[i][width - 1];
        }
    }
    Ok((x, iterations))
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c];
    t[r].iter_mut().for_each(|x| *x /= p);
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    basis[r] = c;
}

struct Tableau<'a> {
    t: &'a mut [Vec<f64>],
    original: &'a [Vec<f64>],
    basis: &'a mut [usize],
    free: &'a [bool],
}

impl Tableau<'_> {
    /// Clears small negative values of sign-constrained basic variables.
    fn clamp(&mut self) {
        let rhs = self.original.first().map_or(0, |r| r.len() - 1);
        for (row, v) in self.t.iter_mut().zip(self.basis.iter()) {
            if !self.free[*v] && row[rhs] < 0.0 && row[rhs] > -1e-12 {
                row[rhs] = 0.0;
            }
        }
    }

    /// Recomputes the tableau as `B^-1 [A | b]` from the original rows, which
    /// clears the rounding accumulated by pivoting. Leaves it untouched if the
    /// basis matrix is numerically singular.
    fn refactor(&mut self) -> bool {
        let m = self.t.len();
        let width = self.original.first().map_or(0, |r| r.len());
        let b = DMatrix::from_fn(m, m, |i, k| self.original[i][self.basis[k]]);
        let full = DMatrix::from_fn(m, width, |i, j| self.original[i][j]);
        let Some(solved) = b.lu().solve(&full) else {
            return false;
        };
        if solved.iter().any(|x| !x.is_finite()) {
            return false;
        }
        for (i, row) in self.t.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = solved[(i, j)];
            }
            for (k, v) in self.basis.iter().enumerate() {
                row[*v] = if k == i { 1.0 } else { 0.0 };
            }
        }
        self.clamp();
        true
    }

    /// Minimizes `cost` over the tableau, entering only columns `< allowed`,
    /// and stops early once the objective is at most `good_enough`.
    /// Dantzig's rule is used while the objective improves; after a run of
    /// degenerate pivots the method switches to Bland's rule until it moves.
    /// Outside Bland mode, ties in the ratio test go to the largest pivot.
    /// The tableau is refactored every [`REFACTOR_EVERY`] pivots and once more
    /// before optimality or unboundedness is declared.
    fn run(&mut self, cost: &[f64], allowed: usize, max_iter: usize, good_enough: Option<f64>) -> Result<usize> {
        let rhs = cost.len();
        let mut in_basis = vec![false; rhs];
        for v in self.basis.iter() {
            in_basis[*v] = true;
        }
        let objective = |t: &[Vec<f64>], basis: &[usize]| -> f64 {
            basis.iter().zip(t).map(|(v, row)| cost[*v] * row[rhs]).sum()
        };
        let mut last_objective = objective(self.t, self.basis);
        let mut stalled = 0;
        let mut fresh = false;
        for it in 0..max_iter {
            if it > 0 && it % REFACTOR_EVERY == 0 {
                fresh = self.refactor();
            }
            if good_enough.is_some_and(|g| last_objective <= g) {
                return Ok(it);
            }
            // reduced costs d = c - c_B^T B^-1 A, read from the tableau
            let mut reduced = cost[..allowed].to_vec();
            for (v, row) in self.basis.iter().zip(self.t.iter()) {
                let cb = cost[*v];
                if cb != 0.0 {
                    for (d, a) in reduced.iter_mut().zip(row) {
                        *d -= cb * a;
                    }
                }
            }
            let bland = stalled > 20;
            // entering column and direction: +1 raises it, -1 lowers a free one
            let mut entering = None;
            let mut steepest = 1e-10;
            for (j, d) in reduced.iter().enumerate() {
                if in_basis[j] {
                    continue;
                }
                let gain = if self.free[j] { d.abs() } else { -d };
                if gain <= steepest {
                    continue;
                }
                entering = Some((j, if *d < 0.0 { 1.0 } else { -1.0 }));
                if bland {
                    break;
                }
                steepest = gain;
            }
            let Some((j, dir)) = entering else {
                if !fresh && self.refactor() {
                    fresh = true;
                    continue;
                }
                return Ok(it);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let v = self.basis[i];
                if self.free[v] {
                    continue;
                }
                let a = dir * row[j];
                // a leftover artificial must stay at zero, so any entry blocks
                let artificial = v >= allowed && a.abs() > PIVOT_TOL;
                if a > PIVOT_TOL || artificial {
                    let ratio = if artificial { 0.0 } else { row[rhs].max(0.0) / a };
                    let better = match leave {
                        None => true,
                        Some((k, best)) => {
                            let tie = ratio <= best + 1e-12;
                            let tie_wins = if bland {
                                v < self.basis[k]
                            } else {
                                row[j].abs() > self.t[k][j].abs()
                            };
                            ratio < best - 1e-12 || (tie && tie_wins)
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                if !fresh && self.refactor() {
                    fresh = true;
                    continue;
                }
                return Err(Error::Lp("unbounded".into()));
            };
            in_basis[self.basis[r]] = false;
            in_basis[j] = true;
            pivot(self.t, self.basis, r, j);
            fresh = false;
            self.clamp();
            let now = objective(self.t, self.basis);
            if now < last_objective - 1e-12 * last_objective.abs().max(1.0) {
                stalled = 0;
                last_objective = now;
            } else {
                stalled += 1;
            }
        }
        Err(Error::LpIterationLimit(max_iter))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textbook() -> LinearProgram {
        // min -x - y, x + 2y <= 4, 3x + y <= 6, x, y >= 0 ; optimum at (8/5, 6/5)
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, VarKind::NonNegative);
        let y = lp.add_var(-1.0, VarKind::NonNegative);
        lp.add_constraint(vec![(x, 1.0), (y, 2.0)], Sense::Le, 4.0).unwrap();
        lp.add_constraint(vec![(x, 3.0), (y, 1.0)], Sense::Le, 6.0).unwrap();
        lp
    }

    #[test]
    fn dense_and_sparse_agree() {
        let lp = textbook();
        for backend in [LpBackend::DenseSimplex, LpBackend::Sparse] {
            let s = lp.solve(backend).unwrap();
            assert!((s.objective + 2.8).abs() < 1e-9, "{backend:?} {}", s.objective);
            assert!((s.x[0] - 1.6).abs() < 1e-9 && (s.x[1] - 1.2).abs() < 1e-9);
        }
    }

    #[test]
    fn strong_duality() {
        let lp = textbook();
        let primal = lp.solve(LpBackend::DenseSimplex).unwrap().objective;
        let dual = lp.dual().solve(LpBackend::DenseSimplex).unwrap().objective;
        assert!((primal + dual).abs() < 1e-9);
    }

    #[test]
    fn free_variables_and_absolute_values() {
        // min |x - 3| + |x + 1| written with t1, t2 >= 0 ; optimum 4
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, VarKind::Free);
        let t1 = lp.add_var(1.0, VarKind::NonNegative);
        let t2 = lp.add_var(1.0, VarKind::NonNegative);
        lp.add_constraint(vec![(t1, 1.0), (x, -1.0)], Sense::Ge, -3.0).unwrap();
        lp.add_constraint(vec![(t1, 1.0), (x, 1.0)], Sense::Ge, 3.0).unwrap();
        lp.add_constraint(vec![(t2, 1.0), (x, -1.0)], Sense::Ge, 1.0).unwrap();
        lp.add_constraint(vec![(t2, 1.0), (x, 1.0)], Sense::Ge, -1.0).unwrap();
        for backend in [LpBackend::DenseSimplex, LpBackend::Sparse] {
            let s = lp.solve(backend).unwrap();
            assert!((s.objective - 4.0).abs() < 1e-9);
            assert!(lp.max_violation(&s.x) < 1e-9);
        }
        let d = lp.dual().solve(LpBackend::DenseSimplex).unwrap();
        assert!((d.objective + 4.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, VarKind::NonNegative);
        lp.add_constraint(vec![(x, 1.0)], Sense::Le, -1.0).unwrap();
        assert!(lp.solve(LpBackend::DenseSimplex).is_err());
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, VarKind::NonNegative);
        lp.add_constraint(vec![(x, 1.0)], Sense::Ge, 0.0).unwrap();
        assert!(matches!(lp.solve(LpBackend::DenseSimplex), Err(Error::Lp(_))));
        assert!(lp.add_constraint(vec![(7, 1.0)], Sense::Ge, 0.0).is_err());
    }

    #[test]
    fn equality_rows() {
        // min x + y, x + y = 2, x - y = 0
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, VarKind::Free);
        let y = lp.add_var(1.0, VarKind::NonNegative);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 2.0).unwrap();
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Sense::Eq, 0.0).unwrap();
        let s = lp.solve(LpBackend::DenseSimplex).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        let d = lp.dual().solve(LpBackend::Sparse).unwrap();
        assert!((d.objective + 2.0).abs() < 1e-9);
    }
}
