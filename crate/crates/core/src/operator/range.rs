use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TruncatedOperator;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpBackend, Sense, VarKind};
use crate::sparse::SparseMatrix;

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeOptions {
    pub backend: LpBackend,
    /// Maximum number of angle-refinement passes after the first solve.
    pub refinement_passes: usize,
    /// Stop refining once `(upper - lower) <= rel_tol * upper`.
    pub rel_tol: f64,
    /// Candidate `xi` whose residual is also considered, e.g. the optimum
    /// from a smaller ball padded with zeros.
    pub warm_start: Option<Vec<Complex64>>,
    /// Solve the explicit dual of the final program to report a gap.
    pub compute_dual: bool,
}

impl Default for RangeOptions {
    fn default() -> Self {
        RangeOptions {
            backend: LpBackend::Auto,
            refinement_passes: 50,
            rel_tol: 1e-9,
            warm_start: None,
            compute_dual: true,
        }
    }
}

/// `inf_xi ||T xi - b||_1` bracketed by an LP relaxation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeDistance {
    /// Best attained `l1` residual; an upper bound for the infimum.
    pub distance: f64,
    /// Optimal value of the polygonal LP relaxation; a lower bound.
    pub lower_bound: f64,
    /// `l1` norm of the minimizing `xi`.
    pub argmin_norm: f64,
    /// `|primal - dual|` of the final LP, when requested.
    pub duality_gap: Option<f64>,
    pub passes: usize,
    pub lp_constraints: usize,
    #[serde(skip)]
    pub argmin: Vec<Complex64>,
}

pub fn range_distance_l1(op: &TruncatedOperator, target: &[Complex64]) -> Result<RangeDistance> {
    range_distance_l1_with(op, target, &RangeOptions::default())
}

fn residual_l1(t: &SparseMatrix, xi: &[Complex64], b: &[Complex64]) -> f64 {
    t.apply(xi).iter().zip(b).map(|(y, bi)| (y - bi).norm()).sum()
}

/// Distance in `l1` from `target` to the range of `op`.
///
/// Each `|z_i|` is replaced by `max_theta Re(e^{-i theta} z_i)` over eight
/// equally spaced angles, then refined with the arguments of the current
/// residual. The LP value is a lower bound and the residual of its
/// minimizer an upper bound.
pub fn range_distance_l1_with(
    op: &TruncatedOperator,
    target: &[Complex64],
    options: &RangeOptions,
) -> Result<RangeDistance> {
    let t = op.matrix();
    if target.len() != t.rows() {
        return Err(Error::Dimension(format!(
            "target has length {}, operator has {} rows",
            target.len(),
            t.rows()
        )));
    }
    let n = t.cols();
    let zero = Complex64::new(0.0, 0.0);
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); t.rows()];
    for (i, j, v) in t.triplets() {
        rows[i].push((j, *v));
    }
    let active: Vec<usize> = (0..t.rows())
        .filter(|&i| !rows[i].is_empty() || target[i] != zero)
        .collect();
    let mut angles: Vec<Vec<f64>> = vec![(0..8).map(|k| k as f64 * PI / 4.0).collect(); active.len()];

    let mut best_xi = vec![zero; n];
    let mut best = residual_l1(t, &best_xi, target);
    if let Some(w) = &options.warm_start {
        if w.len() != n {
            return Err(Error::Dimension("warm start length".into()));
        }
        let r = residual_l1(t, w, target);
        if r < best {
            best = r;
            best_xi = w.clone();
        }
    }

    let mut lower = 0.0;
    let mut passes = 0;
    let mut last_lp = None;
    for pass in 0..=options.refinement_passes {
        passes = pass + 1;
        let lp = build_lp(n, &rows, &active, &angles, target)?;
        let solution = lp.solve(options.backend)?;
        lower = f64::max(lower, solution.objective.max(0.0));
        let xi: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(solution.x[j], solution.x[n + j]))
            .collect();
        let r = residual_l1(t, &xi, target);
        if r < best {
            best = r;
            best_xi = xi.clone();
        }
        last_lp = Some(lp);
        if best - lower <= options.rel_tol * best || best == 0.0 {
            break;
        }
        let z = t.apply(&xi);
        for (k, &i) in active.iter().enumerate() {
            let d = z[i] - target[i];
            if d.norm() > 0.0 {
                let a = d.arg();
                if angles[k].iter().all(|b| angle_gap(*b, a) > 1e-9) {
                    angles[k].push(a);
                }
            }
        }
    }
    let lower = lower.min(best);
    let lp = last_lp.expect("at least one pass");
    let duality_gap = if options.compute_dual {
        let primal = lp.solve(options.backend)?.objective;
        let dual = lp.dual().solve(options.backend)?.objective;
        Some((primal + dual).abs())
    } else {
        None
    };
    Ok(RangeDistance {
        distance: best,
        lower_bound: lower,
        argmin_norm: best_xi.iter().map(|z| z.norm()).sum(),
        duality_gap,
        passes,
        lp_constraints: lp.num_constraints(),
        argmin: best_xi,
    })
}

fn build_lp(
    n: usize,
    rows: &[Vec<(usize, Complex64)>],
    active: &[usize],
    angles: &[Vec<f64>],
    target: &[Complex64],
) -> Result<LinearProgram> {
    let mut lp = LinearProgram::new();
    for _ in 0..2 * n {
        lp.add_var(0.0, VarKind::Free);
    }
    let slack_start = lp.num_vars();
    for _ in active {
        lp.add_var(1.0, VarKind::NonNegative);
    }
    // s_i - Re(e^{-i theta} (T xi)_i) >= -Re(e^{-i theta} b_i)
    for (k, &i) in active.iter().enumerate() {
        for &theta in &angles[k] {
            let (sin, cos) = theta.sin_cos();
            let mut terms = Vec::with_capacity(1 + 2 * rows[i].len());
            terms.push((slack_start + k, 1.0));
            for (j, v) in &rows[i] {
                terms.push((*j, -(cos * v.re + sin * v.im)));
                terms.push((n + j, -(-cos * v.im + sin * v.re)));
            }
            let b = target[i];
            lp.add_constraint(terms, Sense::Ge, -(cos * b.re + sin * b.im))?;
        }
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Group;
    use crate::operator::assemble_extended;
    use crate::parse_element_expr;

    #[test]
    fn invertible_element_reaches_target() {
        // 2 delta_e on Z: delta_e = T (delta_e / 2), distance 0
        let z = Group::parse("Z").unwrap();
        let a = parse_element_expr(&z, "2*de").unwrap();
        let op = assemble_extended(&a, 2).unwrap();
        let mut b = vec![Complex64::new(0.0, 0.0); op.matrix().rows()];
        b[0] = Complex64::new(1.0, 0.0);
        let r = range_distance_l1(&op, &b).unwrap();
        assert!(r.distance < 1e-9);
        assert!((r.argmin_norm - 0.5).abs() < 1e-9);
    }

    #[test]
    fn one_dimensional_closed_form() {
        // T = [1; 1] (one column), b = (1, 0): min |x - 1| + |x| = 1
        let z = Group::parse("Z").unwrap();
        let ball = std::sync::Arc::new(z.ball(1).unwrap());
        let col = std::sync::Arc::new(ball.prefix(0));
        let m = SparseMatrix::from_triplets(3, 1, [(0, 0, Complex64::new(1.0, 0.0)), (1, 0, Complex64::new(1.0, 0.0))])
            .unwrap();
        let op = TruncatedOperator::from_matrix(ball, col, m).unwrap();
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        for backend in [LpBackend::DenseSimplex, LpBackend::Sparse] {
            let opts = RangeOptions {
                backend,
                ..RangeOptions::default()
            };
            let r = range_distance_l1_with(&op, &b, &opts).unwrap();
            assert!((r.distance - 1.0).abs() < 1e-9);
            assert!(r.lower_bound <= r.distance + 1e-12);
            assert!(r.duality_gap.unwrap() < 1e-7);
        }
    }

    #[test]
    fn complex_residual_bracket() {
        // T = [1], b = e^{i pi/8}: exact distance 0, LP must find it
        let z = Group::parse("Z").unwrap();
        let ball = std::sync::Arc::new(z.ball(0).unwrap());
        let m = SparseMatrix::from_triplets(1, 1, [(0, 0, Complex64::new(0.0, 1.0))]).unwrap();
        let op = TruncatedOperator::from_matrix(ball.clone(), ball, m).unwrap();
        let b = vec![Complex64::from_polar(1.0, PI / 8.0)];
        let r = range_distance_l1(&op, &b).unwrap();
        assert!(r.distance < 1e-9);
    }

    #[test]
    fn backends_agree_on_group_operator() {
        let z2 = Group::parse("Z^2").unwrap();
        let a = parse_element_expr(&z2, "de + 0.5*d[1,0] + 0.25i*d[0,1]").unwrap();
        let op = assemble_extended(&a, 2).unwrap();
        let mut b = vec![Complex64::new(0.0, 0.0); op.matrix().rows()];
        b[0] = Complex64::new(1.0, 0.0);
        let mut values = Vec::new();
        for backend in [LpBackend::DenseSimplex, LpBackend::Sparse] {
            let opts = RangeOptions {
                backend,
                compute_dual: false,
                ..RangeOptions::default()
            };
            let r = range_distance_l1_with(&op, &b, &opts).unwrap();
            assert!(r.lower_bound <= r.distance + 1e-12);
            values.push(r.distance);
        }
        assert!((values[0] - values[1]).abs() < 1e-6, "{values:?}");
    }
}
