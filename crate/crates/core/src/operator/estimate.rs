use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TruncatedOperator;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::sparse::SparseMatrix;
use crate::spectral::singular_values;

/// Matrices with at most this many columns get dense factorizations.
pub const DENSE_LIMIT: usize = 600;

const MAX_ITERATIONS: usize = 10_000;
const REL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ColumnSum,
    RowSum,
    DenseSvd,
    PowerIteration,
    PNormIteration,
}

/// Two-sided bounds on `||T||_{p -> p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub p: Exponent,
    pub lower: f64,
    pub upper: f64,
    pub method: NormMethod,
    pub iterations: usize,
    pub converged: bool,
    /// Successive estimates of the iterative method, empty for closed forms.
    pub history: Vec<f64>,
}

impl NormBounds {
    fn exact(p: Exponent, value: f64, method: NormMethod) -> Self {
        NormBounds {
            p,
            lower: value,
            upper: value,
            method,
            iterations: 0,
            converged: true,
            history: Vec::new(),
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

pub fn opnorm_est(op: &TruncatedOperator, p: Exponent) -> Result<NormBounds> {
    opnorm_bounds(op.matrix(), p)
}

/// Bounds on the `p -> p` operator norm of a sparse matrix.
///
/// `p = 1` and `p = inf` are exact. For `p = 2` small matrices use a dense
/// SVD; larger ones use power iteration on `T* T` (Rayleigh lower bound)
/// with a Collatz-Wielandt upper bound on `|T|^T |T|`. Other exponents use
/// the `p`-norm power iteration for the lower bound and Riesz-Thorin
/// interpolation for the upper bound.
pub fn opnorm_bounds(t: &SparseMatrix, p: Exponent) -> Result<NormBounds> {
    if t.cols() == 0 || t.rows() == 0 || t.nnz() == 0 {
        return Ok(NormBounds::exact(p, 0.0, NormMethod::ColumnSum));
    }
    let one = t.max_col_sum();
    let inf = t.max_row_sum();
    if p == Exponent::ONE {
        return Ok(NormBounds::exact(p, one, NormMethod::ColumnSum));
    }
    if p.is_infinite() {
        return Ok(NormBounds::exact(p, inf, NormMethod::RowSum));
    }
    let interpolation = one.powf(1.0 / p.value()) * inf.powf(1.0 - 1.0 / p.value());
    let two = two_norm_bounds(t, one, inf)?;
    if p == Exponent::TWO {
        return Ok(two);
    }
    let p_val = p.value();
    let upper = if p_val < 2.0 {
        let theta = 2.0 / p_val - 1.0;
        one.powf(theta) * two.upper.powf(1.0 - theta)
    } else {
        let theta = 2.0 / p_val;
        two.upper.powf(theta) * inf.powf(1.0 - theta)
    }
    .min(interpolation);
    let (lower, history, converged) = pnorm_power_iteration(t, p, MAX_ITERATIONS, REL_TOL);
    Ok(NormBounds {
        p,
        lower: lower.min(upper),
        upper,
        method: NormMethod::PNormIteration,
        iterations: history.len(),
        converged,
        history,
    })
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn two_norm_bounds(t: &SparseMatrix, one: f64, inf: f64) -> Result<NormBounds> {
    let interpolation = (one * inf).sqrt();
    if t.cols() <= DENSE_LIMIT && t.rows() <= 8 * DENSE_LIMIT {
        let s = singular_values(&t.to_dense()).first().copied().unwrap_or(0.0);
        let slack = 1e-12 * s.max(f64::MIN_POSITIVE);
        return Ok(NormBounds {
            p: Exponent::TWO,
            lower: s - slack,
            upper: (s + slack).min(interpolation.max(s)),
            method: NormMethod::DenseSvd,
            iterations: 0,
            converged: true,
            history: Vec::new(),
        });
    }
    let n = t.cols();
    let mut x = vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    let mut history = Vec::new();
    let mut lower: f64 = 0.0;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let y = t.apply(&x);
        let est = l2(&y);
        lower = lower.max(est);
        let prev = history.last().copied();
        history.push(est);
        let z = t.apply_adjoint(&y);
        let nz = l2(&z);
        if nz == 0.0 {
            converged = true;
            break;
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if let Some(prev) = prev {
            if (est - prev).abs() <= REL_TOL * est {
                converged = true;
                break;
            }
        }
    }
    let upper = collatz_wielandt(t).min(interpolation).max(lower);
    Ok(NormBounds {
        p: Exponent::TWO,
        lower,
        upper,
        method: NormMethod::PowerIteration,
        iterations: history.len(),
        converged,
        history,
    })
}

/// `sqrt(max_i (B v)_i / v_i)` for `B = |T|^T |T|` and a positive vector
/// `v` refined by power iteration; an upper bound for `||T||_2`.
fn collatz_wielandt(t: &SparseMatrix) -> f64 {
    let a = t.abs();
    let n = t.cols();
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    let mut best = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let w = a.apply_adjoint(&a.apply(&v));
        let (mut low, mut high) = (f64::INFINITY, 0.0f64);
        for (wi, vi) in w.iter().zip(&v) {
            let ratio = wi.re / vi.re;
            low = low.min(ratio);
            high = high.max(ratio);
        }
        best = best.min(high);
        let norm = w.iter().map(|z| z.re).fold(0.0, f64::max);
        if norm == 0.0 {
            return 0.0;
        }
        // the iterate must stay strictly positive for the ratio bound
        v = w.iter().map(|z| Complex64::new((z.re / norm).max(1e-300), 0.0)).collect();
        if high - low <= 1e-12 * high {
            break;
        }
    }
    best.sqrt()
}

fn sign(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / r
    }
}

fn pnorm(v: &[Complex64], p: Exponent) -> f64 {
    p.norm(v.iter().map(|z| z.norm()))
}

/// Dual vector of `v` in `l_q`, `1/p + 1/q = 1`: the unit `l_q` vector `w`
/// with `<v, w> = ||v||_p`.
fn dual_vector(v: &[Complex64], p: Exponent) -> Vec<Complex64> {
    let norm = pnorm(v, p);
    if norm == 0.0 {
        return vec![Complex64::new(0.0, 0.0); v.len()];
    }
    let e = p.value() - 1.0;
    v.iter()
        .map(|z| sign(*z) * (z.norm() / norm).powf(e))
        .collect()
}

fn normalize(v: Vec<Complex64>, p: Exponent) -> Vec<Complex64> {
    let n = pnorm(&v, p);
    if n == 0.0 {
        v
    } else {
        v.into_iter().map(|z| z / n).collect()
    }
}

/// Boyd's power iteration for `||T||_p`, started from the all-ones vector
/// and from the column with the largest `p`-norm image. Returns the best
/// value found (a lower bound), that bound after each iteration, and whether
/// both runs converged.
pub fn pnorm_power_iteration(
    t: &SparseMatrix,
    p: Exponent,
    max_iter: usize,
    tol: f64,
) -> (f64, Vec<f64>, bool) {
    let n = t.cols();
    if n == 0 {
        return (0.0, Vec::new(), true);
    }
    let q = p.conjugate();
    let mut best_col = 0;
    let mut best_col_val = -1.0;
    for j in 0..n {
        let v: f64 = p.norm(t.column(j).iter().map(|(_, z)| z.norm()));
        if v > best_col_val {
            best_col_val = v;
            best_col = j;
        }
    }
    let mut basis = vec![Complex64::new(0.0, 0.0); n];
    basis[best_col] = Complex64::new(1.0, 0.0);
    let starts = [normalize(vec![Complex64::new(1.0, 0.0); n], p), basis];

    let mut best = 0.0;
    let mut history = Vec::new();
    let mut all_converged = true;
    for start in starts {
        let mut x = start;
        let mut prev = -1.0;
        let mut converged = false;
        for _ in 0..max_iter {
            let y = t.apply(&x);
            let est = pnorm(&y, p);
            if est > best {
                best = est;
            }
            history.push(best);
            if (est - prev).abs() <= tol * est.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
            prev = est;
            let z = t.apply_adjoint(&dual_vector(&y, p));
            if z.iter().all(|c| c.norm() == 0.0) {
                converged = true;
                break;
            }
            x = dual_vector(&z, q);
            x = normalize(x, p);
        }
        all_converged &= converged;
    }
    (best, history, all_converged)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusMethod {
    /// Smallest singular value; exact up to rounding.
    Svd,
    /// Projected descent on the unit `p`-sphere; the value is attained by a
    /// witness vector and so bounds the true modulus from above.
    ProjectedDescent,
}

/// Estimate of `inf_{||x||_p = 1} ||T x||_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub p: Exponent,
    pub value: f64,
    pub method: ModulusMethod,
    pub restarts: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Best value after each start.
    pub history: Vec<f64>,
    #[serde(skip)]
    pub witness: Vec<Complex64>,
}

/// Injectivity modulus of `op` on `l_p`.
///
/// For `p = 2` with at most [`DENSE_LIMIT`] columns this is the smallest
/// singular value (zero for wide matrices). Otherwise normalized projected
/// descent runs from the best basis vector and `restarts` seeded random
/// starts.
pub fn injectivity_modulus_est(
    op: &TruncatedOperator,
    p: Exponent,
    restarts: usize,
    seed: u64,
) -> Result<ModulusEstimate> {
    modulus_of_matrix(op.matrix(), p, restarts, seed)
}

pub(crate) fn modulus_of_matrix(
    t: &SparseMatrix,
    p: Exponent,
    restarts: usize,
    seed: u64,
) -> Result<ModulusEstimate> {
    if p.is_infinite() {
        return Err(Error::BadExponent(f64::INFINITY));
    }
    if restarts == 0 {
        return Err(Error::Invalid("restarts must be at least 1".into()));
    }
    let n = t.cols();
    if n == 0 {
        return Err(Error::Dimension("operator without columns".into()));
    }
    if p == Exponent::TWO && n <= DENSE_LIMIT {
        let value = if t.rows() < n {
            0.0
        } else {
            singular_values(&t.to_dense()).last().copied().unwrap_or(0.0)
        };
        return Ok(ModulusEstimate {
            p,
            value,
            method: ModulusMethod::Svd,
            restarts,
            seed,
            iterations: 0,
            history: vec![value],
            witness: Vec::new(),
        });
    }

    let mut starts = Vec::with_capacity(restarts + 1);
    let mut best_col = 0;
    let mut best_col_val = f64::INFINITY;
    for j in 0..n {
        let v: f64 = p.norm(t.column(j).iter().map(|(_, z)| z.norm()));
        if v < best_col_val {
            best_col_val = v;
            best_col = j;
        }
    }
    let mut basis = vec![Complex64::new(0.0, 0.0); n];
    basis[best_col] = Complex64::new(1.0, 0.0);
    starts.push(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        starts.push(normalize(v, p));
    }

    let mut best = f64::INFINITY;
    let mut witness = Vec::new();
    let mut history = Vec::with_capacity(starts.len());
    let mut iterations = 0;
    for x in starts {
        let (value, x, its) = descend(t, p, x);
        iterations += its;
        if value < best {
            best = value;
            witness = x;
        }
        history.push(best);
    }
    Ok(ModulusEstimate {
        p,
        value: best,
        method: ModulusMethod::ProjectedDescent,
        restarts,
        seed,
        iterations,
        history,
        witness,
    })
}

fn descend(t: &SparseMatrix, p: Exponent, mut x: Vec<Complex64>) -> (f64, Vec<Complex64>, usize) {
    let mut fx = pnorm(&t.apply(&x), p);
    let mut step: f64 = 1.0;
    let max_iter = 2000;
    for it in 0..max_iter {
        if fx == 0.0 {
            return (0.0, x, it);
        }
        let y = t.apply(&x);
        let g = t.apply_adjoint(&dual_vector(&y, p));
        let dx = dual_vector(&x, p);
        let d: Vec<Complex64> = g.iter().zip(&dx).map(|(gi, di)| gi - di * fx).collect();
        let dn = l2(&d);
        if dn <= 1e-14 * fx {
            return (fx, x, it);
        }
        let mut improved = false;
        step = (step * 2.0).min(1e6);
        for _ in 0..60 {
            let cand: Vec<Complex64> = x.iter().zip(&d).map(|(xi, di)| xi - di * (step / dn)).collect();
            let cand = normalize(cand, p);
            let fc = pnorm(&t.apply(&cand), p);
            if fc < fx {
                let gain = fx - fc;
                x = cand;
                fx = fc;
                improved = gain > 1e-13 * fx;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            return (fx, x, it + 1);
        }
    }
    (fx, x, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn diag(values: &[f64]) -> SparseMatrix {
        SparseMatrix::from_triplets(
            values.len(),
            values.len(),
            values.iter().enumerate().map(|(i, v)| (i, i, c(*v))),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_norms() {
        let d = diag(&[1.0, -3.0, 2.0]);
        for p in [1.0, 1.5, 2.0, 3.0, 7.0] {
            let b = opnorm_bounds(&d, Exponent::new(p).unwrap()).unwrap();
            assert!(b.lower <= b.upper);
            assert!((b.lower - 3.0).abs() < 1e-9, "p={p} {b:?}");
            assert!((b.upper - 3.0).abs() < 1e-9, "p={p} {b:?}");
        }
        let b = opnorm_bounds(&d, Exponent::INFINITY).unwrap();
        assert_eq!(b.upper, 3.0);
    }

    #[test]
    fn modulus_of_diagonal() {
        let d = diag(&[1.0, -3.0, 0.5]);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let m = modulus_of_matrix(&d, Exponent::new(p).unwrap(), 2, 7).unwrap();
            assert!((m.value - 0.5).abs() < 1e-9, "p={p} {}", m.value);
        }
        assert!(modulus_of_matrix(&d, Exponent::INFINITY, 2, 0).is_err());
        assert!(modulus_of_matrix(&d, Exponent::TWO, 0, 0).is_err());
    }

    #[test]
    fn wide_matrix_not_injective() {
        let m = SparseMatrix::from_triplets(1, 2, [(0, 0, c(1.0)), (0, 1, c(1.0))]).unwrap();
        let e = modulus_of_matrix(&m, Exponent::TWO, 1, 0).unwrap();
        assert_eq!(e.value, 0.0);
        let e = modulus_of_matrix(&m, Exponent::new(3.0).unwrap(), 3, 0).unwrap();
        assert!(e.value < 1e-6, "{}", e.value);
    }

    #[test]
    fn sparse_path_matches_closed_form() {
        // path adjacency on 2000 vertices: ||A||_2 = 2 cos(pi / 2001)
        let n = 2000;
        let triplets = (0..n - 1).flat_map(|i| [(i, i + 1, c(1.0)), (i + 1, i, c(1.0))]);
        let a = SparseMatrix::from_triplets(n, n, triplets).unwrap();
        let b = opnorm_bounds(&a, Exponent::TWO).unwrap();
        let exact = 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert_eq!(b.method, NormMethod::PowerIteration);
        assert!(b.lower <= exact + 1e-12 && exact <= b.upper + 1e-12);
        assert!(b.upper <= 2.0);
    }

    #[test]
    fn deterministic_in_seed() {
        let m = SparseMatrix::from_triplets(3, 2, [(0, 0, c(1.0)), (1, 1, c(2.0)), (2, 0, c(1.0))]).unwrap();
        let p = Exponent::new(1.5).unwrap();
        let a = modulus_of_matrix(&m, p, 4, 11).unwrap();
        let b = modulus_of_matrix(&m, p, 4, 11).unwrap();
        assert_eq!(a, b);
    }
}
