//! Dense spectral tools: Hermitian eigendecomposition, functional calculus,
//! the canonical trace, group-side noncommutative `Lp` norms, and checks of
//! `sigma(xy) = sigma(yx)` and the Neumann perturbation bound.

use std::sync::Arc;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::algebra::GroupAlgebraElement;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::operator::{assemble, Side, DENSE_LIMIT};

/// Eigenvalues below this (in absolute value) are treated as zero before
/// fractional powers are taken.
pub const CLAMP_BELOW: f64 = 1e-12;

/// Relative change between the last two radii below which an `Lp` sequence
/// counts as converged.
pub const NC_CONVERGENCE_TOL: f64 = 1e-4;

const HERMITIAN_TOL: f64 = 1e-12;

/// Eigendecomposition `M = U diag(lambda) U*` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
    residual: f64,
    orthonormality_defect: f64,
}

impl SpectralDecomposition {
    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// `max_k ||M v_k - lambda_k v_k||_2`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `max |V* V - I|` entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        self.orthonormality_defect
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Eigenvalues as CSV (`index,eigenvalue`).
    pub fn eigenvalues_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, l) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{i},{l}\n"));
        }
        out
    }
}

impl Serialize for SpectralDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let vectors: Vec<Vec<[f64; 2]>> = self
            .eigenvectors
            .column_iter()
            .map(|c| c.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        let mut st = s.serialize_struct("SpectralDecomposition", 4)?;
        st.serialize_field("eigenvalues", &self.eigenvalues)?;
        st.serialize_field("eigenvectors", &vectors)?;
        st.serialize_field("residual", &self.residual)?;
        st.serialize_field("orthonormality_defect", &self.orthonormality_defect)?;
        st.end()
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise `|M - M*|`.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Inputs whose asymmetry exceeds `1e-12 * max(1, max|M_ij|)` are rejected.
/// The solver is tridiagonal reduction followed by implicit symmetric QR
/// with Wilkinson shifts; output is deterministic.
pub fn eig_herm(m: &DMatrix<Complex64>) -> Result<SpectralDecomposition> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let scale = max_abs(m).max(1.0);
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
            residual: 0.0,
            orthonormality_defect: 0.0,
        });
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);

    let mv = m * &eigenvectors;
    let mut residual: f64 = 0.0;
    for (j, lambda) in eigenvalues.iter().enumerate() {
        let r = (mv.column(j) - eigenvectors.column(j) * Complex64::new(*lambda, 0.0)).norm();
        residual = residual.max(r);
    }
    let gram = eigenvectors.adjoint() * &eigenvectors;
    let orthonormality_defect = max_abs(&(gram - DMatrix::identity(n, n)));
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        residual,
        orthonormality_defect,
    })
}

fn apply_function(d: &SpectralDecomposition, f: &dyn Fn(f64) -> f64) -> Result<Vec<f64>> {
    d.eigenvalues
        .iter()
        .map(|&l| {
            let v = f(l);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::FunctionUndefined(l))
            }
        })
        .collect()
}

/// `U f(Lambda) U*`.
pub fn func_calc(d: &SpectralDecomposition, f: &dyn Fn(f64) -> f64) -> Result<DMatrix<Complex64>> {
    let values = apply_function(d, f)?;
    let u = &d.eigenvectors;
    let mut scaled = u.clone();
    for (j, v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*v);
    }
    Ok(scaled * u.adjoint())
}

/// `U f(Lambda) U* v` without forming the full matrix.
pub fn func_calc_apply(
    d: &SpectralDecomposition,
    f: &dyn Fn(f64) -> f64,
    v: &[Complex64],
) -> Result<Vec<Complex64>> {
    if v.len() != d.dim() {
        return Err(Error::Dimension("vector length".into()));
    }
    let values = apply_function(d, f)?;
    let u = &d.eigenvectors;
    let coords: Vec<Complex64> = (0..d.dim())
        .map(|k| {
            let c: Complex64 = u.column(k).iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            c * values[k]
        })
        .collect();
    Ok((0..d.dim())
        .map(|i| (0..d.dim()).map(|k| u[(i, k)] * coords[k]).sum())
        .collect())
}

/// Canonical trace `T -> <T delta_e, delta_e>`: the coefficient at the identity.
pub fn trace_state(a: &GroupAlgebraElement) -> Complex64 {
    a.coeff(&a.group().identity())
}

/// Radius sweep of the group-side noncommutative `Lp` norm.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NcLpReport {
    pub p: Exponent,
    pub radii: Vec<usize>,
    /// Ball sizes per radius.
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
    /// Aitken extrapolation from the last three values when it is well defined,
    /// else the last value.
    pub extrapolated: f64,
    /// Relative change of the last two values below [`NC_CONVERGENCE_TOL`].
    pub converged: bool,
    /// Not converged and the last increment is not smaller than the one before.
    pub diverging: bool,
}

/// `tau((a* a)^{p/2})^{1/p}` read off the compressions of `a* a` to balls.
///
/// `a* a` is formed exactly in the group algebra, its left-convolution
/// compression `M_r` to each ball is diagonalized, and the value is
/// `<M_r^{p/2} delta_e, delta_e>^{1/p}`. For `p = inf` the value is
/// `sqrt(lambda_max(M_r))`, the operator-norm estimate.
pub fn nc_lp_norm_group(a: &GroupAlgebraElement, p: Exponent, radii: &[usize]) -> Result<NcLpReport> {
    if radii.is_empty() {
        return Err(Error::Invalid("no radii given".into()));
    }
    let positive = a.star().convolve(a)?;
    let mut values = Vec::with_capacity(radii.len());
    let mut dims = Vec::with_capacity(radii.len());
    for &r in radii {
        let ball = Arc::new(a.group().ball(r)?);
        if ball.len() > DENSE_LIMIT {
            return Err(Error::TooLarge(ball.len()));
        }
        dims.push(ball.len());
        let m = assemble(&positive, &ball, Side::Left)?.matrix().to_dense();
        let d = eig_herm(&m)?;
        let value = if p.is_infinite() {
            d.max_eigenvalue().max(0.0).sqrt()
        } else {
            let half = p.value() / 2.0;
            let e = ball.identity_index();
            let t: f64 = d
                .eigenvalues()
                .iter()
                .enumerate()
                .map(|(k, &l)| {
                    let l = if l < CLAMP_BELOW { 0.0 } else { l };
                    d.eigenvectors()[(e, k)].norm_sqr() * l.powf(half)
                })
                .sum();
            t.max(0.0).powf(1.0 / p.value())
        };
        values.push(value);
    }
    let n = values.len();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let converged = n >= 2 && rel(values[n - 1], values[n - 2]) < NC_CONVERGENCE_TOL;
    let diverging = n >= 3
        && !converged
        && (values[n - 1] - values[n - 2]).abs() >= (values[n - 2] - values[n - 3]).abs();
    let extrapolated = if n >= 3 {
        let (x0, x1, x2) = (values[n - 3], values[n - 2], values[n - 1]);
        let denom = x2 - 2.0 * x1 + x0;
        let cand = x2 - (x2 - x1) * (x2 - x1) / denom;
        if denom.abs() > 1e-14 * x2.abs().max(1.0) && cand.is_finite() {
            cand
        } else {
            x2
        }
    } else {
        values[n - 1]
    };
    Ok(NcLpReport {
        p,
        radii: radii.to_vec(),
        dims,
        values,
        extrapolated,
        converged,
        diverging,
    })
}

/// All eigenvalues of a general square matrix via Hessenberg reduction and
/// shifted QR (complex Schur form).
pub fn eigenvalues_general(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("not square".into()));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::NoConvergence)?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Smallest `d` such that the two multisets can be paired with every pair
/// within distance `d` (bottleneck matching).
pub fn bottleneck_match(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension("multisets of different sizes".into()));
    }
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    let dist: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let mut candidates: Vec<f64> = dist.iter().flatten().copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(&dist, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo])
}

fn perfect_matching(dist: &[Vec<f64>], threshold: f64) -> bool {
    let n = dist.len();
    let mut match_of_b = vec![usize::MAX; n];
    fn augment(
        i: usize,
        dist: &[Vec<f64>],
        threshold: f64,
        seen: &mut [bool],
        match_of_b: &mut [usize],
    ) -> bool {
        for j in 0..dist.len() {
            if dist[i][j] <= threshold && !seen[j] {
                seen[j] = true;
                if match_of_b[j] == usize::MAX
                    || augment(match_of_b[j], dist, threshold, seen, match_of_b)
                {
                    match_of_b[j] = i;
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|i| {
        let mut seen = vec![false; n];
        augment(i, dist, threshold, &mut seen, &mut match_of_b)
    })
}

/// Bottleneck distance between the spectra of `xy` and `yx`.
pub fn spectra_commute_check(x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> Result<f64> {
    if x.shape() != y.shape() || x.nrows() != x.ncols() {
        return Err(Error::Dimension("x and y must be square of the same size".into()));
    }
    let xy = eigenvalues_general(&(x * y))?;
    let yx = eigenvalues_general(&(y * x))?;
    bottleneck_match(&xy, &yx)
}

/// Singular values, descending.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value of a square or tall matrix; zero for wide ones.
pub fn sigma_min(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Measured quantities of the perturbation step: if `T` is bounded below by
/// `delta` and `||T - T1|| <= delta / 3`, then `T1` is invertible with
/// `||T1^-1|| <= 3 / (2 delta)` and `||T1^-1 T - I|| <= 1/2`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NeumannReport {
    pub delta: f64,
    pub perturbation: f64,
    pub t1_invertible: bool,
    pub inverse_norm: f64,
    pub inverse_bound: f64,
    pub defect: f64,
    /// Invertible, inverse within `bound * (1 + 1e-9)`, defect within `1/2 + 1e-9`.
    pub holds: bool,
}

pub fn neumann_perturbation_check(t: &DMatrix<Complex64>, t1: &DMatrix<Complex64>) -> Result<NeumannReport> {
    if t.shape() != t1.shape() || t.nrows() != t.ncols() {
        return Err(Error::Dimension("T and T1 must be square of the same size".into()));
    }
    let delta = sigma_min(t);
    if delta <= 0.0 {
        return Err(Error::Hypothesis("T is not bounded below".into()));
    }
    let perturbation = sigma_max(&(t - t1));
    if perturbation > delta / 3.0 * (1.0 + 1e-12) {
        return Err(Error::Hypothesis(format!(
            "||T - T1|| = {perturbation} exceeds delta/3 = {}",
            delta / 3.0
        )));
    }
    let inverse_bound = 3.0 / (2.0 * delta);
    let n = t.nrows();
    match t1.clone().try_inverse() {
        Some(inv) => {
            let inverse_norm = sigma_max(&inv);
            let defect = sigma_max(&(&inv * t - DMatrix::<Complex64>::identity(n, n)));
            let holds = inverse_norm <= inverse_bound * (1.0 + 1e-9) && defect <= 0.5 + 1e-9;
            Ok(NeumannReport {
                delta,
                perturbation,
                t1_invertible: true,
                inverse_norm,
                inverse_bound,
                defect,
                holds,
            })
        }
        None => Ok(NeumannReport {
            delta,
            perturbation,
            t1_invertible: false,
            inverse_norm: f64::INFINITY,
            inverse_bound,
            defect: f64::INFINITY,
            holds: false,
        }),
    }
}
