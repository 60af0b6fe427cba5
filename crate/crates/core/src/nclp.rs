//! Noncommutative `Lp` norms on matrix algebras `M_n` with a faithful
//! tracial state, the module bound `||ax||_p <= ||a|| ||x||_p`, the exact
//! norm-attaining construction, and direct-finiteness checks.
//!
//! Matrix algebras are the finite-dimensional stand-in for a group von
//! Neumann algebra. The module bound and `sigma(xy) = sigma(yx)` hold
//! verbatim here, and norms are attained exactly because every spectral
//! measure is atomic.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::spectral::{eig_herm, sigma_max, CLAMP_BELOW};

const WEIGHT_TOL: f64 = 1e-12;

/// Whether `tau(xy) = tau(yx)` is expected to hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Uniform weights; a genuine trace.
    Trace,
    /// Arbitrary positive weights; a faithful state, not tracial.
    State,
}

/// `M_n` with `tau(x) = sum_i w_i x_ii`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracialMatrixAlgebra {
    weights: Vec<f64>,
    mode: TraceMode,
}

impl TracialMatrixAlgebra {
    /// Normalized trace `tr / n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("dimension must be positive".into()));
        }
        Ok(TracialMatrixAlgebra {
            weights: vec![1.0 / n as f64; n],
            mode: TraceMode::Trace,
        })
    }

    /// Positive weights summing to one. Trace mode requires them to be uniform.
    pub fn with_weights(weights: Vec<f64>, mode: TraceMode) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Dimension("dimension must be positive".into()));
        }
        if weights.iter().any(|w| *w <= 0.0 || !w.is_finite()) {
            return Err(Error::Invalid("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Invalid(format!("weights sum to {total}, not 1")));
        }
        let n = weights.len() as f64;
        if mode == TraceMode::Trace && weights.iter().any(|w| (w - 1.0 / n).abs() > WEIGHT_TOL) {
            return Err(Error::Invalid("trace mode requires uniform weights".into()));
        }
        Ok(TracialMatrixAlgebra { weights, mode })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> TraceMode {
        self.mode
    }

    pub fn is_uniform(&self) -> bool {
        let n = self.dim() as f64;
        self.weights.iter().all(|w| (w - 1.0 / n).abs() <= WEIGHT_TOL)
    }

    fn check(&self, x: &DMatrix<Complex64>) -> Result<()> {
        if x.nrows() != self.dim() || x.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix in M_{}",
                x.nrows(),
                x.ncols(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn tau(&self, x: &DMatrix<Complex64>) -> Result<Complex64> {
        self.check(x)?;
        Ok(self.weights.iter().enumerate().map(|(i, w)| x[(i, i)] * *w).sum())
    }
}

/// `tau((x* x)^{p/2})^{1/p}`, or `sigma_max(x)` for `p = inf`.
pub fn mat_nclp_norm(alg: &TracialMatrixAlgebra, x: &DMatrix<Complex64>, p: Exponent) -> Result<f64> {
    alg.check(x)?;
    if p.is_infinite() {
        return Ok(sigma_max(x));
    }
    let d = eig_herm(&(x.adjoint() * x))?;
    let half = p.value() / 2.0;
    let u = d.eigenvectors();
    let mut total = 0.0;
    for (k, &l) in d.eigenvalues().iter().enumerate() {
        let l = if l < CLAMP_BELOW { 0.0 } else { l };
        if l == 0.0 {
            continue;
        }
        // tau(P_k) for the rank-one projection onto the k-th eigenvector
        let weight: f64 = alg
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * u[(i, k)].norm_sqr())
            .sum();
        total += weight * l.powf(half);
    }
    Ok(total.max(0.0).powf(1.0 / p.value()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `||a x||_p` with `sigma_max(a) ||x||_p`.
pub fn module_bound_check(
    alg: &TracialMatrixAlgebra,
    a: &DMatrix<Complex64>,
    x: &DMatrix<Complex64>,
    p: Exponent,
) -> Result<ModuleBound> {
    alg.check(a)?;
    let lhs = mat_nclp_norm(alg, &(a * x), p)?;
    let rhs = sigma_max(a) * mat_nclp_norm(alg, x, p)?;
    Ok(ModuleBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-10,
    })
}

#[derive(Clone, Debug)]
pub struct NormAttainment {
    /// `(n / m)^{1/p}` times the spectral projection of `a* a` onto its top
    /// eigenvalue, `m` being the multiplicity.
    pub x: DMatrix<Complex64>,
    pub x_norm: f64,
    pub achieved: f64,
    pub sigma_max: f64,
    pub multiplicity: usize,
}

/// Unit vector `x` in `L_p` with `||a x||_p = ||a||`.
pub fn norm_attainment(alg: &TracialMatrixAlgebra, a: &DMatrix<Complex64>, p: Exponent) -> Result<NormAttainment> {
    alg.check(a)?;
    if p.is_infinite() {
        return Err(Error::BadExponent(f64::INFINITY));
    }
    if !alg.is_uniform() {
        return Err(Error::Invalid("norm attainment needs uniform weights".into()));
    }
    let d = eig_herm(&(a.adjoint() * a))?;
    let top = d.max_eigenvalue();
    if top <= CLAMP_BELOW {
        return Err(Error::Invalid("a = 0".into()));
    }
    let cluster = 1e-9 * top;
    let members: Vec<usize> = (0..d.dim())
        .filter(|&k| d.eigenvalues()[k] >= top - cluster)
        .collect();
    let n = alg.dim();
    let m = members.len();
    let scale = (n as f64 / m as f64).powf(1.0 / p.value());
    let u = d.eigenvectors();
    let mut x = DMatrix::<Complex64>::zeros(n, n);
    for &k in &members {
        let v = u.column(k);
        x += v * v.adjoint();
    }
    x *= Complex64::new(scale, 0.0);
    let x_norm = mat_nclp_norm(alg, &x, p)?;
    let achieved = mat_nclp_norm(alg, &(a * &x), p)?;
    Ok(NormAttainment {
        x,
        x_norm,
        achieved,
        sigma_max: top.sqrt(),
        multiplicity: m,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectFiniteness {
    /// `||xy - I||_2`
    pub left_identity_defect: f64,
    /// `||yx - I||_2`
    pub right_identity_defect: f64,
    /// `||xy - I|| <= 1e-10`, so `yx = I` was asserted.
    pub hypothesis_met: bool,
    pub holds: bool,
}

pub fn direct_finiteness_check(x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> Result<DirectFiniteness> {
    if x.shape() != y.shape() || x.nrows() != x.ncols() {
        return Err(Error::Dimension("x and y must be square of the same size".into()));
    }
    let id = DMatrix::<Complex64>::identity(x.nrows(), x.nrows());
    let left = sigma_max(&(x * y - &id));
    let right = sigma_max(&(y * x - &id));
    let hypothesis_met = left <= 1e-10;
    Ok(DirectFiniteness {
        left_identity_defect: left,
        right_identity_defect: right,
        hypothesis_met,
        holds: !hypothesis_met || right <= 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_diag(v: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            v.len(),
            v.iter().map(|x| Complex64::new(*x, 0.0)),
        ))
    }

    #[test]
    fn norm_examples() {
        let alg = TracialMatrixAlgebra::uniform(2).unwrap();
        let id = DMatrix::<Complex64>::identity(2, 2);
        for p in [1.0, 1.5, 2.0, 4.0] {
            let v = mat_nclp_norm(&alg, &id, Exponent::new(p).unwrap()).unwrap();
            assert!((v - 1.0).abs() < 1e-14);
        }
        let x = real_diag(&[2.0, 0.0]);
        assert!((mat_nclp_norm(&alg, &x, Exponent::ONE).unwrap() - 1.0).abs() < 1e-14);
        assert!((mat_nclp_norm(&alg, &x, Exponent::INFINITY).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weights_validated() {
        assert!(TracialMatrixAlgebra::with_weights(vec![0.5, 0.5], TraceMode::Trace).is_ok());
        assert!(TracialMatrixAlgebra::with_weights(vec![0.25, 0.75], TraceMode::Trace).is_err());
        assert!(TracialMatrixAlgebra::with_weights(vec![0.25, 0.75], TraceMode::State).is_ok());
        assert!(TracialMatrixAlgebra::with_weights(vec![0.0, 1.0], TraceMode::State).is_err());
        assert!(TracialMatrixAlgebra::with_weights(vec![0.5, 0.6], TraceMode::State).is_err());
    }

    #[test]
    fn attainment_diag() {
        let alg = TracialMatrixAlgebra::uniform(2).unwrap();
        let a = real_diag(&[2.0, 1.0]);
        let r = norm_attainment(&alg, &a, Exponent::TWO).unwrap();
        assert!((r.achieved - 2.0).abs() < 1e-12);
        assert!((r.x_norm - 1.0).abs() < 1e-12);
        assert!((r.x[(0, 0)].re - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.multiplicity, 1);
        let zero = DMatrix::<Complex64>::zeros(2, 2);
        assert!(norm_attainment(&alg, &zero, Exponent::TWO).is_err());
        let unitary = DMatrix::<Complex64>::identity(2, 2);
        let r = norm_attainment(&alg, &unitary, Exponent::new(1.7).unwrap()).unwrap();
        assert!((r.achieved - 1.0).abs() < 1e-12);
    }

    #[test]
    fn module_bound_zero() {
        let alg = TracialMatrixAlgebra::uniform(2).unwrap();
        let zero = DMatrix::<Complex64>::zeros(2, 2);
        let x = real_diag(&[1.0, 3.0]);
        let r = module_bound_check(&alg, &zero, &x, Exponent::new(3.0).unwrap()).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn direct_finiteness_examples() {
        let id = DMatrix::<Complex64>::identity(3, 3);
        let r = direct_finiteness_check(&id, &id).unwrap();
        assert_eq!(r.left_identity_defect, 0.0);
        assert!(r.hypothesis_met && r.holds);
        let x = real_diag(&[2.0, 4.0, 0.5]);
        let y = real_diag(&[0.5, 0.25, 2.0]);
        let r = direct_finiteness_check(&x, &y).unwrap();
        assert!(r.right_identity_defect < 1e-10 && r.holds);
        let r = direct_finiteness_check(&x, &id).unwrap();
        assert!(!r.hypothesis_met && r.holds);
    }
}
