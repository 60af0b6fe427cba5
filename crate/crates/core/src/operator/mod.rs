//! Truncated convolution operators on word-metric balls.
//!
//! An operator maps functions on a column ball to functions on a row ball.
//! Square assemblies are compressions `P_r T P_r`; [`assemble_extended`]
//! keeps the full image of a left convolution, mapping `B_r` into
//! `B_{r+s}` where `s` is the support radius of the generating element.

mod estimate;
pub mod io;
mod range;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Coefficient, GroupAlgebraElement};
use crate::error::{Error, Result};
use crate::group::BallIndex;
use crate::sparse::SparseMatrix;

pub use estimate::{
    injectivity_modulus_est, opnorm_bounds, opnorm_est, pnorm_power_iteration, ModulusEstimate,
    ModulusMethod, NormBounds, NormMethod, DENSE_LIMIT,
};
pub use range::{range_distance_l1, range_distance_l1_with, RangeDistance, RangeOptions};

/// Which regular representation an assembly realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `(L_a xi)(h) = sum_g a(g) xi(g^-1 h)`
    Left,
    /// `(rho_a xi)(h) = sum_g a(g) xi(h g)`
    Right,
    /// `(t xi)(h) = xi(h^-1)`
    Flip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Left,
    Right,
    Flip,
    Composite,
}

/// Sparse matrix indexed by balls, tagged with where it came from.
#[derive(Clone, Debug)]
pub struct TruncatedOperator<C: Coefficient = Complex64> {
    row_ball: Arc<BallIndex>,
    col_ball: Arc<BallIndex>,
    matrix: SparseMatrix<C>,
    provenance: Provenance,
    generator: Option<GroupAlgebraElement<C>>,
}

impl<C: Coefficient> TruncatedOperator<C> {
    pub fn row_ball(&self) -> &Arc<BallIndex> {
        &self.row_ball
    }

    pub fn col_ball(&self) -> &Arc<BallIndex> {
        &self.col_ball
    }

    pub fn matrix(&self) -> &SparseMatrix<C> {
        &self.matrix
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn generator(&self) -> Option<&GroupAlgebraElement<C>> {
        self.generator.as_ref()
    }

    pub fn is_square(&self) -> bool {
        self.matrix.rows() == self.matrix.cols()
    }

    /// `self * other`, tagged composite.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.col_ball.len() != other.row_ball.len() {
            return Err(Error::Dimension("composition of incompatible balls".into()));
        }
        Ok(TruncatedOperator {
            row_ball: self.row_ball.clone(),
            col_ball: other.col_ball.clone(),
            matrix: self.matrix.matmul(&other.matrix)?,
            provenance: Provenance::Composite,
            generator: None,
        })
    }

    pub fn to_c64(&self) -> TruncatedOperator<Complex64> {
        TruncatedOperator {
            row_ball: self.row_ball.clone(),
            col_ball: self.col_ball.clone(),
            matrix: self.matrix.to_c64(),
            provenance: self.provenance,
            generator: self.generator.as_ref().map(|g| g.to_c64()),
        }
    }
}

impl TruncatedOperator<Complex64> {
    /// Wraps an arbitrary matrix on the given balls.
    pub fn from_matrix(
        row_ball: Arc<BallIndex>,
        col_ball: Arc<BallIndex>,
        matrix: SparseMatrix<Complex64>,
    ) -> Result<Self> {
        if matrix.rows() != row_ball.len() || matrix.cols() != col_ball.len() {
            return Err(Error::Dimension("matrix does not match balls".into()));
        }
        Ok(TruncatedOperator {
            row_ball,
            col_ball,
            matrix,
            provenance: Provenance::Composite,
            generator: None,
        })
    }
}

/// Compression of the left, right or flip operator to `ball`.
///
/// * left: `entry[h, h'] = a(h h'^-1)`
/// * right: `entry[h, h'] = a(h^-1 h')`
/// * flip: permutation `h -> h^-1` (the element `a` is ignored)
pub fn assemble<C: Coefficient>(
    a: &GroupAlgebraElement<C>,
    ball: &Arc<BallIndex>,
    side: Side,
) -> Result<TruncatedOperator<C>> {
    if a.group().family() != ball.group().family() {
        return Err(Error::GroupMismatch {
            left: a.group().to_string(),
            right: ball.group().to_string(),
        });
    }
    let (matrix, provenance, generator) = match side {
        Side::Left => (convolution_matrix(a, ball, ball, true)?, Provenance::Left, Some(a.clone())),
        Side::Right => (convolution_matrix(a, ball, ball, false)?, Provenance::Right, Some(a.clone())),
        Side::Flip => (flip_matrix(ball)?, Provenance::Flip, None),
    };
    Ok(TruncatedOperator {
        row_ball: ball.clone(),
        col_ball: ball.clone(),
        matrix,
        provenance,
        generator,
    })
}

/// Left convolution by `a` from the ball of radius `r` into the ball of
/// radius `r + support_radius(a)`, which holds the whole image.
pub fn assemble_extended<C: Coefficient>(
    a: &GroupAlgebraElement<C>,
    radius: usize,
) -> Result<TruncatedOperator<C>> {
    let s = a.support_radius()?;
    let rows = Arc::new(a.group().ball(radius + s)?);
    let cols = Arc::new(rows.prefix(radius));
    let matrix = convolution_matrix(a, &rows, &cols, true)?;
    Ok(TruncatedOperator {
        row_ball: rows,
        col_ball: cols,
        matrix,
        provenance: Provenance::Left,
        generator: Some(a.clone()),
    })
}

fn convolution_matrix<C: Coefficient>(
    a: &GroupAlgebraElement<C>,
    rows: &BallIndex,
    cols: &BallIndex,
    left: bool,
) -> Result<SparseMatrix<C>> {
    let group = rows.group();
    let mut triplets = Vec::with_capacity(cols.len() * a.support_len());
    // right convolution needs g^-1 for each support element
    let support: Vec<_> = a
        .terms()
        .map(|(g, c)| {
            let k = if left { g.clone() } else { group.inv(g)? };
            Ok((k, c.clone()))
        })
        .collect::<Result<_>>()?;
    for (j, hp) in cols.elements().iter().enumerate() {
        for (k, c) in &support {
            let h = if left {
                group.mul_unchecked(k, hp)?
            } else {
                group.mul_unchecked(hp, k)?
            };
            if let Some(i) = rows.index_of(&h) {
                triplets.push((i, j, c.clone()));
            }
        }
    }
    SparseMatrix::from_triplets(rows.len(), cols.len(), triplets)
}

fn flip_matrix<C: Coefficient>(ball: &BallIndex) -> Result<SparseMatrix<C>> {
    let group = ball.group();
    let triplets = ball
        .elements()
        .iter()
        .enumerate()
        .map(|(j, h)| {
            let hi = group.inv_unchecked(h)?;
            let i = ball
                .index_of(&hi)
                .expect("balls are closed under inversion");
            Ok((i, j, C::one()))
        })
        .collect::<Result<Vec<_>>>()?;
    SparseMatrix::from_triplets(ball.len(), ball.len(), triplets)
}

/// Largest entry modulus of `T_flip R_a - L_a T_flip` on `ball`.
///
/// Compressions commute with the flip because balls are inverse-closed, so
/// this vanishes identically; with Gaussian-rational coefficients it is
/// computed without rounding.
pub fn intertwine_check<C: Coefficient>(
    a: &GroupAlgebraElement<C>,
    ball: &Arc<BallIndex>,
) -> Result<f64> {
    let flip = assemble(a, ball, Side::Flip)?;
    let right = assemble(a, ball, Side::Right)?;
    let left = assemble(a, ball, Side::Left)?;
    let lhs = flip.matrix.matmul(&right.matrix)?;
    let rhs = left.matrix.matmul(&flip.matrix)?;
    Ok(lhs.sub(&rhs)?.max_abs())
}
