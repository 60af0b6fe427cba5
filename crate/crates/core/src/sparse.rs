use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::Coefficient;
use crate::error::{Error, Result};

/// Column-compressed sparse matrix; row indices within a column are sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<C: Coefficient = Complex64> {
    rows: usize,
    columns: Vec<Vec<(usize, C)>>,
}

impl<C: Coefficient> SparseMatrix<C> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            columns: vec![Vec::new(); cols],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// negligible results dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C)>,
    {
        let mut acc: Vec<BTreeMap<usize, C>> = vec![BTreeMap::new(); cols];
        for (i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            let e = acc[j].entry(i).or_insert_with(C::zero);
            *e = e.clone() + v;
        }
        Ok(SparseMatrix {
            rows,
            columns: acc
                .into_iter()
                .map(|col| col.into_iter().filter(|(_, v)| !v.is_negligible()).collect())
                .collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            columns: (0..n).map(|i| vec![(i, C::one())]).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn column(&self, j: usize) -> &[(usize, C)] {
        &self.columns[j]
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        let col = &self.columns[j];
        match col.binary_search_by_key(&i, |(r, _)| *r) {
            Ok(k) => col[k].1.clone(),
            Err(_) => C::zero(),
        }
    }

    /// `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &C)> {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |(i, v)| (*i, j, v)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows,
                self.cols(),
                other.rows,
                other.cols()
            )));
        }
        let columns = other
            .columns
            .iter()
            .map(|col| {
                let mut acc: BTreeMap<usize, C> = BTreeMap::new();
                for (k, b) in col {
                    for (i, a) in &self.columns[*k] {
                        let e = acc.entry(*i).or_insert_with(C::zero);
                        *e = e.clone() + a.clone() * b.clone();
                    }
                }
                acc.into_iter().filter(|(_, v)| !v.is_negligible()).collect()
            })
            .collect();
        Ok(SparseMatrix {
            rows: self.rows,
            columns,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols() != other.cols() {
            return Err(Error::Dimension("shape mismatch in subtraction".into()));
        }
        let neg = other.triplets().map(|(i, j, v)| (i, j, -v.clone()));
        let pos = self.triplets().map(|(i, j, v)| (i, j, v.clone()));
        SparseMatrix::from_triplets(self.rows, self.cols(), pos.chain(neg))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut columns: Vec<Vec<(usize, C)>> = vec![Vec::new(); self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col {
                columns[*i].push((j, v.conjugate()));
            }
        }
        SparseMatrix {
            rows: self.cols(),
            columns,
        }
    }

    /// Largest entry modulus, zero for the empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.triplets()
            .map(|(_, _, v)| v.to_c64().norm())
            .fold(0.0, f64::max)
    }

    pub fn to_c64(&self) -> SparseMatrix<Complex64> {
        SparseMatrix {
            rows: self.rows,
            columns: self
                .columns
                .iter()
                .map(|col| col.iter().map(|(i, v)| (*i, v.to_c64())).collect())
                .collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.rows, self.cols());
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v.to_c64();
        }
        m
    }

    /// True if every entry is real and nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.triplets().all(|(_, _, v)| {
            let z = v.to_c64();
            z.im == 0.0 && z.re >= 0.0
        })
    }
}

impl SparseMatrix<Complex64> {
    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let columns = (0..m.ncols())
            .map(|j| {
                (0..m.nrows())
                    .filter(|&i| m[(i, j)] != Complex64::new(0.0, 0.0))
                    .map(|i| (i, m[(i, j)]))
                    .collect()
            })
            .collect();
        SparseMatrix {
            rows: m.nrows(),
            columns,
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        for (col, xj) in self.columns.iter().zip(x) {
            if *xj == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (i, v) in col {
                y[*i] += v * xj;
            }
        }
        y
    }

    /// `x = A^* y`.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|(i, v)| v.conj() * y[*i]).sum())
            .collect()
    }

    /// Entrywise modulus.
    pub fn abs(&self) -> SparseMatrix<Complex64> {
        SparseMatrix {
            rows: self.rows,
            columns: self
                .columns
                .iter()
                .map(|col| {
                    col.iter()
                        .map(|(i, v)| (*i, Complex64::new(v.norm(), 0.0)))
                        .collect()
                })
                .collect(),
        }
    }

    /// Largest column l1 sum: the exact `l1 -> l1` operator norm.
    pub fn max_col_sum(&self) -> f64 {
        self.columns
            .iter()
            .map(|col| col.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest row l1 sum: the exact `l_inf -> l_inf` operator norm.
    pub fn max_row_sum(&self) -> f64 {
        let mut sums = vec![0.0; self.rows];
        for (i, _, v) in self.triplets() {
            sums[i] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}
