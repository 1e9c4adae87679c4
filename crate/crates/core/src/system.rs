//! The linear-system model shared by every solver.
//!
//! Row-mode solvers need every row of `A` at unit norm and column-mode solvers
//! need every column at unit norm. Normalization records the factors it
//! divided by so that results can be mapped back to the raw system.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows or columns whose norm is within this distance of one are left untouched.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Raw,
    RowsNormalized,
    ColumnsNormalized,
}

/// Per-row or per-column positive factors divided out during normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub normalization: Normalization,
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    scaling: ScalingRecord,
}

impl LinearSystem {
    /// Builds a raw system, checking that `matrix` is square and matches `rhs`.
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() == 0 {
            return Err(Error::Dimension("matrix is empty".into()));
        }
        if rhs.len() != matrix.nrows() {
            return Err(Error::Dimension(format!(
                "rhs has length {}, matrix has {} rows",
                rhs.len(),
                matrix.nrows()
            )));
        }
        if matrix.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("system contains non-finite entries".into()));
        }
        let n = matrix.nrows();
        Ok(Self {
            matrix,
            rhs,
            scaling: ScalingRecord {
                normalization: Normalization::Raw,
                factors: vec![1.0; n],
            },
        })
    }

    /// Convenience constructor from row-major rows.
    pub fn from_rows(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
            return Err(Error::Dimension(format!(
                "row {} has {} entries, expected {}",
                i + 1,
                row.len(),
                ncols
            )));
        }
        let matrix = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
        Self::new(matrix, DVector::from_column_slice(rhs))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn normalization(&self) -> Normalization {
        self.scaling.normalization
    }

    pub fn scaling(&self) -> &ScalingRecord {
        &self.scaling
    }

    /// Row `t` (1-based) as a column vector, i.e. `a_t`.
    pub fn row(&self, t: usize) -> Result<DVector<f64>> {
        self.check_index(t)?;
        Ok(self.matrix.row(t - 1).transpose())
    }

    /// Column `t` (1-based), i.e. `c_t`.
    pub fn column(&self, t: usize) -> Result<DVector<f64>> {
        self.check_index(t)?;
        Ok(self.matrix.column(t - 1).into_owned())
    }

    /// `b_t` (1-based).
    pub fn rhs_at(&self, t: usize) -> Result<f64> {
        self.check_index(t)?;
        Ok(self.rhs[t - 1])
    }

    pub fn check_index(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.dim() {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.dim(),
            });
        }
        Ok(())
    }

    /// `b - A x`.
    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rhs - &self.matrix * x
    }

    pub fn residual_norm(&self, x: &DVector<f64>) -> f64 {
        self.residual(x).norm()
    }

    /// Scales every row to unit norm and divides `b` by the same factors.
    pub fn normalize_rows(&self) -> Result<Self> {
        match self.normalization() {
            Normalization::RowsNormalized => return Ok(self.clone()),
            Normalization::ColumnsNormalized => {
                return Err(Error::Usage(
                    "system is already columns-normalized; normalize the raw system".into(),
                ))
            }
            Normalization::Raw => {}
        }
        let n = self.dim();
        let mut matrix = self.matrix.clone();
        let mut rhs = self.rhs.clone();
        let mut factors = Vec::with_capacity(n);
        for i in 0..n {
            let norm = self.matrix.row(i).norm();
            if norm == 0.0 {
                return Err(Error::DegenerateRow { row: i + 1 });
            }
            let factor = if (norm - 1.0).abs() <= NORM_TOLERANCE { 1.0 } else { norm };
            if factor != 1.0 {
                matrix.row_mut(i).unscale_mut(factor);
                rhs[i] /= factor;
            }
            factors.push(factor);
        }
        Ok(Self {
            matrix,
            rhs,
            scaling: ScalingRecord {
                normalization: Normalization::RowsNormalized,
                factors,
            },
        })
    }

    /// Scales every column to unit norm; `b` is unchanged.
    pub fn normalize_columns(&self) -> Result<Self> {
        match self.normalization() {
            Normalization::ColumnsNormalized => return Ok(self.clone()),
            Normalization::RowsNormalized => {
                return Err(Error::Usage(
                    "system is already rows-normalized; normalize the raw system".into(),
                ))
            }
            Normalization::Raw => {}
        }
        let n = self.dim();
        let mut matrix = self.matrix.clone();
        let mut factors = Vec::with_capacity(n);
        for j in 0..n {
            let norm = self.matrix.column(j).norm();
            if norm == 0.0 {
                return Err(Error::DegenerateColumn { column: j + 1 });
            }
            let factor = if (norm - 1.0).abs() <= NORM_TOLERANCE { 1.0 } else { norm };
            if factor != 1.0 {
                matrix.column_mut(j).unscale_mut(factor);
            }
            factors.push(factor);
        }
        Ok(Self {
            matrix,
            rhs: self.rhs.clone(),
            scaling: ScalingRecord {
                normalization: Normalization::ColumnsNormalized,
                factors,
            },
        })
    }

    /// Maps a solution of this system back to the raw system it came from.
    ///
    /// Row normalization preserves the solution set; column normalization
    /// substitutes `y = D x`, so `x[t] = y[t] / scale[t]`.
    pub fn denormalize_solution(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.normalization() {
            Normalization::ColumnsNormalized => DVector::from_iterator(
                x.len(),
                x.iter().zip(&self.scaling.factors).map(|(v, s)| v / s),
            ),
            _ => x.clone(),
        }
    }

    pub fn rows_are_unit(&self) -> bool {
        (0..self.dim()).all(|i| (self.matrix.row(i).norm() - 1.0).abs() <= NORM_TOLERANCE)
    }

    pub fn columns_are_unit(&self) -> bool {
        (0..self.dim()).all(|j| (self.matrix.column(j).norm() - 1.0).abs() <= NORM_TOLERANCE)
    }

    /// Fails unless the system was rows-normalized (or already has unit rows).
    pub fn require_unit_rows(&self) -> Result<()> {
        if self.normalization() == Normalization::RowsNormalized || self.rows_are_unit() {
            Ok(())
        } else {
            Err(Error::Usage(
                "row iteration needs unit-norm rows; call normalize_rows first".into(),
            ))
        }
    }

    pub fn require_unit_columns(&self) -> Result<()> {
        if self.normalization() == Normalization::ColumnsNormalized || self.columns_are_unit() {
            Ok(())
        } else {
            Err(Error::Usage(
                "column iteration needs unit-norm columns; call normalize_columns first".into(),
            ))
        }
    }
}
