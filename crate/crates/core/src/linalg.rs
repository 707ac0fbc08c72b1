//! Dense matrix/vector kernels and the support-restricted least-squares
//! solve used by the pursuit-type solvers.
//!
//! Matrices are row-major `f64`. The least-squares solve factors the
//! column submatrix with a column-pivoted QR; rank-deficient systems
//! (including supports wider than the row count) fall back to the
//! minimum-norm solution via SVD and are flagged instead of failing, so
//! long Monte-Carlo experiments survive near-singular draws.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparsity::SupportSet;

/// Relative threshold below which an R diagonal entry counts as zero.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    /// Row-major entries, length rows * cols, all finite.
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix data length {} does not equal {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// A * v.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec: matrix has {} columns, vector has length {}",
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (i, slot) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// A^T * v.
    pub fn transpose_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "transpose_matvec: matrix has {} rows, vector has length {}",
                self.rows,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            let row = self.row(i);
            for (slot, a) in out.iter_mut().zip(row) {
                *slot += a * vi;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// The m x |S| submatrix of the columns indexed by `support`.
    pub fn columns_submatrix(&self, support: &SupportSet) -> Result<DenseMatrix> {
        support.check_within(self.cols)?;
        let k = support.len();
        let mut data = Vec::with_capacity(self.rows * k);
        for i in 0..self.rows {
            let row = self.row(i);
            for j in support.iter() {
                data.push(row[j]);
            }
        }
        Ok(DenseMatrix { rows: self.rows, cols: k, data })
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// One matrix row per line, comma-separated decimal literals.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let row = self.row(i);
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse(format!(
                        "line {}: expected {} fields, found {}",
                        lineno + 1,
                        first.len(),
                        row.len()
                    )));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse("empty CSV matrix".into()));
        }
        let r = rows.len();
        let c = rows[0].len();
        DenseMatrix::from_vec(r, c, rows.into_iter().flatten().collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_scaled(base: &mut [f64], factor: f64, delta: &[f64]) {
    debug_assert_eq!(base.len(), delta.len());
    for (slot, d) in base.iter_mut().zip(delta) {
        *slot += factor * d;
    }
}

/// Vector serialized as a single CSV row.
pub fn vector_to_csv(v: &[f64]) -> String {
    let mut out = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{x}");
    }
    out.push('\n');
    out
}

/// Accepts either a single CSV row or one value per line.
pub fn vector_from_csv_str(text: &str) -> Result<Vec<f64>> {
    let m = DenseMatrix::from_csv_str(text)?;
    if m.rows() == 1 || m.cols() == 1 {
        Ok(m.data().to_vec())
    } else {
        Err(Error::Parse(format!("expected a vector, found a {}x{} matrix", m.rows(), m.cols())))
    }
}

/// Result of a support-restricted least squares solve.
#[derive(Clone, Debug)]
pub struct LsSolution {
    /// Full-length solution; entries off the support are exactly zero.
    pub coefficients: Vec<f64>,
    /// True when the column submatrix was rank deficient (including
    /// supports wider than the row count) and the minimum-norm solution
    /// was returned.
    pub degenerate: bool,
}

/// argmin { ||y - A z||_2 : supp(z) subseteq support }.
///
/// Full-rank submatrices are solved through a column-pivoted QR;
/// rank-deficient ones return the minimum-norm least-squares solution via
/// SVD with `degenerate` set.
pub fn least_squares_on_support(
    a: &DenseMatrix,
    y: &[f64],
    support: &SupportSet,
) -> Result<LsSolution> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "least squares: matrix has {} rows, rhs has length {}",
            a.rows(),
            y.len()
        )));
    }
    support.check_within(a.cols())?;

    let n = a.cols();
    if support.is_empty() {
        return Ok(LsSolution { coefficients: vec![0.0; n], degenerate: false });
    }

    let submatrix = a.columns_submatrix(support)?.to_nalgebra();
    let rhs = DVector::from_column_slice(y);
    let k = support.len();

    let (restricted, degenerate) = if k <= a.rows() {
        let qr = submatrix.clone().col_piv_qr();
        let r = qr.r();
        let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
        let full_rank = max_diag > 0.0 && (0..k).all(|i| r[(i, i)].abs() > RANK_TOL * max_diag);
        if full_rank {
            // A P = Q R  =>  z = P R^{-1} Q^T y.
            let qty = qr.q().transpose() * &rhs;
            let mut z = r
                .view((0, 0), (k, k))
                .solve_upper_triangular(&qty.rows(0, k))
                .ok_or_else(|| Error::InvalidArgument("triangular solve failed".into()))?;
            qr.p().inv_permute_rows(&mut z);
            (z, false)
        } else {
            (min_norm_solve(&submatrix, &rhs)?, true)
        }
    } else {
        // Wider-than-tall submatrix is always rank deficient.
        (min_norm_solve(&submatrix, &rhs)?, true)
    };

    let mut coefficients = vec![0.0; n];
    for (slot, idx) in support.iter().enumerate() {
        coefficients[idx] = restricted[slot];
    }
    Ok(LsSolution { coefficients, degenerate })
}

fn min_norm_solve(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let eps = if max_sv > 0.0 { RANK_TOL * max_sv } else { f64::MIN_POSITIVE };
    svd.solve(y, eps).map_err(|e| Error::InvalidArgument(format!("svd solve failed: {e}")))
}
