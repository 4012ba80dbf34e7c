//! Dense matrices, a reverse-mode tape over them, and the optimizer and
//! initialization routines used for training.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod init;
mod tape;

pub use adam::Adam;
pub use gradcheck::{grad_check, GradCheckReport};
pub use init::{glorot_init, glorot_uniform};
pub use tape::{SparseId, Tape, Var};

use crate::exec::Execution;
use crate::{Error, Result};

/// Row-major dense matrix of `f64`. Scalars are `1 x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows} x {cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Matrix::filled(1, 1, value)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
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

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Value of a `1 x 1` matrix.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.len(), 1);
        self.data[0]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
    }

    /// `self * other`, parallel over output rows.
    pub fn matmul(&self, other: &Matrix, exec: Execution) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let w = other.cols;
        let mut out = Matrix::zeros(self.rows, w);
        exec.for_each_row(&mut out.data, w, |r, orow| {
            for (k, &a) in self.row(r).iter().enumerate() {
                if a != 0.0 {
                    for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        });
        Ok(out)
    }

    /// `self * other^T`.
    pub fn matmul_t(&self, other: &Matrix, exec: Execution) -> Matrix {
        debug_assert_eq!(self.cols, other.cols);
        let w = other.rows;
        let mut out = Matrix::zeros(self.rows, w);
        exec.for_each_row(&mut out.data, w, |r, orow| {
            let a = self.row(r);
            for (j, o) in orow.iter_mut().enumerate() {
                *o = a.iter().zip(other.row(j)).map(|(x, y)| x * y).sum();
            }
        });
        out
    }

    /// `self^T * other`.
    pub fn t_matmul(&self, other: &Matrix, exec: Execution) -> Matrix {
        debug_assert_eq!(self.rows, other.rows);
        self.transpose()
            .matmul(other, exec)
            .expect("shapes checked above")
    }

    /// Rows relabelled: row `r` moves to `perm[r]`.
    pub fn rows_permuted(&self, perm: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let dst = perm[r] * self.cols;
            out.data[dst..dst + self.cols].copy_from_slice(self.row(r));
        }
        out
    }

    /// Index of the largest entry of each row (first on ties).
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut best = 0;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products() {
        let a = Matrix::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Matrix::new(3, 2, vec![1., 0., 0., 1., 1., 1.]).unwrap();
        let c = a.matmul(&b, Execution::Sequential).unwrap();
        assert_eq!(c.data(), &[4., 5., 10., 11.]);
        assert_eq!(a.matmul_t(&b.transpose(), Execution::Parallel), c);
        assert_eq!(a.transpose().t_matmul(&b, Execution::Sequential), c);
        assert!(a.matmul(&a, Execution::Sequential).is_err());
    }

    #[test]
    fn argmax_first_on_ties() {
        let m = Matrix::new(2, 3, vec![1., 3., 3., 0., 0., 0.]).unwrap();
        assert_eq!(m.argmax_rows(), vec![1, 0]);
    }
}
