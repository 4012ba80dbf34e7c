use rand::Rng;

use crate::exec::Execution;
use crate::{Error, Result};

/// Compressed sparse row matrix of `f64`.
///
/// Column indices within a row are strictly increasing and no explicit zero
/// is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate
    /// coordinates are summed; entries that end up zero are dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = t.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::Shape(format!(
                "entry ({r}, {c}) outside {rows}x{cols} matrix"
            )));
        }
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut i = 0;
        while i < t.len() {
            let (r, c, mut v) = t[i];
            let mut j = i + 1;
            while j < t.len() && t[j].0 == r && t[j].1 == c {
                v += t[j].2;
                j += 1;
            }
            if v != 0.0 {
                indptr[r + 1] += 1;
                indices.push(c);
                values.push(v);
            }
            i = j;
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Converts a row-major dense buffer, skipping zeros.
    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "dense buffer size");
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..rows {
            for c in 0..cols {
                let v = data[r * cols + c];
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, val) = self.row(r);
        idx.binary_search(&c).map(|k| val[k]).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (idx, val) = self.row(r);
            idx.iter().zip(val).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for (r, c, v) in self.iter() {
            out[r * self.cols + c] = v;
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                let k = next[c];
                indices[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    /// Exact structural and value symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }

    /// Keeps the sparsity pattern and applies `f` to every stored value.
    /// Values mapped to zero are removed.
    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.rows,
            self.cols,
            self.iter().map(|(r, c, v)| (r, c, f(r, c, v))),
        )
        .expect("pattern within bounds")
    }

    /// Every stored value replaced by 1.
    pub fn binarized(&self) -> SparseMatrix {
        SparseMatrix {
            values: vec![1.0; self.nnz()],
            ..self.clone()
        }
    }

    /// Each row scaled to unit sum; all-zero rows are left untouched.
    pub fn row_normalized(&self) -> SparseMatrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            let s: f64 = self.values[a..b].iter().sum();
            if s != 0.0 {
                out.values[a..b].iter_mut().for_each(|v| *v /= s);
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    /// Elementwise union with summed values.
    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        SparseMatrix::from_triplets(self.rows, self.cols, self.iter().chain(other.iter()))
    }

    /// Entries kept where `mask` stores a nonzero value.
    pub fn masked_by(&self, mask: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != mask.rows || self.cols != mask.cols {
            return Err(Error::Shape("mask shape differs".into()));
        }
        SparseMatrix::from_triplets(
            self.rows,
            self.cols,
            self.iter().filter(|&(r, c, _)| mask.get(r, c) != 0.0),
        )
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.cols {
            return Err(Error::Shape(format!(
                "vstack with {} and {} columns",
                self.cols, other.cols
            )));
        }
        let mut indptr = self.indptr.clone();
        let base = self.nnz();
        indptr.extend(other.indptr[1..].iter().map(|p| p + base));
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(SparseMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            indptr,
            indices,
            values,
        })
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!(
                "hstack with {} and {} rows",
                self.rows, other.rows
            )));
        }
        let shift = self.cols;
        SparseMatrix::from_triplets(
            self.rows,
            self.cols + other.cols,
            self.iter()
                .chain(other.iter().map(|(r, c, v)| (r, c + shift, v))),
        )
    }

    /// Sparse-sparse product.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = vec![0.0; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.cols];
        let mut indptr = vec![0usize];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.rows {
            let (ai, av) = self.row(r);
            for (&k, &a) in ai.iter().zip(av) {
                let (bi, bv) = other.row(k);
                for (&c, &b) in bi.iter().zip(bv) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != 0.0 {
                    indices.push(c);
                    values.push(acc[c]);
                }
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            values,
        })
    }

    /// Dense product `self * x` where `x` is row-major `self.cols() x width`.
    pub fn mul_dense(&self, x: &[f64], width: usize, exec: Execution) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols * width);
        let mut out = vec![0.0; self.rows * width];
        exec.for_each_row(&mut out, width, |r, orow| {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                let xrow = &x[c * width..(c + 1) * width];
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += v * xv;
                }
            }
        });
        out
    }

    /// Dense product `self^T * g` where `g` is `self.rows() x width`.
    pub fn transpose_mul_dense(&self, g: &[f64], width: usize) -> Vec<f64> {
        debug_assert_eq!(g.len(), self.rows * width);
        let mut out = vec![0.0; self.cols * width];
        for r in 0..self.rows {
            let grow = &g[r * width..(r + 1) * width];
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                let orow = &mut out[c * width..(c + 1) * width];
                for (o, &gv) in orow.iter_mut().zip(grow) {
                    *o += v * gv;
                }
            }
        }
        out
    }

    /// Inverted dropout on stored values: each survives with probability
    /// `1 - p` and is scaled by `1 / (1 - p)`.
    pub fn dropout<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> SparseMatrix {
        if p <= 0.0 {
            return self.clone();
        }
        let scale = 1.0 / (1.0 - p);
        let mut indptr = vec![0usize];
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                if rng.random::<f64>() >= p {
                    indices.push(c);
                    values.push(v * scale);
                }
            }
            indptr.push(indices.len());
        }
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            indptr,
            indices,
            values,
        }
    }

    /// Rows and columns relabelled: entry `(r, c)` moves to `(perm[r], perm[c])`.
    /// Only valid for square matrices.
    pub fn permuted(&self, perm: &[usize]) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.rows,
            self.cols,
            self.iter().map(|(r, c, v)| (perm[r], perm[c], v)),
        )
        .expect("permutation preserves bounds")
    }

    /// Rows relabelled: row `r` moves to `perm[r]`.
    pub fn rows_permuted(&self, perm: &[usize]) -> SparseMatrix {
        SparseMatrix::from_triplets(
            self.rows,
            self.cols,
            self.iter().map(|(r, c, v)| (perm[r], c, v)),
        )
        .expect("permutation preserves bounds")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> SparseMatrix {
        SparseMatrix::from_triplets(2, 3, [(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (1, 1, -1.0)])
            .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
        assert!(SparseMatrix::from_triplets(1, 1, [(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn transpose_and_dense() {
        let m = small();
        let t = m.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.to_dense(), vec![1.0, 0.0, 0.0, 3.0, 2.0, 0.0]);
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn products_agree_with_dense() {
        let m = small();
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = m.mul_dense(&x, 2, Execution::Sequential);
        assert_eq!(y, vec![11.0, 14.0, 9.0, 12.0]);
        let g = [1.0, 1.0, 1.0, 1.0];
        assert_eq!(m.transpose_mul_dense(&g, 2), vec![1.0, 1.0, 3.0, 3.0, 2.0, 2.0]);
        let p = m.matmul(&m.transpose()).unwrap();
        assert_eq!(p.to_dense(), vec![5.0, 0.0, 0.0, 9.0]);
    }

    #[test]
    fn stacking() {
        let m = small();
        let v = m.vstack(&m).unwrap();
        assert_eq!(v.rows(), 4);
        assert_eq!(v.get(3, 1), 3.0);
        let h = m.hstack(&m).unwrap();
        assert_eq!(h.cols(), 6);
        assert_eq!(h.get(0, 5), 2.0);
    }

    #[test]
    fn dropout_is_inverted() {
        let m = SparseMatrix::from_dense(1, 1000, &vec![1.0; 1000]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = m.dropout(0.5, &mut rng);
        assert!(d.values().iter().all(|&v| v == 2.0));
        let kept = d.nnz() as f64;
        assert!((kept - 500.0).abs() < 60.0);
        assert_eq!(m.dropout(0.0, &mut rng), m);
    }

    #[test]
    fn row_normalization() {
        let m = small().row_normalized();
        assert!((m.row_sums()[0] - 1.0).abs() < 1e-15);
        let z = SparseMatrix::zeros(2, 2).row_normalized();
        assert_eq!(z.nnz(), 0);
    }
}
