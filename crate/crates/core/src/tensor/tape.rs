//! Reverse-mode tape. Every operation appends a node; `backward` walks the
//! nodes in reverse order, so gradients flow from the last node recorded.

use std::borrow::Cow;

use rand::Rng;

use super::Matrix;
use crate::exec::Execution;
use crate::graph::SparseMatrix;
use crate::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Handle to a constant sparse matrix held by a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparseId(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(SparseId, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    ConcatCols(Vec<Var>),
    SplitRowsConcatCols(Var),
    Relu(Var),
    Tanh(Var),
    LeakyRelu(Var, f64),
    /// Element multipliers: 0 for dropped entries, `1/(1-p)` for kept ones.
    Dropout(Var, Vec<f64>),
    RowSoftmax(Var),
    EdgeScore(SparseId, Var, Var),
    EdgeSoftmax(SparseId, Var),
    SparseAggregate(SparseId, Var, Var),
    /// Saved softmax probabilities of the masked rows.
    MaskedCrossEntropy {
        logits: Var,
        rows: Vec<usize>,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Records operations on dense matrices, with constant sparse left operands.
pub struct Tape<'a> {
    nodes: Vec<Node>,
    sparse: Vec<Cow<'a, SparseMatrix>>,
    grads: Vec<Option<Matrix>>,
    exec: Execution,
}

fn shape_err(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

impl<'a> Tape<'a> {
    pub fn new(exec: Execution) -> Self {
        Tape {
            nodes: Vec::new(),
            sparse: Vec::new(),
            grads: Vec::new(),
            exec,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Differentiable input (a parameter).
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn sparse(&mut self, m: &'a SparseMatrix) -> SparseId {
        self.sparse.push(Cow::Borrowed(m));
        SparseId(self.sparse.len() - 1)
    }

    pub fn sparse_owned(&mut self, m: SparseMatrix) -> SparseId {
        self.sparse.push(Cow::Owned(m));
        SparseId(self.sparse.len() - 1)
    }

    pub fn sparse_matrix(&self, id: SparseId) -> &SparseMatrix {
        &self.sparse[id.0]
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b), self.exec)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// `S * x` with a constant sparse `S`.
    pub fn spmm(&mut self, s: SparseId, x: Var) -> Result<Var> {
        let sm = &self.sparse[s.0];
        let (xr, xc) = self.shape(x);
        if sm.cols() != xr {
            return Err(shape_err("spmm", (sm.rows(), sm.cols()), (xr, xc)));
        }
        let data = sm.mul_dense(self.value(x).data(), xc, self.exec);
        let value = Matrix::new(sm.rows(), xc, data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::SpMM(s, x), rg))
    }

    /// Adds the `1 x c` row `b` to every row of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xs, bs) = (self.shape(x), self.shape(b));
        if bs.0 != 1 || bs.1 != xs.1 {
            return Err(shape_err("add_bias", xs, bs));
        }
        let mut value = self.value(x).clone();
        let bias = self.value(b).data().to_vec();
        for row in value.data_mut().chunks_mut(xs.1.max(1)) {
            row.iter_mut().zip(&bias).for_each(|(v, b)| *v += b);
        }
        let rg = self.needs(&[x, b]);
        Ok(self.push(value, Op::AddBias(x, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err("add", self.shape(a), self.shape(b)));
        }
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let value = self.value(a).map(|v| v * k);
        let rg = self.needs(&[a]);
        self.push(value, Op::Scale(a, k), rg)
    }

    /// Mean of same-shaped inputs.
    pub fn mean(&mut self, parts: &[Var]) -> Result<Var> {
        let mut acc = *parts
            .first()
            .ok_or_else(|| Error::Shape("mean of nothing".into()))?;
        for &p in &parts[1..] {
            acc = self.add(acc, p)?;
        }
        Ok(if parts.len() == 1 {
            acc
        } else {
            self.scale(acc, 1.0 / parts.len() as f64)
        })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts
            .first()
            .map(|&p| self.shape(p).0)
            .ok_or_else(|| Error::Shape("concat of nothing".into()))?;
        if let Some(&bad) = parts.iter().find(|&&p| self.shape(p).0 != rows) {
            return Err(shape_err("concat_cols", (rows, 0), self.shape(bad)));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let value = Matrix::new(rows, cols, data)?;
        let rg = self.needs(parts);
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// `2n x o` to `n x 2o`: row `i` becomes `[x_i | x_{n+i}]`.
    pub fn split_rows_concat_cols(&mut self, x: Var) -> Result<Var> {
        let (r, c) = self.shape(x);
        if r % 2 != 0 {
            return Err(Error::Shape(format!("cannot split {r} rows in half")));
        }
        let n = r / 2;
        let src = self.value(x);
        let mut data = Vec::with_capacity(r * c);
        for i in 0..n {
            data.extend_from_slice(src.row(i));
            data.extend_from_slice(src.row(n + i));
        }
        let value = Matrix::new(n, 2 * c, data)?;
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::SplitRowsConcatCols(x), rg))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        let rg = self.needs(&[x]);
        self.push(value, Op::Relu(x), rg)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let value = self.value(x).map(f64::tanh);
        let rg = self.needs(&[x]);
        self.push(value, Op::Tanh(x), rg)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let value = self.value(x).map(|v| if v > 0.0 { v } else { slope * v });
        let rg = self.needs(&[x]);
        self.push(value, Op::LeakyRelu(x, slope), rg)
    }

    /// Inverted dropout; the identity when `p == 0`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, rng: &mut R) -> Var {
        if p <= 0.0 {
            return x;
        }
        let scale = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..self.value(x).len())
            .map(|_| if rng.random::<f64>() >= p { scale } else { 0.0 })
            .collect();
        let src = self.value(x);
        let data = src.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let value = Matrix::new(src.rows(), src.cols(), data).expect("same shape");
        let rg = self.needs(&[x]);
        self.push(value, Op::Dropout(x, mask), rg)
    }

    pub fn row_softmax(&mut self, x: Var) -> Var {
        let src = self.value(x);
        let c = src.cols().max(1);
        let mut value = src.clone();
        for row in value.data_mut().chunks_mut(c) {
            softmax_in_place(row);
        }
        let rg = self.needs(&[x]);
        self.push(value, Op::RowSoftmax(x), rg)
    }

    /// Per stored entry `(i, j)` of the pattern: `src[i] + dst[j]`, as an
    /// `nnz x 1` column. `src` and `dst` are `n x 1`.
    pub fn edge_score(&mut self, pattern: SparseId, src: Var, dst: Var) -> Result<Var> {
        let p = &self.sparse[pattern.0];
        let (ss, ds) = (self.shape(src), self.shape(dst));
        if ss != (p.rows(), 1) || ds != (p.cols(), 1) {
            return Err(shape_err("edge_score", ss, ds));
        }
        let (s, d) = (self.value(src).data(), self.value(dst).data());
        let mut data = Vec::with_capacity(p.nnz());
        for i in 0..p.rows() {
            for &j in p.row(i).0 {
                data.push(s[i] + d[j]);
            }
        }
        let value = Matrix::new(p.nnz(), 1, data)?;
        let rg = self.needs(&[src, dst]);
        Ok(self.push(value, Op::EdgeScore(pattern, src, dst), rg))
    }

    /// Softmax of edge values within each pattern row.
    pub fn edge_softmax(&mut self, pattern: SparseId, e: Var) -> Result<Var> {
        let p = &self.sparse[pattern.0];
        if self.shape(e) != (p.nnz(), 1) {
            return Err(shape_err("edge_softmax", self.shape(e), (p.nnz(), 1)));
        }
        let mut value = self.value(e).clone();
        let ptr = p.indptr().to_vec();
        for i in 0..ptr.len() - 1 {
            softmax_in_place(&mut value.data_mut()[ptr[i]..ptr[i + 1]]);
        }
        let rg = self.needs(&[e]);
        Ok(self.push(value, Op::EdgeSoftmax(pattern, e), rg))
    }

    /// `out_i = sum_j alpha_ij h_j` over pattern entries.
    pub fn sparse_aggregate(&mut self, pattern: SparseId, alpha: Var, h: Var) -> Result<Var> {
        let p = &self.sparse[pattern.0];
        let (hr, hc) = self.shape(h);
        if self.shape(alpha) != (p.nnz(), 1) || hr != p.cols() {
            return Err(shape_err("sparse_aggregate", self.shape(alpha), (hr, hc)));
        }
        let data = pattern_mul(p, self.value(alpha).data(), self.value(h).data(), hc, self.exec);
        let value = Matrix::new(p.rows(), hc, data)?;
        let rg = self.needs(&[alpha, h]);
        Ok(self.push(value, Op::SparseAggregate(pattern, alpha, h), rg))
    }

    /// Mean negative log-likelihood of `labels` over `rows` of the logits.
    pub fn masked_cross_entropy(&mut self, logits: Var, rows: &[usize], labels: &[usize]) -> Result<Var> {
        if rows.is_empty() {
            return Err(Error::Argument("cross-entropy over an empty mask".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::Shape(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        let lv = self.value(logits);
        let c = lv.cols();
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Shape(format!("label {bad} with {c} logit columns")));
        }
        let mut probs = Vec::with_capacity(rows.len() * c);
        let mut loss = 0.0;
        for (&r, &y) in rows.iter().zip(labels) {
            let row = lv.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_z = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += log_z - (row[y] - max);
            probs.extend(row.iter().map(|v| (v - max - log_z).exp()));
        }
        let value = Matrix::scalar(loss / rows.len() as f64);
        let rg = self.needs(&[logits]);
        Ok(self.push(
            value,
            Op::MaskedCrossEntropy {
                logits,
                rows: rows.to_vec(),
                labels: labels.to_vec(),
                probs,
            },
            rg,
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Matrix::scalar(self.value(x).data().iter().sum());
        let rg = self.needs(&[x]);
        self.push(value, Op::Sum(x), rg)
    }

    /// Back-propagates from the scalar `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::Shape("backward from a non-scalar".into()));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::scalar(1.0));
        for id in (0..=loss.0).rev() {
            let g = match grads[id].take() {
                Some(g) if self.nodes[id].requires_grad => g,
                other => {
                    grads[id] = other;
                    continue;
                }
            };
            self.back_node(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    /// Gradient of the last `backward` loss with respect to `v`.
    pub fn grad(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    fn back_node(&self, id: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let exec = self.exec;
        let nodes = &self.nodes;
        let mut acc = |v: Var, delta: Matrix| {
            if !nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&delta),
                slot => *slot = Some(delta),
            }
        };
        let val = |v: Var| &nodes[v.0].value;
        match &nodes[id].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if nodes[a.0].requires_grad {
                    acc(*a, g.matmul_t(val(*b), exec));
                }
                if nodes[b.0].requires_grad {
                    acc(*b, val(*a).t_matmul(g, exec));
                }
            }
            Op::SpMM(s, x) => {
                let sm = &self.sparse[s.0];
                let data = sm.transpose_mul_dense(g.data(), g.cols());
                acc(*x, Matrix::new(sm.cols(), g.cols(), data).expect("shape"));
            }
            Op::AddBias(x, b) => {
                acc(*x, g.clone());
                let mut db = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    db.data_mut().iter_mut().zip(g.row(r)).for_each(|(d, v)| *d += v);
                }
                acc(*b, db);
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Scale(a, k) => acc(*a, g.map(|v| v * k)),
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let (r, c) = val(p).shape();
                    let mut d = Vec::with_capacity(r * c);
                    for i in 0..r {
                        d.extend_from_slice(&g.row(i)[offset..offset + c]);
                    }
                    offset += c;
                    acc(p, Matrix::new(r, c, d).expect("shape"));
                }
            }
            Op::SplitRowsConcatCols(x) => {
                let (r, c) = val(*x).shape();
                let n = r / 2;
                let mut d = vec![0.0; r * c];
                for i in 0..n {
                    let row = g.row(i);
                    d[i * c..(i + 1) * c].copy_from_slice(&row[..c]);
                    d[(n + i) * c..(n + i + 1) * c].copy_from_slice(&row[c..]);
                }
                acc(*x, Matrix::new(r, c, d).expect("shape"));
            }
            Op::Relu(x) => acc(*x, zip_map(g, val(*x), |g, x| if x > 0.0 { g } else { 0.0 })),
            Op::Tanh(x) => {
                let y = &nodes[id].value;
                acc(*x, zip_map(g, y, |g, y| g * (1.0 - y * y)));
            }
            Op::LeakyRelu(x, slope) => {
                acc(*x, zip_map(g, val(*x), |g, x| if x > 0.0 { g } else { slope * g }))
            }
            Op::Dropout(x, mask) => {
                let d = g.data().iter().zip(mask).map(|(g, m)| g * m).collect();
                acc(*x, Matrix::new(g.rows(), g.cols(), d).expect("shape"));
            }
            Op::RowSoftmax(x) => {
                let y = &nodes[id].value;
                let c = y.cols().max(1);
                let mut d = vec![0.0; y.len()];
                for ((dr, yr), gr) in d.chunks_mut(c).zip(y.data().chunks(c)).zip(g.data().chunks(c)) {
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for ((o, &yv), &gv) in dr.iter_mut().zip(yr).zip(gr) {
                        *o = yv * (gv - dot);
                    }
                }
                acc(*x, Matrix::new(y.rows(), y.cols(), d).expect("shape"));
            }
            Op::EdgeScore(pattern, src, dst) => {
                let p = &self.sparse[pattern.0];
                let mut ds = vec![0.0; p.rows()];
                let mut dd = vec![0.0; p.cols()];
                let mut e = 0;
                for (i, dsi) in ds.iter_mut().enumerate() {
                    for &j in p.row(i).0 {
                        *dsi += g.data()[e];
                        dd[j] += g.data()[e];
                        e += 1;
                    }
                }
                acc(*src, Matrix::new(p.rows(), 1, ds).expect("shape"));
                acc(*dst, Matrix::new(p.cols(), 1, dd).expect("shape"));
            }
            Op::EdgeSoftmax(pattern, e) => {
                let p = &self.sparse[pattern.0];
                let y = nodes[id].value.data();
                let gd = g.data();
                let ptr = p.indptr();
                let mut d = vec![0.0; y.len()];
                for i in 0..p.rows() {
                    let r = ptr[i]..ptr[i + 1];
                    let dot: f64 = y[r.clone()].iter().zip(&gd[r.clone()]).map(|(a, b)| a * b).sum();
                    for k in r {
                        d[k] = y[k] * (gd[k] - dot);
                    }
                }
                acc(*e, Matrix::new(y.len(), 1, d).expect("shape"));
            }
            Op::SparseAggregate(pattern, alpha, h) => {
                let p = &self.sparse[pattern.0];
                let hv = val(*h);
                let av = val(*alpha).data();
                let c = hv.cols();
                if nodes[alpha.0].requires_grad {
                    let mut da = Vec::with_capacity(p.nnz());
                    for i in 0..p.rows() {
                        let gi = g.row(i);
                        for &j in p.row(i).0 {
                            da.push(gi.iter().zip(hv.row(j)).map(|(a, b)| a * b).sum());
                        }
                    }
                    acc(*alpha, Matrix::new(p.nnz(), 1, da).expect("shape"));
                }
                if nodes[h.0].requires_grad {
                    let dh = pattern_t_mul(p, av, g.data(), c);
                    acc(*h, Matrix::new(p.cols(), c, dh).expect("shape"));
                }
            }
            Op::MaskedCrossEntropy {
                logits,
                rows,
                labels,
                probs,
            } => {
                let lv = val(*logits);
                let c = lv.cols();
                let scale = g.item() / rows.len() as f64;
                let mut d = Matrix::zeros(lv.rows(), c);
                for (k, (&r, &y)) in rows.iter().zip(labels).enumerate() {
                    for j in 0..c {
                        let target = if j == y { 1.0 } else { 0.0 };
                        let cur = d.get(r, j);
                        d.set(r, j, cur + scale * (probs[k * c + j] - target));
                    }
                }
                acc(*logits, d);
            }
            Op::Sum(x) => {
                let (r, c) = val(*x).shape();
                acc(*x, Matrix::filled(r, c, g.item()));
            }
        }
    }
}

/// `W * x` where `W` has the sparsity pattern of `p` and stored values
/// `weights` (which may include zeros).
fn pattern_mul(p: &SparseMatrix, weights: &[f64], x: &[f64], width: usize, exec: Execution) -> Vec<f64> {
    let ptr = p.indptr();
    let idx = p.indices();
    let mut out = vec![0.0; p.rows() * width];
    exec.for_each_row(&mut out, width, |i, orow| {
        for k in ptr[i]..ptr[i + 1] {
            let w = weights[k];
            let xrow = &x[idx[k] * width..(idx[k] + 1) * width];
            orow.iter_mut().zip(xrow).for_each(|(o, &v)| *o += w * v);
        }
    });
    out
}

/// `W^T * g` for the same weighted pattern.
fn pattern_t_mul(p: &SparseMatrix, weights: &[f64], g: &[f64], width: usize) -> Vec<f64> {
    let ptr = p.indptr();
    let idx = p.indices();
    let mut out = vec![0.0; p.cols() * width];
    for i in 0..p.rows() {
        let grow = &g[i * width..(i + 1) * width];
        for k in ptr[i]..ptr[i + 1] {
            let w = weights[k];
            let orow = &mut out[idx[k] * width..(idx[k] + 1) * width];
            orow.iter_mut().zip(grow).for_each(|(o, &v)| *o += w * v);
        }
    }
    out
}

fn zip_map(g: &Matrix, x: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    let d = g.data().iter().zip(x.data()).map(|(&a, &b)| f(a, b)).collect();
    Matrix::new(g.rows(), g.cols(), d).expect("same shape")
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EXEC: Execution = Execution::Sequential;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::new(rows, cols, data.to_vec()).unwrap()
    }

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Finite-difference check of `build` applied to `inputs`, reduced to a
    /// scalar by a fixed random projection so every output entry matters.
    fn check(inputs: Vec<Matrix>, build: impl Fn(&mut Tape, &[Var]) -> Var) {
        let f = |xs: &[Matrix]| {
            let mut tape = Tape::new(EXEC);
            let vars: Vec<Var> = xs.iter().map(|x| tape.param(x.clone())).collect();
            let out = build(&mut tape, &vars);
            let (r, c) = tape.shape(out);
            let proj = tape.constant(random(c, 1, 99 + (r * c) as u64));
            let y = tape.matmul(out, proj).unwrap();
            let y = tape.tanh(y);
            let loss = tape.sum(y);
            tape.backward(loss).unwrap();
            let grads = vars
                .iter()
                .map(|&v| tape.grad(v).cloned().unwrap_or_else(|| Matrix::zeros(tape.shape(v).0, tape.shape(v).1)))
                .collect();
            (tape.value(loss).item(), grads)
        };
        let report = grad_check(f, &inputs, 1e-5);
        assert!(report.checked > 0);
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    fn pattern() -> SparseMatrix {
        SparseMatrix::from_triplets(
            3,
            3,
            [(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 2, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn spmm_values() {
        let s = SparseMatrix::from_dense(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let mut tape = Tape::new(EXEC);
        let sid = tape.sparse(&s);
        let x = tape.param(m(2, 1, &[1.0, 3.0]));
        let y = tape.spmm(sid, x).unwrap();
        assert_eq!(tape.value(y).data(), &[2.0, 2.0]);
        let total = tape.sum(y);
        tape.backward(total).unwrap();
        // Column sums of S.
        assert_eq!(tape.grad(x).unwrap().data(), &[1.0, 1.0]);

        let id = SparseMatrix::identity(2);
        let iid = tape.sparse(&id);
        let x2 = tape.constant(m(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let y2 = tape.spmm(iid, x2).unwrap();
        assert_eq!(tape.value(y2).data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn elementwise_values() {
        let mut tape = Tape::new(EXEC);
        let x = tape.constant(m(1, 3, &[-2.0, 0.0, 1.5]));
        let r = tape.relu(x);
        assert_eq!(tape.value(r).data(), &[0.0, 0.0, 1.5]);
        let l = tape.leaky_relu(x, 0.2);
        assert_eq!(tape.value(l).data(), &[-0.4, 0.0, 1.5]);
        let t = tape.tanh(x);
        assert_eq!(tape.value(t).data()[1], 0.0);
        let b = tape.constant(m(1, 3, &[1.0, 1.0, 1.0]));
        let xb = tape.add_bias(x, b).unwrap();
        assert_eq!(tape.value(xb).data(), &[-1.0, 1.0, 2.5]);
        let s = tape.row_softmax(x);
        let row = tape.value(s).data();
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|&p| p > 0.0 && p < 1.0));
        let zero = tape.constant(Matrix::zeros(2, 4));
        let sz = tape.row_softmax(zero);
        assert!(tape.value(sz).data().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn concat_and_split() {
        let mut tape = Tape::new(EXEC);
        let a = tape.constant(m(2, 1, &[1.0, 2.0]));
        let b = tape.constant(m(2, 2, &[3.0, 4.0, 5.0, 6.0]));
        let c = tape.concat_cols(&[a, b]).unwrap();
        assert_eq!(tape.value(c).data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let s = tape.constant(m(4, 1, &[1.0, 2.0, 3.0, 4.0]));
        let sp = tape.split_rows_concat_cols(s).unwrap();
        assert_eq!(tape.value(sp).data(), &[1.0, 3.0, 2.0, 4.0]);
        let odd = tape.constant(m(3, 1, &[1.0, 2.0, 3.0]));
        assert!(tape.split_rows_concat_cols(odd).is_err());
    }

    #[test]
    fn dropout_behaviour() {
        let mut tape = Tape::new(EXEC);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = tape.constant(Matrix::filled(100, 100, 1.0));
        assert_eq!(tape.dropout(x, 0.0, &mut rng), x);
        let d = tape.dropout(x, 0.5, &mut rng);
        let vals = tape.value(d).data();
        assert!(vals.iter().all(|&v| v == 0.0 || v == 2.0));
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - 1.0).abs() < 0.05);
    }

    #[test]
    fn cross_entropy_values() {
        let mut tape = Tape::new(EXEC);
        let uniform = tape.constant(Matrix::filled(3, 4, 0.7));
        let l = tape.masked_cross_entropy(uniform, &[0, 2], &[1, 3]).unwrap();
        assert!((tape.value(l).item() - 4f64.ln()).abs() < 1e-12);
        let sharp = tape.constant(m(1, 2, &[10.0, -10.0]));
        let l = tape.masked_cross_entropy(sharp, &[0], &[0]).unwrap();
        let expected = (1.0 + (-20f64).exp()).ln();
        assert!((tape.value(l).item() - expected).abs() < 1e-20);
        assert!((tape.value(l).item() - 2.06e-9).abs() < 1e-11);
        assert!(tape.masked_cross_entropy(sharp, &[], &[]).is_err());
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let p = pattern();
        let mut tape = Tape::new(EXEC);
        let pid = tape.sparse(&p);
        let s = tape.constant(random(3, 1, 1));
        let d = tape.constant(random(3, 1, 2));
        let e = tape.edge_score(pid, s, d).unwrap();
        let a = tape.edge_softmax(pid, e).unwrap();
        let vals = tape.value(a).data().to_vec();
        for i in 0..3 {
            let r = p.indptr()[i]..p.indptr()[i + 1];
            assert!((vals[r].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_dense_ops() {
        check(vec![random(3, 4, 1), random(4, 2, 2)], |t, v| t.matmul(v[0], v[1]).unwrap());
        check(vec![random(3, 2, 3), random(1, 2, 4)], |t, v| t.add_bias(v[0], v[1]).unwrap());
        check(vec![random(3, 2, 5), random(3, 2, 6)], |t, v| {
            let s = t.add(v[0], v[1]).unwrap();
            t.scale(s, -1.5)
        });
        check(vec![random(3, 2, 7), random(3, 1, 8)], |t, v| t.concat_cols(&[v[0], v[1]]).unwrap());
        check(vec![random(4, 3, 9)], |t, v| t.split_rows_concat_cols(v[0]).unwrap());
        check(vec![random(3, 3, 10)], |t, v| t.relu(v[0]));
        check(vec![random(3, 3, 11)], |t, v| t.tanh(v[0]));
        check(vec![random(3, 3, 12)], |t, v| t.leaky_relu(v[0], 0.2));
        check(vec![random(3, 4, 13)], |t, v| t.row_softmax(v[0]));
        check(vec![random(2, 3, 14), random(2, 3, 15)], |t, v| t.mean(&[v[0], v[1]]).unwrap());
    }

    #[test]
    fn gradient_dropout_fixed_mask() {
        check(vec![random(4, 3, 16)], |t, v| {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            t.dropout(v[0], 0.3, &mut rng)
        });
    }

    #[test]
    fn gradients_sparse_and_attention() {
        let s = SparseMatrix::from_dense(3, 2, &[0.5, 0.0, 0.25, 1.0, 0.0, 2.0]);
        check(vec![random(2, 3, 17)], |t, v| {
            let sid = t.sparse_owned(s.clone());
            t.spmm(sid, v[0]).unwrap()
        });
        let p = pattern();
        check(vec![random(3, 1, 18), random(3, 1, 19), random(3, 2, 20)], |t, v| {
            let pid = t.sparse_owned(p.clone());
            let e = t.edge_score(pid, v[0], v[1]).unwrap();
            let e = t.leaky_relu(e, 0.2);
            let a = t.edge_softmax(pid, e).unwrap();
            t.sparse_aggregate(pid, a, v[2]).unwrap()
        });
    }

    #[test]
    fn gradient_cross_entropy() {
        let f = |xs: &[Matrix]| {
            let mut tape = Tape::new(EXEC);
            let x = tape.param(xs[0].clone());
            let l = tape.masked_cross_entropy(x, &[0, 2, 3], &[1, 0, 2]).unwrap();
            tape.backward(l).unwrap();
            (tape.value(l).item(), vec![tape.grad(x).unwrap().clone()])
        };
        let r = grad_check(f, &[random(4, 3, 21)], 1e-5);
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut tape = Tape::new(EXEC);
        let c = tape.constant(m(1, 1, &[2.0]));
        let p = tape.param(m(1, 1, &[3.0]));
        let y = tape.matmul(c, p).unwrap();
        tape.backward(y).unwrap();
        assert!(tape.grad(c).is_none());
        assert_eq!(tape.grad(p).unwrap().item(), 2.0);
    }
}
