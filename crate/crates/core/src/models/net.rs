//! Parameter layout and forward passes.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};

use super::{Activation, ModelKind, ModelSpec};
use crate::graph::SparseMatrix;
use crate::tensor::{glorot_uniform, Matrix, SparseId, Tape, Var};
use crate::{Error, Result};

const ATTENTION_SLOPE: f64 = 0.2;

/// Operators and inputs a forward pass may read. Which fields are required
/// depends on the model kind (see [`ModelInputs::validate`]).
#[derive(Debug, Clone)]
pub struct ModelInputs {
    /// External features, `n x f`.
    pub features: SparseMatrix,
    /// Normalized adjacency of the original graph, `n x n`; its sparsity
    /// pattern doubles as the attention neighbourhood.
    pub adjacency: Option<SparseMatrix>,
    /// Normalized adjacency of the dual graph.
    pub dual: Option<SparseMatrix>,
    /// `2n x n` stacked forward/backward operator.
    pub stacked: Option<SparseMatrix>,
    /// Structural attributes concatenated inside the combined model, `n x t`.
    pub topo: Option<SparseMatrix>,
}

impl ModelInputs {
    pub fn new(features: SparseMatrix) -> Self {
        ModelInputs {
            features,
            adjacency: None,
            dual: None,
            stacked: None,
            topo: None,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        let n = self.n_nodes();
        let square = |name: &str, m: &Option<SparseMatrix>, rows: usize| -> Result<()> {
            match m {
                None => Err(Error::Config(format!("{kind} needs the {name} operator"))),
                Some(m) if m.rows() != rows || m.cols() != n => Err(Error::Shape(format!(
                    "{name} is {}x{}, expected {rows}x{n}",
                    m.rows(),
                    m.cols()
                ))),
                Some(_) => Ok(()),
            }
        };
        match kind {
            ModelKind::Gcn | ModelKind::Gat => square("adjacency", &self.adjacency, n),
            ModelKind::TGcn | ModelKind::TGat => {
                square("adjacency", &self.adjacency, n)?;
                square("dual-graph", &self.dual, n)
            }
            ModelKind::AGcn => square("stacked", &self.stacked, 2 * n),
            ModelKind::CGcn => {
                square("stacked", &self.stacked, 2 * n)?;
                match &self.topo {
                    Some(t) if t.rows() == n => Ok(()),
                    Some(t) => Err(Error::Shape(format!("topo has {} rows, expected {n}", t.rows()))),
                    None => Err(Error::Config("c-gcn needs topological features".into())),
                }
            }
            ModelKind::Ffn => Ok(()),
        }
    }

    /// Every input relabelled by `perm` (node `i` becomes `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> ModelInputs {
        let n = self.n_nodes();
        let stacked = self.stacked.as_ref().map(|s| {
            let mut full: Vec<usize> = perm.to_vec();
            full.extend(perm.iter().map(|p| p + n));
            SparseMatrix::from_triplets(
                2 * n,
                n,
                s.iter().map(|(r, c, v)| (full[r], perm[c], v)),
            )
            .expect("permutation preserves bounds")
        });
        ModelInputs {
            features: self.features.rows_permuted(perm),
            adjacency: self.adjacency.as_ref().map(|a| a.permuted(perm)),
            dual: self.dual.as_ref().map(|a| a.permuted(perm)),
            stacked,
            topo: self.topo.as_ref().map(|t| t.rows_permuted(perm)),
        }
    }
}

/// A model's parameters, named and in optimizer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: Vec<(String, Matrix)>,
}

/// Input of a layer: the (sparse) external features or a dense activation.
#[derive(Clone, Copy)]
enum Input {
    Sparse(SparseId),
    Dense(Var),
}

struct Builder<'r, R: Rng + ?Sized> {
    params: Vec<(String, Matrix)>,
    rng: &'r mut R,
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn weight(&mut self, name: String, rows: usize, cols: usize) {
        let w = glorot_uniform(rows, cols, self.rng);
        self.params.push((name, w));
    }

    fn bias(&mut self, name: String, cols: usize) {
        self.params.push((name, Matrix::zeros(1, cols)));
    }

    fn dense(&mut self, prefix: &str, fan_in: usize, fan_out: usize) {
        self.weight(format!("{prefix}.w"), fan_in, fan_out);
        self.bias(format!("{prefix}.b"), fan_out);
    }

    /// Stacked layer: weight `fan_in x fan_out`, bias on the rearranged
    /// `2 * fan_out` columns.
    fn stacked(&mut self, prefix: &str, fan_in: usize, fan_out: usize) {
        self.weight(format!("{prefix}.w"), fan_in, fan_out);
        self.bias(format!("{prefix}.b"), 2 * fan_out);
    }

    fn gat(&mut self, prefix: &str, heads: usize, fan_in: usize, width: usize) {
        for h in 0..heads {
            let p = format!("{prefix}.h{h}");
            self.weight(format!("{p}.w"), fan_in, width);
            self.weight(format!("{p}.a_src"), width, 1);
            self.weight(format!("{p}.a_dst"), width, 1);
            self.bias(format!("{p}.b"), width);
        }
    }
}

impl Model {
    /// Glorot-initialised weights, zero biases.
    pub fn init<R: Rng + ?Sized>(
        spec: &ModelSpec,
        n_features: usize,
        n_topo: usize,
        n_classes: usize,
        rng: &mut R,
    ) -> Result<Model> {
        spec.validate()?;
        let h = &spec.hidden;
        let mut b = Builder {
            params: Vec::new(),
            rng,
        };
        match spec.kind {
            ModelKind::Gcn => {
                b.dense("l1", n_features, h[0]);
                b.dense("l2", h[0], n_classes);
            }
            ModelKind::Gat => {
                b.gat("l1", spec.heads[0], n_features, h[0]);
                b.gat("l2", spec.heads[1], spec.heads[0] * h[0], n_classes);
            }
            ModelKind::TGcn => {
                b.dense("orig", n_features, h[0]);
                b.dense("dual", n_features, h[1]);
                b.dense("out", h[0] + h[1], n_classes);
            }
            ModelKind::TGat => {
                b.gat("orig", spec.heads[0], n_features, h[0]);
                b.gat("dual", spec.heads[1], n_features, h[1]);
                let width = spec.heads[0] * h[0] + spec.heads[1] * h[1];
                b.gat("out", spec.heads[2], width, n_classes);
            }
            ModelKind::AGcn | ModelKind::CGcn => {
                let (mut width, chain) = if spec.kind == ModelKind::AGcn {
                    (n_features, &h[..])
                } else {
                    b.stacked("ext", n_features, h[0]);
                    (2 * h[0] + n_topo, &h[1..])
                };
                for (i, &o) in chain.iter().enumerate() {
                    b.stacked(&format!("s{i}"), width, o);
                    width = 2 * o;
                }
                b.stacked("final", width, n_classes);
                b.dense("proj", 2 * n_classes, n_classes);
            }
            ModelKind::Ffn => {
                let mut width = n_features;
                for (i, &o) in h.iter().enumerate() {
                    b.dense(&format!("d{i}"), width, o);
                    width = o;
                }
                b.dense("out", width, n_classes);
            }
        }
        Ok(Model {
            spec: spec.clone(),
            params: b.params,
        })
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.params.iter().find(|p| p.0 == name).map(|p| &p.1)
    }

    /// Replaces a parameter by name, keeping its shape.
    pub fn set(&mut self, name: &str, value: Matrix) -> Result<()> {
        let slot = self
            .params
            .iter_mut()
            .find(|p| p.0 == name)
            .ok_or_else(|| Error::Argument(format!("no parameter `{name}`")))?;
        if slot.1.shape() != value.shape() {
            return Err(Error::Shape(format!(
                "parameter {name} is {:?}, got {:?}",
                slot.1.shape(),
                value.shape()
            )));
        }
        slot.1 = value;
        Ok(())
    }

    /// Evaluation-mode logits.
    pub fn logits(&self, inputs: &ModelInputs, exec: crate::exec::Execution) -> Result<Matrix> {
        let mut tape = Tape::new(exec);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let (out, _) = self.forward(&mut tape, inputs, false, &mut rng)?;
        Ok(tape.value(out).clone())
    }

    pub fn n_parameters(&self) -> usize {
        self.params.iter().map(|p| p.1.len()).sum()
    }

    pub fn tensors(&self) -> Vec<Matrix> {
        self.params.iter().map(|p| p.1.clone()).collect()
    }

    pub fn set_tensors(&mut self, tensors: Vec<Matrix>) {
        assert_eq!(tensors.len(), self.params.len());
        for (p, t) in self.params.iter_mut().zip(tensors) {
            debug_assert_eq!(p.1.shape(), t.shape());
            p.1 = t;
        }
    }

    /// Records the forward pass on `tape` and returns `(logits, parameter
    /// vars in `params` order)`. In train mode dropout (and, for attention
    /// models, attention dropout) draws from `rng`.
    pub fn forward<'a, R: Rng + ?Sized>(
        &self,
        tape: &mut Tape<'a>,
        inputs: &'a ModelInputs,
        train: bool,
        rng: &mut R,
    ) -> Result<(Var, Vec<Var>)> {
        inputs.validate(self.spec.kind)?;
        let vars: Vec<Var> = self.params.iter().map(|(_, m)| tape.param(m.clone())).collect();
        let index: HashMap<&str, Var> = self
            .params
            .iter()
            .zip(&vars)
            .map(|((name, _), &v)| (name.as_str(), v))
            .collect();
        let mut f = Forward {
            tape,
            p: &index,
            spec: &self.spec,
            p_drop: if train { self.spec.dropout } else { 0.0 },
            rng,
        };
        let logits = f.run(inputs)?;
        Ok((logits, vars))
    }
}

struct Forward<'t, 'a, 'p, 'r, R: Rng + ?Sized> {
    tape: &'t mut Tape<'a>,
    p: &'p HashMap<&'p str, Var>,
    spec: &'p ModelSpec,
    p_drop: f64,
    rng: &'r mut R,
}

impl<'a, R: Rng + ?Sized> Forward<'_, 'a, '_, '_, R> {
    fn param(&self, name: &str) -> Var {
        self.p[name]
    }

    fn act(&mut self, x: Var) -> Var {
        match self.spec.activation {
            Activation::Relu => self.tape.relu(x),
            Activation::Tanh => self.tape.tanh(x),
        }
    }

    fn features(&mut self, x: &'a SparseMatrix) -> Input {
        let id = if self.p_drop > 0.0 {
            let dropped = x.dropout(self.p_drop, self.rng);
            self.tape.sparse_owned(dropped)
        } else {
            self.tape.sparse(x)
        };
        Input::Sparse(id)
    }

    fn drop(&mut self, x: Var) -> Var {
        self.tape.dropout(x, self.p_drop, self.rng)
    }

    fn times(&mut self, x: Input, w: Var) -> Result<Var> {
        match x {
            Input::Sparse(id) => self.tape.spmm(id, w),
            Input::Dense(v) => self.tape.matmul(v, w),
        }
    }

    /// `op * (x W) + b`.
    fn conv(&mut self, op: SparseId, x: Input, prefix: &str) -> Result<Var> {
        let xw = self.times(x, self.param(&format!("{prefix}.w")))?;
        let y = self.tape.spmm(op, xw)?;
        self.tape.add_bias(y, self.param(&format!("{prefix}.b")))
    }

    fn dense(&mut self, x: Input, prefix: &str) -> Result<Var> {
        let y = self.times(x, self.param(&format!("{prefix}.w")))?;
        self.tape.add_bias(y, self.param(&format!("{prefix}.b")))
    }

    /// Stacked `2n x n` operator, then `2n x o -> n x 2o`, plus bias.
    fn stacked(&mut self, op: SparseId, x: Input, prefix: &str) -> Result<Var> {
        let xw = self.times(x, self.param(&format!("{prefix}.w")))?;
        let y = self.tape.spmm(op, xw)?;
        let y = self.tape.split_rows_concat_cols(y)?;
        self.tape.add_bias(y, self.param(&format!("{prefix}.b")))
    }

    /// Attention heads over `pattern`; concatenated when `concat`, else averaged.
    fn gat(&mut self, pattern: SparseId, x: Input, prefix: &str, heads: usize, concat: bool) -> Result<Var> {
        let mut outs = Vec::with_capacity(heads);
        for h in 0..heads {
            let p = format!("{prefix}.h{h}");
            let wh = self.times(x, self.param(&format!("{p}.w")))?;
            let s = self.tape.matmul(wh, self.param(&format!("{p}.a_src")))?;
            let d = self.tape.matmul(wh, self.param(&format!("{p}.a_dst")))?;
            let e = self.tape.edge_score(pattern, s, d)?;
            let e = self.tape.leaky_relu(e, ATTENTION_SLOPE);
            let alpha = self.tape.edge_softmax(pattern, e)?;
            let alpha = self.drop(alpha);
            let out = self.tape.sparse_aggregate(pattern, alpha, wh)?;
            outs.push(self.tape.add_bias(out, self.param(&format!("{p}.b")))?);
        }
        if concat {
            self.tape.concat_cols(&outs)
        } else {
            self.tape.mean(&outs)
        }
    }

    fn run(&mut self, inputs: &'a ModelInputs) -> Result<Var> {
        let spec = self.spec;
        let sparse = |t: &mut Tape<'a>, m: &'a Option<SparseMatrix>| t.sparse(m.as_ref().expect("validated"));
        match spec.kind {
            ModelKind::Gcn => {
                let adj = sparse(self.tape, &inputs.adjacency);
                let x = self.features(&inputs.features);
                let h = self.conv(adj, x, "l1")?;
                let h = self.act(h);
                let h = self.drop(h);
                self.conv(adj, Input::Dense(h), "l2")
            }
            ModelKind::Gat => {
                let adj = sparse(self.tape, &inputs.adjacency);
                let x = self.features(&inputs.features);
                let h = self.gat(adj, x, "l1", spec.heads[0], true)?;
                let h = self.act(h);
                let h = self.drop(h);
                self.gat(adj, Input::Dense(h), "l2", spec.heads[1], false)
            }
            ModelKind::TGcn => {
                let adj = sparse(self.tape, &inputs.adjacency);
                let dual = sparse(self.tape, &inputs.dual);
                let x = self.features(&inputs.features);
                let b1 = self.conv(adj, x, "orig")?;
                let b1 = self.act(b1);
                let b2 = self.conv(dual, x, "dual")?;
                let b2 = self.act(b2);
                let h = self.tape.concat_cols(&[b1, b2])?;
                let h = self.drop(h);
                self.conv(adj, Input::Dense(h), "out")
            }
            ModelKind::TGat => {
                let adj = sparse(self.tape, &inputs.adjacency);
                let dual = sparse(self.tape, &inputs.dual);
                let x = self.features(&inputs.features);
                let b1 = self.gat(adj, x, "orig", spec.heads[0], true)?;
                let b1 = self.act(b1);
                let b2 = self.gat(dual, x, "dual", spec.heads[1], true)?;
                let b2 = self.act(b2);
                let h = self.tape.concat_cols(&[b1, b2])?;
                let h = self.drop(h);
                self.gat(adj, Input::Dense(h), "out", spec.heads[2], false)
            }
            ModelKind::AGcn | ModelKind::CGcn => {
                let op = sparse(self.tape, &inputs.stacked);
                let x = self.features(&inputs.features);
                let (mut h, chain_len) = if spec.kind == ModelKind::AGcn {
                    (x, spec.hidden.len())
                } else {
                    let ext = self.stacked(op, x, "ext")?;
                    let ext = self.act(ext);
                    let topo = self.tape.constant(Matrix::new(
                        inputs.n_nodes(),
                        inputs.topo.as_ref().expect("validated").cols(),
                        inputs.topo.as_ref().expect("validated").to_dense(),
                    )?);
                    let joined = self.tape.concat_cols(&[ext, topo])?;
                    let joined = self.drop(joined);
                    (Input::Dense(joined), spec.hidden.len() - 1)
                };
                for i in 0..chain_len {
                    let y = self.stacked(op, h, &format!("s{i}"))?;
                    let y = self.act(y);
                    h = Input::Dense(self.drop(y));
                }
                let y = self.stacked(op, h, "final")?;
                self.dense(Input::Dense(y), "proj")
            }
            ModelKind::Ffn => {
                let mut h = Input::Sparse(self.tape.sparse(&inputs.features));
                for i in 0..spec.hidden.len() {
                    let y = self.dense(h, &format!("d{i}"))?;
                    let y = self.act(y);
                    h = Input::Dense(self.drop(y));
                }
                self.dense(h, "out")
            }
        }
    }
}
