//! Content-free node inputs derived from training-set labels: per-class
//! neighbour counts and products of the adjacency with a class indicator.

use std::fmt;
use std::str::FromStr;

use crate::exec::Execution;
use crate::graph::{Graph, SparseMatrix};
use crate::topo::{Direction, NavMatrix, UNREACHED};
use crate::{Error, Result};

/// How the second hop is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HopMode {
    /// Nodes at shortest-path distance exactly 2.
    #[default]
    ShortestPath,
    /// Length-2 walks (with multiplicity, possibly returning to the node).
    Walks,
}

fn class_of_train(labels: &[Option<usize>], train: &[bool], v: usize) -> Option<usize> {
    if train[v] {
        labels[v]
    } else {
        None
    }
}

/// Per node, the number of training nodes of each class at hop 1 (then hop
/// 2, when `hops == 2`). Directed graphs get an in-neighbour block followed
/// by an out-neighbour block.
pub fn neighbor_class_features(
    graph: &Graph,
    labels: &[Option<usize>],
    train: &[bool],
    n_classes: usize,
    hops: usize,
    mode: HopMode,
    exec: Execution,
) -> Result<NavMatrix> {
    if !(1..=2).contains(&hops) {
        return Err(Error::Argument(format!("hops must be 1 or 2, got {hops}")));
    }
    let n = graph.n_nodes();
    let dirs: Vec<(Direction, &str)> = if graph.is_directed() {
        vec![(Direction::In, "in_"), (Direction::Out, "out_")]
    } else {
        vec![(Direction::Undirected, "")]
    };
    let block = hops * n_classes;
    let width = dirs.len() * block;
    let mut names = Vec::with_capacity(width);
    for (_, prefix) in &dirs {
        for h in 1..=hops {
            names.extend((0..n_classes).map(|c| format!("{prefix}h{h}_c{c}")));
        }
    }
    let mut data = vec![0.0; n * width];
    exec.for_each_row(&mut data, width, |u, row| {
        let mut dist = vec![UNREACHED; n];
        for (d, &(dir, _)) in dirs.iter().enumerate() {
            let out = &mut row[d * block..(d + 1) * block];
            let step = |v: usize| crate::topo::step(graph, v, dir);
            for &v in step(u) {
                if let Some(c) = class_of_train(labels, train, v) {
                    out[c] += 1.0;
                }
            }
            if hops < 2 {
                continue;
            }
            match mode {
                HopMode::ShortestPath => {
                    // Bounded BFS: only distance-2 nodes are needed.
                    dist[u] = 0;
                    let mut touched = vec![u];
                    for &v in step(u) {
                        if dist[v] == UNREACHED {
                            dist[v] = 1;
                            touched.push(v);
                        }
                    }
                    for &v in step(u) {
                        for &w in step(v) {
                            if dist[w] == UNREACHED {
                                dist[w] = 2;
                                touched.push(w);
                                if let Some(c) = class_of_train(labels, train, w) {
                                    out[n_classes + c] += 1.0;
                                }
                            }
                        }
                    }
                    for v in touched {
                        dist[v] = UNREACHED;
                    }
                }
                HopMode::Walks => {
                    for &v in step(u) {
                        for &w in step(v) {
                            if let Some(c) = class_of_train(labels, train, w) {
                                out[n_classes + c] += 1.0;
                            }
                        }
                    }
                }
            }
        }
    });
    NavMatrix::new(names, n, data)
}

/// `n x (c + 1)`: one-hot class of training nodes, zero rows elsewhere, and a
/// trailing constant column of ones.
pub fn build_v(labels: &[Option<usize>], train: &[bool], n_classes: usize) -> SparseMatrix {
    let n = labels.len();
    let triplets = (0..n).flat_map(|i| {
        let one_hot = class_of_train(labels, train, i).map(|c| (i, c, 1.0));
        one_hot.into_iter().chain(std::iter::once((i, n_classes, 1.0)))
    });
    SparseMatrix::from_triplets(n, n_classes + 1, triplets).expect("indices in range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    A,
    At,
}

/// A product of up to three adjacency factors, optionally AND-masked with
/// `A` (`C_ij = 1` iff `A_ij = 1` and the product is nonzero) and optionally
/// transposed as a whole.
///
/// Text form: `[A&]F(*F)*[^T]` with `F` in {`A`, `AT`}, e.g. `A*AT`, `A&A*A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductTerm {
    pub factors: Vec<Factor>,
    pub and_mask: bool,
    pub transposed: bool,
}

impl FromStr for ProductTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown product term `{s}`"));
        let mut body = s.trim();
        let transposed = body.ends_with("^T");
        if transposed {
            body = &body[..body.len() - 2];
        }
        let and_mask = body.starts_with("A&");
        if and_mask {
            body = &body[2..];
        }
        let factors = body
            .split('*')
            .map(|t| match t.trim() {
                "A" => Ok(Factor::A),
                "AT" => Ok(Factor::At),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>>>()?;
        if factors.is_empty() || factors.len() > 3 {
            return Err(bad());
        }
        Ok(ProductTerm {
            factors,
            and_mask,
            transposed,
        })
    }
}

impl fmt::Display for ProductTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.and_mask {
            f.write_str("A&")?;
        }
        let parts: Vec<&str> = self
            .factors
            .iter()
            .map(|x| if *x == Factor::A { "A" } else { "AT" })
            .collect();
        f.write_str(&parts.join("*"))?;
        if self.transposed {
            f.write_str("^T")?;
        }
        Ok(())
    }
}

pub const DEFAULT_RECIPE: [&str; 6] = ["A", "AT", "A*A", "A*AT", "AT*A", "A&A*A"];

pub fn parse_recipe(terms: &[&str]) -> Result<Vec<ProductTerm>> {
    terms.iter().map(|t| t.parse()).collect()
}

/// Binary arc matrix without self-loops (symmetric for undirected graphs).
pub fn arc_matrix(graph: &Graph) -> SparseMatrix {
    let n = graph.n_nodes();
    let triplets = (0..n).flat_map(|u| graph.out_neighbors(u).iter().map(move |&v| (u, v, 1.0)));
    SparseMatrix::from_triplets(n, n, triplets).expect("indices in range")
}

/// The integer `n x n` matrix of one term.
pub fn term_matrix(graph: &Graph, term: &ProductTerm) -> SparseMatrix {
    let a = arc_matrix(graph);
    let at = a.transpose();
    let pick = |f: Factor| if f == Factor::A { &a } else { &at };
    let mut m = pick(term.factors[0]).clone();
    for &f in &term.factors[1..] {
        m = m.matmul(pick(f)).expect("square factors");
    }
    if term.and_mask {
        m = m.binarized().masked_by(&a).expect("same shape");
    }
    if term.transposed {
        m = m.transpose();
    }
    m
}

/// Columns `term:c{j}` and `term:const` for every term, multiplying each
/// term matrix by `v`.
pub fn adjacency_products(graph: &Graph, v: &SparseMatrix, recipe: &[ProductTerm]) -> Result<NavMatrix> {
    let n = graph.n_nodes();
    if v.rows() != n {
        return Err(Error::Shape(format!("V has {} rows for {n} nodes", v.rows())));
    }
    let vc = v.cols();
    let width = recipe.len() * vc;
    let mut names = Vec::with_capacity(width);
    let mut data = vec![0.0; n * width];
    for (t, term) in recipe.iter().enumerate() {
        let label = term.to_string();
        names.extend((0..vc).map(|j| {
            if j + 1 == vc {
                format!("{label}:const")
            } else {
                format!("{label}:c{j}")
            }
        }));
        let prod = term_matrix(graph, term).matmul(v)?;
        for (r, c, val) in prod.iter() {
            data[r * width + t * vc + c] = val;
        }
    }
    NavMatrix::new(names, n, data)
}
