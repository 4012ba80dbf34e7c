//! Topological-similarity graph: every node is linked to its `k` nearest
//! neighbours in attribute space, and the directed picks are symmetrised.

use std::cmp::Ordering;
use std::str::FromStr;

use crate::exec::Execution;
use crate::graph::{normalized_adjacency, Graph, SparseMatrix};
use crate::topo::NavMatrix;
use crate::{Error, Result};

const QUERY_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Euclidean,
    /// `1 - cos(x, y)`; a zero vector has similarity 0 with everything.
    Cosine,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualGraphConfig {
    pub k: usize,
    pub metric: Metric,
    /// Z-score columns (dropping constant ones) before measuring distances.
    pub standardize: bool,
}

impl DualGraphConfig {
    pub fn new(k: usize) -> Self {
        DualGraphConfig {
            k,
            metric: Metric::Euclidean,
            standardize: true,
        }
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        if self.k == 0 || self.k >= n_nodes {
            return Err(Error::Config(format!(
                "k = {} must be in [1, {}) for {} nodes",
                self.k, n_nodes, n_nodes
            )));
        }
        Ok(())
    }
}

fn distance(metric: Metric, a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    match metric {
        // Squared distance preserves the ordering.
        Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        Metric::Cosine => {
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                1.0 - a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
            }
        }
    }
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` nearest other rows of every row, ordered by (distance, index).
pub fn knn(nav: &NavMatrix, k: usize, metric: Metric, exec: Execution) -> Result<Vec<Vec<usize>>> {
    let n = nav.n_nodes();
    if k == 0 || k >= n {
        return Err(Error::Config(format!("k = {k} must be in [1, {n})")));
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| nav.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let blocks = exec.map_chunks(n, QUERY_BLOCK, |range| {
        let mut cand = Vec::with_capacity(n - 1);
        range
            .map(|i| {
                cand.clear();
                let xi = nav.row(i);
                for j in (0..n).filter(|&j| j != i) {
                    cand.push((distance(metric, xi, nav.row(j), norms[i], norms[j]), j));
                }
                cand.select_nth_unstable_by(k - 1, by_distance_then_index);
                let mut picked = cand[..k].to_vec();
                picked.sort_unstable_by(by_distance_then_index);
                picked.into_iter().map(|(_, j)| j).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });
    Ok(blocks.into_iter().flatten().collect())
}

/// Undirected k-NN graph over the rows of `nav`.
pub fn build_dual(nav: &NavMatrix, config: &DualGraphConfig, exec: Execution) -> Result<Graph> {
    config.validate(nav.n_nodes())?;
    let prepared;
    let source = if config.standardize {
        prepared = nav.standardized();
        &prepared
    } else {
        nav
    };
    let lists = knn(source, config.k, config.metric, exec)?;
    let edges = lists
        .iter()
        .enumerate()
        .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)));
    Graph::new(nav.n_nodes(), false, edges)
}

/// Convolution operator of the dual graph (same normalization as the
/// original graph).
pub fn dual_adjacency(dual: &Graph) -> SparseMatrix {
    normalized_adjacency(dual)
}
