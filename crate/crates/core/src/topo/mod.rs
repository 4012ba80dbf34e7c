//! Per-node network attribute vectors (NAV): degrees, centralities, distance
//! statistics, motif census, core number and community structure.

mod centrality;
mod distance;
mod kcore;
mod louvain;
pub mod motifs;
mod paths;

use std::path::Path;

pub use centrality::{betweenness_closeness, centrality_features, degree_columns};
pub use distance::distance_features;
pub use kcore::k_core;
pub use louvain::{louvain, modularity, Partition};
pub use motifs::{motif_counts, MotifCatalog};
pub use paths::{bfs, step, Direction, UNREACHED};

use crate::exec::Execution;
use crate::graph::{io, Graph, SparseMatrix};
use crate::{Error, Result};

/// Named per-node columns.
pub type Columns = Vec<(String, Vec<f64>)>;

/// Row-major node × attribute matrix with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct NavMatrix {
    names: Vec<String>,
    n_nodes: usize,
    data: Vec<f64>,
}

impl NavMatrix {
    pub fn new(names: Vec<String>, n_nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_nodes * names.len() {
            return Err(Error::Shape(format!(
                "{} values for {} x {} matrix",
                data.len(),
                n_nodes,
                names.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Integrity(format!(
                "non-finite value in column {}",
                names[bad % names.len()]
            )));
        }
        Ok(NavMatrix {
            names,
            n_nodes,
            data,
        })
    }

    pub fn from_columns(n_nodes: usize, columns: Columns) -> Result<Self> {
        let width = columns.len();
        let mut data = vec![0.0; n_nodes * width];
        for (j, (name, col)) in columns.iter().enumerate() {
            if col.len() != n_nodes {
                return Err(Error::Shape(format!(
                    "column {name} has {} rows, expected {n_nodes}",
                    col.len()
                )));
            }
            for (i, &v) in col.iter().enumerate() {
                data[i * width + j] = v;
            }
        }
        NavMatrix::new(columns.into_iter().map(|c| c.0).collect(), n_nodes, data)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_attrs(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_attrs();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.data[i * self.n_attrs() + j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Keeps the columns accepted by `keep`, in order.
    pub fn select(&self, keep: impl Fn(&str) -> bool) -> NavMatrix {
        let idx: Vec<usize> = (0..self.n_attrs()).filter(|&j| keep(&self.names[j])).collect();
        let mut data = Vec::with_capacity(self.n_nodes * idx.len());
        for i in 0..self.n_nodes {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        NavMatrix {
            names: idx.iter().map(|&j| self.names[j].clone()).collect(),
            n_nodes: self.n_nodes,
            data,
        }
    }

    /// Z-scores every column (population std) and drops constant columns.
    pub fn standardized(&self) -> NavMatrix {
        let n = self.n_nodes as f64;
        let w = self.n_attrs();
        let stats: Vec<(f64, f64)> = (0..w)
            .map(|j| {
                let col = self.column(j);
                let mean = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect();
        let keep: Vec<usize> = (0..w)
            .filter(|&j| stats[j].1 > 1e-12 * stats[j].0.abs().max(1.0))
            .collect();
        let mut data = Vec::with_capacity(self.n_nodes * keep.len());
        for i in 0..self.n_nodes {
            let row = self.row(i);
            data.extend(keep.iter().map(|&j| (row[j] - stats[j].0) / stats[j].1));
        }
        NavMatrix {
            names: keep.iter().map(|&j| self.names[j].clone()).collect(),
            n_nodes: self.n_nodes,
            data,
        }
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        SparseMatrix::from_dense(self.n_nodes, self.n_attrs(), &self.data)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        io::write_table(path, &self.names, self.n_nodes, &self.data)
    }

    pub fn read_tsv(path: &Path) -> Result<NavMatrix> {
        let (names, rows, data) = io::read_table(path)?;
        NavMatrix::new(names, rows, data)
    }
}

/// Knobs of the attribute computation.
#[derive(Debug, Clone, PartialEq)]
pub struct NavConfig {
    /// Distance decay of the attraction-basin ratio.
    pub alpha: f64,
    pub motif_sizes: Vec<usize>,
    pub louvain_seed: u64,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig {
            alpha: 2.0,
            motif_sizes: vec![3, 4],
            louvain_seed: 0,
        }
    }
}

/// All attribute columns in a fixed order:
/// degree (`deg` or `deg_in`, `deg_out`), `betweenness`, `closeness`,
/// `dist_mean`, `dist_std`, `flow`, `attraction`, `motif3_*`, `motif4_*`,
/// `core_number`, `community_id`, `modularity`.
pub fn compute_nav(graph: &Graph, config: &NavConfig, exec: Execution) -> Result<NavMatrix> {
    let n = graph.n_nodes();
    if n == 0 {
        return Err(Error::Argument("graph has no nodes".into()));
    }
    if !(config.alpha > 1.0) {
        return Err(Error::Config(format!("alpha must exceed 1, got {}", config.alpha)));
    }
    let mut columns = centrality_features(graph, exec);
    columns.extend(distance_features(graph, config.alpha, exec));
    for &k in &config.motif_sizes {
        columns.extend(motif_counts(graph, k, exec)?);
    }
    columns.push((
        "core_number".into(),
        k_core(graph).into_iter().map(|c| c as f64).collect(),
    ));
    let partition = louvain(graph, config.louvain_seed);
    columns.push((
        "community_id".into(),
        partition.community.iter().map(|&c| c as f64).collect(),
    ));
    columns.push(("modularity".into(), vec![partition.modularity; n]));
    NavMatrix::from_columns(n, columns)
}
