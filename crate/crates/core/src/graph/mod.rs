//! Graph storage, sparse matrices, dataset ingestion and adjacency operators.

mod adjacency;
mod dataset;
pub mod io;
mod sparse;
pub mod synthetic;

pub use adjacency::{asymmetric_adjacency, normalized_adjacency};
pub use dataset::{make_split, Dataset, Masks, SplitPolicy};
pub use sparse::SparseMatrix;

use crate::{Error, Result};

/// Directed or undirected graph with compressed neighbour access.
///
/// `edges` keeps every distinct input edge (self-loops included). For
/// undirected graphs each edge is stored once as `(min, max)`. The
/// neighbour lists exclude self-loops: structural features ignore them and
/// the convolution operators add the identity themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: Vec<(usize, usize)>,
    out_ptr: Vec<usize>,
    out_idx: Vec<usize>,
    in_ptr: Vec<usize>,
    in_idx: Vec<usize>,
    und_ptr: Vec<usize>,
    und_idx: Vec<usize>,
}

fn csr(n: usize, pairs: &mut Vec<(usize, usize)>) -> (Vec<usize>, Vec<usize>) {
    pairs.sort_unstable();
    pairs.dedup();
    let mut ptr = vec![0usize; n + 1];
    for &(u, _) in pairs.iter() {
        ptr[u + 1] += 1;
    }
    for i in 0..n {
        ptr[i + 1] += ptr[i];
    }
    let idx = pairs.iter().map(|&(_, v)| v).collect();
    (ptr, idx)
}

impl Graph {
    /// Builds a graph, collapsing duplicate edges.
    pub fn new<I>(n: usize, directed: bool, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Argument(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            list.push(if directed { (u, v) } else { (u.min(v), u.max(v)) });
        }
        list.sort_unstable();
        list.dedup();

        let mut out_pairs = Vec::with_capacity(list.len() * 2);
        let mut in_pairs = Vec::with_capacity(list.len() * 2);
        let mut und_pairs = Vec::with_capacity(list.len() * 2);
        for &(u, v) in &list {
            if u == v {
                continue;
            }
            out_pairs.push((u, v));
            in_pairs.push((v, u));
            if !directed {
                out_pairs.push((v, u));
                in_pairs.push((u, v));
            }
            und_pairs.push((u, v));
            und_pairs.push((v, u));
        }
        let (out_ptr, out_idx) = csr(n, &mut out_pairs);
        let (in_ptr, in_idx) = csr(n, &mut in_pairs);
        let (und_ptr, und_idx) = csr(n, &mut und_pairs);
        Ok(Graph {
            n,
            directed,
            edges: list,
            out_ptr,
            out_idx,
            in_ptr,
            in_idx,
            und_ptr,
            und_idx,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Successors of `u` (all neighbours when undirected), sorted.
    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out_idx[self.out_ptr[u]..self.out_ptr[u + 1]]
    }

    /// Predecessors of `u` (all neighbours when undirected), sorted.
    pub fn in_neighbors(&self, u: usize) -> &[usize] {
        &self.in_idx[self.in_ptr[u]..self.in_ptr[u + 1]]
    }

    /// Neighbours in the underlying simple undirected graph, sorted.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.und_idx[self.und_ptr[u]..self.und_ptr[u + 1]]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_ptr[u + 1] - self.out_ptr[u]
    }

    pub fn in_degree(&self, u: usize) -> usize {
        self.in_ptr[u + 1] - self.in_ptr[u]
    }

    /// Whether the arc `u -> v` exists (either direction for undirected graphs).
    /// Self-loops are never reported.
    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_neighbors(u).binary_search(&v).is_ok()
    }

    /// Whether `u` and `v` are adjacent in the underlying undirected graph.
    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Same node set, every arc reversed.
    pub fn reversed(&self) -> Graph {
        if !self.directed {
            return self.clone();
        }
        Graph::new(self.n, true, self.edges.iter().map(|&(u, v)| (v, u)))
            .expect("reversal preserves bounds")
    }

    /// The underlying undirected graph (self-loops retained in the edge list).
    pub fn to_undirected(&self) -> Graph {
        if !self.directed {
            return self.clone();
        }
        Graph::new(self.n, false, self.edges.iter().copied()).expect("bounds preserved")
    }

    /// Applies a node relabelling: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Graph {
        Graph::new(
            self.n,
            self.directed,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
        )
        .expect("permutation preserves bounds")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_collapse() {
        let g = Graph::new(3, true, [(0, 1), (0, 1), (1, 2)]).unwrap();
        assert_eq!(g.n_edges(), 2);
        let u = Graph::new(3, false, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(u.n_edges(), 1);
        assert_eq!(u.out_neighbors(1), &[0]);
        assert_eq!(u.out_neighbors(0), &[1]);
    }

    #[test]
    fn self_loops_kept_as_edges_only() {
        let g = Graph::new(2, true, [(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.out_neighbors(0), &[1]);
        assert!(!g.has_arc(0, 0));
    }

    #[test]
    fn directed_access() {
        let g = Graph::new(3, true, [(0, 1), (2, 1)]).unwrap();
        assert_eq!(g.in_neighbors(1), &[0, 2]);
        assert!(g.out_neighbors(1).is_empty());
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(g.has_arc(0, 1) && !g.has_arc(1, 0));
        assert!(g.is_adjacent(1, 0));
        assert_eq!(g.reversed().out_neighbors(1), &[0, 2]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(Graph::new(2, false, [(0, 2)]).is_err());
    }

    #[test]
    fn isolated_nodes() {
        let g = Graph::new(3, false, std::iter::empty()).unwrap();
        assert_eq!(g.n_edges(), 0);
        assert!((0..3).all(|u| g.neighbors(u).is_empty()));
    }
}
