use super::{Graph, SparseMatrix};

/// Binary `A + A^T + I` pattern as (row, col) pairs, sorted and unique.
fn symmetric_pattern_with_loops(graph: &Graph) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(2 * graph.n_edges() + graph.n_nodes());
    for &(u, v) in graph.edges() {
        pairs.push((u, v));
        pairs.push((v, u));
    }
    pairs.extend((0..graph.n_nodes()).map(|i| (i, i)));
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// `D^{-1/2} M D^{-1/2}` with `M = bin(A + A^T + I)`.
///
/// Every diagonal entry is positive since `M` carries the identity, and the
/// result is exactly symmetric.
pub fn normalized_adjacency(graph: &Graph) -> SparseMatrix {
    let pairs = symmetric_pattern_with_loops(graph);
    let mut degree = vec![0.0f64; graph.n_nodes()];
    for &(r, _) in &pairs {
        degree[r] += 1.0;
    }
    SparseMatrix::from_triplets(
        graph.n_nodes(),
        graph.n_nodes(),
        pairs
            .into_iter()
            .map(|(r, c)| (r, c, 1.0 / (degree[r] * degree[c]).sqrt())),
    )
    .expect("pattern within bounds")
}

/// The `2n x n` stack `[A + I ; A^T + I]`, each block row-normalized.
///
/// Undirected graphs produce two identical blocks.
pub fn asymmetric_adjacency(graph: &Graph) -> SparseMatrix {
    let n = graph.n_nodes();
    let block = |forward: bool| {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(graph.n_edges() * 2 + n);
        for &(u, v) in graph.edges() {
            if u == v {
                continue;
            }
            if graph.is_directed() {
                if forward {
                    t.push((u, v, 1.0));
                } else {
                    t.push((v, u, 1.0));
                }
            } else {
                t.push((u, v, 1.0));
                t.push((v, u, 1.0));
            }
        }
        t.extend((0..n).map(|i| (i, i, 1.0)));
        SparseMatrix::from_triplets(n, n, t)
            .expect("pattern within bounds")
            .binarized()
            .row_normalized()
    };
    block(true).vstack(&block(false)).expect("blocks share width")
}
