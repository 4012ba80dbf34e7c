#![allow(dead_code)]

pub mod instances;
pub mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topoconv::graph::Graph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph; directed graphs may contain reciprocated pairs.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64, directed: bool) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && (directed || u < v) && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, directed, edges).unwrap()
}

/// Dense boolean arc matrix built straight from the edge list.
pub fn arcs(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.n_nodes();
    let mut a = vec![vec![false; n]; n];
    for &(u, v) in g.edges() {
        if u != v {
            a[u][v] = true;
            if !g.is_directed() {
                a[v][u] = true;
            }
        }
    }
    a
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
