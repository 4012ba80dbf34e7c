//! Planted-partition graphs with class-correlated bag-of-words features, for
//! demos and tests when no real corpus is at hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Graph, SparseMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SbmConfig {
    /// Nodes per class.
    pub sizes: Vec<usize>,
    /// Edge probability within / across classes.
    pub p_in: f64,
    pub p_out: f64,
    pub directed: bool,
    pub n_features: usize,
    /// Words per node.
    pub words_per_node: usize,
    /// Probability that a word is drawn from the node's class vocabulary
    /// rather than uniformly.
    pub feature_signal: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            sizes: vec![40, 40, 40],
            p_in: 0.12,
            p_out: 0.01,
            directed: false,
            n_features: 60,
            words_per_node: 6,
            feature_signal: 0.5,
            seed: 0,
        }
    }
}

/// Samples a labelled dataset (no masks set). Class `c` owns the word block
/// `[c * f / C, (c + 1) * f / C)`.
pub fn stochastic_block_model(cfg: &SbmConfig) -> Result<Dataset> {
    let c = cfg.sizes.len();
    if c < 2 || cfg.n_features < c {
        return Err(Error::Argument("need >= 2 classes and >= 1 word per class".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = cfg.sizes.iter().enumerate().flat_map(|(k, &s)| std::iter::repeat_n(k, s)).collect();
    let n = labels.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (!cfg.directed && v < u) {
                continue;
            }
            let p = if labels[u] == labels[v] { cfg.p_in } else { cfg.p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::new(n, cfg.directed, edges)?;
    let block = cfg.n_features / c;
    let mut triplets = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        let mut words = std::collections::BTreeSet::new();
        for _ in 0..cfg.words_per_node {
            let w = if rng.random::<f64>() < cfg.feature_signal {
                y * block + rng.random_range(0..block)
            } else {
                rng.random_range(0..cfg.n_features)
            };
            words.insert(w);
        }
        triplets.extend(words.into_iter().map(|w| (i, w, 1.0)));
    }
    let features = SparseMatrix::from_triplets(n, cfg.n_features, triplets)?;
    Dataset::new(graph, features, labels.into_iter().map(Some).collect(), c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_assortative() {
        let cfg = SbmConfig::default();
        let a = stochastic_block_model(&cfg).unwrap();
        let b = stochastic_block_model(&cfg).unwrap();
        assert_eq!(a.graph, b.graph);
        let same = a
            .graph
            .edges()
            .iter()
            .filter(|(u, v)| a.labels[*u] == a.labels[*v])
            .count();
        assert!(same * 2 > a.graph.n_edges());
        assert_eq!(a.n_nodes(), 120);
    }
}
