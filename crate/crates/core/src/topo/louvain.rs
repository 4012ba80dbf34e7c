//! Louvain modularity optimisation on the symmetrised graph.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

const MIN_GAIN: f64 = 1e-12;
const MAX_LEVELS: usize = 64;

/// Community assignment and its modularity.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Community of every node, numbered by first appearance in node order.
    pub community: Vec<usize>,
    pub n_communities: usize,
    pub modularity: f64,
}

/// Weighted symmetric adjacency lists; `adj[i]` holds `(j, w)` with the
/// self weight (if any) stored under `j == i`.
struct Weighted {
    adj: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
    total: f64,
}

impl Weighted {
    fn from_graph(graph: &Graph) -> Self {
        let n = graph.n_nodes();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|u| graph.neighbors(u).iter().map(|&v| (v, 1.0)).collect())
            .collect();
        Self::with_adj(adj)
    }

    fn with_adj(adj: Vec<Vec<(usize, f64)>>) -> Self {
        let strength: Vec<f64> = adj.iter().map(|row| row.iter().map(|e| e.1).sum()).collect();
        let total = strength.iter().sum();
        Weighted {
            adj,
            strength,
            total,
        }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    /// One local-moving phase; returns the assignment and whether any node moved.
    fn local_moves(&self, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.n();
        let m2 = self.total;
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut link = vec![0.0; n];
        let mut touched = Vec::new();
        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let ki = self.strength[i];
                let own = comm[i];
                for &(j, w) in &self.adj[i] {
                    if j != i {
                        if link[comm[j]] == 0.0 {
                            touched.push(comm[j]);
                        }
                        link[comm[j]] += w;
                    }
                }
                tot[own] -= ki;
                let gain = |c: usize, link: &[f64]| link[c] - tot[c] * ki / m2;
                let mut best = own;
                let mut best_gain = gain(own, &link);
                for &c in &touched {
                    let g = gain(c, &link);
                    if g > best_gain + MIN_GAIN {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += ki;
                if best != own {
                    comm[i] = best;
                    moved = true;
                }
                for c in touched.drain(..) {
                    link[c] = 0.0;
                }
            }
            if !moved {
                break;
            }
            moved_any = true;
        }
        (comm, moved_any)
    }

    fn aggregate(&self, comm: &[usize]) -> (Weighted, Vec<usize>) {
        let (renumbered, k) = renumber(comm);
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
        for (i, row) in self.adj.iter().enumerate() {
            for &(j, w) in row {
                *rows[renumbered[i]].entry(renumbered[j]).or_insert(0.0) += w;
            }
        }
        let adj = rows.into_iter().map(|r| r.into_iter().collect()).collect();
        (Weighted::with_adj(adj), renumbered)
    }
}

fn renumber(comm: &[usize]) -> (Vec<usize>, usize) {
    let mut map = vec![usize::MAX; comm.len().max(comm.iter().copied().max().map_or(0, |m| m + 1))];
    let mut next = 0;
    let out = comm
        .iter()
        .map(|&c| {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect();
    (out, next)
}

/// Newman modularity of `community` on the symmetrised, loop-free graph.
pub fn modularity(graph: &Graph, community: &[usize]) -> f64 {
    let w = Weighted::from_graph(graph);
    if w.total == 0.0 {
        return 0.0;
    }
    let k = community.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for (i, row) in w.adj.iter().enumerate() {
        tot[community[i]] += w.strength[i];
        for &(j, wt) in row {
            if community[i] == community[j] {
                internal[community[i]] += wt;
            }
        }
    }
    (0..k)
        .map(|c| internal[c] / w.total - (tot[c] / w.total).powi(2))
        .sum()
}

/// Multi-level Louvain with a seeded node visiting order.
pub fn louvain(graph: &Graph, seed: u64) -> Partition {
    let n = graph.n_nodes();
    let mut level = Weighted::from_graph(graph);
    let mut community: Vec<usize> = (0..n).collect();
    if level.total > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_LEVELS {
            let (comm, moved) = level.local_moves(&mut rng);
            if !moved {
                break;
            }
            let (next, renumbered) = level.aggregate(&comm);
            for c in community.iter_mut() {
                *c = renumbered[*c];
            }
            level = next;
        }
    }
    let (community, n_communities) = renumber(&community);
    let modularity = modularity(graph, &community);
    Partition {
        community,
        n_communities,
        modularity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clique(offset: usize, k: usize) -> Vec<(usize, usize)> {
        (0..k)
            .flat_map(|u| (u + 1..k).map(move |v| (offset + u, offset + v)))
            .collect()
    }

    #[test]
    fn two_cliques_split() {
        let mut edges = clique(0, 5);
        edges.extend(clique(5, 5));
        edges.push((4, 5));
        let g = Graph::new(10, false, edges).unwrap();
        for seed in 0..5 {
            let p = louvain(&g, seed);
            assert_eq!(p.n_communities, 2);
            assert!(p.community[..5].iter().all(|&c| c == 0));
            assert!(p.community[5..].iter().all(|&c| c == 1));
            let merged = modularity(&g, &[0; 10]);
            assert!(p.modularity > merged);
        }
    }

    #[test]
    fn single_clique() {
        let g = Graph::new(6, false, clique(0, 6)).unwrap();
        let p = louvain(&g, 3);
        assert_eq!(p.n_communities, 1);
        assert!(p.modularity.abs() < 1e-12);
    }

    #[test]
    fn edgeless_is_singletons() {
        let g = Graph::new(3, false, []).unwrap();
        let p = louvain(&g, 0);
        assert_eq!(p.community, vec![0, 1, 2]);
        assert_eq!(p.modularity, 0.0);
    }

    #[test]
    fn hand_modularity() {
        // Two disjoint edges, each its own community: 2 * (2/4 - (2/4)^2).
        let g = Graph::new(4, false, [(0, 1), (2, 3)]).unwrap();
        assert!((modularity(&g, &[0, 0, 1, 1]) - 0.5).abs() < 1e-15);
    }
}
