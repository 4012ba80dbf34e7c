//! Per-node census of connected induced subgraphs on 3 or 4 nodes.
//!
//! Subgraphs are enumerated once each with the ESU scheme (extension sets
//! restricted to nodes above the root and outside the current closed
//! neighbourhood) on the underlying undirected graph. The arc pattern of each
//! subgraph is looked up in a precomputed table mapping every labelled
//! pattern to its isomorphism class.

use std::sync::OnceLock;

use super::Columns;
use crate::exec::Execution;
use crate::graph::Graph;
use crate::{Error, Result};

const NO_CLASS: u16 = u16::MAX;

/// Isomorphism classes of connected `k`-node patterns.
///
/// A pattern code sets bit `a * k + b` when the arc `a -> b` is present;
/// undirected patterns carry both arcs of every edge.
#[derive(Debug)]
pub struct MotifCatalog {
    k: usize,
    directed: bool,
    class_of: Vec<u16>,
    representatives: Vec<u32>,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for i in 0..k {
            if !prefix.contains(&i) {
                prefix.push(i);
                rec(prefix, k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), k, &mut out);
    out
}

fn relabel(code: u32, k: usize, perm: &[usize]) -> u32 {
    let mut out = 0;
    for a in 0..k {
        for b in 0..k {
            if code >> (a * k + b) & 1 == 1 {
                out |= 1 << (perm[a] * k + perm[b]);
            }
        }
    }
    out
}

fn weakly_connected(code: u32, k: usize) -> bool {
    let mut seen = 1u32;
    let mut frontier = vec![0usize];
    while let Some(a) = frontier.pop() {
        for b in 0..k {
            let linked = code >> (a * k + b) & 1 == 1 || code >> (b * k + a) & 1 == 1;
            if linked && seen >> b & 1 == 0 {
                seen |= 1 << b;
                frontier.push(b);
            }
        }
    }
    seen == (1 << k) - 1
}

impl MotifCatalog {
    fn build(k: usize, directed: bool) -> Self {
        let perms = permutations(k);
        let size = 1usize << (k * k);
        let mut canonical = vec![u32::MAX; size];
        for code in 0..size as u32 {
            let diagonal = (0..k).any(|a| code >> (a * k + a) & 1 == 1);
            if diagonal {
                continue;
            }
            let symmetric = (0..k).all(|a| {
                (0..k).all(|b| (code >> (a * k + b) & 1) == (code >> (b * k + a) & 1))
            });
            if !directed && !symmetric {
                continue;
            }
            if !weakly_connected(code, k) {
                continue;
            }
            canonical[code as usize] = perms.iter().map(|p| relabel(code, k, p)).min().unwrap();
        }
        let mut representatives: Vec<u32> =
            canonical.iter().copied().filter(|&c| c != u32::MAX).collect();
        representatives.sort_unstable();
        representatives.dedup();
        let class_of = canonical
            .iter()
            .map(|&c| {
                if c == u32::MAX {
                    NO_CLASS
                } else {
                    representatives.binary_search(&c).unwrap() as u16
                }
            })
            .collect();
        MotifCatalog {
            k,
            directed,
            class_of,
            representatives,
        }
    }

    /// Shared catalog for `k` in {3, 4}.
    pub fn get(k: usize, directed: bool) -> Result<&'static MotifCatalog> {
        static CATALOGS: [OnceLock<MotifCatalog>; 4] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
        let slot = match (k, directed) {
            (3, false) => 0,
            (3, true) => 1,
            (4, false) => 2,
            (4, true) => 3,
            _ => return Err(Error::Argument(format!("motif size {k} unsupported (use 3 or 4)"))),
        };
        Ok(CATALOGS[slot].get_or_init(|| MotifCatalog::build(k, directed)))
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn n_classes(&self) -> usize {
        self.representatives.len()
    }

    /// Class of a labelled pattern, `None` when disconnected or invalid.
    pub fn class_of(&self, code: u32) -> Option<usize> {
        match self.class_of.get(code as usize) {
            Some(&c) if c != NO_CLASS => Some(c as usize),
            _ => None,
        }
    }

    /// Canonical (minimum) pattern code of a class.
    pub fn representative(&self, class: usize) -> u32 {
        self.representatives[class]
    }

    /// Arcs `(a, b)` of the canonical pattern of `class`.
    pub fn representative_arcs(&self, class: usize) -> Vec<(usize, usize)> {
        let code = self.representatives[class];
        let k = self.k;
        (0..k * k)
            .filter(|bit| code >> bit & 1 == 1)
            .map(|bit| (bit / k, bit % k))
            .collect()
    }

    pub fn column_name(&self, class: usize) -> String {
        format!("motif{}_{}", self.k, class)
    }
}

/// Pattern code of the subgraph induced by `nodes` (in that order).
pub fn pattern_code(graph: &Graph, nodes: &[usize]) -> u32 {
    let k = nodes.len();
    let mut code = 0u32;
    for a in 0..k {
        for b in 0..k {
            if a != b && graph.has_arc(nodes[a], nodes[b]) {
                code |= 1 << (a * k + b);
            }
        }
    }
    code
}

/// Calls `visit` once for every connected induced `k`-node subgraph.
pub fn for_each_connected_subgraph<F>(graph: &Graph, k: usize, root: usize, visit: &mut F)
where
    F: FnMut(&[usize]),
{
    fn extend<F: FnMut(&[usize])>(
        graph: &Graph,
        k: usize,
        root: usize,
        sub: &mut Vec<usize>,
        mut ext: Vec<usize>,
        visit: &mut F,
    ) {
        if sub.len() == k {
            visit(sub);
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            if sub.len() + 1 < k {
                for &u in graph.neighbors(w) {
                    if u > root
                        && !sub.contains(&u)
                        && !next.contains(&u)
                        && !sub.iter().any(|&s| graph.is_adjacent(s, u))
                    {
                        next.push(u);
                    }
                }
            }
            sub.push(w);
            extend(graph, k, root, sub, next, visit);
            sub.pop();
        }
    }
    let ext: Vec<usize> = graph
        .neighbors(root)
        .iter()
        .copied()
        .filter(|&u| u > root)
        .collect();
    let mut sub = vec![root];
    extend(graph, k, root, &mut sub, ext, visit);
}

/// Row-major `n x n_classes` count matrix for motifs of size `k`.
pub fn motif_count_matrix(graph: &Graph, k: usize, exec: Execution) -> Result<(Vec<u64>, usize)> {
    let catalog = MotifCatalog::get(k, graph.is_directed())?;
    let c = catalog.n_classes();
    let n = graph.n_nodes();
    let counts = exec.fold_merge(
        n,
        || vec![0u64; n * c],
        |mut acc, root| {
            for_each_connected_subgraph(graph, k, root, &mut |nodes| {
                let class = catalog
                    .class_of(pattern_code(graph, nodes))
                    .expect("enumerated subgraphs are connected");
                for &v in nodes {
                    acc[v * c + class] += 1;
                }
            });
            acc
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    Ok((counts, c))
}

/// One column per connected motif class of size `k`.
pub fn motif_counts(graph: &Graph, k: usize, exec: Execution) -> Result<Columns> {
    let catalog = MotifCatalog::get(k, graph.is_directed())?;
    let (counts, c) = motif_count_matrix(graph, k, exec)?;
    let n = graph.n_nodes();
    Ok((0..c)
        .map(|class| {
            (
                catalog.column_name(class),
                (0..n).map(|v| counts[v * c + class] as f64).collect(),
            )
        })
        .collect())
}
