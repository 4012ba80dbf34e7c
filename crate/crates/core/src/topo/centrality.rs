//! Degree, Brandes betweenness and closeness.

use super::paths::{bfs, Direction, UNREACHED};
use super::Columns;
use crate::exec::Execution;
use crate::graph::Graph;

const SOURCE_CHUNK: usize = 64;

/// In/out degree for directed graphs, a single degree column otherwise.
/// Self-loops are not counted.
pub fn degree_columns(graph: &Graph) -> Columns {
    let n = graph.n_nodes();
    if graph.is_directed() {
        vec![
            ("deg_in".into(), (0..n).map(|u| graph.in_degree(u) as f64).collect()),
            ("deg_out".into(), (0..n).map(|u| graph.out_degree(u) as f64).collect()),
        ]
    } else {
        vec![("deg".into(), (0..n).map(|u| graph.out_degree(u) as f64).collect())]
    }
}

/// Normalized betweenness (Brandes) and closeness over out-paths.
///
/// Betweenness is divided by `(n-1)(n-2)`; for undirected graphs the raw
/// accumulation counts every pair from both endpoints, so that is the same as
/// halving it and dividing by `(n-1)(n-2)/2`. Closeness is
/// `((r-1)/(n-1)) * ((r-1)/sum_d)` with `r` the reachable count including the
/// node itself, and 0 when nothing is reachable.
pub fn betweenness_closeness(graph: &Graph, exec: Execution) -> (Vec<f64>, Vec<f64>) {
    let n = graph.n_nodes();
    let partials = exec.map_chunks(n, SOURCE_CHUNK, |sources| {
        let mut bc = vec![0.0; n];
        let mut closeness = Vec::with_capacity(sources.len());
        let mut dist = vec![UNREACHED; n];
        let mut sigma = vec![0.0f64; n];
        let mut delta = vec![0.0f64; n];
        for s in sources {
            let order = bfs(graph, s, Direction::Out, &mut dist);
            for &v in &order {
                sigma[v] = 0.0;
                delta[v] = 0.0;
            }
            sigma[s] = 1.0;
            for &v in &order[1..] {
                let dv = dist[v];
                sigma[v] = graph
                    .in_neighbors(v)
                    .iter()
                    .filter(|&&p| dist[p] != UNREACHED && dist[p] + 1 == dv)
                    .map(|&p| sigma[p])
                    .sum();
            }
            for &w in order.iter().skip(1).rev() {
                let coeff = (1.0 + delta[w]) / sigma[w];
                let dw = dist[w];
                for &p in graph.in_neighbors(w) {
                    if dist[p] != UNREACHED && dist[p] + 1 == dw {
                        delta[p] += sigma[p] * coeff;
                    }
                }
                bc[w] += delta[w];
            }
            let reached = order.len();
            let total: u64 = order.iter().map(|&v| dist[v] as u64).sum();
            closeness.push(if reached <= 1 || n <= 1 {
                0.0
            } else {
                let r1 = (reached - 1) as f64;
                (r1 / (n - 1) as f64) * (r1 / total as f64)
            });
        }
        (bc, closeness)
    });

    let mut betweenness = vec![0.0; n];
    let mut closeness = Vec::with_capacity(n);
    for (bc, cl) in partials {
        for (acc, v) in betweenness.iter_mut().zip(bc) {
            *acc += v;
        }
        closeness.extend(cl);
    }
    if n > 2 {
        let scale = 1.0 / ((n - 1) as f64 * (n - 2) as f64);
        betweenness.iter_mut().for_each(|b| *b *= scale);
    } else {
        betweenness.iter_mut().for_each(|b| *b = 0.0);
    }
    (betweenness, closeness)
}

/// Degree, betweenness and closeness columns.
pub fn centrality_features(graph: &Graph, exec: Execution) -> Columns {
    let mut cols = degree_columns(graph);
    let (b, c) = betweenness_closeness(graph, exec);
    cols.push(("betweenness".into(), b));
    cols.push(("closeness".into(), c));
    cols
}
