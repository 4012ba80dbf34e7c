//! Distance distribution moments, flow, and attraction-basin ratio.

use super::paths::{bfs, Direction, UNREACHED};
use super::Columns;
use crate::exec::Execution;
use crate::graph::Graph;

/// Per-node columns `dist_mean`, `dist_std`, `flow`, `attraction`.
///
/// - `dist_mean`/`dist_std`: population moments of out-distances to every
///   reachable node other than itself (0 when none).
/// - `flow`: mean of `d_und / d_dir` over out-reachable nodes, 0 when none.
/// - `attraction`: `sum_d |{j: d(i->j)=d}| alpha^-d` divided by the same sum
///   over nodes reaching `i`; 1 when nothing reaches `i`.
pub fn distance_features(graph: &Graph, alpha: f64, exec: Execution) -> Columns {
    let n = graph.n_nodes();
    let directed = graph.is_directed();
    let rows = exec.map_chunks(n, 128, |range| {
        let mut out = Vec::with_capacity(range.len());
        let mut d_out = vec![UNREACHED; n];
        let mut d_in = vec![UNREACHED; n];
        let mut d_und = vec![UNREACHED; n];
        for s in range {
            let order = bfs(graph, s, Direction::Out, &mut d_out);
            let reach = &order[1..];
            let (mean, std) = if reach.is_empty() {
                (0.0, 0.0)
            } else {
                let k = reach.len() as f64;
                let mean = reach.iter().map(|&v| d_out[v] as f64).sum::<f64>() / k;
                let var = reach
                    .iter()
                    .map(|&v| (d_out[v] as f64 - mean).powi(2))
                    .sum::<f64>()
                    / k;
                (mean, var.sqrt())
            };
            let outward: f64 = reach.iter().map(|&v| alpha.powi(-(d_out[v] as i32))).sum();

            let (flow, inward) = if directed {
                bfs(graph, s, Direction::Undirected, &mut d_und);
                let flow = if reach.is_empty() {
                    0.0
                } else {
                    reach
                        .iter()
                        .map(|&v| d_und[v] as f64 / d_out[v] as f64)
                        .sum::<f64>()
                        / reach.len() as f64
                };
                let basin = bfs(graph, s, Direction::In, &mut d_in);
                let inward = basin[1..]
                    .iter()
                    .map(|&v| alpha.powi(-(d_in[v] as i32)))
                    .sum();
                (flow, inward)
            } else {
                (if reach.is_empty() { 0.0 } else { 1.0 }, outward)
            };
            let attraction = if inward == 0.0 { 1.0 } else { outward / inward };
            out.push([mean, std, flow, attraction]);
        }
        out
    });

    let rows: Vec<[f64; 4]> = rows.into_iter().flatten().collect();
    ["dist_mean", "dist_std", "flow", "attraction"]
        .iter()
        .enumerate()
        .map(|(k, name)| (name.to_string(), rows.iter().map(|r| r[k]).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(cols: &Columns, name: &str) -> Vec<f64> {
        cols.iter().find(|(n, _)| n == name).unwrap().1.clone()
    }

    #[test]
    fn undirected_flow_is_one() {
        let g = Graph::new(4, false, [(0, 1), (1, 2), (2, 3), (3, 1)]).unwrap();
        let c = distance_features(&g, 2.0, Execution::Sequential);
        assert_eq!(col(&c, "flow"), vec![1.0; 4]);
        assert_eq!(col(&c, "attraction"), vec![1.0; 4]);
    }

    #[test]
    fn directed_cycle_flow() {
        let g = Graph::new(3, true, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let c = distance_features(&g, 2.0, Execution::Sequential);
        assert_eq!(col(&c, "flow"), vec![0.75; 3]);
        assert_eq!(col(&c, "attraction"), vec![1.0; 3]);
    }

    #[test]
    fn path_center_moments() {
        let g = Graph::new(3, false, [(0, 1), (1, 2)]).unwrap();
        let c = distance_features(&g, 2.0, Execution::Sequential);
        assert_eq!(col(&c, "dist_mean")[1], 1.0);
        assert_eq!(col(&c, "dist_std")[1], 0.0);
        assert_eq!(col(&c, "dist_mean")[0], 1.5);
        assert_eq!(col(&c, "dist_std")[0], 0.5);
    }

    #[test]
    fn attraction_of_source_and_sink() {
        // 0 -> 1: node 0 reaches 1 at distance 1, nothing reaches 0.
        let g = Graph::new(2, true, [(0, 1)]).unwrap();
        let c = distance_features(&g, 2.0, Execution::Sequential);
        let a = col(&c, "attraction");
        assert_eq!(a[0], 1.0);
        assert_eq!(a[1], 0.0);
        assert_eq!(col(&c, "flow"), vec![1.0, 0.0]);
    }

    #[test]
    fn isolated_conventions() {
        let g = Graph::new(2, true, std::iter::empty()).unwrap();
        let c = distance_features(&g, 2.0, Execution::Sequential);
        assert_eq!(col(&c, "flow"), vec![0.0, 0.0]);
        assert_eq!(col(&c, "attraction"), vec![1.0, 1.0]);
        assert_eq!(col(&c, "dist_mean"), vec![0.0, 0.0]);
    }
}
