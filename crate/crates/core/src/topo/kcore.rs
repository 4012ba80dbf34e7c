//! Core numbers by bucket peeling (Batagelj–Zaversnik).

use crate::graph::Graph;

/// Core number of every node. Directed graphs use total degree (in + out),
/// so a reciprocated pair contributes 2 to each endpoint.
pub fn k_core(graph: &Graph) -> Vec<usize> {
    let n = graph.n_nodes();
    let arcs = |v: usize| -> Box<dyn Iterator<Item = usize> + '_> {
        if graph.is_directed() {
            Box::new(
                graph
                    .out_neighbors(v)
                    .iter()
                    .chain(graph.in_neighbors(v))
                    .copied(),
            )
        } else {
            Box::new(graph.neighbors(v).iter().copied())
        }
    };
    let mut deg: Vec<usize> = (0..n).map(|v| arcs(v).count()).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    // Nodes sorted by degree, with bucket starts and positions.
    let mut bin = vec![0usize; max_deg + 2];
    for &d in &deg {
        bin[d + 1] += 1;
    }
    for d in 0..=max_deg {
        bin[d + 1] += bin[d];
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    let mut next = bin.clone();
    for v in 0..n {
        pos[v] = next[deg[v]];
        vert[pos[v]] = v;
        next[deg[v]] += 1;
    }

    for i in 0..n {
        let v = vert[i];
        for u in arcs(v) {
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    vert.swap(pu, pw);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    deg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph() {
        let edges = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v)));
        let g = Graph::new(4, false, edges).unwrap();
        assert_eq!(k_core(&g), vec![3; 4]);
    }

    #[test]
    fn triangle_with_pendant() {
        let g = Graph::new(4, false, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        assert_eq!(k_core(&g), vec![2, 2, 2, 1]);
    }

    #[test]
    fn edgeless() {
        let g = Graph::new(5, false, []).unwrap();
        assert_eq!(k_core(&g), vec![0; 5]);
    }

    #[test]
    fn directed_total_degree() {
        let g = Graph::new(2, true, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(k_core(&g), vec![2, 2]);
        let g = Graph::new(3, true, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(k_core(&g), vec![1, 1, 1]);
    }
}
