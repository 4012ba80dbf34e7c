use crate::graph::Graph;

pub const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Undirected,
}

pub fn step(graph: &Graph, u: usize, dir: Direction) -> &[usize] {
    match dir {
        Direction::Out => graph.out_neighbors(u),
        Direction::In => graph.in_neighbors(u),
        Direction::Undirected => graph.neighbors(u),
    }
}

/// Breadth-first search from `src`. Fills `dist` (reset to [`UNREACHED`]
/// first) and returns nodes in visitation order, `src` first.
pub fn bfs(graph: &Graph, src: usize, dir: Direction, dist: &mut [u32]) -> Vec<usize> {
    dist.iter_mut().for_each(|d| *d = UNREACHED);
    let mut order = Vec::new();
    dist[src] = 0;
    order.push(src);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        let du = dist[u];
        for &w in step(graph, u, dir) {
            if dist[w] == UNREACHED {
                dist[w] = du + 1;
                order.push(w);
            }
        }
    }
    order
}
