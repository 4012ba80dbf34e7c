//! Brute-force reference implementations.

use std::collections::HashMap;

use topoconv::exec::Execution;
use topoconv::graph::Graph;
use topoconv::topo::motifs::{motif_count_matrix, MotifCatalog};

use super::arcs;

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

pub fn code_of(a: &[Vec<bool>], nodes: &[usize]) -> u32 {
    let k = nodes.len();
    let mut c = 0;
    for i in 0..k {
        for j in 0..k {
            if a[nodes[i]][nodes[j]] {
                c |= 1 << (i * k + j);
            }
        }
    }
    c
}

pub fn canonical(code: u32, k: usize, perms: &[Vec<usize>]) -> u32 {
    perms
        .iter()
        .map(|p| {
            let mut c = 0;
            for i in 0..k {
                for j in 0..k {
                    if code >> (i * k + j) & 1 == 1 {
                        c |= 1 << (p[i] * k + p[j]);
                    }
                }
            }
            c
        })
        .min()
        .unwrap()
}

pub fn weakly_connected(code: u32, k: usize) -> bool {
    let mut seen = 1u32;
    loop {
        let mut next = seen;
        for i in 0..k {
            for j in 0..k {
                if (code >> (i * k + j) & 1 == 1 || code >> (j * k + i) & 1 == 1) && seen >> i & 1 == 1 {
                    next |= 1 << j;
                }
            }
        }
        if next == seen {
            return seen == (1 << k) - 1;
        }
        seen = next;
    }
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}


/// Core number by definition: the largest k whose k-core (obtained by
/// repeatedly deleting nodes of degree < k) contains the node.
pub fn brute_core(g: &Graph) -> Vec<usize> {
    let n = g.n_nodes();
    let mut mult = vec![vec![0usize; n]; n];
    for &(u, v) in g.edges() {
        if u != v {
            mult[u][v] += 1;
            mult[v][u] += 1;
        }
    }
    let mut core = vec![0; n];
    for k in 1..=2 * n {
        let mut alive = vec![true; n];
        loop {
            let drop: Vec<usize> = (0..n)
                .filter(|&v| alive[v] && (0..n).filter(|&u| alive[u]).map(|u| mult[v][u]).sum::<usize>() < k)
                .collect();
            if drop.is_empty() {
                break;
            }
            drop.into_iter().for_each(|v| alive[v] = false);
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
    }
    core
}


/// Betweenness from explicit enumeration of every shortest path.
pub fn brute_centrality(g: &Graph) -> (Vec<f64>, Vec<f64>) {
    let n = g.n_nodes();
    let a = arcs(g);
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if a[i][j] {
                d[i][j] = 1;
            }
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][m] + d[m][j] < d[i][j] {
                    d[i][j] = d[i][m] + d[m][j];
                }
            }
        }
    }
    fn walk(a: &[Vec<bool>], path: &mut Vec<usize>, t: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if left == 0 {
            if u == t {
                out.push(path.clone());
            }
            return;
        }
        for v in 0..a.len() {
            if a[u][v] && !path.contains(&v) {
                path.push(v);
                walk(a, path, t, left - 1, out);
                path.pop();
            }
        }
    }
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || d[s][t] >= inf {
                continue;
            }
            let mut paths = Vec::new();
            walk(&a, &mut vec![s], t, d[s][t], &mut paths);
            let sigma = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    bc[v] += 1.0 / sigma;
                }
            }
        }
    }
    if n > 2 {
        bc.iter_mut().for_each(|b| *b /= ((n - 1) * (n - 2)) as f64);
    }
    let closeness = (0..n)
        .map(|s| {
            let reach: Vec<usize> = (0..n).filter(|&t| t != s && d[s][t] < inf).map(|t| d[s][t]).collect();
            if reach.is_empty() {
                0.0
            } else {
                let r = reach.len() as f64;
                (r / (n - 1) as f64) * (r / reach.iter().sum::<usize>() as f64)
            }
        })
        .collect();
    (bc, closeness)
}


pub fn brute_modularity(g: &Graph, comm: &[usize]) -> f64 {
    let u = g.to_undirected();
    let a = arcs(&u);
    let n = u.n_nodes();
    let deg: Vec<f64> = (0..n).map(|i| a[i].iter().filter(|&&x| x).count() as f64).collect();
    let two_m: f64 = deg.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if comm[i] == comm[j] {
                q += f64::from(u8::from(a[i][j])) - deg[i] * deg[j] / two_m;
            }
        }
    }
    q / two_m
}


/// Per-node motif counts by enumerating every node subset, with classes
/// matched to the library's through canonical codes.
pub fn brute_motif_counts(g: &Graph, k: usize) -> (Vec<u64>, Vec<u64>) {
    let n = g.n_nodes();
    let a = arcs(g);
    let perms = permutations(k);
    let cat = MotifCatalog::get(k, g.is_directed()).unwrap();
    let (counts, c) = motif_count_matrix(g, k, Execution::Sequential).unwrap();
    let class_of_canon: HashMap<u32, usize> =
        (0..c).map(|cl| (canonical(cat.representative(cl), k, &perms), cl)).collect();
    let mut expected = vec![0u64; n * c];
    for s in subsets(n, k) {
        let code = code_of(&a, &s);
        if !weakly_connected(code, k) {
            continue;
        }
        let cl = class_of_canon[&canonical(code, k, &perms)];
        for &v in &s {
            expected[v * c + cl] += 1;
        }
    }
    (counts, expected)
}
