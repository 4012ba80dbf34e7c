//! Statistics relating structure to class: neighbour-class conditional
//! probabilities, Kruskal–Wallis association tests and class-mean shares.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::exec::Execution;
use crate::graph::Graph;
use crate::topo::NavMatrix;
use crate::{Error, Result};

/// `P(neighbour has class i | node has class j)` in row `j`; rows of classes
/// with no labelled edge endpoints are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborClassMatrix {
    pub rows: Vec<Option<Vec<f64>>>,
    /// Mean of the diagonal over defined rows.
    pub diagonal_mass: f64,
    /// `1 / n_classes`, the diagonal mass of class-blind neighbours.
    pub uniform_baseline: f64,
}

/// Counts every arc `u -> v` between labelled nodes (`u`'s class is the
/// row). Undirected edges count in both directions; `both_directions` also
/// counts the reverse of every arc of a directed graph.
pub fn neighbor_class_matrix(
    graph: &Graph,
    labels: &[Option<usize>],
    n_classes: usize,
    both_directions: bool,
) -> Result<NeighborClassMatrix> {
    let mut counts = vec![vec![0.0f64; n_classes]; n_classes];
    let mut add = |u: usize, v: usize| {
        if let (Some(a), Some(b)) = (labels[u], labels[v]) {
            counts[a][b] += 1.0;
        }
    };
    for u in 0..graph.n_nodes() {
        for &v in graph.out_neighbors(u) {
            add(u, v);
            if graph.is_directed() && both_directions {
                add(v, u);
            }
        }
    }
    let rows: Vec<Option<Vec<f64>>> = counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            (total > 0.0).then(|| row.iter().map(|c| c / total).collect())
        })
        .collect();
    let diag: Vec<f64> = rows
        .iter()
        .enumerate()
        .filter_map(|(j, r)| r.as_ref().map(|r| r[j]))
        .collect();
    if diag.is_empty() {
        return Err(Error::Argument("no edges between labelled nodes".into()));
    }
    Ok(NeighborClassMatrix {
        diagonal_mass: diag.iter().sum::<f64>() / diag.len() as f64,
        uniform_baseline: 1.0 / n_classes as f64,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KruskalWallis {
    /// Tie-corrected statistic.
    pub h: f64,
    pub df: usize,
    pub p_value: f64,
    /// Natural log of the p-value, accurate where `p_value` underflows.
    pub ln_p: f64,
}

/// Average ranks (1-based) with ties sharing their mean rank, and the tie
/// correction sum `sum(t^3 - t)`.
fn ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (out, ties)
}

/// `ln Q(a, x)` (regularised upper incomplete gamma) by Lentz's continued
/// fraction, valid for `x > a + 1`.
fn ln_upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-15 {
            break;
        }
    }
    -x + a * x.ln() - ln_gamma(a) + h.ln()
}

/// Natural log of the chi-squared upper tail.
pub fn chi2_ln_sf(x: f64, df: usize) -> f64 {
    let dist = ChiSquared::new(df as f64).expect("df >= 1");
    let p = dist.sf(x);
    let a = df as f64 / 2.0;
    if p > 1e-250 || x / 2.0 <= a + 1.0 {
        p.ln()
    } else {
        ln_upper_gamma_cf(a, x / 2.0)
    }
}

/// Kruskal–Wallis H test of `values` grouped by `groups` (group ids need
/// not be contiguous; empty ids are ignored).
pub fn kruskal_wallis(values: &[f64], groups: &[usize]) -> Result<KruskalWallis> {
    if values.len() != groups.len() {
        return Err(Error::Shape(format!("{} values, {} group ids", values.len(), groups.len())));
    }
    let n_groups = groups.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; n_groups];
    for &g in groups {
        sizes[g] += 1;
    }
    let k = sizes.iter().filter(|&&s| s > 0).count();
    if k < 2 {
        return Err(Error::Argument("need at least two nonempty groups".into()));
    }
    let n = values.len() as f64;
    let (r, ties) = ranks(values);
    let correction = 1.0 - ties / (n * n * n - n);
    let df = k - 1;
    if correction <= 0.0 {
        return Ok(KruskalWallis {
            h: 0.0,
            df,
            p_value: 1.0,
            ln_p: 0.0,
        });
    }
    let mut rank_sums = vec![0.0; n_groups];
    for (&g, &rank) in groups.iter().zip(&r) {
        rank_sums[g] += rank;
    }
    let s: f64 = rank_sums
        .iter()
        .zip(&sizes)
        .filter(|(_, &sz)| sz > 0)
        .map(|(&rs, &sz)| rs * rs / sz as f64)
        .sum();
    let h = ((12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0)) / correction).max(0.0);
    let dist = ChiSquared::new(df as f64).expect("df >= 1");
    Ok(KruskalWallis {
        h,
        df,
        p_value: dist.sf(h),
        ln_p: chi2_ln_sf(h, df),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KwRow {
    pub attr: String,
    pub test: KruskalWallis,
    /// `ln(min(1, m * p))` for `m` tested columns.
    pub ln_p_bonferroni: f64,
    pub significant: bool,
}

/// Kruskal–Wallis of every NAV column against the class of labelled nodes,
/// Bonferroni-corrected at level `alpha`.
pub fn kw_table(nav: &NavMatrix, labels: &[Option<usize>], alpha: f64, exec: Execution) -> Result<Vec<KwRow>> {
    let nodes: Vec<usize> = (0..nav.n_nodes()).filter(|&i| labels[i].is_some()).collect();
    let groups: Vec<usize> = nodes.iter().map(|&i| labels[i].unwrap()).collect();
    let m = nav.n_attrs() as f64;
    let tests = exec.map(nav.n_attrs(), |j| {
        let col = nav.column(j);
        let values: Vec<f64> = nodes.iter().map(|&i| col[i]).collect();
        kruskal_wallis(&values, &groups)
    });
    tests
        .into_iter()
        .enumerate()
        .map(|(j, t)| {
            let test = t?;
            let ln_p_bonferroni = (test.ln_p + m.ln()).min(0.0);
            Ok(KwRow {
                attr: nav.names()[j].clone(),
                test,
                ln_p_bonferroni,
                significant: ln_p_bonferroni < alpha.ln(),
            })
        })
        .collect()
}

/// Per-class attribute means, each column scaled to sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMeanTable {
    pub attrs: Vec<String>,
    /// `n_classes x n_attrs`, row-major.
    pub shares: Vec<f64>,
    pub n_classes: usize,
    /// Columns whose class means summed to 0, emitted as uniform.
    pub uniform_fallback: Vec<bool>,
}

impl ClassMeanTable {
    pub fn share(&self, class: usize, attr: usize) -> f64 {
        self.shares[class * self.attrs.len() + attr]
    }
}

pub fn class_mean_table(nav: &NavMatrix, labels: &[Option<usize>], n_classes: usize) -> ClassMeanTable {
    let w = nav.n_attrs();
    let mut sums = vec![0.0; n_classes * w];
    let mut counts = vec![0usize; n_classes];
    for i in 0..nav.n_nodes() {
        if let Some(c) = labels[i] {
            counts[c] += 1;
            for (s, v) in sums[c * w..(c + 1) * w].iter_mut().zip(nav.row(i)) {
                *s += v;
            }
        }
    }
    for c in 0..n_classes {
        if counts[c] > 0 {
            sums[c * w..(c + 1) * w].iter_mut().for_each(|s| *s /= counts[c] as f64);
        }
    }
    let mut uniform_fallback = vec![false; w];
    for j in 0..w {
        let total: f64 = (0..n_classes).map(|c| sums[c * w + j]).sum();
        for c in 0..n_classes {
            let s = &mut sums[c * w + j];
            *s = if total == 0.0 { 1.0 / n_classes as f64 } else { *s / total };
        }
        uniform_fallback[j] = total == 0.0;
    }
    ClassMeanTable {
        attrs: nav.names().to_vec(),
        shares: sums,
        n_classes,
        uniform_fallback,
    }
}
