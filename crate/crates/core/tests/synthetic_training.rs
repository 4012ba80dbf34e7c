mod common;

use rand::Rng;
use topoconv::dualgraph::{dual_adjacency, build_dual, DualGraphConfig};
use topoconv::exec::Execution;
use topoconv::experiment::{aggregate, run_campaign, Campaign, FeatureSource, Operators};
use topoconv::graph::synthetic::{stochastic_block_model, SbmConfig};
use topoconv::graph::{Dataset, Graph, SparseMatrix, SplitPolicy};
use topoconv::models::{preset, TrainConfig};
use topoconv::topo::{compute_nav, NavConfig};

const EXEC: Execution = Execution::Parallel;

fn mean_accuracy(name: &str, d: &Dataset, ops: &Operators, features: FeatureSource, epochs: usize) -> f64 {
    let p = preset(name).unwrap();
    let c = Campaign {
        spec: p.spec,
        train: TrainConfig { epochs, ..p.train },
        split: SplitPolicy::PerClassRandom {
            train_per_class: 10,
            val_per_class: 10,
            seed: 0,
        },
        features,
        n_trials: 3,
        seed_base: 0,
    };
    let out = run_campaign(&c, d, ops, EXEC).unwrap();
    let agg = aggregate(&out);
    assert_eq!(agg.n_failed, 0, "{name}: {out:?}");
    agg.mean
}

fn operators(d: &Dataset, k: usize) -> Operators {
    let nav = compute_nav(&d.graph, &NavConfig { motif_sizes: vec![3], ..NavConfig::default() }, EXEC).unwrap();
    let dual = build_dual(&nav, &DualGraphConfig::new(k), EXEC).unwrap();
    Operators::new(d, Some(dual_adjacency(&dual)), Some(nav))
}

/// Two structural roles in equal numbers: members of 4-cliques and members
/// of a long ring. Three random cross-role edges per node make original-graph
/// neighbourhoods mostly cross-role, while the dual graph groups nodes of
/// the same role. Words carry a weak class signal.
fn roles(seed: u64) -> Dataset {
    let mut r = common::rng(seed);
    let half = 80;
    let n = 2 * half;
    let mut edges = Vec::new();
    for c in 0..half / 4 {
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((4 * c + a, 4 * c + b));
            }
        }
    }
    for i in 0..half {
        edges.push((half + i, half + (i + 1) % half));
    }
    for u in 0..half {
        for _ in 0..3 {
            edges.push((u, half + r.random_range(0..half)));
        }
    }
    let g = Graph::new(n, false, edges).unwrap();
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= half)).collect();
    let mut trip = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        let mut words = std::collections::BTreeSet::new();
        for _ in 0..3 {
            words.insert(if r.random::<f64>() < 0.35 { y * 10 + r.random_range(0..10) } else { r.random_range(0..20) });
        }
        trip.extend(words.into_iter().map(|w| (i, w, 1.0)));
    }
    let feats = SparseMatrix::from_triplets(n, 20, trip).unwrap();
    Dataset::new(g, feats, labels.into_iter().map(Some).collect(), 2).unwrap()
}

#[test]
fn graph_convolution_beats_feature_only_baseline_on_assortative_graph() {
    let d = stochastic_block_model(&SbmConfig {
        sizes: vec![50, 50, 50],
        p_in: 0.08,
        p_out: 0.01,
        feature_signal: 0.25,
        seed: 1,
        ..SbmConfig::default()
    })
    .unwrap();
    let ops = operators(&d, 8);
    let gcn = mean_accuracy("gcn", &d, &ops, FeatureSource::Bow, 200);
    let ffn = mean_accuracy("ffn", &d, &ops, FeatureSource::Bow, 200);
    let tgcn = mean_accuracy("t-gcn", &d, &ops, FeatureSource::Bow, 200);
    eprintln!("sbm: gcn {gcn:.3} ffn {ffn:.3} t-gcn {tgcn:.3}");
    assert!(gcn > ffn + 0.05, "gcn {gcn} ffn {ffn}");
    assert!(tgcn > ffn, "t-gcn {tgcn} ffn {ffn}");
}

#[test]
fn dual_graph_recovers_structural_roles() {
    let d = roles(2);
    let ops = operators(&d, 5);
    let gcn = mean_accuracy("gcn", &d, &ops, FeatureSource::Bow, 200);
    let tgcn = mean_accuracy("t-gcn", &d, &ops, FeatureSource::Bow, 200);
    let topo_ffn = mean_accuracy("ffn", &d, &ops, FeatureSource::Topo, 200);
    eprintln!("roles: gcn {gcn:.3} t-gcn {tgcn:.3} topo-ffn {topo_ffn:.3}");
    assert!(tgcn > gcn + 0.05, "t-gcn {tgcn} gcn {gcn}");
    assert!(topo_ffn > 0.9, "topo-ffn {topo_ffn}");
}
