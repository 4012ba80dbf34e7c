//! Multi-trial campaigns and training-size sweeps.
//!
//! Trial `t` of a campaign uses seed `seed_base + t` for both its random
//! split (if the policy is random) and its training run. Trials fan out
//! through [`Execution`]; each trial runs sequentially inside.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classfeat::{adjacency_products, build_v, neighbor_class_features, HopMode, ProductTerm};
use crate::exec::Execution;
use crate::graph::{asymmetric_adjacency, normalized_adjacency, Dataset, SparseMatrix, SplitPolicy};
use crate::models::{train, ModelInputs, ModelKind, ModelSpec, TrainConfig, TrainReport};
use crate::topo::NavMatrix;
use crate::{Error, Result};

/// What the model receives as its node feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSource {
    /// The dataset's external features.
    Bow,
    /// Per-class counts of training neighbours.
    NeighborClass { hops: usize, mode: HopMode },
    /// Standardized structural attributes.
    Topo,
    /// Adjacency products with the class indicator.
    Products(Vec<ProductTerm>),
    /// Column-wise concatenation.
    Concat(Vec<FeatureSource>),
}

impl FromStr for FeatureSource {
    type Err = Error;

    /// `bow`, `neighbors`, `neighbors-walks`, `topo`, `products`, or several
    /// joined with `+`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('+').map(str::trim).collect();
        if parts.len() > 1 {
            return parts.iter().map(|p| p.parse()).collect::<Result<_>>().map(FeatureSource::Concat);
        }
        match s.trim() {
            "bow" => Ok(FeatureSource::Bow),
            "neighbors" => Ok(FeatureSource::NeighborClass {
                hops: 2,
                mode: HopMode::ShortestPath,
            }),
            "neighbors-walks" => Ok(FeatureSource::NeighborClass {
                hops: 2,
                mode: HopMode::Walks,
            }),
            "topo" => Ok(FeatureSource::Topo),
            "products" => Ok(FeatureSource::Products(crate::classfeat::parse_recipe(
                &crate::classfeat::DEFAULT_RECIPE,
            )?)),
            other => Err(Error::Config(format!("unknown feature source `{other}`"))),
        }
    }
}

impl FeatureSource {
    pub fn needs_nav(&self) -> bool {
        match self {
            FeatureSource::Topo => true,
            FeatureSource::Concat(parts) => parts.iter().any(|p| p.needs_nav()),
            _ => false,
        }
    }

    /// Features for `dataset` with its current masks.
    pub fn build(&self, dataset: &Dataset, nav: Option<&NavMatrix>, exec: Execution) -> Result<SparseMatrix> {
        let train = dataset.masks.train_flags(dataset.n_nodes());
        match self {
            FeatureSource::Bow => Ok(dataset.features.clone()),
            FeatureSource::NeighborClass { hops, mode } => Ok(neighbor_class_features(
                &dataset.graph,
                &dataset.labels,
                &train,
                dataset.n_classes,
                *hops,
                *mode,
                exec,
            )?
            .to_sparse()),
            FeatureSource::Topo => nav
                .map(|n| n.standardized().to_sparse())
                .ok_or_else(|| Error::Config("topological features requested without a NAV".into())),
            FeatureSource::Products(recipe) => {
                let v = build_v(&dataset.labels, &train, dataset.n_classes);
                Ok(adjacency_products(&dataset.graph, &v, recipe)?.to_sparse())
            }
            FeatureSource::Concat(parts) => {
                let mut acc: Option<SparseMatrix> = None;
                for p in parts {
                    let m = p.build(dataset, nav, exec)?;
                    acc = Some(match acc {
                        None => m,
                        Some(a) => a.hstack(&m)?,
                    });
                }
                acc.ok_or_else(|| Error::Config("empty feature concatenation".into()))
            }
        }
    }
}

/// Label-independent operators of one dataset, computed once per campaign.
#[derive(Debug, Clone)]
pub struct Operators {
    pub adjacency: SparseMatrix,
    pub stacked: SparseMatrix,
    /// Normalized adjacency of the dual graph, when one was built.
    pub dual: Option<SparseMatrix>,
    pub nav: Option<NavMatrix>,
}

impl Operators {
    pub fn new(dataset: &Dataset, dual: Option<SparseMatrix>, nav: Option<NavMatrix>) -> Self {
        Operators {
            adjacency: normalized_adjacency(&dataset.graph),
            stacked: asymmetric_adjacency(&dataset.graph),
            dual,
            nav,
        }
    }

    pub fn inputs(&self, kind: ModelKind, features: SparseMatrix) -> Result<ModelInputs> {
        let mut inputs = ModelInputs::new(features);
        match kind {
            ModelKind::Gcn | ModelKind::Gat => inputs.adjacency = Some(self.adjacency.clone()),
            ModelKind::TGcn | ModelKind::TGat => {
                inputs.adjacency = Some(self.adjacency.clone());
                inputs.dual = Some(
                    self.dual
                        .clone()
                        .ok_or_else(|| Error::Config(format!("{kind} needs a dual graph")))?,
                );
            }
            ModelKind::AGcn => inputs.stacked = Some(self.stacked.clone()),
            ModelKind::CGcn => {
                inputs.stacked = Some(self.stacked.clone());
                let nav = self
                    .nav
                    .as_ref()
                    .ok_or_else(|| Error::Config("c-gcn needs topological features".into()))?;
                inputs.topo = Some(nav.standardized().to_sparse());
            }
            ModelKind::Ffn => {}
        }
        Ok(inputs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub spec: ModelSpec,
    /// Its `seed` is replaced by `seed_base + trial`.
    pub train: TrainConfig,
    pub split: SplitPolicy,
    pub features: FeatureSource,
    pub n_trials: usize,
    pub seed_base: u64,
}

/// Result of one trial; failures keep the error kind and message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub result: TrialResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialResult {
    Report(TrainReport),
    Error { kind: String, message: String },
}

impl TrialOutcome {
    pub fn report(&self) -> Option<&TrainReport> {
        match &self.result {
            TrialResult::Report(r) => Some(r),
            TrialResult::Error { .. } => None,
        }
    }
}

/// Mean and sample standard deviation of successful test accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n_trials: usize,
    pub n_failed: usize,
}

pub fn aggregate(outcomes: &[TrialOutcome]) -> Aggregate {
    let acc: Vec<f64> = outcomes.iter().filter_map(|o| o.report()).map(|r| r.test_accuracy).collect();
    let n = acc.len();
    let mean = if n == 0 { f64::NAN } else { acc.iter().sum::<f64>() / n as f64 };
    let std = if n < 2 {
        0.0
    } else {
        (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Aggregate {
        mean,
        std,
        n_trials: n,
        n_failed: outcomes.len() - n,
    }
}

fn run_trial(c: &Campaign, dataset: &Dataset, ops: &Operators, trial: usize) -> Result<TrainReport> {
    let seed = c.seed_base + trial as u64;
    let masks = c.split.reseeded(seed).masks(dataset)?;
    let split = dataset.with_masks(masks)?;
    let exec = Execution::Sequential;
    let features = c.features.build(&split, ops.nav.as_ref(), exec)?;
    let inputs = ops.inputs(c.spec.kind, features)?;
    let cfg = TrainConfig {
        seed,
        ..c.train.clone()
    };
    train(&c.spec, &cfg, &split, &inputs, exec)
}

/// Runs every trial; a failing trial is recorded and the rest continue.
pub fn run_campaign(c: &Campaign, dataset: &Dataset, ops: &Operators, exec: Execution) -> Result<Vec<TrialOutcome>> {
    if c.n_trials == 0 {
        return Err(Error::Config("trial count must be >= 1".into()));
    }
    c.spec.validate()?;
    c.train.validate()?;
    Ok(exec.map(c.n_trials, |t| TrialOutcome {
        trial: t,
        seed: c.seed_base + t as u64,
        result: match run_trial(c, dataset, ops, t) {
            Ok(r) => TrialResult::Report(r),
            Err(e) => TrialResult::Error {
                kind: e.kind().to_string(),
                message: e.to_string(),
            },
        },
    }))
}

pub const DEFAULT_FRACTIONS: [f64; 6] = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub fraction: f64,
    pub outcomes: Vec<TrialOutcome>,
    pub aggregate: Aggregate,
    /// Trials skipped because the draw left a class without training nodes.
    pub skipped: usize,
}

/// Accuracy against training-set size: for each fraction, random splits with
/// that share of labelled nodes in train and the rest halved into
/// validation and test.
pub fn sweep(c: &Campaign, fractions: &[f64], dataset: &Dataset, ops: &Operators, exec: Execution) -> Result<Vec<SweepPoint>> {
    if let Some(bad) = fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
        return Err(Error::Config(format!("train fraction {bad} not in (0, 1)")));
    }
    fractions
        .iter()
        .map(|&fraction| {
            let campaign = Campaign {
                split: SplitPolicy::Fraction {
                    train_fraction: fraction,
                    seed: c.seed_base,
                },
                ..c.clone()
            };
            let outcomes = run_campaign(&campaign, dataset, ops, exec)?;
            let skipped = outcomes
                .iter()
                .filter(|o| matches!(&o.result, TrialResult::Error { kind, .. } if kind == "split"))
                .count();
            Ok(SweepPoint {
                fraction,
                aggregate: aggregate(&outcomes),
                outcomes,
                skipped,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::models::preset;

    fn toy() -> Dataset {
        // Two 6-cliques joined by one edge; class = clique; one-hot-ish features.
        let mut edges = Vec::new();
        for base in [0, 6] {
            for u in 0..6 {
                for v in u + 1..6 {
                    edges.push((base + u, base + v));
                }
            }
        }
        edges.push((5, 6));
        let g = Graph::new(12, false, edges).unwrap();
        let feats = SparseMatrix::from_triplets(12, 3, (0..12).map(|i| (i, i % 3, 1.0))).unwrap();
        let labels = (0..12).map(|i| Some(i / 6)).collect();
        Dataset::new(g, feats, labels, 2).unwrap()
    }

    fn campaign(n_trials: usize) -> Campaign {
        let p = preset("gcn").unwrap();
        Campaign {
            spec: p.spec,
            train: TrainConfig { epochs: 30, ..p.train },
            split: SplitPolicy::PerClassRandom {
                train_per_class: 2,
                val_per_class: 2,
                seed: 0,
            },
            features: FeatureSource::Bow,
            n_trials,
            seed_base: 10,
        }
    }

    #[test]
    fn campaign_seeds_and_determinism() {
        let d = toy();
        let ops = Operators::new(&d, None, None);
        let a = run_campaign(&campaign(3), &d, &ops, Execution::Parallel).unwrap();
        let b = run_campaign(&campaign(3), &d, &ops, Execution::Sequential).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.iter().map(|o| o.seed).collect::<Vec<_>>(), vec![10, 11, 12]);
        let agg = aggregate(&a);
        assert_eq!((agg.n_trials, agg.n_failed), (3, 0));
    }

    #[test]
    fn failures_are_recorded() {
        let d = toy();
        let ops = Operators::new(&d, None, None);
        let mut c = campaign(2);
        c.spec = preset("t-gcn").unwrap().spec;
        let out = run_campaign(&c, &d, &ops, Execution::Sequential).unwrap();
        assert!(out.iter().all(|o| matches!(&o.result, TrialResult::Error { kind, .. } if kind == "config")));
        assert_eq!(aggregate(&out).n_failed, 2);
    }

    #[test]
    fn sweep_rejects_full_fraction() {
        let d = toy();
        let ops = Operators::new(&d, None, None);
        assert!(sweep(&campaign(1), &[1.0], &d, &ops, Execution::Sequential).is_err());
        let pts = sweep(&campaign(2), &[0.05, 0.5], &d, &ops, Execution::Sequential).unwrap();
        // One labelled node in train cannot cover both classes.
        assert_eq!(pts[0].skipped, 2);
        assert_eq!(pts[1].skipped, 0);
    }

    #[test]
    fn feature_sources_parse() {
        assert_eq!("bow".parse::<FeatureSource>().unwrap(), FeatureSource::Bow);
        let c = "bow+topo".parse::<FeatureSource>().unwrap();
        assert!(c.needs_nav());
        assert!("words".parse::<FeatureSource>().is_err());
    }
}
