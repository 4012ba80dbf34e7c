//! Tiny model instances shared by the gradient, equivariance and
//! determinism checks.

use rand::Rng;
use topoconv::dualgraph::dual_adjacency;
use topoconv::graph::{asymmetric_adjacency, normalized_adjacency, Graph, SparseMatrix};
use topoconv::models::{Activation, Model, ModelInputs, ModelKind, ModelSpec};

use super::{random_graph, rng};

pub const N: usize = 8;
pub const F: usize = 5;
pub const T: usize = 3;
pub const C: usize = 3;

pub fn spec(kind: ModelKind, activation: Activation) -> ModelSpec {
    let (hidden, heads) = match kind {
        ModelKind::Gcn => (vec![4], vec![]),
        ModelKind::Gat => (vec![3], vec![2, 1]),
        ModelKind::TGcn => (vec![3, 2], vec![]),
        ModelKind::TGat => (vec![2, 2], vec![2, 2, 1]),
        ModelKind::AGcn => (vec![4, 3], vec![]),
        ModelKind::CGcn => (vec![3, 3], vec![]),
        ModelKind::Ffn => (vec![4, 3], vec![]),
    };
    ModelSpec {
        kind,
        hidden,
        activation,
        dropout: 0.0,
        heads,
        normalize_features: false,
    }
}

pub struct Instance {
    pub graph: Graph,
    pub dual: Graph,
    pub features: SparseMatrix,
    pub topo: SparseMatrix,
}

impl Instance {
    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed);
        let graph = random_graph(&mut r, N, 0.3, true);
        let dual = random_graph(&mut r, N, 0.4, false);
        let mut trip = Vec::new();
        for i in 0..N {
            for j in 0..F {
                if r.random::<f64>() < 0.5 {
                    trip.push((i, j, r.random_range(0.0..1.0)));
                }
            }
        }
        let features = SparseMatrix::from_triplets(N, F, trip).unwrap();
        let topo: Vec<f64> = (0..N * T).map(|_| r.random_range(-1.0..1.0)).collect();
        Instance {
            graph,
            dual,
            features,
            topo: SparseMatrix::from_dense(N, T, &topo),
        }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Instance {
            graph: self.graph.permuted(perm),
            dual: self.dual.permuted(perm),
            features: self.features.rows_permuted(perm),
            topo: self.topo.rows_permuted(perm),
        }
    }

    pub fn inputs(&self, kind: ModelKind) -> ModelInputs {
        let mut inp = ModelInputs::new(self.features.clone());
        match kind {
            ModelKind::Gcn | ModelKind::Gat => inp.adjacency = Some(normalized_adjacency(&self.graph)),
            ModelKind::TGcn | ModelKind::TGat => {
                inp.adjacency = Some(normalized_adjacency(&self.graph));
                inp.dual = Some(dual_adjacency(&self.dual));
            }
            ModelKind::AGcn => inp.stacked = Some(asymmetric_adjacency(&self.graph)),
            ModelKind::CGcn => {
                inp.stacked = Some(asymmetric_adjacency(&self.graph));
                inp.topo = Some(self.topo.clone());
            }
            ModelKind::Ffn => {}
        }
        inp
    }
}

pub fn model(kind: ModelKind, activation: Activation, seed: u64) -> Model {
    Model::init(&spec(kind, activation), F, T, C, &mut rng(seed)).unwrap()
}

