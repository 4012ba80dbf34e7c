//! Named hyperparameter blocks.

use super::{Activation, ModelKind, ModelSpec, TrainConfig};
use crate::{Error, Result};

/// A model, its optimisation settings and (for the dual-graph models) the
/// neighbour count of the similarity graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub spec: ModelSpec,
    pub train: TrainConfig,
    pub knn_k: Option<usize>,
}

pub const PRESET_NAMES: [&str; 9] = [
    "gcn",
    "gat",
    "t-gcn",
    "t-gcn-cora",
    "t-gat",
    "t-gat-cora",
    "a-gcn",
    "c-gcn",
    "ffn",
];

#[allow(clippy::too_many_arguments)]
fn make(
    name: &'static str,
    kind: ModelKind,
    activation: Activation,
    dropout: f64,
    hidden: &[usize],
    heads: &[usize],
    normalize_features: bool,
    (lr, weight_decay, epochs): (f64, f64, usize),
    knn_k: Option<usize>,
) -> Preset {
    Preset {
        name,
        spec: ModelSpec {
            kind,
            hidden: hidden.to_vec(),
            activation,
            dropout,
            heads: heads.to_vec(),
            normalize_features,
        },
        train: TrainConfig {
            lr,
            weight_decay,
            epochs,
            seed: 0,
        },
        knn_k,
    }
}

/// Looks a preset up by name.
pub fn preset(name: &str) -> Result<Preset> {
    use Activation::{Relu, Tanh};
    use ModelKind::*;
    Ok(match name {
        "gcn" => make("gcn", Gcn, Relu, 0.5, &[16], &[], true, (0.01, 5e-4, 200), None),
        "gat" => make("gat", Gat, Relu, 0.6, &[8], &[8, 1], true, (0.005, 5e-4, 500), None),
        "t-gcn" => make("t-gcn", TGcn, Relu, 0.7, &[64, 16], &[], true, (0.01, 5e-4, 400), Some(8)),
        "t-gcn-cora" => make("t-gcn-cora", TGcn, Relu, 0.6, &[32, 32], &[], false, (0.001, 0.01, 300), Some(8)),
        "t-gat" => make("t-gat", TGat, Tanh, 0.6, &[16, 16], &[16, 8, 8], true, (0.01, 5e-4, 400), Some(15)),
        "t-gat-cora" => make("t-gat-cora", TGat, Relu, 0.7, &[16, 8], &[8, 8, 1], true, (0.01, 0.001, 500), Some(10)),
        "a-gcn" => make("a-gcn", AGcn, Relu, 0.6, &[100, 35], &[], true, (0.01, 0.001, 200), None),
        "c-gcn" => make("c-gcn", CGcn, Relu, 0.6, &[16], &[], true, (0.01, 0.001, 200), None),
        // An L2 penalty of 0.2 * sum(w^2) contributes 0.4 * w to the gradient.
        "ffn" => make("ffn", Ffn, Relu, 0.1, &[300, 100], &[], false, (0.001, 0.4, 200), None),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap();
            assert_eq!(p.name, name);
            p.spec.validate().unwrap();
            p.train.validate().unwrap();
            assert_eq!(p.knn_k.is_some(), p.spec.kind.needs_dual());
        }
        assert!(preset("nope").is_err());
    }
}
