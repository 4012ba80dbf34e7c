//! Model zoo (GCN, GAT, topology-augmented T-GCN/T-GAT, asymmetric A-GCN,
//! combined C-GCN, feed-forward FFN) and the full-batch training loop.

mod net;
mod presets;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use net::{Model, ModelInputs};
pub use presets::{preset, Preset, PRESET_NAMES};
pub use train::{accuracy, train, EpochMetrics, TrainReport};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gcn,
    Gat,
    TGcn,
    TGat,
    AGcn,
    CGcn,
    Ffn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Gcn,
        ModelKind::Gat,
        ModelKind::TGcn,
        ModelKind::TGat,
        ModelKind::AGcn,
        ModelKind::CGcn,
        ModelKind::Ffn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::Gat => "gat",
            ModelKind::TGcn => "t-gcn",
            ModelKind::TGat => "t-gat",
            ModelKind::AGcn => "a-gcn",
            ModelKind::CGcn => "c-gcn",
            ModelKind::Ffn => "ffn",
        }
    }

    pub fn needs_dual(self) -> bool {
        matches!(self, ModelKind::TGcn | ModelKind::TGat)
    }

    pub fn needs_stacked(self) -> bool {
        matches!(self, ModelKind::AGcn | ModelKind::CGcn)
    }

    pub fn needs_topo(self) -> bool {
        self == ModelKind::CGcn
    }

    pub fn is_attention(self) -> bool {
        matches!(self, ModelKind::Gat | ModelKind::TGat)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Architecture and regularisation of one model.
///
/// `hidden` meaning per kind:
/// - gcn: `[h]`; gat: `[per-head width]`
/// - t-gcn: `[original branch, dual branch]`; t-gat: per-head widths of the
///   two branches
/// - a-gcn: stacked layer widths (e.g. `[100, 35]`); c-gcn: `[L1, ...]` where
///   `L1` is the external-feature layer and the rest are stacked layers
/// - ffn: dense layer widths (e.g. `[300, 100]`)
///
/// `heads`: gat `[hidden, output]`; t-gat `[original, dual, output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub dropout: f64,
    pub heads: Vec<usize>,
    pub normalize_features: bool,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let want_hidden = match self.kind {
            ModelKind::Gcn | ModelKind::Gat => Some(1),
            ModelKind::TGcn | ModelKind::TGat => Some(2),
            _ => None,
        };
        match want_hidden {
            Some(k) if self.hidden.len() != k => problems.push(format!(
                "{} needs {k} hidden sizes, got {}",
                self.kind,
                self.hidden.len()
            )),
            None if self.hidden.is_empty() => problems.push(format!("{} needs hidden sizes", self.kind)),
            _ => {}
        }
        if self.hidden.contains(&0) {
            problems.push("hidden sizes must be >= 1".into());
        }
        let want_heads = match self.kind {
            ModelKind::Gat => 2,
            ModelKind::TGat => 3,
            _ => 0,
        };
        if want_heads > 0 && self.heads.len() != want_heads {
            problems.push(format!("{} needs {want_heads} head counts, got {}", self.kind, self.heads.len()));
        }
        if want_heads > 0 && self.heads.contains(&0) {
            problems.push("head counts must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            problems.push(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Optimisation settings of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.epochs == 0 {
            problems.push("epochs must be >= 1".to_string());
        }
        if !(self.lr >= 0.0) {
            problems.push(format!("learning rate {} must be >= 0", self.lr));
        }
        if !(self.weight_decay >= 0.0) {
            problems.push(format!("weight decay {} must be >= 0", self.weight_decay));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("mlp".parse::<ModelKind>().is_err());
    }

    #[test]
    fn spec_validation_lists_all_problems() {
        let spec = ModelSpec {
            kind: ModelKind::TGat,
            hidden: vec![0],
            activation: Activation::Relu,
            dropout: 1.5,
            heads: vec![8],
            normalize_features: true,
        };
        let msg = spec.validate().unwrap_err().to_string();
        assert!(msg.contains("2 hidden") && msg.contains("3 head") && msg.contains("dropout"));
    }
}
