//! Full-batch training with best-validation model selection.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Model, ModelInputs, ModelKind, ModelSpec, TrainConfig};
use crate::exec::Execution;
use crate::graph::Dataset;
use crate::tensor::{Adam, Matrix, Tape};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Objective on the training mask, with dropout, before the update.
    pub train_loss: f64,
    /// Evaluation-mode metrics after the update.
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: ModelKind,
    pub seed: u64,
    pub epochs: usize,
    /// Epoch with the highest validation accuracy (earliest on ties).
    pub best_epoch: usize,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// Test accuracy of the parameters from `best_epoch`.
    pub test_accuracy: f64,
    pub curves: Vec<EpochMetrics>,
    /// Wall time; not serialized so that reports of equal runs are
    /// byte-identical.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

/// Fraction of `nodes` whose row argmax equals the label.
pub fn accuracy(logits: &Matrix, nodes: &[usize], labels: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let pred = logits.argmax_rows();
    let hits = nodes.iter().zip(labels).filter(|(&i, &y)| pred[i] == y).count();
    hits as f64 / nodes.len() as f64
}

fn cross_entropy(logits: &Matrix, nodes: &[usize], labels: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let total: f64 = nodes
        .iter()
        .zip(labels)
        .map(|(&i, &y)| {
            let row = logits.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_z = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            log_z - (row[y] - max)
        })
        .sum();
    total / nodes.len() as f64
}

fn labels_of(dataset: &Dataset, nodes: &[usize]) -> Result<Vec<usize>> {
    nodes
        .iter()
        .map(|&i| {
            dataset.labels[i].ok_or_else(|| Error::Integrity(format!("masked node {i} has no label")))
        })
        .collect()
}

fn evaluate(model: &Model, inputs: &ModelInputs, exec: Execution) -> Result<Matrix> {
    let mut tape = Tape::new(exec);
    // Evaluation draws no randomness.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (logits, _) = model.forward(&mut tape, inputs, false, &mut rng)?;
    Ok(tape.value(logits).clone())
}

/// Trains `spec` on `dataset`'s training mask for `config.epochs` epochs and
/// reports the test accuracy of the best-validation epoch. When the
/// validation mask is empty the last epoch is used. Test labels are read only
/// after the last epoch.
pub fn train(
    spec: &ModelSpec,
    config: &TrainConfig,
    dataset: &Dataset,
    inputs: &ModelInputs,
    exec: Execution,
) -> Result<TrainReport> {
    let started = Instant::now();
    spec.validate()?;
    config.validate()?;
    inputs.validate(spec.kind)?;
    if inputs.n_nodes() != dataset.n_nodes() {
        return Err(Error::Shape(format!(
            "inputs cover {} nodes, dataset has {}",
            inputs.n_nodes(),
            dataset.n_nodes()
        )));
    }
    let masks = &dataset.masks;
    if masks.train.is_empty() {
        return Err(Error::Split("empty training mask".into()));
    }
    if masks.test.is_empty() {
        return Err(Error::Split("empty test mask".into()));
    }
    let normalized;
    let inputs = if spec.normalize_features {
        normalized = ModelInputs {
            features: inputs.features.row_normalized(),
            ..inputs.clone()
        };
        &normalized
    } else {
        inputs
    };
    let train_y = labels_of(dataset, &masks.train)?;
    let val_y = labels_of(dataset, &masks.val)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_topo = inputs.topo.as_ref().map_or(0, |t| t.cols());
    let mut model = Model::init(spec, inputs.features.cols(), n_topo, dataset.n_classes, &mut rng)?;
    let mut opt = Adam::new(config.lr, config.weight_decay);

    let mut curves = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, Vec<Matrix>)> = None;
    for epoch in 0..config.epochs {
        let mut tape = Tape::new(exec);
        let (logits, vars) = model.forward(&mut tape, inputs, true, &mut rng)?;
        let loss = tape.masked_cross_entropy(logits, &masks.train, &train_y)?;
        let train_loss = tape.value(loss).item();
        if !train_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: train_loss,
            });
        }
        tape.backward(loss)?;
        let grads: Vec<Matrix> = vars
            .iter()
            .map(|&v| {
                tape.grad(v).cloned().unwrap_or_else(|| {
                    let (r, c) = tape.shape(v);
                    Matrix::zeros(r, c)
                })
            })
            .collect();
        drop(tape);
        opt.step_params(model.params.iter_mut().map(|p| &mut p.1), &grads);

        let eval = evaluate(&model, inputs, exec)?;
        let val_accuracy = accuracy(&eval, &masks.val, &val_y);
        curves.push(EpochMetrics {
            epoch,
            train_loss,
            train_accuracy: accuracy(&eval, &masks.train, &train_y),
            val_loss: cross_entropy(&eval, &masks.val, &val_y),
            val_accuracy,
        });
        let improved = match &best {
            None => true,
            Some(_) if masks.val.is_empty() => true,
            Some((_, acc, _)) => val_accuracy > *acc,
        };
        if improved {
            best = Some((epoch, val_accuracy, model.tensors()));
        }
    }

    let (best_epoch, _, tensors) = best.expect("at least one epoch");
    model.set_tensors(tensors);
    let eval = evaluate(&model, inputs, exec)?;
    let test_y = labels_of(dataset, &masks.test)?;
    let at_best = &curves[best_epoch];
    Ok(TrainReport {
        model: spec.kind,
        seed: config.seed,
        epochs: config.epochs,
        best_epoch,
        train_accuracy: at_best.train_accuracy,
        val_accuracy: at_best.val_accuracy,
        test_accuracy: accuracy(&eval, &masks.test, &test_y),
        curves,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}
