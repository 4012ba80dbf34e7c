use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::io::SplitRole;
use super::{Graph, SparseMatrix};
use crate::{Error, Result};

/// Disjoint train/validation/test node sets, each sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Masks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Masks {
    pub fn is_empty(&self) -> bool {
        self.train.is_empty() && self.val.is_empty() && self.test.is_empty()
    }

    /// Boolean membership for the training set.
    pub fn train_flags(&self, n: usize) -> Vec<bool> {
        let mut flags = vec![false; n];
        for &i in &self.train {
            flags[i] = true;
        }
        flags
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    /// `n_nodes x n_features` external features (bag of words or TF-IDF).
    pub features: SparseMatrix,
    pub labels: Vec<Option<usize>>,
    pub n_classes: usize,
    pub masks: Masks,
}

impl Dataset {
    pub fn new(
        graph: Graph,
        features: SparseMatrix,
        labels: Vec<Option<usize>>,
        n_classes: usize,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Integrity(format!("need at least 2 classes, got {n_classes}")));
        }
        if labels.len() != graph.n_nodes() || features.rows() != graph.n_nodes() {
            return Err(Error::Integrity("labels/features do not cover the graph".into()));
        }
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= n_classes) {
            return Err(Error::Integrity(format!("class {bad} >= {n_classes}")));
        }
        Ok(Dataset {
            graph,
            features,
            labels,
            n_classes,
            masks: Masks::default(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.labels[i].is_some()).collect()
    }

    /// Labels as plain indices; unlabeled nodes map to class 0 and must never
    /// appear in a mask.
    pub fn label_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.unwrap_or(0)).collect()
    }

    pub fn with_masks(&self, masks: Masks) -> Result<Dataset> {
        check_masks(self, &masks)?;
        Ok(Dataset {
            masks,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitPolicy {
    /// Fixed assignment read from a split file.
    Standard(Vec<(usize, SplitRole)>),
    /// `train_per_class` and `val_per_class` nodes drawn per class; every
    /// other labeled node is test.
    PerClassRandom {
        train_per_class: usize,
        val_per_class: usize,
        seed: u64,
    },
    /// A `train_fraction` share of labeled nodes is train; the remainder is
    /// split evenly between validation and test.
    Fraction { train_fraction: f64, seed: u64 },
}

impl SplitPolicy {
    pub fn per_class(seed: u64) -> Self {
        SplitPolicy::PerClassRandom {
            train_per_class: 20,
            val_per_class: 30,
            seed,
        }
    }

    /// Same policy with a different seed; standard splits are unaffected.
    pub fn reseeded(&self, seed: u64) -> Self {
        match self {
            SplitPolicy::Standard(_) => self.clone(),
            SplitPolicy::PerClassRandom {
                train_per_class,
                val_per_class,
                ..
            } => SplitPolicy::PerClassRandom {
                train_per_class: *train_per_class,
                val_per_class: *val_per_class,
                seed,
            },
            SplitPolicy::Fraction { train_fraction, .. } => SplitPolicy::Fraction {
                train_fraction: *train_fraction,
                seed,
            },
        }
    }

    pub fn masks(&self, dataset: &Dataset) -> Result<Masks> {
        let masks = match self {
            SplitPolicy::Standard(roles) => {
                let mut m = Masks::default();
                for &(node, role) in roles {
                    if dataset.labels[node].is_none() {
                        return Err(Error::Integrity(format!(
                            "node {node} is in the split but has no label"
                        )));
                    }
                    match role {
                        SplitRole::Train => m.train.push(node),
                        SplitRole::Val => m.val.push(node),
                        SplitRole::Test => m.test.push(node),
                    }
                }
                m.train.sort_unstable();
                m.val.sort_unstable();
                m.test.sort_unstable();
                m
            }
            SplitPolicy::PerClassRandom {
                train_per_class,
                val_per_class,
                seed,
            } => per_class_masks(dataset, *train_per_class, *val_per_class, *seed)?,
            SplitPolicy::Fraction {
                train_fraction,
                seed,
            } => fraction_masks(dataset, *train_fraction, *seed)?,
        };
        check_masks(dataset, &masks)?;
        Ok(masks)
    }
}

fn per_class_masks(dataset: &Dataset, n_train: usize, n_val: usize, seed: u64) -> Result<Masks> {
    if n_train == 0 || n_val == 0 {
        return Err(Error::Split(
            "train_per_class and val_per_class must both be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Masks::default();
    for class in 0..dataset.n_classes {
        let mut members: Vec<usize> = (0..dataset.n_nodes())
            .filter(|&i| dataset.labels[i] == Some(class))
            .collect();
        if members.len() < n_train + n_val {
            return Err(Error::Split(format!(
                "class {class} has {} nodes, needs {}",
                members.len(),
                n_train + n_val
            )));
        }
        members.shuffle(&mut rng);
        m.train.extend_from_slice(&members[..n_train]);
        m.val.extend_from_slice(&members[n_train..n_train + n_val]);
        m.test.extend_from_slice(&members[n_train + n_val..]);
    }
    m.train.sort_unstable();
    m.val.sort_unstable();
    m.test.sort_unstable();
    Ok(m)
}

fn fraction_masks(dataset: &Dataset, fraction: f64, seed: u64) -> Result<Masks> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Split(format!("train fraction {fraction} not in (0, 1)")));
    }
    let mut labeled = dataset.labeled_nodes();
    let n_train = ((labeled.len() as f64) * fraction).round() as usize;
    let rest = labeled.len().saturating_sub(n_train);
    if n_train == 0 || rest < 2 {
        return Err(Error::Split(format!(
            "train fraction {fraction} leaves no validation/test remainder"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labeled.shuffle(&mut rng);
    let n_val = rest / 2;
    let mut m = Masks {
        train: labeled[..n_train].to_vec(),
        val: labeled[n_train..n_train + n_val].to_vec(),
        test: labeled[n_train + n_val..].to_vec(),
    };
    m.train.sort_unstable();
    m.val.sort_unstable();
    m.test.sort_unstable();
    let mut present = vec![false; dataset.n_classes];
    for &i in &m.train {
        present[dataset.labels[i].expect("labeled")] = true;
    }
    if let Some(class) = present.iter().position(|&p| !p) {
        return Err(Error::Split(format!(
            "class {class} has no training node at fraction {fraction}"
        )));
    }
    Ok(m)
}

fn check_masks(dataset: &Dataset, m: &Masks) -> Result<()> {
    let mut owner = vec![0u8; dataset.n_nodes()];
    for (tag, set) in [(1u8, &m.train), (2, &m.val), (3, &m.test)] {
        for &i in set {
            if i >= dataset.n_nodes() {
                return Err(Error::Integrity(format!("mask node {i} out of range")));
            }
            if owner[i] != 0 {
                return Err(Error::Integrity(format!("node {i} appears in two masks")));
            }
            if dataset.labels[i].is_none() {
                return Err(Error::Integrity(format!("masked node {i} has no label")));
            }
            owner[i] = tag;
        }
    }
    Ok(())
}

/// Returns a copy of `dataset` with masks drawn by `policy`.
pub fn make_split(dataset: &Dataset, policy: &SplitPolicy) -> Result<Dataset> {
    let masks = policy.masks(dataset)?;
    Ok(Dataset {
        masks,
        ..dataset.clone()
    })
}
