//! INI run configuration.
//!
//! ```ini
//! [dataset]
//! graph = cora/graph.txt        ; paths are relative to the config file
//! features = cora/features.txt
//! labels = cora/labels.txt
//! split = cora/split.txt        ; optional
//!
//! [model]
//! preset = t-gcn                ; any field below overrides the preset
//! hidden = 64, 16
//!
//! [run]
//! trials = 10
//! seed_base = 0
//! out = runs/cora-tgcn
//! ```
//!
//! Every problem found while parsing is reported together in one error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use topoconv::dualgraph::{DualGraphConfig, Metric};
use topoconv::experiment::{FeatureSource, DEFAULT_FRACTIONS};
use topoconv::models::{preset, Activation, ModelKind, ModelSpec, TrainConfig};
use topoconv::topo::NavConfig;
use topoconv::{Error, Result};

const KNOWN: &[(&str, &[&str])] = &[
    ("dataset", &["name", "graph", "features", "labels", "split", "directed"]),
    (
        "model",
        &["preset", "kind", "hidden", "heads", "activation", "dropout", "normalize_features"],
    ),
    ("train", &["lr", "weight_decay", "epochs"]),
    ("split", &["policy", "train_per_class", "val_per_class", "train_fraction"]),
    ("dual", &["k", "metric", "standardize"]),
    ("nav", &["alpha", "motif_sizes", "louvain_seed"]),
    ("run", &["trials", "seed_base", "out", "features", "cache"]),
    ("sweep", &["fractions", "features"]),
];

/// Default trial count; publication-scale runs use 100.
pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPaths {
    pub name: String,
    pub graph: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub split: Option<PathBuf>,
    pub directed: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    Standard,
    PerClass { train_per_class: usize, val_per_class: usize },
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetPaths,
    pub preset: String,
    pub spec: ModelSpec,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub dual: DualGraphConfig,
    pub nav: NavConfig,
    pub features: FeatureSource,
    /// Source text of `features`, used to label result rows.
    pub features_name: String,
    pub trials: usize,
    pub seed_base: u64,
    pub out: PathBuf,
    pub cache: PathBuf,
    pub sweep_fractions: Vec<f64>,
    pub sweep_features: Vec<(String, FeatureSource)>,
    /// Effective settings as `section.key -> value`, for the run manifest.
    pub echo: BTreeMap<String, String>,
}

struct Reader<'a> {
    ini: &'a Ini,
    base: &'a Path,
    problems: Vec<String>,
    echo: BTreeMap<String, String>,
}

impl Reader<'_> {
    fn raw(&mut self, section: &str, key: &str) -> Option<String> {
        let v = self.ini.section(Some(section)).and_then(|s| s.get(key)).map(|v| v.trim().to_string());
        if let Some(v) = &v {
            self.echo.insert(format!("{section}.{key}"), v.clone());
        }
        v
    }

    fn parse<T: FromStr>(&mut self, section: &str, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(section, key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.problems.push(format!("{section}.{key} = `{raw}`: {e}"));
                None
            }
        }
    }

    fn list<T: FromStr>(&mut self, section: &str, key: &str) -> Option<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(section, key)?;
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse::<T>() {
                Ok(v) => out.push(v),
                Err(e) => {
                    self.problems.push(format!("{section}.{key}: `{item}`: {e}"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn path(&mut self, section: &str, key: &str, must_exist: bool) -> Option<PathBuf> {
        let raw = self.raw(section, key)?;
        let p = self.base.join(raw);
        if must_exist && !p.exists() {
            self.problems.push(format!("{section}.{key}: {} does not exist", p.display()));
        }
        Some(p)
    }

    fn record(&mut self, key: &str, value: impl ToString) {
        self.echo.entry(key.to_string()).or_insert_with(|| value.to_string());
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let mut r = Reader {
            ini: &ini,
            base,
            problems: Vec::new(),
            echo: BTreeMap::new(),
        };
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if props.iter().next().is_some() {
                    r.problems.push("keys outside a section".into());
                }
                continue;
            };
            match KNOWN.iter().find(|(s, _)| *s == section) {
                None => r.problems.push(format!("unknown section [{section}]")),
                Some((_, keys)) => {
                    for (k, _) in props.iter() {
                        if !keys.contains(&k) {
                            r.problems.push(format!("unknown key {section}.{k}"));
                        }
                    }
                }
            }
        }

        let graph = r.path("dataset", "graph", true);
        let features = r.path("dataset", "features", true);
        let labels = r.path("dataset", "labels", true);
        for (key, p) in [("graph", &graph), ("features", &features), ("labels", &labels)] {
            if p.is_none() {
                r.problems.push(format!("dataset.{key} is required"));
            }
        }
        let split_path = r.path("dataset", "split", true);
        let directed = r.raw("dataset", "directed").and_then(|v| match parse_bool(&v) {
            Ok(b) => Some(b),
            Err(e) => {
                r.problems.push(format!("dataset.directed: {e}"));
                None
            }
        });
        let name = r.raw("dataset", "name").unwrap_or_else(|| {
            graph
                .as_ref()
                .and_then(|g| g.parent())
                .and_then(|d| d.file_name())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        });

        let preset_name = r.raw("model", "preset").unwrap_or_else(|| "gcn".into());
        let base_preset = match preset(&preset_name) {
            Ok(p) => Some(p),
            Err(e) => {
                r.problems.push(e.to_string());
                None
            }
        };
        let (mut spec, mut train, knn_k) = match &base_preset {
            Some(p) => (p.spec.clone(), p.train.clone(), p.knn_k),
            None => {
                let p = preset("gcn").expect("gcn preset exists");
                (p.spec, p.train, None)
            }
        };
        if let Some(kind) = r.parse::<ModelKind>("model", "kind") {
            spec.kind = kind;
        }
        if let Some(h) = r.list("model", "hidden") {
            spec.hidden = h;
        }
        if let Some(h) = r.list("model", "heads") {
            spec.heads = h;
        }
        if let Some(a) = r.parse::<Activation>("model", "activation") {
            spec.activation = a;
        }
        if let Some(d) = r.parse("model", "dropout") {
            spec.dropout = d;
        }
        if let Some(v) = r.raw("model", "normalize_features") {
            match parse_bool(&v) {
                Ok(b) => spec.normalize_features = b,
                Err(e) => r.problems.push(format!("model.normalize_features: {e}")),
            }
        }
        if let Some(v) = r.parse("train", "lr") {
            train.lr = v;
        }
        if let Some(v) = r.parse("train", "weight_decay") {
            train.weight_decay = v;
        }
        if let Some(v) = r.parse("train", "epochs") {
            train.epochs = v;
        }
        if let Err(e) = spec.validate() {
            r.problems.push(e.to_string());
        }
        if let Err(e) = train.validate() {
            r.problems.push(e.to_string());
        }

        let default_policy = if split_path.is_some() { "standard" } else { "per-class" };
        let policy = r.raw("split", "policy").unwrap_or_else(|| default_policy.into());
        let split = match policy.as_str() {
            "standard" => {
                if split_path.is_none() {
                    r.problems.push("split.policy = standard needs dataset.split".into());
                }
                SplitSpec::Standard
            }
            "per-class" => SplitSpec::PerClass {
                train_per_class: r.parse("split", "train_per_class").unwrap_or(20),
                val_per_class: r.parse("split", "val_per_class").unwrap_or(30),
            },
            "fraction" => {
                let f: f64 = r.parse("split", "train_fraction").unwrap_or(f64::NAN);
                if !(f > 0.0 && f < 1.0) {
                    r.problems.push("split.train_fraction must be in (0, 1)".into());
                }
                SplitSpec::Fraction(f)
            }
            other => {
                r.problems.push(format!("unknown split.policy `{other}`"));
                SplitSpec::Standard
            }
        };

        let mut dual = DualGraphConfig::new(r.parse("dual", "k").or(knn_k).unwrap_or(8));
        if let Some(m) = r.parse::<Metric>("dual", "metric") {
            dual.metric = m;
        }
        if let Some(v) = r.raw("dual", "standardize") {
            match parse_bool(&v) {
                Ok(b) => dual.standardize = b,
                Err(e) => r.problems.push(format!("dual.standardize: {e}")),
            }
        }
        if dual.k == 0 {
            r.problems.push("dual.k must be >= 1".into());
        }

        let mut nav = NavConfig::default();
        if let Some(a) = r.parse("nav", "alpha") {
            nav.alpha = a;
        }
        if !(nav.alpha > 1.0) {
            r.problems.push(format!("nav.alpha must exceed 1, got {}", nav.alpha));
        }
        if let Some(m) = r.list::<usize>("nav", "motif_sizes") {
            if m.iter().any(|k| !(3..=4).contains(k)) {
                r.problems.push("nav.motif_sizes entries must be 3 or 4".into());
            }
            nav.motif_sizes = m;
        }
        if let Some(s) = r.parse("nav", "louvain_seed") {
            nav.louvain_seed = s;
        }

        let features_name = r.raw("run", "features").unwrap_or_else(|| "bow".into());
        let source = r.parse::<FeatureSource>("run", "features").unwrap_or(FeatureSource::Bow);
        let trials = r.parse("run", "trials").unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            r.problems.push("run.trials must be >= 1".into());
        }
        let seed_base = r.parse("run", "seed_base").unwrap_or(0);
        let out = r.path("run", "out", false).unwrap_or_else(|| base.join("runs"));
        let cache = r.path("run", "cache", false).unwrap_or_else(|| out.join("cache"));

        let sweep_fractions = r.list::<f64>("sweep", "fractions").unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec());
        if let Some(bad) = sweep_fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            r.problems.push(format!("sweep.fractions: {bad} not in (0, 1)"));
        }
        let sweep_names: Vec<String> = r
            .raw("sweep", "features")
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_else(|| vec!["bow".into(), "neighbors".into()]);
        let mut sweep_features = Vec::new();
        for n in sweep_names {
            match n.parse::<FeatureSource>() {
                Ok(f) => sweep_features.push((n, f)),
                Err(e) => r.problems.push(format!("sweep.features: {e}")),
            }
        }

        if !r.problems.is_empty() {
            return Err(Error::Config(r.problems.join("; ")));
        }
        r.record("model.preset", &preset_name);
        r.record("split.policy", &policy);
        r.record("dual.k", dual.k);
        r.record("dual.metric", dual.metric.name());
        r.record("dual.standardize", dual.standardize);
        r.record("run.trials", trials);
        r.record("run.seed_base", seed_base);
        Ok(RunConfig {
            dataset: DatasetPaths {
                name,
                graph: graph.unwrap(),
                features: features.unwrap(),
                labels: labels.unwrap(),
                split: split_path,
                directed,
            },
            preset: preset_name,
            spec,
            train,
            split,
            dual,
            nav,
            features: source,
            features_name,
            trials,
            seed_base,
            out,
            cache,
            sweep_fractions,
            sweep_features,
            echo: r.echo,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn files() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        for f in ["g.txt", "f.txt", "l.txt"] {
            std::fs::write(d.path().join(f), "").unwrap();
        }
        d
    }

    const BASE: &str = "[dataset]\ngraph = g.txt\nfeatures = f.txt\nlabels = l.txt\n";

    #[test]
    fn preset_and_overrides() {
        let d = files();
        let c = RunConfig::parse(&format!("{BASE}[model]\npreset = t-gcn\nhidden = 8, 4\n[run]\ntrials = 3\n"), d.path()).unwrap();
        assert_eq!(c.spec.kind, ModelKind::TGcn);
        assert_eq!(c.spec.hidden, vec![8, 4]);
        assert_eq!(c.dual.k, 8);
        assert_eq!(c.trials, 3);
        assert_eq!(c.split, SplitSpec::PerClass { train_per_class: 20, val_per_class: 30 });
        assert_eq!(c.echo["model.hidden"], "8, 4");
    }

    #[test]
    fn all_problems_reported_together() {
        let d = files();
        let text = "[dataset]\ngraph = missing.txt\n[model]\npreset = gcn\ndropout = 2\n[run]\ntrials = 0\nbogus = 1\n";
        let msg = RunConfig::parse(text, d.path()).unwrap_err().to_string();
        for needle in ["missing.txt", "dataset.features is required", "dropout", "run.trials", "unknown key run.bogus"] {
            assert!(msg.contains(needle), "{needle} not in {msg}");
        }
    }

    #[test]
    fn fraction_one_rejected() {
        let d = files();
        let e = RunConfig::parse(&format!("{BASE}[split]\npolicy = fraction\ntrain_fraction = 1.0\n"), d.path());
        assert!(e.is_err());
        let e = RunConfig::parse(&format!("{BASE}[sweep]\nfractions = 0.05, 1.0\n"), d.path());
        assert!(e.unwrap_err().to_string().contains("sweep.fractions"));
    }
}
