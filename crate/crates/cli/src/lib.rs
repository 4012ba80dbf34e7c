//! Experiment plumbing behind the `topoconv` binary: configuration, artifact
//! caching and the result files of each subcommand.
//!
//! Outputs of `train` (in the run's `out` directory):
//! - `trials.jsonl`: one trial outcome per line
//! - `aggregate.tsv`: mean and sample standard deviation of test accuracy
//! - `manifest.json`: effective configuration, cache keys, environment

pub mod cache;
pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use topoconv::analysis::{class_mean_table, kw_table, neighbor_class_matrix};
use topoconv::dualgraph::{dual_adjacency, DualGraphConfig};
use topoconv::exec::Execution;
use topoconv::experiment::{aggregate, run_campaign, sweep, Aggregate, Campaign, Operators, TrialOutcome};
use topoconv::graph::io::{load_dataset, read_graph, read_split, write_graph};
use topoconv::graph::{Dataset, SplitPolicy};
use topoconv::topo::{NavConfig, NavMatrix};
use topoconv::{Error, Result};

pub use cache::ArtifactCache;
pub use config::{RunConfig, SplitSpec};

/// Modelling choices a reader of the results should know about.
pub const DECISIONS: &[&str] = &[
    "structural attributes are z-scored (constant columns dropped) before k-NN",
    "k-NN graph is the symmetrized union of directed neighbour lists; ties broken by index",
    "2-hop neighbour-class features count shortest-path 2-hop neighbours",
    "best-validation epoch (earliest on ties) supplies the reported test accuracy",
    "weight decay is added to the gradient of every parameter, biases included",
    "trial t uses seed seed_base + t for both split and training",
];

/// A loaded dataset plus the operators its models consume.
pub struct Prepared {
    pub dataset: Dataset,
    pub dataset_hash: String,
    pub operators: Operators,
    pub nav_key: Option<String>,
    pub dual_key: Option<String>,
}

pub fn load(cfg: &RunConfig) -> Result<(Dataset, String)> {
    let p = &cfg.dataset;
    let dataset = load_dataset(&p.graph, &p.features, &p.labels, p.directed)?;
    let mut files = vec![p.graph.as_path(), p.features.as_path(), p.labels.as_path()];
    if let Some(s) = &p.split {
        files.push(s);
    }
    Ok((dataset, cache::hash_files(&files)?))
}

/// Loads the dataset, checks data-dependent settings, then builds (or reads
/// from cache) whatever structural artifacts `need_nav` and the model call for.
pub fn prepare(cfg: &RunConfig, need_nav: bool, exec: Execution) -> Result<Prepared> {
    let (dataset, dataset_hash) = load(cfg)?;
    let kind = cfg.spec.kind;
    if kind.needs_dual() {
        cfg.dual.validate(dataset.n_nodes())?;
    }
    let need_nav = need_nav || kind.needs_dual() || kind.needs_topo();
    let store = ArtifactCache::new(&cfg.cache);
    let graph_hash = cache::hash_files(&[cfg.dataset.graph.as_path()])?;
    let (nav, nav_key) = if need_nav {
        let (nav, key) = store.nav(&dataset.graph, &graph_hash, cfg.dataset.directed, &cfg.nav, exec)?;
        (Some(nav), Some(key))
    } else {
        (None, None)
    };
    let (dual, dual_key) = match (&nav, &nav_key) {
        (Some(nav), Some(nk)) if kind.needs_dual() => {
            let (g, key) = store.dual(nav, nk, &cfg.dual, exec)?;
            (Some(dual_adjacency(&g)), Some(key))
        }
        _ => (None, None),
    };
    let operators = Operators::new(&dataset, dual, nav);
    Ok(Prepared {
        dataset,
        dataset_hash,
        operators,
        nav_key,
        dual_key,
    })
}

pub fn split_policy(cfg: &RunConfig, n_nodes: usize) -> Result<SplitPolicy> {
    Ok(match cfg.split {
        SplitSpec::Standard => {
            let path = cfg
                .dataset
                .split
                .as_ref()
                .ok_or_else(|| Error::Config("standard split needs dataset.split".into()))?;
            SplitPolicy::Standard(read_split(path, n_nodes)?)
        }
        SplitSpec::PerClass {
            train_per_class,
            val_per_class,
        } => SplitPolicy::PerClassRandom {
            train_per_class,
            val_per_class,
            seed: cfg.seed_base,
        },
        SplitSpec::Fraction(f) => SplitPolicy::Fraction {
            train_fraction: f,
            seed: cfg.seed_base,
        },
    })
}

pub fn campaign(cfg: &RunConfig, n_nodes: usize) -> Result<Campaign> {
    Ok(Campaign {
        spec: cfg.spec.clone(),
        train: cfg.train.clone(),
        split: split_policy(cfg, n_nodes)?,
        features: cfg.features.clone(),
        n_trials: cfg.trials,
        seed_base: cfg.seed_base,
    })
}

#[derive(Debug, Serialize)]
struct Environment {
    package_version: &'static str,
    os: &'static str,
    arch: &'static str,
    parallel: bool,
    threads: usize,
}

fn environment(exec: Execution) -> Environment {
    Environment {
        package_version: env!("CARGO_PKG_VERSION"),
        os: std::env::consts::OS,
        arch: std::env::consts::ARCH,
        parallel: exec.is_parallel(),
        threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_manifest(cfg: &RunConfig, prep: &Prepared, command: &str, outputs: &[PathBuf], exec: Execution) -> Result<PathBuf> {
    let manifest = serde_json::json!({
        "command": command,
        "dataset": cfg.dataset.name,
        "dataset_hash": prep.dataset_hash,
        "config": cfg.echo,
        "model": cfg.spec,
        "train": cfg.train,
        "dual": {
            "k": cfg.dual.k,
            "metric": cfg.dual.metric.name(),
            "standardize": cfg.dual.standardize,
        },
        "nav_cache_key": prep.nav_key,
        "dual_cache_key": prep.dual_key,
        "decisions": DECISIONS,
        "environment": environment(exec),
        "outputs": outputs,
    });
    let path = cfg.out.join("manifest.json");
    write_file(&path, &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(path)
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(&it).expect("trial serializes"));
        s.push('\n');
    }
    s
}

pub const AGGREGATE_HEADER: &str = "model\tfeatures\tn_trials\tn_failed\tmean\tstd";

fn aggregate_line(model: &str, features: &str, a: &Aggregate) -> String {
    format!("{model}\t{features}\t{}\t{}\t{}\t{}", a.n_trials, a.n_failed, a.mean, a.std)
}

#[derive(Debug, Serialize)]
pub struct TrainSummary {
    pub aggregate: Aggregate,
    pub trials_path: PathBuf,
    pub aggregate_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Runs the configured campaign and writes its result files.
pub fn cmd_train(cfg: &RunConfig, exec: Execution) -> Result<TrainSummary> {
    let prep = prepare(cfg, cfg.features.needs_nav(), exec)?;
    let c = campaign(cfg, prep.dataset.n_nodes())?;
    let outcomes = run_campaign(&c, &prep.dataset, &prep.operators, exec)?;
    let agg = aggregate(&outcomes);
    let trials_path = cfg.out.join("trials.jsonl");
    let aggregate_path = cfg.out.join("aggregate.tsv");
    write_file(&trials_path, &jsonl(&outcomes))?;
    write_file(
        &aggregate_path,
        &format!(
            "{AGGREGATE_HEADER}\n{}\n",
            aggregate_line(cfg.spec.kind.name(), &cfg.features_name, &agg)
        ),
    )?;
    let manifest_path = write_manifest(cfg, &prep, "train", &[trials_path.clone(), aggregate_path.clone()], exec)?;
    Ok(TrainSummary {
        aggregate: agg,
        trials_path,
        aggregate_path,
        manifest_path,
    })
}

#[derive(Debug, Serialize)]
struct SweepTrial<'a> {
    fraction: f64,
    features: &'a str,
    #[serde(flatten)]
    outcome: &'a TrialOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub features: String,
    pub aggregate: Aggregate,
    pub skipped: usize,
}

/// Accuracy against training-set size for every configured input family.
/// Writes `sweep.tsv`, `sweep_trials.jsonl` and `manifest.json`.
pub fn cmd_sweep(cfg: &RunConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    let need_nav = cfg.sweep_features.iter().any(|(_, f)| f.needs_nav());
    let prep = prepare(cfg, need_nav, exec)?;
    let mut rows = Vec::new();
    let mut trials = String::new();
    for (name, source) in &cfg.sweep_features {
        let base = Campaign {
            features: source.clone(),
            ..campaign(cfg, prep.dataset.n_nodes())?
        };
        for point in sweep(&base, &cfg.sweep_fractions, &prep.dataset, &prep.operators, exec)? {
            trials.push_str(&jsonl(point.outcomes.iter().map(|o| SweepTrial {
                fraction: point.fraction,
                features: name,
                outcome: o,
            })));
            rows.push(SweepRow {
                fraction: point.fraction,
                features: name.clone(),
                aggregate: point.aggregate,
                skipped: point.skipped,
            });
        }
    }
    let mut tsv = String::from("fraction\tmodel\tfeatures\tn_trials\tn_failed\tskipped\tmean\tstd\n");
    for r in &rows {
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.fraction,
            cfg.spec.kind.name(),
            r.features,
            r.aggregate.n_trials,
            r.aggregate.n_failed,
            r.skipped,
            r.aggregate.mean,
            r.aggregate.std
        ));
    }
    let tsv_path = cfg.out.join("sweep.tsv");
    let trials_path = cfg.out.join("sweep_trials.jsonl");
    write_file(&tsv_path, &tsv)?;
    write_file(&trials_path, &trials)?;
    write_manifest(cfg, &prep, "sweep", &[tsv_path, trials_path], exec)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub diagonal_mass: f64,
    pub uniform_baseline: f64,
    pub n_attrs: usize,
    pub n_significant: usize,
    pub n_significant_motif: usize,
    pub significant_non_motif: Vec<String>,
}

/// Class-conditional neighbour matrix, per-attribute Kruskal–Wallis tests and
/// per-class attribute shares. Uses `nav` if given, else the (cached) NAV of
/// the configured graph.
pub fn cmd_analyze(cfg: &RunConfig, nav: Option<&Path>, exec: Execution) -> Result<AnalysisSummary> {
    let (dataset, dataset_hash) = load(cfg)?;
    let (nav, nav_key) = match nav {
        Some(p) => (NavMatrix::read_tsv(p)?, None),
        None => {
            let graph_hash = cache::hash_files(&[cfg.dataset.graph.as_path()])?;
            let (nav, key) =
                ArtifactCache::new(&cfg.cache).nav(&dataset.graph, &graph_hash, cfg.dataset.directed, &cfg.nav, exec)?;
            (nav, Some(key))
        }
    };
    if nav.n_nodes() != dataset.n_nodes() {
        return Err(Error::Integrity(format!(
            "NAV has {} rows, graph has {} nodes",
            nav.n_nodes(),
            dataset.n_nodes()
        )));
    }
    let ncm = neighbor_class_matrix(&dataset.graph, &dataset.labels, dataset.n_classes, false)?;
    let kw = kw_table(&nav, &dataset.labels, 0.05, exec)?;
    let means = class_mean_table(&nav, &dataset.labels, dataset.n_classes);

    let c = dataset.n_classes;
    let mut s = String::from("class");
    for j in 0..c {
        s.push_str(&format!("\tc{j}"));
    }
    s.push('\n');
    for (i, row) in ncm.rows.iter().enumerate() {
        s.push_str(&format!("c{i}"));
        for j in 0..c {
            match row {
                Some(r) => s.push_str(&format!("\t{}", r[j])),
                None => s.push_str("\tNA"),
            }
        }
        s.push('\n');
    }
    s.push_str(&format!("# diagonal_mass {}\n# uniform_baseline {}\n", ncm.diagonal_mass, ncm.uniform_baseline));
    write_file(&cfg.out.join("neighbor_class.tsv"), &s)?;

    let mut s = String::from("attr\th\tdf\tln_p\tln_p_bonferroni\tsignificant\n");
    for r in &kw {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.attr,
            r.test.h,
            r.test.df,
            r.test.ln_p,
            r.ln_p_bonferroni,
            u8::from(r.significant)
        ));
    }
    write_file(&cfg.out.join("kw.tsv"), &s)?;

    let mut s = String::from("attr");
    for j in 0..c {
        s.push_str(&format!("\tc{j}"));
    }
    s.push_str("\tuniform_fallback\n");
    for (a, name) in means.attrs.iter().enumerate() {
        s.push_str(name);
        for class in 0..c {
            s.push_str(&format!("\t{}", means.share(class, a)));
        }
        s.push_str(&format!("\t{}\n", u8::from(means.uniform_fallback[a])));
    }
    write_file(&cfg.out.join("class_means.tsv"), &s)?;

    let significant: Vec<&str> = kw.iter().filter(|r| r.significant).map(|r| r.attr.as_str()).collect();
    let summary = AnalysisSummary {
        diagonal_mass: ncm.diagonal_mass,
        uniform_baseline: ncm.uniform_baseline,
        n_attrs: nav.n_attrs(),
        n_significant: significant.len(),
        n_significant_motif: significant.iter().filter(|a| a.starts_with("motif")).count(),
        significant_non_motif: significant
            .iter()
            .filter(|a| !a.starts_with("motif"))
            .map(|a| a.to_string())
            .collect(),
    };
    let prep = Prepared {
        operators: Operators::new(&dataset, None, None),
        dataset,
        dataset_hash,
        nav_key,
        dual_key: None,
    };
    write_manifest(cfg, &prep, "analyze", &[], exec)?;
    Ok(summary)
}

/// Structural attributes of a graph file, written as a TSV table.
pub fn cmd_features(graph: &Path, directed: Option<bool>, config: &NavConfig, out: &Path, exec: Execution) -> Result<NavMatrix> {
    let g = read_graph(graph, directed)?;
    let nav = topoconv::topo::compute_nav(&g, config, exec)?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    nav.write_tsv(out)?;
    Ok(nav)
}

/// Similarity graph over a NAV table, written as an undirected edge file.
pub fn cmd_dual(nav: &Path, config: &DualGraphConfig, out: &Path, exec: Execution) -> Result<topoconv::graph::Graph> {
    let nav = NavMatrix::read_tsv(nav)?;
    config.validate(nav.n_nodes())?;
    let g = topoconv::dualgraph::build_dual(&nav, config, exec)?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_graph(out, &g)?;
    Ok(g)
}

/// Machine-readable error report for stderr.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } }).to_string()
}

/// Writes `value` as one JSON line to stdout.
pub fn print_json<T: Serialize>(value: &T) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string(value).expect("summary serializes"));
}
