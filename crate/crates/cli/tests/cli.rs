use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use topoconv::experiment::{aggregate, TrialOutcome};
use topoconv::graph::io::{write_features, write_graph, write_labels, write_split, SplitRole};
use topoconv::graph::synthetic::{stochastic_block_model, SbmConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topoconv"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// Writes a small planted-partition dataset plus a config with `extra` lines.
fn setup(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let d = stochastic_block_model(&SbmConfig {
        sizes: vec![15, 15],
        seed: 3,
        ..SbmConfig::default()
    })
    .unwrap();
    let p = dir.path();
    write_graph(&p.join("graph.txt"), &d.graph).unwrap();
    write_features(&p.join("features.txt"), &d.features).unwrap();
    write_labels(&p.join("labels.txt"), &d.labels, 2).unwrap();
    let roles: Vec<(usize, SplitRole)> = (0..30)
        .map(|i| {
            let role = match i % 15 {
                0..=3 => SplitRole::Train,
                4..=7 => SplitRole::Val,
                _ => SplitRole::Test,
            };
            (i, role)
        })
        .collect();
    write_split(&p.join("split.txt"), &roles).unwrap();
    let cfg = p.join("run.ini");
    std::fs::write(
        &cfg,
        format!(
            "[dataset]\ngraph = graph.txt\nfeatures = features.txt\nlabels = labels.txt\nsplit = split.txt\n\
             [train]\nepochs = 15\n[nav]\nmotif_sizes = 3\n{extra}"
        ),
    )
    .unwrap();
    (dir, cfg)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rerun_with_fixed_seed_is_identical() {
    let (dir, cfg) = setup("");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["train", "--config", s(&cfg), "--trials", "1", "--seed", "7", "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ja = std::fs::read(a.join("trials.jsonl")).unwrap();
    assert_eq!(ja, std::fs::read(b.join("trials.jsonl")).unwrap());
    assert!(String::from_utf8_lossy(&ja).contains("\"seed\":7"));
}

#[test]
fn aggregate_recomputes_from_trials() {
    let (dir, cfg) = setup("[model]\npreset = t-gcn\nhidden = 8, 8\n[dual]\nk = 3\n");
    let out = dir.path().join("r");
    let o = run(&["train", "--config", s(&cfg), "--trials", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let outcomes: Vec<TrialOutcome> = std::fs::read_to_string(out.join("trials.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(outcomes.iter().map(|o| o.seed).collect::<Vec<_>>(), vec![0, 1, 2]);
    let agg = aggregate(&outcomes);
    let tsv = std::fs::read_to_string(out.join("aggregate.tsv")).unwrap();
    let row: Vec<&str> = tsv.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[0], "t-gcn");
    assert_eq!(row[2].parse::<usize>().unwrap(), agg.n_trials);
    assert_eq!(row[4].parse::<f64>().unwrap(), agg.mean);
    assert_eq!(row[5].parse::<f64>().unwrap(), agg.std);

    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let nav_key = manifest["nav_cache_key"].as_str().unwrap();
    let dual_key = manifest["dual_cache_key"].as_str().unwrap();
    assert!(out.join("cache").join(format!("nav-{nav_key}.tsv")).exists());
    assert!(out.join("cache").join(format!("dual-{dual_key}.txt")).exists());
    assert!(!manifest["decisions"].as_array().unwrap().is_empty());
    assert_eq!(manifest["config"]["dual.k"], "3");
}

#[test]
fn k_at_least_n_fails_before_compute() {
    let (dir, cfg) = setup("[model]\npreset = t-gcn\n[dual]\nk = 30\n");
    let out = dir.path().join("r");
    let o = run(&["train", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(!out.exists());
}

#[test]
fn config_errors_listed_together() {
    let (_dir, cfg) = setup("[model]\ndropout = 1.5\nhidden = 0\n[run]\ntrials = 0\n");
    let o = run(&["train", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    let msg = err["error"]["message"].as_str().unwrap();
    assert!(msg.contains("dropout") && msg.contains("hidden") && msg.contains("trials"), "{msg}");
}

#[test]
fn sweep_rejects_full_fraction_and_runs_grid() {
    let (dir, cfg) = setup("[sweep]\nfeatures = bow, neighbors\n");
    let o = run(&["sweep", "--config", s(&cfg), "--fractions", "0.5,1.0"]);
    assert_eq!(o.status.code(), Some(2));

    let out = dir.path().join("sw");
    let o = run(&["sweep", "--config", s(&cfg), "--fractions", "0.3,0.6", "--trials", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tsv = std::fs::read_to_string(out.join("sweep.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 4);
    assert_eq!(std::fs::read_to_string(out.join("sweep_trials.jsonl")).unwrap().lines().count(), 8);
}

#[test]
fn features_dual_analyze_pipeline() {
    let (dir, cfg) = setup("");
    let p = dir.path();
    let nav = p.join("nav.tsv");
    let o = run(&["features", "--graph", s(&p.join("graph.txt")), "--out", s(&nav)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["n_nodes"], 30);

    let dual = p.join("dual.txt");
    let o = run(&["dual", "--nav", s(&nav), "--k", "4", "--out", s(&dual)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g = topoconv::graph::io::read_graph(&dual, None).unwrap();
    assert!((0..30).all(|u| g.neighbors(u).len() >= 4));

    let o = run(&["dual", "--nav", s(&nav), "--k", "30", "--out", s(&dual)]);
    assert_eq!(o.status.code(), Some(2));

    let out = p.join("an");
    let o = run(&["analyze", "--config", s(&cfg), "--nav", s(&nav), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(summary["diagonal_mass"].as_f64().unwrap() > 0.5);
    for f in ["neighbor_class.tsv", "kw.tsv", "class_means.tsv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn bad_usage_reports_json() {
    let o = run(&["train"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "argument");
    let o = run(&["train", "--config", "/nonexistent/run.ini"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
}
