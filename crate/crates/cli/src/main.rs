use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topoconv::dualgraph::{DualGraphConfig, Metric};
use topoconv::exec::Execution;
use topoconv::topo::NavConfig;
use topoconv::{Error, Result};
use topoconv_cli::{cmd_analyze, cmd_dual, cmd_features, cmd_sweep, cmd_train, error_json, print_json, RunConfig};

#[derive(Parser)]
#[command(name = "topoconv", version, about = "Topology-aware node classification experiments")]
struct Cli {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute structural node attributes of a graph.
    Features {
        /// Take the graph (and NAV settings) from a run config.
        #[arg(long, required_unless_present = "graph")]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        graph: Option<PathBuf>,
        #[arg(long)]
        directed: Option<bool>,
        /// Output TSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the k-nearest-neighbour similarity graph of a NAV table.
    Dual {
        #[arg(long)]
        nav: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "euclidean")]
        metric: Metric,
        /// Measure distances on raw rather than z-scored columns.
        #[arg(long)]
        raw: bool,
        /// Output edge file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a multi-trial training campaign.
    Train(RunArgs),
    /// Accuracy as a function of training-set size.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated train fractions, overriding the config.
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
    },
    /// Structure/class statistics of a labelled graph.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Precomputed NAV table; computed (and cached) when absent.
        #[arg(long)]
        nav: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Seed of the first trial.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed_base = s;
            cfg.echo.insert("run.seed_base".into(), s.to_string());
        }
        if let Some(t) = self.trials {
            if t == 0 {
                return Err(Error::Config("--trials must be >= 1".into()));
            }
            cfg.trials = t;
            cfg.echo.insert("run.trials".into(), t.to_string());
        }
        if let Some(o) = &self.out {
            override_out(&mut cfg, o);
        }
        Ok(cfg)
    }
}

fn override_out(cfg: &mut RunConfig, out: &std::path::Path) {
    if !cfg.echo.contains_key("run.cache") {
        cfg.cache = out.join("cache");
    }
    cfg.out = out.to_path_buf();
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Features {
            config,
            graph,
            directed,
            out,
        } => {
            let (graph, directed, nav_cfg) = match config {
                Some(c) => {
                    let cfg = RunConfig::load(&c)?;
                    (cfg.dataset.graph, directed.or(cfg.dataset.directed), cfg.nav)
                }
                None => (graph.expect("clap enforces --graph"), directed, NavConfig::default()),
            };
            let nav = cmd_features(&graph, directed, &nav_cfg, &out, exec)?;
            print_json(&serde_json::json!({
                "out": out,
                "n_nodes": nav.n_nodes(),
                "n_attrs": nav.n_attrs(),
            }));
        }
        Command::Dual {
            nav,
            k,
            metric,
            raw,
            out,
        } => {
            let config = DualGraphConfig {
                k,
                metric,
                standardize: !raw,
            };
            let g = cmd_dual(&nav, &config, &out, exec)?;
            print_json(&serde_json::json!({
                "out": out,
                "n_nodes": g.n_nodes(),
                "n_edges": g.n_edges(),
            }));
        }
        Command::Train(args) => {
            let cfg = args.load()?;
            print_json(&cmd_train(&cfg, exec)?);
        }
        Command::Sweep { run, fractions } => {
            let mut cfg = run.load()?;
            if let Some(f) = fractions {
                if let Some(bad) = f.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
                    return Err(Error::Config(format!("train fraction {bad} not in (0, 1)")));
                }
                cfg.sweep_fractions = f;
            }
            print_json(&cmd_sweep(&cfg, exec)?);
        }
        Command::Analyze { config, nav, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(o) = &out {
                override_out(&mut cfg, o);
            }
            print_json(&cmd_analyze(&cfg, nav.as_deref(), exec)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.kind() == clap::error::ErrorKind::DisplayHelp || e.kind() == clap::error::ErrorKind::DisplayVersion => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json(&Error::Argument(e.to_string().trim().to_string())));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(match e {
                Error::Config(_) | Error::Argument(_) => 2,
                _ => 1,
            })
        }
    }
}
