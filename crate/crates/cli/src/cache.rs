//! Content-addressed storage of structural attributes and similarity graphs.
//!
//! A NAV is keyed by the graph file's hash and every [`NavConfig`] field; a
//! dual graph by its NAV key and every [`DualGraphConfig`] field. Changing
//! any of these yields a new key, so stale artifacts are never reused.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use topoconv::dualgraph::{build_dual, DualGraphConfig};
use topoconv::exec::Execution;
use topoconv::graph::io::{read_graph, write_graph};
use topoconv::graph::Graph;
use topoconv::topo::{compute_nav, NavConfig, NavMatrix};
use topoconv::{Error, Result};

pub fn hash_files(paths: &[&Path]) -> Result<String> {
    let mut h = Sha256::new();
    for p in paths {
        let bytes = fs::read(p).map_err(|e| Error::io(*p, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn nav_key(graph_hash: &str, directed: Option<bool>, config: &NavConfig) -> String {
    let text = format!(
        "nav/1 graph={graph_hash} directed={directed:?} alpha={:?} motifs={:?} louvain_seed={}",
        config.alpha, config.motif_sizes, config.louvain_seed
    );
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn dual_key(nav_key: &str, config: &DualGraphConfig) -> String {
    let text = format!(
        "dual/1 nav={nav_key} k={} metric={} standardize={}",
        config.k,
        config.metric.name(),
        config.standardize
    );
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub struct ArtifactCache {
    dir: PathBuf,
}

impl ArtifactCache {
    pub fn new(dir: &Path) -> Self {
        ArtifactCache { dir: dir.to_path_buf() }
    }

    pub fn nav_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("nav-{key}.tsv"))
    }

    pub fn dual_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("dual-{key}.txt"))
    }

    fn ensure_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))
    }

    pub fn nav(
        &self,
        graph: &Graph,
        graph_hash: &str,
        directed: Option<bool>,
        config: &NavConfig,
        exec: Execution,
    ) -> Result<(NavMatrix, String)> {
        let key = nav_key(graph_hash, directed, config);
        let path = self.nav_path(&key);
        if path.exists() {
            let nav = NavMatrix::read_tsv(&path)?;
            if nav.n_nodes() == graph.n_nodes() {
                return Ok((nav, key));
            }
        }
        let nav = compute_nav(graph, config, exec)?;
        self.ensure_dir()?;
        nav.write_tsv(&path)?;
        Ok((nav, key))
    }

    pub fn dual(&self, nav: &NavMatrix, nav_key: &str, config: &DualGraphConfig, exec: Execution) -> Result<(Graph, String)> {
        let key = dual_key(nav_key, config);
        let path = self.dual_path(&key);
        if path.exists() {
            let g = read_graph(&path, Some(false))?;
            if g.n_nodes() == nav.n_nodes() {
                return Ok((g, key));
            }
        }
        let g = build_dual(nav, config, exec)?;
        self.ensure_dir()?;
        write_graph(&path, &g)?;
        Ok((g, key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use topoconv::dualgraph::Metric;

    #[test]
    fn keys_track_every_field() {
        let base = NavConfig::default();
        let k0 = nav_key("abc", None, &base);
        assert_ne!(k0, nav_key("abd", None, &base));
        assert_ne!(k0, nav_key("abc", Some(true), &base));
        assert_ne!(k0, nav_key("abc", None, &NavConfig { alpha: 3.0, ..base.clone() }));
        assert_ne!(k0, nav_key("abc", None, &NavConfig { motif_sizes: vec![3], ..base.clone() }));
        let d = DualGraphConfig::new(5);
        let d0 = dual_key(&k0, &d);
        assert_ne!(d0, dual_key("other", &d));
        assert_ne!(d0, dual_key(&k0, &DualGraphConfig::new(6)));
        assert_ne!(d0, dual_key(&k0, &DualGraphConfig { metric: Metric::Cosine, ..d.clone() }));
        assert_ne!(d0, dual_key(&k0, &DualGraphConfig { standardize: false, ..d }));
    }

    #[test]
    fn cached_nav_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let g = Graph::new(5, false, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let cache = ArtifactCache::new(dir.path());
        let (a, key) = cache.nav(&g, "h", None, &NavConfig::default(), Execution::Sequential).unwrap();
        assert!(cache.nav_path(&key).exists());
        let (b, _) = cache.nav(&g, "h", None, &NavConfig::default(), Execution::Sequential).unwrap();
        assert_eq!(a, b);
        let (d1, dk) = cache.dual(&a, &key, &DualGraphConfig::new(2), Execution::Sequential).unwrap();
        let (d2, _) = cache.dual(&a, &key, &DualGraphConfig::new(2), Execution::Sequential).unwrap();
        assert!(cache.dual_path(&dk).exists());
        assert_eq!(d1.edges(), d2.edges());
    }
}
