//! Flat text formats.
//!
//! ```text
//! graph:    #nodes <n> #directed <0|1>      then  src<TAB>dst
//! features: #nodes <n> #features <f>        then  node<TAB>feature<TAB>value
//! labels:   #classes <c>                    then  node<TAB>class
//! split:    node<TAB>train|val|test
//! ```
//!
//! Indices are 0-based. Blank lines and further `#` lines are ignored.
//! Fields may be separated by any run of whitespace.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{Dataset, Graph, SparseMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Val,
    Test,
}

struct Parser {
    path: PathBuf,
    text: String,
}

impl Parser {
    fn open(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Parser {
            path: path.to_path_buf(),
            text,
        })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    /// Key/value pairs of the first non-blank line, which must start with `#`.
    fn header(&self) -> Result<(usize, Vec<(String, String)>)> {
        let (no, line) = self
            .text
            .lines()
            .enumerate()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or_else(|| self.err(1, "missing header line"))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !tokens[0].starts_with('#') || tokens.len() % 2 != 0 {
            return Err(self.err(no + 1, format!("malformed header `{line}`")));
        }
        let pairs = tokens
            .chunks(2)
            .map(|kv| (kv[0].trim_start_matches('#').to_string(), kv[1].to_string()))
            .collect();
        Ok((no + 1, pairs))
    }

    fn header_usize(&self, pairs: &[(String, String)], line: usize, key: &str) -> Result<usize> {
        let (_, v) = pairs
            .iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| self.err(line, format!("header lacks #{key}")))?;
        v.parse()
            .map_err(|_| self.err(line, format!("#{key} value `{v}` is not a count")))
    }

    /// Data lines after the header as `(1-based line number, fields)`.
    fn records(&self, skip_header: bool) -> impl Iterator<Item = (usize, Vec<&str>)> {
        let mut seen_header = !skip_header;
        self.text.lines().enumerate().filter_map(move |(no, line)| {
            let t = line.trim();
            if t.is_empty() {
                return None;
            }
            if t.starts_with('#') {
                seen_header = true;
                return None;
            }
            if !seen_header {
                return None;
            }
            Some((no + 1, t.split_whitespace().collect()))
        })
    }

    fn index(&self, line: usize, field: &str, n: usize) -> Result<usize> {
        let i: usize = field
            .parse()
            .map_err(|_| self.err(line, format!("`{field}` is not a node index")))?;
        if i >= n {
            return Err(Error::Bounds {
                path: self.path.clone(),
                line,
                index: i,
                n_nodes: n,
            });
        }
        Ok(i)
    }
}

/// Reads a graph file. `directed` overrides the header flag when given.
pub fn read_graph(path: &Path, directed: Option<bool>) -> Result<Graph> {
    let p = Parser::open(path)?;
    let (hline, header) = p.header()?;
    let n = p.header_usize(&header, hline, "nodes")?;
    let declared = match p.header_usize(&header, hline, "directed")? {
        0 => false,
        1 => true,
        other => return Err(p.err(hline, format!("#directed must be 0 or 1, got {other}"))),
    };
    let mut edges = Vec::new();
    for (line, fields) in p.records(true) {
        if fields.len() != 2 {
            return Err(p.err(line, format!("expected `src dst`, found {} fields", fields.len())));
        }
        edges.push((p.index(line, fields[0], n)?, p.index(line, fields[1], n)?));
    }
    Graph::new(n, directed.unwrap_or(declared), edges)
}

/// Reads a feature triplet file into an `n x f` sparse matrix.
pub fn read_features(path: &Path) -> Result<SparseMatrix> {
    let p = Parser::open(path)?;
    let (hline, header) = p.header()?;
    let n = p.header_usize(&header, hline, "nodes")?;
    let f = p.header_usize(&header, hline, "features")?;
    let mut t = Vec::new();
    for (line, fields) in p.records(true) {
        if fields.len() != 3 {
            return Err(p.err(line, "expected `node feature value`"));
        }
        let node = p.index(line, fields[0], n)?;
        let feat: usize = fields[1]
            .parse()
            .map_err(|_| p.err(line, format!("`{}` is not a feature index", fields[1])))?;
        if feat >= f {
            return Err(p.err(line, format!("feature index {feat} >= {f}")));
        }
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| p.err(line, format!("`{}` is not a number", fields[2])))?;
        if !value.is_finite() {
            return Err(p.err(line, "non-finite feature value"));
        }
        t.push((node, feat, value));
    }
    SparseMatrix::from_triplets(n, f, t)
}

/// Reads a label file for `n` nodes. Returns per-node labels and the class count.
pub fn read_labels(path: &Path, n: usize) -> Result<(Vec<Option<usize>>, usize)> {
    let p = Parser::open(path)?;
    let (hline, header) = p.header()?;
    let c = p.header_usize(&header, hline, "classes")?;
    let mut labels = vec![None; n];
    for (line, fields) in p.records(true) {
        if fields.len() != 2 {
            return Err(p.err(line, "expected `node class`"));
        }
        let node = p.index(line, fields[0], n)?;
        let class: usize = fields[1]
            .parse()
            .map_err(|_| p.err(line, format!("`{}` is not a class index", fields[1])))?;
        if class >= c {
            return Err(p.err(line, format!("class {class} >= declared {c}")));
        }
        if labels[node].is_some_and(|old| old != class) {
            return Err(p.err(line, format!("node {node} has conflicting labels")));
        }
        labels[node] = Some(class);
    }
    Ok((labels, c))
}

/// Reads a split assignment file for `n` nodes.
pub fn read_split(path: &Path, n: usize) -> Result<Vec<(usize, SplitRole)>> {
    let p = Parser::open(path)?;
    let mut out = Vec::new();
    for (line, fields) in p.records(false) {
        if fields.len() != 2 {
            return Err(p.err(line, "expected `node train|val|test`"));
        }
        let node = p.index(line, fields[0], n)?;
        let role = match fields[1] {
            "train" => SplitRole::Train,
            "val" => SplitRole::Val,
            "test" => SplitRole::Test,
            other => return Err(p.err(line, format!("unknown split role `{other}`"))),
        };
        out.push((node, role));
    }
    Ok(out)
}

/// Loads graph, features and labels. `directed` overrides the graph header.
pub fn load_dataset(
    graph_path: &Path,
    features_path: &Path,
    labels_path: &Path,
    directed: Option<bool>,
) -> Result<Dataset> {
    let graph = read_graph(graph_path, directed)?;
    let features = read_features(features_path)?;
    if features.rows() != graph.n_nodes() {
        return Err(Error::Integrity(format!(
            "features declare {} nodes, graph declares {}",
            features.rows(),
            graph.n_nodes()
        )));
    }
    let (labels, n_classes) = read_labels(labels_path, graph.n_nodes())?;
    Dataset::new(graph, features, labels, n_classes)
}

pub fn write_graph(path: &Path, graph: &Graph) -> Result<()> {
    let mut buf = format!(
        "#nodes {} #directed {}\n",
        graph.n_nodes(),
        u8::from(graph.is_directed())
    );
    for &(u, v) in graph.edges() {
        buf.push_str(&format!("{u}\t{v}\n"));
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_features(path: &Path, features: &SparseMatrix) -> Result<()> {
    let mut buf = format!("#nodes {} #features {}\n", features.rows(), features.cols());
    for (r, c, v) in features.iter() {
        buf.push_str(&format!("{r}\t{c}\t{v}\n"));
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_labels(path: &Path, labels: &[Option<usize>], n_classes: usize) -> Result<()> {
    let mut buf = format!("#classes {n_classes}\n");
    for (i, l) in labels.iter().enumerate() {
        if let Some(c) = l {
            buf.push_str(&format!("{i}\t{c}\n"));
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_split(path: &Path, roles: &[(usize, SplitRole)]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for &(node, role) in roles {
        let tag = match role {
            SplitRole::Train => "train",
            SplitRole::Val => "val",
            SplitRole::Test => "test",
        };
        writeln!(f, "{node}\t{tag}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Writes a dense table with a header row of column names.
pub fn write_table(path: &Path, names: &[String], rows: usize, data: &[f64]) -> Result<()> {
    let cols = names.len();
    debug_assert_eq!(data.len(), rows * cols);
    let mut buf = names.join("\t");
    buf.push('\n');
    for r in 0..rows {
        let line: Vec<String> = data[r * cols..(r + 1) * cols]
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        buf.push_str(&line.join("\t"));
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_table`]: `(names, rows, row-major data)`.
pub fn read_table(path: &Path) -> Result<(Vec<String>, usize, Vec<f64>)> {
    let p = Parser::open(path)?;
    let mut lines = p.text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| p.err(1, "empty table"))?;
    let names: Vec<String> = head.split('\t').map(|s| s.trim().to_string()).collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for (no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != names.len() {
            return Err(p.err(
                no + 1,
                format!("expected {} columns, found {}", names.len(), fields.len()),
            ));
        }
        for f in fields {
            data.push(
                f.parse::<f64>()
                    .map_err(|_| p.err(no + 1, format!("`{f}` is not a number")))?,
            );
        }
        rows += 1;
    }
    Ok((names, rows, data))
}
