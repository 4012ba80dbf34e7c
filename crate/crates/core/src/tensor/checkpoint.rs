//! Named tensors as text: a `#tensor <name> <rows> <cols>` header followed by
//! one tab-separated line per row. Values use Rust's shortest round-trip
//! formatting, so a save/load cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Matrix;
use crate::{Error, Result};

pub fn to_string(tensors: &[(String, Matrix)]) -> String {
    let mut out = String::new();
    for (name, m) in tensors {
        writeln!(out, "#tensor {name} {} {}", m.rows(), m.cols()).unwrap();
        for r in 0..m.rows() {
            let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", line.join("\t")).unwrap();
        }
    }
    out
}

pub fn save(path: &Path, tensors: &[(String, Matrix)]) -> Result<()> {
    fs::write(path, to_string(tensors)).map_err(|e| Error::io(path, e))
}

pub fn parse(text: &str, source: &Path) -> Result<Vec<(String, Matrix)>> {
    let bad = |line: usize, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((ln, header)) = lines.next() {
        if header.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "#tensor" {
            return Err(bad(ln + 1, format!("expected tensor header, got `{header}`")));
        }
        let rows: usize = fields[2].parse().map_err(|_| bad(ln + 1, "bad row count".into()))?;
        let cols: usize = fields[3].parse().map_err(|_| bad(ln + 1, "bad column count".into()))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (rl, row) = lines
                .next()
                .ok_or_else(|| bad(ln + 1, format!("tensor {} truncated", fields[1])))?;
            let values: Vec<f64> = row
                .split('\t')
                .filter(|s| !s.is_empty())
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(rl + 1, e.to_string()))?;
            if values.len() != cols {
                return Err(bad(rl + 1, format!("expected {cols} values, got {}", values.len())));
            }
            data.extend(values);
        }
        out.push((fields[1].to_string(), Matrix::new(rows, cols, data)?));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<(String, Matrix)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.tsv");
        let tensors = vec![
            ("w1".to_string(), Matrix::new(2, 2, vec![0.1, -1.0 / 3.0, 1e-300, 7.0]).unwrap()),
            ("b1".to_string(), Matrix::new(1, 3, vec![0.0, 2.5, -0.0]).unwrap()),
        ];
        save(&path, &tensors).unwrap();
        assert_eq!(load(&path).unwrap(), tensors);
    }

    #[test]
    fn truncated_file_is_an_error() {
        let err = parse("#tensor w 2 1\n0.5\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }
}
