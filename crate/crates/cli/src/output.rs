use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

/// Shortest round-trip form; `inf`, `-inf` and `nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Where results go, and the metadata stamped on each file.
pub struct Sink {
    pub dir: PathBuf,
    pub hash: String,
    pub seed: u64,
}

impl Sink {
    pub fn new(dir: &Path, hash: &str, seed: u64) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Sink { dir: dir.to_path_buf(), hash: hash.to_string(), seed })
    }

    pub fn meta(&self) -> Value {
        json!({ "config_sha256": self.hash, "seed": self.seed })
    }

    /// CSV with a header row and a trailing `# config_sha256=… seed=…` line.
    pub fn csv(&self, name: &str, table: &Table) -> io::Result<PathBuf> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&table.header)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        let mut bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        bytes.extend_from_slice(format!("# config_sha256={} seed={}\n", self.hash, self.seed).as_bytes());
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        Ok(path)
    }

    /// Pretty JSON with a `meta` object added at the top level.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> io::Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        if let Value::Object(m) = &mut v {
            m.insert("meta".into(), self.meta());
        }
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
