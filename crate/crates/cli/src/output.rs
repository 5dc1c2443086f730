//! Emitted files: CSV tables with JSON schema sidecars, JSON documents, digests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// A file produced by an experiment, named relative to the output prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub suffix: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
struct Column<'a> {
    name: &'a str,
    #[serde(rename = "type")]
    ty: &'a str,
    description: &'a str,
}

#[derive(Debug, Clone, Serialize)]
struct Schema<'a> {
    file: String,
    format: &'static str,
    header: bool,
    columns: Vec<Column<'a>>,
}

/// CSV under construction. Columns are `(name, type, description)`.
pub struct Table {
    name: String,
    columns: Vec<(&'static str, &'static str, &'static str)>,
    body: String,
}

impl Table {
    pub fn new(name: &str, columns: &[(&'static str, &'static str, &'static str)]) -> Self {
        let header = columns.iter().map(|c| c.0).collect::<Vec<_>>().join(",");
        Self { name: name.to_string(), columns: columns.to_vec(), body: header + "\n" }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns.len(), "row width for {}", self.name);
        let line = cells.iter().map(Cell::render).collect::<Vec<_>>().join(",");
        self.body.push_str(&line);
        self.body.push('\n');
    }

    /// The CSV and its schema sidecar.
    pub fn finish(self, prefix_name: &str) -> [Artifact; 2] {
        let file = format!("{prefix_name}.{}.csv", self.name);
        let schema = Schema {
            file: file.clone(),
            format: "csv",
            header: true,
            columns: self.columns.iter().map(|&(name, ty, description)| Column { name, ty, description }).collect(),
        };
        [
            Artifact { suffix: format!("{}.csv", self.name), bytes: self.body.into_bytes() },
            json_artifact(&format!("{}.schema", self.name), &schema),
        ]
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    S(String),
    B(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:?}"),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

pub fn json_artifact<T: Serialize>(name: &str, value: &T) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
    bytes.push(b'\n');
    Artifact { suffix: format!("{name}.json"), bytes }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Path of an artifact: `<prefix>.<suffix>`.
pub fn artifact_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    prefix.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn write_artifacts(prefix: &Path, artifacts: &[Artifact]) -> std::io::Result<Vec<OutputEntry>> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    artifacts
        .iter()
        .map(|a| {
            let path = artifact_path(prefix, &a.suffix);
            fs::write(&path, &a.bytes)?;
            Ok(OutputEntry { path: path.display().to_string(), sha256: sha256_hex(&a.bytes), bytes: a.bytes.len() as u64 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new("demo", &[("x", "float", "abscissa"), ("ok", "bool", "flag")]);
        t.row(&[Cell::F(0.1), Cell::B(true)]);
        t.row(&[Cell::F(1e-20), Cell::Empty]);
        let [csv, schema] = t.finish("run");
        assert_eq!(String::from_utf8(csv.bytes).unwrap(), "x,ok\n0.1,true\n1e-20,\n");
        assert_eq!(schema.suffix, "demo.schema.json");
        let v: serde_json::Value = serde_json::from_slice(&schema.bytes).unwrap();
        assert_eq!(v["columns"][1]["name"], "ok");
        assert_eq!(v["file"], "run.demo.csv");
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn paths_append_suffix() {
        assert_eq!(artifact_path(Path::new("out/run1"), "data.csv"), PathBuf::from("out/run1.data.csv"));
    }
}
