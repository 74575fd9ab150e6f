use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

use super::config::RunConfig;

pub const ECHO_FILE: &str = "config.echo.json";

/// Seed, parameters and artifact version, attached to every data file.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
}

impl Metadata {
    pub fn new(config: &RunConfig) -> Self {
        let inner = match serde_json::to_value(config).expect("configs serialize") {
            Value::Object(mut m) => m.remove("config").unwrap_or(Value::Null),
            other => other,
        };
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: config.command(),
            seed: config.seed(),
            config: inner,
        }
    }

    /// `#`-prefixed lines placed above a CSV header.
    pub fn csv_header(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# seed: {}\n# config: {}\n",
            self.tool, self.version, self.command, self.seed, self.config
        )
    }

    /// `{"metadata": ..., <key>: payload}` as pretty JSON.
    pub fn json_document<T: Serialize>(&self, key: &str, payload: &T) -> String {
        let mut doc = serde_json::Map::new();
        doc.insert("metadata".into(), json!(self));
        doc.insert(key.into(), serde_json::to_value(payload).expect("payloads serialize"));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
        s.push('\n');
        s
    }

    /// JSON-lines: a metadata record, then one record per item.
    pub fn json_lines<T: Serialize>(&self, items: &[T]) -> String {
        let mut s = serde_json::to_string(&json!({ "metadata": self })).expect("json serializes");
        s.push('\n');
        for item in items {
            s.push_str(&serde_json::to_string(item).expect("items serialize"));
            s.push('\n');
        }
        s
    }
}

pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Self { name: name.into(), contents }
    }
}

/// Fails if any of `names` already exists in `dir` and `force` is off.
pub fn check_overwrite(dir: &Path, names: &[String], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    if let Some(existing) = names.iter().map(|n| dir.join(n)).find(|p| p.exists()) {
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::AlreadyExists,
            format!("{} already exists; pass --force to overwrite", existing.display()),
        )));
    }
    Ok(())
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(&a.name), a.contents.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::DemoConfig;

    #[test]
    fn metadata_formats() {
        let m = Metadata::new(&RunConfig::TopologyDemo(DemoConfig { seed: 9, ..Default::default() }));
        let h = m.csv_header();
        assert!(h.lines().all(|l| l.starts_with("# ")));
        assert!(h.contains("# seed: 9\n") && h.contains("# command: topology-demo\n"));
        let doc: Value = serde_json::from_str(&m.json_document("x", &[1, 2])).unwrap();
        assert_eq!(doc["metadata"]["seed"], 9);
        assert_eq!(doc["x"], json!([1, 2]));
        let lines = m.json_lines(&[json!({"a": 1}), json!({"a": 2})]);
        assert_eq!(lines.lines().count(), 3);
    }

    #[test]
    fn overwrite_guard() {
        let dir = tempfile::tempdir().unwrap();
        let names = vec!["a.csv".to_string()];
        check_overwrite(dir.path(), &names, false).unwrap();
        write_artifacts(dir.path(), &[Artifact::new("a.csv", "x\n".into())]).unwrap();
        let err = check_overwrite(dir.path(), &names, false).unwrap_err();
        assert!(matches!(err, Error::Io(ref e) if e.kind() == io::ErrorKind::AlreadyExists));
        check_overwrite(dir.path(), &names, true).unwrap();
    }
}
