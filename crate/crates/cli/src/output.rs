use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use qsplit::table;

use crate::commands::Failure;

pub const MANIFEST_SCHEMA: &str = "run_manifest v1";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Resolved config written next to the manifest; feeding it back through
/// `--config` repeats the run.
pub const RESOLVED_FILE: &str = "resolved.toml";

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub file: String,
    pub schema: Option<String>,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    schema: &'static str,
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    seed: Option<u64>,
    workers: usize,
    config: &'a C,
    outputs: &'a [Artifact],
    elapsed_seconds: f64,
}

pub struct OutDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
    start: Instant,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
            start: Instant::now(),
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    /// Registers a file already written under the output directory.
    pub fn record(&mut self, file: &str, schema: Option<&str>) -> Result<(), Failure> {
        let bytes = fs::read(self.path(file)).map_err(|e| Failure::Runtime(format!("{file}: {e}")))?;
        self.artifacts.push(Artifact {
            file: file.to_string(),
            schema: schema.map(str::to_string),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn table<T: Serialize>(&mut self, file: &str, schema: &str, meta: &[(&str, String)], rows: &[T]) -> Result<(), Failure> {
        table::write(&self.path(file), schema, meta, rows)?;
        self.record(file, Some(schema))
    }

    pub fn json<T: Serialize>(&mut self, file: &str, schema: &str, value: &T) -> Result<(), Failure> {
        let mut v = serde_json::to_value(value).map_err(|e| Failure::Runtime(e.to_string()))?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("schema".into(), schema.into());
        }
        let text = serde_json::to_string_pretty(&v).map_err(|e| Failure::Runtime(e.to_string()))?;
        self.text(file, Some(schema), &text)
    }

    pub fn text(&mut self, file: &str, schema: Option<&str>, text: &str) -> Result<(), Failure> {
        fs::write(self.path(file), text).map_err(|e| Failure::Runtime(format!("{file}: {e}")))?;
        self.record(file, schema)
    }

    /// Writes the resolved config and the manifest; returns the manifest path.
    pub fn finish<C: Serialize>(mut self, subcommand: &str, seed: Option<u64>, config: &C) -> Result<PathBuf, Failure> {
        let resolved = toml::to_string(config).map_err(|e| Failure::Runtime(format!("cannot serialise config: {e}")))?;
        self.text(RESOLVED_FILE, None, &resolved)?;
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA,
            tool: "qsplit",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            workers: rayon::current_num_threads(),
            config,
            outputs: &self.artifacts,
            elapsed_seconds: self.start.elapsed().as_secs_f64(),
        };
        let path = self.path(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
        fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
