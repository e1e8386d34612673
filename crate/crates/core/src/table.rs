//! Versioned CSV files.
//!
//! Every file starts with comment lines:
//!
//! ```text
//! # schema: variance_record v1
//! # rows: 12
//! step,cost,...
//! ```
//!
//! The first line is mandatory; further `# key: value` lines are metadata.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Comment-line metadata from a table file.
pub type Meta = BTreeMap<String, String>;

/// Serialises rows to CSV text with schema and metadata comment lines.
pub fn to_string<T: Serialize>(schema: &str, meta: &[(&str, String)], rows: &[T]) -> Result<String> {
    let mut out = Vec::new();
    writeln!(out, "# schema: {schema}")?;
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}")?;
    }
    out.extend_from_slice(&body(rows)?);
    Ok(String::from_utf8(out).expect("csv output is utf-8"))
}

/// CSV body (header + rows) without comment lines.
pub fn body<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write<T: Serialize>(path: &Path, schema: &str, meta: &[(&str, String)], rows: &[T]) -> Result<()> {
    fs::write(path, to_string(schema, meta, rows)?)?;
    Ok(())
}

/// Splits a table into metadata and body text, checking the schema line.
pub fn split<'a>(path: &Path, text: &'a str, schema: &str) -> Result<(Meta, &'a str)> {
    let bad = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };
    let mut meta = Meta::new();
    let mut rest = text;
    let mut first = true;
    while let Some(line) = rest.strip_prefix('#') {
        let (line, tail) = line.split_once('\n').unwrap_or((line, ""));
        let (k, v) = line
            .trim()
            .split_once(':')
            .ok_or_else(|| bad(format!("malformed comment line `#{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if first {
            if k != "schema" || v != schema {
                return Err(bad(format!("expected schema `{schema}`, found `{k}: {v}`")));
            }
            first = false;
        }
        meta.insert(k.to_string(), v.to_string());
        rest = tail;
    }
    if first {
        return Err(bad("missing schema line".into()));
    }
    Ok((meta, rest))
}

pub fn parse_body<T: DeserializeOwned>(path: &Path, body: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Schema {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<(Meta, Vec<T>)> {
    let text = fs::read_to_string(path)?;
    let (meta, body) = split(path, &text, schema)?;
    Ok((meta, parse_body(path, body)?))
}
