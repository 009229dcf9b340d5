//! Instance and allocation files.
//!
//! Instances are JSON documents (or TOML when the path ends in `.toml`):
//!
//! ```json
//! { "agents": ["Alice", "Bob"], "items": 2,
//!   "bids": [[1, "3/2"], ["0.5", 4]],
//!   "utilities": [[1, 2], [1, 4]] }
//! ```
//!
//! An allocation file is a JSON list with one entry per item: the owning
//! agent's index, or `null`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{validate_instance, Allocation, Instance, RawInstance};

fn is_toml(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"))
}

pub fn parse_instance_json(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate_instance(&raw)
}

pub fn parse_instance_toml(text: &str) -> Result<Instance> {
    let raw: RawInstance = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate_instance(&raw)
}

/// Pretty JSON with one matrix row per line.
pub fn instance_to_json(inst: &Instance) -> String {
    fn compact<T: serde::Serialize + ?Sized>(v: &T) -> String {
        serde_json::to_string(v).expect("instance documents always serialize")
    }
    fn matrix(rows: &[Vec<crate::model::RawValue>]) -> String {
        let lines: Vec<String> = rows.iter().map(|r| format!("    {}", compact(r))).collect();
        if lines.is_empty() {
            "[]".to_string()
        } else {
            format!("[\n{}\n  ]", lines.join(",\n"))
        }
    }
    let raw = RawInstance::from(inst);
    let mut fields = Vec::new();
    if let Some(a) = &raw.agents {
        fields.push(format!("  \"agents\": {}", compact(a)));
    }
    if let Some(i) = &raw.items {
        fields.push(format!("  \"items\": {}", compact(i)));
    }
    fields.push(format!("  \"bids\": {}", matrix(&raw.bids)));
    if let Some(u) = &raw.utilities {
        fields.push(format!("  \"utilities\": {}", matrix(u)));
    }
    format!("{{\n{}\n}}\n", fields.join(",\n"))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    if is_toml(path) {
        parse_instance_toml(&text)
    } else {
        parse_instance_json(&text)
    }
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    let path = path.as_ref();
    let text = if is_toml(path) {
        toml::to_string(&RawInstance::from(inst)).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        instance_to_json(inst)
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn parse_allocation(text: &str) -> Result<Allocation> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("allocation: {e}")))
}

pub fn read_allocation(path: impl AsRef<Path>) -> Result<Allocation> {
    parse_allocation(&fs::read_to_string(path)?)
}

pub fn write_allocation(path: impl AsRef<Path>, alloc: &Allocation) -> Result<()> {
    let mut s = serde_json::to_string(alloc).expect("allocations always serialize");
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}
