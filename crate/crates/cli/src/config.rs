//! Config files are TOML with one table per command:
//!
//! ```text
//! [sdm]
//! h = "data/saddle.json"
//! gamma = 0.1
//! Lmax = 3
//! ```
//!
//! Each key becomes `--key value` ahead of the command-line flags, so flags win.

use std::path::Path;

pub fn section_args(path: &Path, command: &str) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let table: toml::Table = text.parse().map_err(|e| format!("config {}: {e}", path.display()))?;
    let Some(section) = table.get(command) else { return Ok(Vec::new()) };
    let section = section.as_table().ok_or_else(|| format!("config section [{command}] is not a table"))?;
    let mut out = Vec::new();
    for (key, value) in section {
        let flag = format!("--{key}");
        match value {
            toml::Value::Boolean(true) => out.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts: Result<Vec<String>, String> = items.iter().map(|v| scalar(key, v)).collect();
                out.push(flag);
                out.push(parts?.join(","));
            }
            v => {
                out.push(flag);
                out.push(scalar(key, v)?);
            }
        }
    }
    Ok(out)
}

fn scalar(key: &str, v: &toml::Value) -> Result<String, String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(x) => Ok(format!("{x:e}")),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(format!("config key {key}: unsupported value {v}")),
    }
}
