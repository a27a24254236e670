use serde::Serialize;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const ROOT_ENV: &str = "NEKOLAB_RUNS";

/// Fixed-width scientific notation, 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn default_root() -> PathBuf {
    std::env::var_os(ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    /// Subcommand arguments after config expansion; enough to rerun.
    pub args: &'a [String],
    pub seed: Option<u64>,
    pub created: String,
    pub config_file: Option<String>,
    pub parameters: serde_json::Value,
    pub files: Vec<String>,
}

pub struct RunDir {
    pub path: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path, command: &str) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.6fZ");
        let base = format!("{stamp}-{command}");
        let mut path = root.join(&base);
        let mut k = 1;
        while path.exists() {
            k += 1;
            path = root.join(format!("{base}-{k}"));
        }
        fs::create_dir(&path)?;
        Ok(Self { path, files: Vec::new() })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        fs::write(self.path.join(name), text + "\n")?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
        let mut w = csv::Writer::from_path(self.path.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        self.files.push(name.into());
        Ok(())
    }

    pub fn finish(mut self, mut manifest: Manifest<'_>) -> io::Result<PathBuf> {
        self.files.sort();
        manifest.files = std::mem::take(&mut self.files);
        let text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        fs::write(self.path.join("manifest.json"), text + "\n")?;
        Ok(self.path)
    }
}
