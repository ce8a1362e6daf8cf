//! Output files: fixed float formatting, provenance headers, atomic writes.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `v` rounded to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

/// 12 significant digits, shortest form; plain notation for magnitudes in
/// `[1e-4, 1e15)`, scientific otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(v);
    let a = r.abs();
    if r == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// JSON number with 12 significant digits; `null` when not finite.
pub fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(round12(v))
    } else {
        Value::Null
    }
}

/// What every output file records about how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub config_text: String,
    pub config_sha256: String,
}

impl Provenance {
    /// `out_dir` and `threads` are left out: they never change the numbers,
    /// and the same experiment must produce the same bytes anywhere.
    pub fn new(command: &str, resolved: &ExperimentConfig) -> Self {
        let config_text: String = resolved
            .emit()
            .lines()
            .filter(|l| !l.starts_with("out_dir = ") && !l.starts_with("threads = "))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(config_text.as_bytes());
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Provenance {
            command: command.into(),
            config_text,
            config_sha256,
        }
    }

    /// `# `-prefixed header lines for CSV files.
    pub fn csv_header(&self, extra: &[(&str, String)]) -> String {
        let mut out = format!(
            "# polyomega {VERSION}\n# command = {}\n# config_sha256 = {}\n",
            self.command, self.config_sha256
        );
        for line in self.config_text.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        for (k, v) in extra {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }

    pub fn json(&self) -> Value {
        let config: Map<String, Value> = self
            .config_text
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        json!({
            "tool": "polyomega",
            "version": VERSION,
            "command": self.command,
            "config_sha256": self.config_sha256,
            "config": config,
        })
    }
}

/// Minimal CSV table with a fixed column order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &str) -> String {
        let mut out = String::from(header);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so a reader never sees a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Error> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Marker left next to the outputs of a failed command.
pub fn failure_marker(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(format!("{command}.FAILED"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(123_456_789.123_456_79), "123456789.123");
        assert_eq!(fmt_f64(1.5e-7), "1.5e-7");
        assert_eq!(fmt_f64(2.5e20), "2.5e20");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(json_f64(f64::NAN), Value::Null);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        write_atomic(&path, b"one\n").unwrap();
        write_atomic(&path, b"two\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two\n");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn header_echoes_config() {
        let cfg = ExperimentConfig::default();
        let p = Provenance::new("window", &cfg);
        let h = p.csv_header(&[("excluded", "none".into())]);
        assert!(h.starts_with("# polyomega "));
        assert!(h.contains("# alpha = 0.5\n"));
        assert!(h.ends_with("# excluded = none\n"));
        assert_eq!(p.config_sha256.len(), 64);
        assert_eq!(p.json()["config"]["x"], "100000");
        let elsewhere = ExperimentConfig {
            out_dir: Some("/elsewhere".into()),
            threads: 7,
            ..cfg
        };
        assert_eq!(Provenance::new("window", &elsewhere), p);
    }
}
