//! Output files. Every artifact carries the resolved configuration: CSV as
//! leading `#` comment lines, JSON under a `config` key, SVG in `<metadata>`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// 17 significant digits, exponent form; locale independent.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Artifacts {
    dir: PathBuf,
    command: &'static str,
    config_toml: String,
    config_json: Value,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path, command: &'static str, config: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            config_toml: config.to_toml(),
            config_json: serde_json::to_value(config).expect("config serializes"),
            written: Vec::new(),
        })
    }

    pub fn config_toml(&self) -> &str {
        &self.config_toml
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn banner(&self) -> String {
        let mut s = format!("# vaet {} {}\n", env!("CARGO_PKG_VERSION"), self.command);
        for line in self.config_toml.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s
    }

    pub fn csv<S, I>(&mut self, name: &str, header: &[S], rows: I) -> Result<()>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut s = self.banner();
        let header: Vec<String> = header.iter().map(|h| field(h.as_ref())).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            s.push_str(&row.join(","));
            s.push('\n');
        }
        self.write(name, &s)
    }

    /// `{"tool", "version", "command", "config", <name>: data}`.
    pub fn json<T: Serialize>(&mut self, name: &str, key: &str, data: &T) -> Result<()> {
        let data = serde_json::to_value(data).map_err(|e| CliError::Config(format!("serializing {name}: {e}")))?;
        let mut doc = Map::new();
        doc.insert("tool".into(), json!("vaet"));
        doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        doc.insert("command".into(), json!(self.command));
        doc.insert("config".into(), self.config_json.clone());
        doc.insert(key.into(), data);
        let mut text = serde_json::to_string_pretty(&doc).expect("json value serializes");
        text.push('\n');
        self.write(name, &text)
    }

    /// Raw text; the caller embeds the configuration itself.
    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        self.write(name, body)
    }
}

/// Quote a CSV field when it holds a separator or a quote.
pub fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Escape text for XML character data.
pub fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
