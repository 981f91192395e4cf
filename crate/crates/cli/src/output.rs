//! Self-describing output files. Every file starts with the tool version, the
//! subcommand and the resolved configuration, so a run can be repeated from
//! its own output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;

pub const TOOL: &str = "catalysis";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Header<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    header: &'a Header<'a>,
    result: &'a T,
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn json<T: Serialize>(&mut self, name: &str, header: &Header, result: &T) -> std::io::Result<()> {
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(&Document { header, result })?;
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with `#`-prefixed header lines, then a column row, then records.
    pub fn csv<I, R>(&mut self, name: &str, header: &Header, columns: &[String], rows: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.root.join(name);
        let mut buf = Vec::new();
        writeln!(buf, "# {} {}", header.tool, header.version)?;
        writeln!(buf, "# command: {}", header.command)?;
        writeln!(buf, "# config: {}", serde_json::to_string(header.config)?)?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(columns)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        fs::write(&path, buf)?;
        self.written.push(path);
        Ok(())
    }
}

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
