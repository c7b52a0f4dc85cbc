//! Output artifacts.
//!
//! Every data file carries the tool name, version, resolved configuration and
//! seed. Wall-clock timings go to a separate `<stem>.timing.json`, so that
//! rerunning a command with the same configuration reproduces the data files
//! byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

pub const TOOL: &str = "jamset";

/// Provenance shared by all files of one command.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: Value,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Self { tool: TOOL, version: crate::VERSION, command: command.into(), seed, config }
    }

    /// `# key=value` lines prepended to CSV files.
    fn csv_preamble(&self) -> String {
        format!(
            "# tool={} version={} command={} seed={}\n# config={}\n",
            self.tool, self.version, self.command, self.seed, self.config
        )
    }
}

/// Collects written files and finally records the timing sidecar.
#[derive(Debug)]
pub struct Writer {
    dir: PathBuf,
    stem: String,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, stem: &str, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), stem: stem.into(), provenance, written: Vec::new() })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `<stem><suffix>.json` holding the provenance and `data`.
    pub fn json<T: Serialize>(&mut self, suffix: &str, data: &T) -> Result<PathBuf> {
        let p = &self.provenance;
        let doc = json!({
            "tool": p.tool,
            "version": p.version,
            "command": p.command,
            "seed": p.seed,
            "config": p.config,
            "data": data,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.put(&format!("{}{suffix}.json", self.stem), &text)
    }

    /// `<stem><suffix>.csv`; `csv` starts with its header line.
    pub fn csv(&mut self, suffix: &str, csv: &str) -> Result<PathBuf> {
        let text = format!("{}{csv}", self.provenance.csv_preamble());
        self.put(&format!("{}{suffix}.csv", self.stem), &text)
    }

    /// `<stem><suffix>.dat`: whitespace-separated columns for gnuplot.
    pub fn gnuplot(&mut self, suffix: &str, csv: &str) -> Result<PathBuf> {
        let text = format!("{}{}", self.provenance.csv_preamble(), gnuplot_columns(csv));
        self.put(&format!("{}{suffix}.dat", self.stem), &text)
    }

    fn put(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `<stem>.timing.json` and returns every data file written.
    pub fn finish(self, elapsed: Duration) -> Result<Vec<PathBuf>> {
        let started = SystemTime::now().checked_sub(elapsed).unwrap_or(UNIX_EPOCH);
        let files: Vec<String> = self
            .written
            .iter()
            .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
            .collect();
        let doc = json!({
            "tool": TOOL,
            "version": crate::VERSION,
            "command": self.provenance.command,
            "wall_clock_seconds": elapsed.as_secs_f64(),
            "started_unix": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            "files": files,
        });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(self.dir.join(format!("{}.timing.json", self.stem)), text)?;
        Ok(self.written)
    }
}

/// Turns CSV into gnuplot columns: the header becomes a `#` comment and
/// empty fields become `NaN`.
pub fn gnuplot_columns(csv: &str) -> String {
    let mut out = String::new();
    for (i, line) in csv.lines().filter(|l| !l.starts_with('#')).enumerate() {
        let fields: Vec<&str> = line.split(',').map(|f| if f.is_empty() { "NaN" } else { f }).collect();
        if i == 0 {
            out.push_str("# ");
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}
