//! Report assembly and file emission.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{config_hash, RunConfig};
use crate::svg::{self, Axes, Series};
use crate::CliError;

pub const TOOL: &str = "ghlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One pass/fail line.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value < tolerance }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 0.0, pass: ok }
    }

    pub fn line(&self, command: &str) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        if self.tolerance > 0.0 {
            format!("{tag} {command}/{}: {:.3e} (tol {:.1e})", self.name, self.value, self.tolerance)
        } else {
            format!("{tag} {command}/{}", self.name)
        }
    }
}

/// Files and checks produced by one run.
pub struct Emitter {
    pub command: String,
    pub config: RunConfig,
    pub hash: String,
    pub dir: PathBuf,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(command: &str, config: RunConfig, dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let hash = config_hash(command, &config);
        Ok(Emitter { command: command.to_string(), config, hash, dir: dir.to_path_buf(), checks: Vec::new(), files: Vec::new() })
    }

    pub fn stamp(&self) -> String {
        format!("{TOOL} {VERSION} {} config-sha256={}", self.command, self.hash)
    }

    fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.command))
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Writes `<command>.csv` with a leading `# ...` provenance line.
    pub fn csv(&mut self, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        let mut out = format!("# {}\n", self.stamp()).into_bytes();
        out.extend(body);
        let p = self.path("csv");
        std::fs::write(&p, out).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        self.files.push(p);
        Ok(())
    }

    pub fn svg(&mut self, series: &[Series], axes: &Axes) -> Result<(), CliError> {
        let p = self.path("svg");
        svg::emit_svg(series, axes, &self.stamp(), &p)?;
        self.files.push(p);
        Ok(())
    }

    /// Writes `<command>.json` and prints the summary lines; returns whether all checks passed.
    pub fn finish(mut self, data: Value) -> Result<bool, CliError> {
        let p = self.path("json");
        self.files.push(p.clone());
        let pass = self.checks.iter().all(|c| c.pass);
        let files: Vec<String> = self
            .files
            .iter()
            .map(|f| f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
            .collect();
        let report = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "configHash": self.hash,
            "config": self.config,
            "pass": pass,
            "checks": self.checks,
            "files": files,
            "data": data,
        });
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        for c in &self.checks {
            println!("{}", c.line(&self.command));
        }
        Ok(pass)
    }
}

/// Shortest round-trip representation; scientific outside `[1e-4, 1e15)`.
pub fn fmt(v: f64) -> String {
    let v = v + 0.0;
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
