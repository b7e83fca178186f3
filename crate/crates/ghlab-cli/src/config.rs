//! Run configuration: JSON file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Every field is optional; commands fill in their own defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poly: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<bool>,
}

/// Flags shared by all subcommands; anything set here overrides the JSON config.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for report files.
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = "GHLAB_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid resolution per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Scale parameter(s), comma separated, ascending.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Option<Vec<f64>>,
    /// Mode cutoff.
    #[arg(long = "M", alias = "m-max")]
    pub m: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub ell: Option<f64>,
    /// Polynomial such as `1+z` or `1 + z1 + 0.5*z1*z2^2`.
    #[arg(long)]
    pub poly: Option<String>,
    /// Sample range `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    #[arg(long)]
    pub kappa: Option<u8>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub radius: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tolerance: Option<f64>,
    /// Finite-difference step.
    #[arg(long, allow_negative_numbers = true)]
    pub step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write an SVG plot.
    #[arg(long)]
    pub svg: bool,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text)
}

pub fn parse_json(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("field '{path}': {}", e.inner()))
    })
}

macro_rules! overlay {
    ($cfg:ident, $p:ident, $($f:ident),*) => {
        $( if $p.$f.is_some() { $cfg.$f = $p.$f.clone(); } )*
    };
}

pub fn merge(params: &Params) -> Result<RunConfig, CliError> {
    let mut cfg = match &params.config {
        Some(p) => load(p)?,
        None => RunConfig::default(),
    };
    overlay!(cfg, params, n, grid, lambda, m, a, ell, poly, range, kappa, nodes, r_min, r_max, points, radius, tolerance, step, seed);
    if params.svg {
        cfg.svg = Some(true);
    }
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Config(m));
    if let Some(g) = cfg.grid {
        if g < 2 {
            return bad(format!("field 'grid': resolution must be at least 2, got {g}"));
        }
    }
    for (name, v) in [("tolerance", cfg.tolerance), ("step", cfg.step), ("radius", cfg.radius)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("field '{name}': must be positive, got {v}"));
            }
        }
    }
    if let Some(l) = &cfg.lambda {
        if l.is_empty() {
            return bad("field 'lambda': empty list".into());
        }
        if l.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad(format!("field 'lambda': values must be positive, got {l:?}"));
        }
        if l.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("field 'lambda': values must be strictly ascending, got {l:?}"));
        }
    }
    if let (Some(a), Some(b)) = (cfg.r_min, cfg.r_max) {
        if !(a > 0.0 && b > a) {
            return bad(format!("fields 'rMin'/'rMax': need 0 < rMin < rMax, got {a}, {b}"));
        }
    }
    if let Some(r) = &cfg.range {
        parse_range(r)?;
    }
    Ok(())
}

/// `start:stop:step` inclusive of `stop` up to rounding.
pub fn parse_range(s: &str) -> Result<Vec<f64>, CliError> {
    let err = |m: &str| CliError::Config(format!("field 'range': {m} in '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(err("expected start:stop:step"));
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| err("bad number")))
        .collect::<Result<_, _>>()?;
    let (a, b, h) = (v[0], v[1], v[2]);
    if !(a.is_finite() && b.is_finite() && h > 0.0 && h.is_finite()) || b < a {
        return Err(err("need start <= stop and step > 0"));
    }
    let count = ((b - a) / h + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(err("too many samples"));
    }
    Ok((0..count).map(|k| a + k as f64 * h).collect())
}

/// Hex SHA-256 of the command name and the canonical JSON of the merged config.
pub fn config_hash(command: &str, cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(cfg).expect("config serializes"));
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
