//! Shared plumbing: error-to-exit-code mapping, output headers, and
//! loaders used by every subcommand.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use micg_core::{ingest_records, parse_catalog_with_params, IndicatorCatalog, MissingPolicy};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Failures are split by exit code: validation problems (bad arguments,
/// malformed inputs, core-library rejections) exit 2; filesystem
/// problems exit 3.
#[derive(Debug)]
pub enum RunError {
    Validation(String),
    Io(String),
}

impl RunError {
    pub fn code(&self) -> u8 {
        match self {
            RunError::Validation(_) => 2,
            RunError::Io(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Validation(msg) | RunError::Io(msg) => f.write_str(msg),
        }
    }
}

pub type RunResult = Result<(), RunError>;

pub fn invalid(err: impl fmt::Display) -> RunError {
    RunError::Validation(err.to_string())
}

/// Header line stamped at the top of every output file: tool version,
/// 12-hex digest of the canonical run configuration, and the seed.
pub fn header_line(config: &impl Serialize, seed: u64) -> String {
    format!(
        "# micg {} config={} seed={seed}\n",
        env!("CARGO_PKG_VERSION"),
        config_digest(config)
    )
}

/// Same stamp as an XML comment, placed before the SVG root element.
pub fn svg_header_line(config: &impl Serialize, seed: u64) -> String {
    format!(
        "<!-- micg {} config={} seed={seed} -->\n",
        env!("CARGO_PKG_VERSION"),
        config_digest(config)
    )
}

fn config_digest(config: &impl Serialize) -> String {
    let json = serde_json::to_string(config).expect("run configuration serializes");
    let digest = Sha256::digest(json.as_bytes());
    let mut hex = String::with_capacity(12);
    for byte in digest.iter().take(6) {
        use fmt::Write;
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

pub fn read_file(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &[u8]) -> RunResult {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, contents).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

pub fn load_catalog(
    path: &Path,
    params: &BTreeMap<String, f64>,
) -> Result<IndicatorCatalog, RunError> {
    let text = read_file(path)?;
    parse_catalog_with_params(&text, params).map_err(invalid)
}

pub fn load_dataset(
    path: &Path,
    catalog: &IndicatorCatalog,
) -> Result<micg_core::dataset::Ingest, RunError> {
    let file =
        fs::File::open(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    ingest_records(file, catalog).map_err(invalid)
}

/// `name=value` pairs for catalog parameters and generator probabilities.
pub fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    if name.is_empty() {
        return Err(format!("empty name in `{s}`"));
    }
    let value: f64 = value
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.to_string(), value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[clap(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum PolicyArg {
    ExcludeChild,
    TreatNondeprived,
    Renormalize,
}

impl From<PolicyArg> for MissingPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::ExcludeChild => MissingPolicy::ExcludeChild,
            PolicyArg::TreatNondeprived => MissingPolicy::TreatNondeprived,
            PolicyArg::Renormalize => MissingPolicy::Renormalize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[clap(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum SchemeArg {
    Equal,
    Custom,
    Pca,
}
