//! Scenario files and atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use raas_core::{Scenario, ScenarioFile, ValidationError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        source: ValidationError,
    },
}

pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario, LoadError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e
            .to_string()
            .rsplit_once(" at line ")
            .map_or(e.to_string(), |(m, _)| m.to_string()),
    })?;
    Scenario::new(file).map_err(|source| LoadError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path)
}

pub fn scenario_json(scenario: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(scenario.file()).expect("scenario serializes");
    s.push('\n');
    s
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see half a file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{}.tmp{}", name, std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn save_scenario(path: &Path, scenario: &Scenario) -> std::io::Result<()> {
    write_atomic(path, scenario_json(scenario).as_bytes())
}
