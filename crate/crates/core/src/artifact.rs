//! Versioned on-disk artifacts.
//!
//! Every artifact starts with a one-line JSON header `{"format":..,"version":..}`.
//! Single-object artifacts (model parts, reports) follow it with one JSON
//! line; record streams follow it with one JSON record per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("missing artifact: {0}")]
    Missing(PathBuf),
    #[error("{path}: expected format '{expected}' version {expected_version}, found '{found}' version {found_version}")]
    VersionMismatch {
        path: PathBuf,
        expected: String,
        expected_version: u32,
        found: String,
        found_version: u32,
    },
    #[error("{path}: corrupt file: {reason}")]
    CorruptFile { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(path: &Path, reason: impl ToString) -> ArtifactError {
    ArtifactError::CorruptFile {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, ArtifactError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(path))?;
        }
    }
    Ok(BufWriter::new(
        fs::File::create(path).map_err(io_err(path))?,
    ))
}

fn header_line(format: &str) -> String {
    serde_json::to_string(&Header {
        format: format.to_string(),
        version: FORMAT_VERSION,
    })
    .expect("header serializes")
}

fn check_header(
    path: &Path,
    line: Option<std::io::Result<String>>,
    format: &str,
) -> Result<(), ArtifactError> {
    let line = match line {
        Some(l) => l.map_err(io_err(path))?,
        None => return Err(corrupt(path, "empty file")),
    };
    let header: Header =
        serde_json::from_str(&line).map_err(|e| corrupt(path, format!("bad header: {e}")))?;
    if header.format != format || header.version != FORMAT_VERSION {
        return Err(ArtifactError::VersionMismatch {
            path: path.to_path_buf(),
            expected: format.to_string(),
            expected_version: FORMAT_VERSION,
            found: header.format,
            found_version: header.version,
        });
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<fs::File>, ArtifactError> {
    match fs::File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(ArtifactError::Missing(path.to_path_buf()))
        }
        Err(e) => Err(io_err(path)(e)),
    }
}

pub fn write_object<T: Serialize>(
    path: &Path,
    format: &str,
    value: &T,
) -> Result<(), ArtifactError> {
    let mut w = create(path)?;
    let body = serde_json::to_string(value).map_err(|e| corrupt(path, e))?;
    writeln!(w, "{}", header_line(format)).map_err(io_err(path))?;
    writeln!(w, "{body}").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_object<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T, ArtifactError> {
    let mut lines = open(path)?.lines();
    check_header(path, lines.next(), format)?;
    let body = match lines.next() {
        Some(l) => l.map_err(io_err(path))?,
        None => return Err(corrupt(path, "missing body")),
    };
    serde_json::from_str(&body).map_err(|e| corrupt(path, e))
}

pub fn write_records<T: Serialize>(
    path: &Path,
    format: &str,
    records: &[T],
) -> Result<(), ArtifactError> {
    let mut w = create(path)?;
    writeln!(w, "{}", header_line(format)).map_err(io_err(path))?;
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| corrupt(path, e))?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_records<T: DeserializeOwned>(
    path: &Path,
    format: &str,
) -> Result<Vec<T>, ArtifactError> {
    let mut lines = open(path)?.lines();
    check_header(path, lines.next(), format)?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| corrupt(path, format!("record {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Plain text lines after the header; for formats that are not JSON.
pub fn write_lines(
    path: &Path,
    format: &str,
    lines: impl IntoIterator<Item = String>,
) -> Result<(), ArtifactError> {
    let mut w = create(path)?;
    writeln!(w, "{}", header_line(format)).map_err(io_err(path))?;
    for line in lines {
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_lines(path: &Path, format: &str) -> Result<Vec<String>, ArtifactError> {
    let mut lines = open(path)?.lines();
    check_header(path, lines.next(), format)?;
    lines.map(|l| l.map_err(io_err(path))).collect()
}

/// Errors with [`ArtifactError::Missing`] naming `path` if it does not exist.
pub fn require(path: &Path) -> Result<(), ArtifactError> {
    if path.exists() {
        Ok(())
    } else {
        Err(ArtifactError::Missing(path.to_path_buf()))
    }
}
