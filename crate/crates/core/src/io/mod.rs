//! On-disk formats: flow containers, track files, reports, run configs and
//! file-backed providers.

pub mod config;
pub mod flo;
pub mod flowpack;
pub mod provider_dir;
pub mod report;
pub mod trackfile;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::backend::BackendError;
use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("truncated file: need {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("plane mask mismatch: {0}")]
    MaskMismatch(String),
    #[error("extent {width}x{height} with {planes} planes does not fit in memory")]
    ExtentOverflow { width: u64, height: u64, planes: u32 },
    #[error("{path}: {message}")]
    Os { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

impl From<IoError> for BackendError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Geometry(g) => BackendError::Geometry(g),
            other => BackendError::Io(other.to_string()),
        }
    }
}

pub(crate) fn os_error(path: &Path, e: std::io::Error) -> IoError {
    IoError::Os {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| os_error(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| os_error(path, e))
}

/// Writes `bytes` to a temp file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| os_error(path, e))?;
    tmp.write_all(bytes).map_err(|e| os_error(path, e))?;
    tmp.as_file().sync_all().map_err(|e| os_error(path, e))?;
    tmp.persist(path).map_err(|e| os_error(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_is_an_os_error() {
        let err = write_atomic(Path::new("/nonexistent/dir/x"), b"").unwrap_err();
        assert!(matches!(err, IoError::Os { .. }));
    }
}
