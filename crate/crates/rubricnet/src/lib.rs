//! File formats, bundled fixtures, the reproduction harness and the oracle
//! suites behind the `rubricnet` command line. Inference itself lives in
//! [`rubricnet_core`].

use std::fs;
use std::io;
use std::path::Path;

pub mod answers;
pub mod fixtures;
pub mod formats;
pub mod reproduce;
pub mod validate;

pub use rubricnet_core as core;

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{what}: {source}")]
    Json { what: &'static str, source: serde_json::Error },

    #[error("{what}: {field}: {message}")]
    Field { what: &'static str, field: String, message: String },

    #[error("{what}, line {line}: {message}")]
    Line { what: &'static str, line: u64, message: String },

    #[error("{what}: {source}")]
    Core { what: &'static str, source: rubricnet_core::Error },

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl FileError {
    pub(crate) fn json(what: &'static str, source: serde_json::Error) -> Self {
        FileError::Json { what, source }
    }

    pub(crate) fn field(what: &'static str, field: String, message: String) -> Self {
        FileError::Field { what, field, message }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        FileError::Io { path: path.display().to_string(), source }
    }
}

pub fn read_to_string(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|e| FileError::io(path, e))
}

/// Writes through a temporary sibling file and renames it into place, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), FileError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FileError::io(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| FileError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        FileError::io(path, e)
    })
}
