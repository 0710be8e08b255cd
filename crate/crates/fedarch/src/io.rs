//! Reading and writing the JSON documents the tools exchange.

use std::fs;
use std::path::{Path, PathBuf};

use fedarch_core::catalog::CatalogError;
use fedarch_core::engine::EngineError;
use fedarch_core::validator::ValidatorError;
use fedarch_core::{PatternCatalog, SimError};
use serde::de::DeserializeOwned;

/// Environment variable naming a catalog file to use instead of the built-in
/// one.
pub const CATALOG_ENV: &str = "FEDARCH_CATALOG";

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Validator(#[from] ValidatorError),
    #[error("{0}")]
    Usage(String),
}

impl AppError {
    /// 1 for domain failures, 2 for usage errors, 3 for IO and parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } | AppError::Parse { .. } | AppError::Catalog(_) => 3,
            AppError::Validator(ValidatorError::Parse(_)) => 3,
            AppError::Usage(_) => 2,
            AppError::Engine(_) | AppError::Sim(_) | AppError::Validator(_) => 1,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|source| AppError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|source| AppError::Io { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, AppError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| AppError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// Loads `explicit`, else the file named by [`CATALOG_ENV`], else the
/// built-in catalog.
pub fn load_catalog(explicit: Option<&Path>) -> Result<PatternCatalog, AppError> {
    let from_env = std::env::var_os(CATALOG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    match explicit.map(Path::to_path_buf).or(from_env) {
        Some(path) => {
            let text = read_text(&path)?;
            PatternCatalog::from_json_str(&text).map_err(|e| match e {
                CatalogError::Parse(message) | CatalogError::Schema(message) => AppError::Parse { path, message },
                other => AppError::Catalog(other),
            })
        }
        None => Ok(PatternCatalog::canonical()),
    }
}
