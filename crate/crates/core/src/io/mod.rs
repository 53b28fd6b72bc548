//! File formats: network, fire and update documents, plan files, GeoJSON export, run
//! reports, and the road-export CSV converter.

pub mod convert;
pub mod fire_file;
pub mod geojson;
pub mod plan_file;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::roadnet::{load_network, DynamicNetwork, NetworkDocument};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{}: invalid JSON: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl FileError {
    pub fn invalid(path: &Path, message: impl Into<String>) -> Self {
        FileError::Invalid { path: path.to_path_buf(), message: message.into() }
    }
}

pub fn read_text(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Read { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Write { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| FileError::Json { path: path.to_path_buf(), source })
}

/// Pretty JSON with object keys sorted, ending in a newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("value serializes to JSON");
    let mut text = serde_json::to_string_pretty(&tree).expect("JSON tree prints");
    text.push('\n');
    text
}

pub fn read_network_document(path: &Path) -> Result<NetworkDocument, FileError> {
    read_json(path)
}

pub fn read_network(path: &Path) -> Result<DynamicNetwork, FileError> {
    let doc = read_network_document(path)?;
    load_network(&doc).map_err(|e| FileError::invalid(path, e.to_string()))
}
