//! On-disk network format: `<stem>.json` manifest + `<stem>.bin` blob of
//! little-endian `f32` values concatenated in manifest order.

use super::network::{Network, NetworkSpec};
use super::params::{ParamArray, ParamSet};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("checkpoint mismatch: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the blob.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkManifest {
    pub format_version: u32,
    pub spec: NetworkSpec,
    pub blob: String,
    pub dtype: String,
    pub arrays: Vec<ArrayEntry>,
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_network<T: Scalar>(net: &Network<T>, dir: &Path, stem: &str) -> Result<(), CheckpointError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut blob: Vec<u8> = Vec::with_capacity(net.params.num_params() * 4);
    let mut arrays = Vec::with_capacity(net.params.arrays.len());
    for a in &net.params.arrays {
        arrays.push(ArrayEntry {
            name: a.name.clone(),
            shape: a.shape.clone(),
            offset: blob.len(),
        });
        for v in &a.value {
            blob.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
    }
    let manifest = NetworkManifest {
        format_version: FORMAT_VERSION,
        spec: net.spec,
        blob: format!("{stem}.bin"),
        dtype: "f32le".into(),
        arrays,
    };
    let bin_path = dir.join(&manifest.blob);
    fs::write(&bin_path, &blob).map_err(io_err(&bin_path))?;
    let json_path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&json_path, text).map_err(io_err(&json_path))?;
    Ok(())
}

pub fn load_network<T: Scalar>(dir: &Path, stem: &str) -> Result<Network<T>, CheckpointError> {
    let json_path = dir.join(format!("{stem}.json"));
    let text = fs::read_to_string(&json_path).map_err(io_err(&json_path))?;
    let manifest: NetworkManifest = serde_json::from_str(&text).map_err(|source| CheckpointError::Json {
        path: json_path.clone(),
        source,
    })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Mismatch(format!(
            "format version {} (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    if manifest.dtype != "f32le" {
        return Err(CheckpointError::Mismatch(format!("unsupported dtype {}", manifest.dtype)));
    }
    manifest.spec.validate().map_err(CheckpointError::Mismatch)?;
    let layout = manifest.spec.layout();
    if layout.len() != manifest.arrays.len()
        || layout
            .iter()
            .zip(&manifest.arrays)
            .any(|((n, s), e)| n != &e.name || s != &e.shape)
    {
        return Err(CheckpointError::Mismatch(format!(
            "array layout in {} does not match its network spec",
            json_path.display()
        )));
    }
    let bin_path = dir.join(&manifest.blob);
    let blob = fs::read(&bin_path).map_err(io_err(&bin_path))?;
    let mut arrays = Vec::with_capacity(layout.len());
    for entry in &manifest.arrays {
        let n: usize = entry.shape.iter().product();
        let end = entry.offset + 4 * n;
        if end > blob.len() {
            return Err(CheckpointError::Mismatch(format!(
                "blob {} too short for array {}",
                bin_path.display(),
                entry.name
            )));
        }
        let value = blob[entry.offset..end]
            .chunks_exact(4)
            .map(|b| T::from_f64_lossy(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64))
            .collect();
        arrays.push(ParamArray::new(entry.name.clone(), entry.shape.clone(), value));
    }
    Ok(Network {
        spec: manifest.spec,
        params: ParamSet::new(arrays),
    })
}
