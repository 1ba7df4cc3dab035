//! `.lpsr` checkpoint files.
//!
//! Layout:
//!
//! | bytes          | content                                              |
//! |----------------|------------------------------------------------------|
//! | 4              | magic `LPSR`                                         |
//! | 1              | format version, currently `0x01`                     |
//! | 8              | header length `L`, little-endian `u64`               |
//! | `L`            | UTF-8 JSON: `{"config": {...}, "tensors": [{"name", "shape"}]}` |
//! | rest           | tensor data, little-endian `f32`, manifest order     |

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::model::{LapSrn, LapSrnConfig};
use crate::tensor::{Real, Shape4, Tensor4};

pub const MAGIC: &[u8; 4] = b"LPSR";
pub const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint: bad magic bytes {0:02x?}")]
    BadMagic(Vec<u8>),
    #[error("unsupported checkpoint version {0} (this build reads version {VERSION})")]
    UnsupportedVersion(u8),
    #[error("truncated checkpoint: needed {needed} bytes, only {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("tensor '{name}' has shape {found:?} in the file but the configuration implies {expected:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("checkpoint manifest does not match the configured architecture: {0}")]
    Manifest(String),
    #[error("{0} unexpected bytes after the last tensor")]
    TrailingBytes(usize),
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: LapSrnConfig,
    tensors: Vec<TensorEntry>,
}

/// Serializes a model into checkpoint bytes.
pub fn encode<T: Real>(model: &LapSrn<T>) -> Result<Vec<u8>> {
    let params = model.named_params();
    let header = Header {
        config: model.config().clone(),
        tensors: params
            .iter()
            .map(|(name, p)| TensorEntry { name: name.clone(), shape: p.shape().to_vec() })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let mut out = Vec::with_capacity(13 + json.len() + 4 * model.param_count());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, p) in &params {
        for v in p.value.data() {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(CheckpointError::Truncated {
                needed: self.pos.saturating_add(n),
                available: self.bytes.len(),
            }),
        }
    }
}

/// Parses checkpoint bytes. Nothing is returned unless the whole file is
/// valid.
pub fn decode<T: Real>(bytes: &[u8]) -> Result<LapSrn<T>> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4).map_err(|_| CheckpointError::BadMagic(bytes.to_vec()))?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic.to_vec()).into());
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version).into());
    }
    let len = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
    let len = usize::try_from(len).map_err(|_| CheckpointError::Header("header length overflows".into()))?;
    let header: Header =
        serde_json::from_slice(r.take(len)?).map_err(|e| CheckpointError::Header(e.to_string()))?;
    let mut model = LapSrn::<T>::new(&header.config, 0).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::Checkpoint(CheckpointError::Header(m)),
        other => other,
    })?;
    {
        let mut params = model.named_params_mut();
        if params.len() != header.tensors.len() {
            return Err(CheckpointError::Manifest(format!(
                "{} tensors in file, architecture has {}",
                header.tensors.len(),
                params.len()
            ))
            .into());
        }
        for ((name, param), entry) in params.iter_mut().zip(&header.tensors) {
            if *name != entry.name {
                return Err(CheckpointError::Manifest(format!(
                    "expected tensor '{name}', file has '{}'",
                    entry.name
                ))
                .into());
            }
            let expected = param.shape().to_vec();
            if expected != entry.shape {
                return Err(CheckpointError::ShapeMismatch {
                    name: entry.name.clone(),
                    expected,
                    found: entry.shape.clone(),
                }
                .into());
            }
            let shape = Shape4::try_from(entry.shape.as_slice())?;
            let raw = r.take(4 * shape.len())?;
            let data = raw
                .chunks_exact(4)
                .map(|c| T::from_f64(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
                .collect();
            **param = crate::tensor::Parameter::new(Tensor4::new(shape, data)?, param.role);
        }
    }
    let rest = bytes.len() - r.pos;
    if rest != 0 {
        return Err(CheckpointError::TrailingBytes(rest).into());
    }
    Ok(model)
}

/// Writes a checkpoint, going through a temporary file so a failed write
/// never leaves a partial checkpoint under `path`.
pub fn save_checkpoint<T: Real>(model: &LapSrn<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(model)?;
    let tmp = path.with_extension("lpsr.tmp");
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(&bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<LapSrn<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    decode(&bytes)
}
