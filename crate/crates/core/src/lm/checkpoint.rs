use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::corpus::Vocab;
use super::model::LanguageModel;
use crate::autograd::Parameters;
use crate::math::RngState;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to continue training bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub vocab: Vocab,
    pub model: LanguageModel,
    pub rng: RngState,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimiser steps.
    pub step: usize,
    pub best_valid_ppl: Option<f64>,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the data file, in f64 elements.
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    config: TrainConfig,
    vocab: Vocab,
    tensors: Vec<TensorEntry>,
    elements: usize,
    /// FNV-1a 64 of the data file, hex.
    checksum: String,
    rng: RngState,
    epoch: usize,
    step: usize,
    best_valid_ppl: Option<f64>,
    best_epoch: Option<usize>,
}

/// Data file stored next to a manifest.
pub fn data_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl Checkpoint {
    /// Writes the JSON manifest to `manifest` and the little-endian f64
    /// buffer beside it (see [`data_path`]). Both files are replaced
    /// atomically.
    pub fn save(&self, manifest: &Path) -> Result<()> {
        let mut tensors = Vec::new();
        let mut offset = 0;
        self.model.visit(&mut |name, shape, data| {
            tensors.push(TensorEntry {
                name: name.to_string(),
                shape: shape.to_vec(),
                offset,
            });
            offset += data.len();
        });
        let flat = self.model.to_flat();
        let mut bytes = Vec::with_capacity(flat.len() * 8);
        for v in &flat {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let m = Manifest {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            tensors,
            elements: flat.len(),
            checksum: format!("{:016x}", fnv1a(&bytes)),
            rng: self.rng,
            epoch: self.epoch,
            step: self.step,
            best_valid_ppl: self.best_valid_ppl,
            best_epoch: self.best_epoch,
        };
        let json = serde_json::to_vec_pretty(&m)?;
        write_atomic(&data_path(manifest), &bytes)?;
        write_atomic(manifest, &json)
    }

    pub fn load(manifest: &Path) -> Result<Checkpoint> {
        let text = std::fs::read(manifest).map_err(|e| Error::io(manifest, e))?;
        let m: Manifest = serde_json::from_slice(&text)
            .map_err(|e| Error::Integrity(format!("{}: unreadable manifest: {e}", manifest.display())))?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Integrity(format!(
                "unsupported checkpoint format {} (expected {FORMAT_VERSION})",
                m.format_version
            )));
        }
        let dpath = data_path(manifest);
        let bytes = std::fs::read(&dpath).map_err(|e| Error::io(&dpath, e))?;
        if bytes.len() != m.elements * 8 {
            return Err(Error::Integrity(format!(
                "{}: expected {} bytes, found {}",
                dpath.display(),
                m.elements * 8,
                bytes.len()
            )));
        }
        if format!("{:016x}", fnv1a(&bytes)) != m.checksum {
            return Err(Error::Integrity(format!("{}: checksum mismatch", dpath.display())));
        }
        m.config.validate()?;
        let mut model = LanguageModel::zeros(m.vocab.len(), m.config.units, m.config.layers);
        let mut expected = Vec::new();
        let mut offset = 0;
        model.visit(&mut |name, shape, data| {
            expected.push(TensorEntry {
                name: name.to_string(),
                shape: shape.to_vec(),
                offset,
            });
            offset += data.len();
        });
        if expected != m.tensors || offset != m.elements {
            return Err(Error::Integrity("tensor directory does not match the configured model".into()));
        }
        let flat: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        model.copy_from_flat(&flat);
        Ok(Checkpoint {
            config: m.config,
            vocab: m.vocab,
            model,
            rng: m.rng,
            epoch: m.epoch,
            step: m.step,
            best_valid_ppl: m.best_valid_ppl,
            best_epoch: m.best_epoch,
        })
    }
}
