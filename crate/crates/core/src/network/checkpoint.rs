//! Self-describing checkpoint files: a text header with the architecture
//! and metadata, a little-endian f64 parameter payload, and a trailing
//! CRC-32 over everything before it. Round-trips are bit-exact.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{NetworkParams, NetworkSpec};

const MAGIC: &[u8; 8] = b"SVTPINN\0";
const FORMAT_VERSION: u32 = 1;

/// A loaded checkpoint: architecture, flat parameters and free-form
/// metadata (seed, problem id, epoch count, loss weights, …).
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint format version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("checkpoint file is truncated")]
    Truncated,
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("malformed header: {reason}")]
    MalformedHeader { reason: String },
    #[error("checkpoint network does not match: expected input dim {expected}, found {found}")]
    SpecMismatch { expected: usize, found: usize },
}

impl Checkpoint {
    /// Error unless the stored architecture matches `expected` exactly.
    pub fn expect_spec(&self, expected: &NetworkSpec) -> Result<(), CheckpointError> {
        if &self.spec != expected {
            return Err(CheckpointError::SpecMismatch {
                expected: expected.input_dim(),
                found: self.spec.input_dim(),
            });
        }
        Ok(())
    }
}

fn header_text(spec: &NetworkSpec, metadata: &BTreeMap<String, String>) -> String {
    let hidden: Vec<String> = spec.hidden().iter().map(|w| w.to_string()).collect();
    let mut text = format!(
        "input_dim={}\nhidden={}\nactivation=tanh\nparam_count={}\n",
        spec.input_dim(),
        hidden.join(","),
        spec.param_count()
    );
    for (key, value) in metadata {
        text.push_str(&format!("meta.{key}={value}\n"));
    }
    text
}

/// Write `params` with its architecture and metadata to `path`.
pub fn save_checkpoint(
    path: &Path,
    spec: &NetworkSpec,
    params: &[f64],
    metadata: &BTreeMap<String, String>,
) -> Result<(), CheckpointError> {
    assert_eq!(params.len(), spec.param_count(), "parameter length");
    let header = header_text(spec, metadata);
    let mut bytes = Vec::with_capacity(24 + header.len() + 8 * params.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
    bytes.extend_from_slice(header.as_bytes());
    for p in params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes);
    let crc = hasher.finalize();
    bytes.extend_from_slice(&crc.to_le_bytes());

    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

fn parse_header(text: &str) -> Result<(NetworkSpec, usize, BTreeMap<String, String>), CheckpointError> {
    let mut input_dim = None;
    let mut hidden = None;
    let mut param_count = None;
    let mut metadata = BTreeMap::new();
    for line in text.lines() {
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CheckpointError::MalformedHeader {
                reason: format!("line without '=': {line:?}"),
            }
        })?;
        match key {
            "input_dim" => {
                input_dim = Some(value.parse::<usize>().map_err(|e| {
                    CheckpointError::MalformedHeader {
                        reason: format!("input_dim: {e}"),
                    }
                })?)
            }
            "hidden" => {
                let widths: Result<Vec<usize>, _> =
                    value.split(',').map(|w| w.trim().parse::<usize>()).collect();
                hidden = Some(widths.map_err(|e| CheckpointError::MalformedHeader {
                    reason: format!("hidden: {e}"),
                })?);
            }
            "activation" => {
                if value != "tanh" {
                    return Err(CheckpointError::MalformedHeader {
                        reason: format!("unsupported activation {value:?}"),
                    });
                }
            }
            "param_count" => {
                param_count = Some(value.parse::<usize>().map_err(|e| {
                    CheckpointError::MalformedHeader {
                        reason: format!("param_count: {e}"),
                    }
                })?)
            }
            _ => {
                if let Some(meta_key) = key.strip_prefix("meta.") {
                    metadata.insert(meta_key.to_string(), value.to_string());
                } else {
                    return Err(CheckpointError::MalformedHeader {
                        reason: format!("unknown header key {key:?}"),
                    });
                }
            }
        }
    }
    let input_dim = input_dim.ok_or(CheckpointError::MalformedHeader {
        reason: "missing input_dim".into(),
    })?;
    let hidden = hidden.ok_or(CheckpointError::MalformedHeader {
        reason: "missing hidden".into(),
    })?;
    let param_count = param_count.ok_or(CheckpointError::MalformedHeader {
        reason: "missing param_count".into(),
    })?;
    let spec = NetworkSpec::new(input_dim, hidden).map_err(|e| {
        CheckpointError::MalformedHeader {
            reason: e.to_string(),
        }
    })?;
    if spec.param_count() != param_count {
        return Err(CheckpointError::MalformedHeader {
            reason: format!(
                "param_count {} does not match architecture ({})",
                param_count,
                spec.param_count()
            ),
        });
    }
    Ok((spec, param_count, metadata))
}

/// Read a checkpoint back; the parameter payload is verified against the
/// trailing CRC-32 before anything is returned.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(CheckpointError::Truncated);
    }
    if &bytes[0..8] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion { found: version });
    }
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + header_len {
        return Err(CheckpointError::Truncated);
    }
    let header =
        std::str::from_utf8(&bytes[16..16 + header_len]).map_err(|e| {
            CheckpointError::MalformedHeader {
                reason: format!("header is not UTF-8: {e}"),
            }
        })?;
    let (spec, param_count, metadata) = parse_header(header)?;

    let payload_start = 16 + header_len;
    let expected_len = payload_start + 8 * param_count + 4;
    if bytes.len() < expected_len {
        return Err(CheckpointError::Truncated);
    }
    let crc_start = expected_len - 4;
    let stored = u32::from_le_bytes(bytes[crc_start..crc_start + 4].try_into().unwrap());
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes[..crc_start]);
    let computed = hasher.finalize();
    if stored != computed {
        return Err(CheckpointError::ChecksumMismatch { stored, computed });
    }

    let params = bytes[payload_start..crc_start]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Checkpoint {
        spec,
        params,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;

    fn sample_metadata() -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("seed".into(), "7".into());
        m.insert("problem".into(), "torsion2d/circle".into());
        m.insert("epochs".into(), "10000".into());
        m.insert("lambda_b".into(), "100000".into());
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let spec = NetworkSpec::new(4, vec![64, 64, 64, 64]).unwrap();
        let params = init_params(&spec, 99);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &spec, &params, &sample_metadata()).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.spec, spec);
        assert_eq!(loaded.metadata, sample_metadata());
        assert_eq!(loaded.params.len(), params.len());
        for (a, b) in loaded.params.iter().zip(&params) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let spec = NetworkSpec::new(1, vec![8]).unwrap();
        let params = init_params(&spec, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &spec, &params, &BTreeMap::new()).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        let flip = bytes.len() - 20;
        bytes[flip] ^= 0x01;
        std::fs::write(&path, &bytes).unwrap();

        match load_checkpoint(&path) {
            Err(CheckpointError::ChecksumMismatch { .. }) => {}
            other => panic!("expected checksum error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_detected() {
        let spec = NetworkSpec::new(1, vec![8]).unwrap();
        let params = init_params(&spec, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &spec, &params, &BTreeMap::new()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::Truncated)
        ));
    }

    #[test]
    fn wrong_magic_is_not_a_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        std::fs::write(&path, b"definitely not a checkpoint file").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(CheckpointError::BadMagic)
        ));
    }

    #[test]
    fn spec_mismatch_is_reported_on_typed_load() {
        let spec4 = NetworkSpec::new(4, vec![8]).unwrap();
        let params = init_params(&spec4, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &spec4, &params, &BTreeMap::new()).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        let spec2 = NetworkSpec::new(2, vec![8]).unwrap();
        assert!(matches!(
            loaded.expect_spec(&spec2),
            Err(CheckpointError::SpecMismatch {
                expected: 2,
                found: 4
            })
        ));
    }
}
