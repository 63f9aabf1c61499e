//! Binary policy file format (all integers and floats little-endian):
//!
//! | field | type |
//! |---|---|
//! | magic | 4 bytes, `SSPF` |
//! | format_version | u32 (currently 1) |
//! | obs_layout_version | u32 byte length + UTF-8 |
//! | preset | u32 byte length + UTF-8 (may be empty) |
//! | training_steps | u64 |
//! | layer count K | u32 (≥ 2) |
//! | layer sizes | K × u32 |
//! | parameter count N | u64, must equal Σ(n_in·n_out + n_out) |
//! | parameters | N × f32: W₁, b₁, W₂, b₂, … (each W row-major n_out × n_in) |
//!
//! Nothing may follow the parameter blob.

use std::path::Path;

use thiserror::Error;

use super::{parameter_count, MlpPolicy, PolicyError, PolicyMetadata};

pub const POLICY_MAGIC: [u8; 4] = *b"SSPF";
pub const POLICY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PolicyFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic at byte 0 (not a policy file)")]
    BadMagic { path: String },
    #[error("{path}: unsupported format version {found} at byte 4 (this build reads version {supported})")]
    UnsupportedVersion {
        path: String,
        found: u32,
        supported: u32,
    },
    #[error("{path}: truncated at byte {offset}: needed {needed} bytes for {what}, {available} available")]
    Truncated {
        path: String,
        offset: usize,
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("{path}: parameter blob has {actual} floats, layer sizes {layer_sizes:?} require {expected} (byte {offset})")]
    BlobLength {
        path: String,
        offset: usize,
        layer_sizes: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("{path}: invalid UTF-8 in {what} at byte {offset}")]
    Utf8 {
        path: String,
        offset: usize,
        what: &'static str,
    },
    #[error("{path}: {extra} trailing bytes after the parameter blob at byte {offset}")]
    TrailingBytes {
        path: String,
        offset: usize,
        extra: usize,
    },
    #[error("{path}: {source}")]
    Policy {
        path: String,
        #[source]
        source: PolicyError,
    },
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], PolicyFileError> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(PolicyFileError::Truncated {
                path: self.path.to_string(),
                offset: self.pos,
                what,
                needed: n,
                available,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, PolicyFileError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, PolicyFileError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &'static str) -> Result<String, PolicyFileError> {
        let len = self.u32(what)? as usize;
        let offset = self.pos;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec()).map_err(|_| PolicyFileError::Utf8 {
            path: self.path.to_string(),
            offset,
            what,
        })
    }
}

pub fn encode_policy(policy: &MlpPolicy) -> Vec<u8> {
    let params = policy.parameters();
    let mut out = Vec::with_capacity(64 + 4 * params.len());
    out.extend_from_slice(&POLICY_MAGIC);
    out.extend_from_slice(&POLICY_FORMAT_VERSION.to_le_bytes());
    for s in [policy.layout_version(), policy.metadata.preset.as_str()] {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
    out.extend_from_slice(&policy.metadata.training_steps.to_le_bytes());
    out.extend_from_slice(&(policy.layer_sizes().len() as u32).to_le_bytes());
    for &n in policy.layer_sizes() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

/// Parses a policy file image; `path` is only used in error messages.
pub fn decode_policy(bytes: &[u8], path: &str) -> Result<MlpPolicy, PolicyFileError> {
    let mut r = Reader {
        bytes,
        pos: 0,
        path,
    };
    if r.take(4, "magic")? != POLICY_MAGIC {
        return Err(PolicyFileError::BadMagic {
            path: path.to_string(),
        });
    }
    let version = r.u32("format_version")?;
    if version != POLICY_FORMAT_VERSION {
        return Err(PolicyFileError::UnsupportedVersion {
            path: path.to_string(),
            found: version,
            supported: POLICY_FORMAT_VERSION,
        });
    }
    let layout = r.string("obs_layout_version")?;
    let preset = r.string("preset")?;
    let training_steps = r.u64("training_steps")?;
    let k = r.u32("layer count")? as usize;
    let sizes_bytes = r.take(4 * k, "layer sizes")?;
    let layer_sizes: Vec<usize> = sizes_bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let count_offset = r.pos;
    let count = r.u64("parameter count")? as usize;
    let expected = parameter_count(&layer_sizes);
    if count != expected {
        return Err(PolicyFileError::BlobLength {
            path: path.to_string(),
            offset: count_offset,
            layer_sizes,
            expected,
            actual: count,
        });
    }
    let blob = r.take(4 * count, "parameter blob")?;
    if r.pos != bytes.len() {
        return Err(PolicyFileError::TrailingBytes {
            path: path.to_string(),
            offset: r.pos,
            extra: bytes.len() - r.pos,
        });
    }
    let params: Vec<f32> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    MlpPolicy::from_parameters(
        layer_sizes,
        &params,
        layout,
        PolicyMetadata {
            preset,
            training_steps,
        },
    )
    .map_err(|source| PolicyFileError::Policy {
        path: path.to_string(),
        source,
    })
}

pub fn save_policy(policy: &MlpPolicy, path: impl AsRef<Path>) -> Result<(), PolicyFileError> {
    let path = path.as_ref();
    std::fs::write(path, encode_policy(policy)).map_err(|source| PolicyFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<MlpPolicy, PolicyFileError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| PolicyFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_policy(&bytes, &path.display().to_string())
}
