//! EVF1 activation bundles.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `EVF1`                            |
//! | 4      | 2    | version (1)                             |
//! | 6      | 2    | dtype tag (1 = f32 LE)                  |
//! | 8      | 4    | channels C                              |
//! | 12     | 4    | height H                                |
//! | 16     | 4    | width W                                 |
//! | 20     | 4    | provenance length P                     |
//! | 24     | P    | provenance, UTF-8 JSON                  |
//! | 24+P   | 4CHW | payload, channel-major then row-major   |

use evfront_core::ImageTensor;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"EVF1";
pub const VERSION: u16 = 1;
pub const DTYPE_F32_LE: u16 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub source_sha256: String,
    /// `retina`, `vone` or `ev`.
    pub front: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBundle {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
    pub provenance: Provenance,
}

fn dim(v: usize, name: &str) -> CliResult<u32> {
    u32::try_from(v).map_err(|_| CliError::Compute(format!("{name} {v} does not fit the header")))
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Io(format!("malformed EVF1 bundle: {}", msg.into()))
}

impl ActivationBundle {
    pub fn from_tensor(t: &ImageTensor, provenance: Provenance) -> Self {
        Self {
            channels: t.channels(),
            height: t.height(),
            width: t.width(),
            data: t.data().iter().map(|&v| v as f32).collect(),
            provenance,
        }
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        if self.data.len() != self.channels * self.height * self.width {
            return Err(CliError::Compute("payload length does not match C*H*W".into()));
        }
        let prov = serde_json::to_vec(&self.provenance).map_err(|e| CliError::Compute(e.to_string()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + prov.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&DTYPE_F32_LE.to_le_bytes());
        for (v, name) in [(self.channels, "channels"), (self.height, "height"), (self.width, "width")] {
            out.extend_from_slice(&dim(v, name)?.to_le_bytes());
        }
        out.extend_from_slice(&dim(prov.len(), "provenance length")?.to_le_bytes());
        out.extend_from_slice(&prov);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(bad("truncated header"));
        }
        if &bytes[0..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        if u16_at(4) != VERSION {
            return Err(bad(format!("unsupported version {}", u16_at(4))));
        }
        if u16_at(6) != DTYPE_F32_LE {
            return Err(bad(format!("unsupported dtype {}", u16_at(6))));
        }
        let (channels, height, width) = (u32_at(8), u32_at(12), u32_at(16));
        let plen = u32_at(20);
        let body = &bytes[HEADER_LEN..];
        if body.len() < plen {
            return Err(bad("truncated provenance"));
        }
        let provenance = serde_json::from_slice(&body[..plen]).map_err(|e| bad(e.to_string()))?;
        let payload = &body[plen..];
        let n = channels
            .checked_mul(height)
            .and_then(|v| v.checked_mul(width))
            .ok_or_else(|| bad("dimensions overflow"))?;
        if payload.len() != 4 * n {
            return Err(bad(format!("payload is {} bytes, expected {}", payload.len(), 4 * n)));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            channels,
            height,
            width,
            data,
            provenance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config_sha256: "ab".into(),
            seed: 7,
            source_sha256: "cd".into(),
            front: "retina".into(),
        }
    }

    #[test]
    fn header_fields() {
        let b = ActivationBundle {
            channels: 2,
            height: 1,
            width: 3,
            data: vec![0.0, 1.0, -2.5, 3.0, 4.0, f32::MIN_POSITIVE],
            provenance: prov(),
        };
        let bytes = b.to_bytes().unwrap();
        assert_eq!(&bytes[0..4], b"EVF1");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        let plen = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 24 + plen + 6 * 4);
        assert_eq!(ActivationBundle::from_bytes(&bytes).unwrap(), b);
    }

    #[test]
    fn rejects_corruption() {
        let b = ActivationBundle {
            channels: 1,
            height: 1,
            width: 1,
            data: vec![1.0],
            provenance: prov(),
        };
        let bytes = b.to_bytes().unwrap();
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(ActivationBundle::from_bytes(&wrong).is_err());
        assert!(ActivationBundle::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(ActivationBundle::from_bytes(&bytes[..10]).is_err());
    }
}
