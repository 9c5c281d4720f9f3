//! Versioned model container shared by both networks.
//!
//! Layout (little-endian):
//!
//! ```text
//! 8 bytes   magic "SWCKPT\0\0"
//! u32       container version
//! u64       header length N
//! N bytes   JSON header {kind, descriptor, classes, metadata, arrays:[{name, shape}]}
//! f64 * M   parameter data, arrays in header order
//! ```
//!
//! Loading then saving reproduces the input bytes exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{ClassTable, Error, ModelParams, ParamArray, Result};

const MAGIC: &[u8; 8] = b"SWCKPT\0\0";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Network family, e.g. `"segnet"` or `"navnet"`.
    pub kind: String,
    pub descriptor: serde_json::Value,
    pub classes: Option<ClassTable>,
    pub metadata: serde_json::Value,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    kind: String,
    descriptor: serde_json::Value,
    classes: Option<ClassTable>,
    metadata: serde_json::Value,
    arrays: Vec<ArrayHeader>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayHeader {
    name: String,
    shape: Vec<usize>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            kind: self.kind.clone(),
            descriptor: self.descriptor.clone(),
            classes: self.classes.clone(),
            metadata: self.metadata.clone(),
            arrays: self
                .params
                .arrays()
                .iter()
                .map(|a| ArrayHeader {
                    name: a.name.clone(),
                    shape: a.shape.clone(),
                })
                .collect(),
        };
        // round-trip through Value so object keys come out sorted
        let header = serde_json::to_value(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let header = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut out = Vec::with_capacity(20 + header.len() + self.params.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for a in self.params.arrays() {
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CONTAINER_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = &bytes[20..];
        if body.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: Header =
            serde_json::from_slice(&body[..hlen]).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut data = &body[hlen..];
        let mut arrays = Vec::with_capacity(header.arrays.len());
        for a in header.arrays {
            let n: usize = a.shape.iter().product();
            if data.len() < n * 8 {
                return Err(Error::Checkpoint(format!("truncated data for {}", a.name)));
            }
            let values = data[..n * 8]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            data = &data[n * 8..];
            arrays.push(ParamArray {
                name: a.name,
                shape: a.shape,
                data: values,
            });
        }
        if !data.is_empty() {
            return Err(bad("trailing bytes after parameter data"));
        }
        let params = ModelParams::new(arrays)?;
        if !params.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters"));
        }
        Ok(Self {
            kind: header.kind,
            descriptor: header.descriptor,
            classes: header.classes,
            metadata: header.metadata,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ckpt() -> Checkpoint {
        Checkpoint {
            kind: "navnet".into(),
            descriptor: serde_json::json!({"widths": [2, 4], "mode": "rgbds"}),
            classes: Some(ClassTable::default()),
            metadata: serde_json::json!({"final_loss": 0.123456789, "epochs": 3}),
            params: ModelParams::new(vec![
                ParamArray {
                    name: "w".into(),
                    shape: vec![2, 3],
                    data: vec![0.1, -0.2, 1e-300, f64::MIN_POSITIVE, 3.0, -0.0],
                },
                ParamArray {
                    name: "b".into(),
                    shape: vec![2],
                    data: vec![0.5, 0.25],
                },
            ])
            .unwrap(),
        }
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let bytes = ckpt().to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.params.flat(), ckpt().params.flat());
        assert_eq!(back.descriptor, ckpt().descriptor);
    }

    #[test]
    fn rejects_damage() {
        let bytes = ckpt().to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut more = bytes.clone();
        more.push(0);
        assert!(Checkpoint::from_bytes(&more).is_err());
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&magic).is_err());
    }
}
