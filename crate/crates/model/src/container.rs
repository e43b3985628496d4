//! Checkpoint file: a one-line preamble giving the header size, a JSON
//! header (kind, metadata, tensor shapes), then each tensor as
//! little-endian f32 in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

const MAGIC: &str = "pagforge-container v1";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed container: {0}")]
    Format(String),
    #[error("expected a {expected} checkpoint, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("tensor {name} has {got} values, expected {expected}")]
    BadShape { name: String, expected: usize, got: usize },
    #[error("bad metadata: {0}")]
    Meta(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: Value,
    tensors: Vec<TensorInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) -> Self {
        Tensor {
            name: name.into(),
            shape,
            data,
        }
    }

    pub fn from_f64(name: impl Into<String>, shape: Vec<usize>, data: &[f64]) -> Self {
        Self::new(name, shape, data.iter().map(|&v| v as f32).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub meta: Value,
    pub tensors: Vec<Tensor>,
}

impl Container {
    pub fn new(kind: impl Into<String>, meta: Value) -> Self {
        Container {
            kind: kind.into(),
            meta,
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, t: Tensor) {
        self.tensors.push(t);
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor, ContainerError> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| ContainerError::MissingTensor(name.to_string()))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<(), ContainerError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(ContainerError::WrongKind {
                expected: kind.to_string(),
                found: self.kind.clone(),
            })
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| TensorInfo {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                })
                .collect(),
        };
        let mut json = serde_json::to_string_pretty(&header).expect("header serializes");
        json.push('\n');
        let mut out = format!("{MAGIC} header_bytes={}\n", json.len()).into_bytes();
        out.extend_from_slice(json.as_bytes());
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| ContainerError::Format("no preamble".into()))?;
        let pre = std::str::from_utf8(&bytes[..nl]).map_err(|_| ContainerError::Format("preamble not UTF-8".into()))?;
        let len: usize = pre
            .strip_prefix(MAGIC)
            .and_then(|r| r.trim().strip_prefix("header_bytes="))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| ContainerError::Format(format!("bad preamble {pre:?}")))?;
        let start = nl + 1;
        let end = start + len;
        if bytes.len() < end {
            return Err(ContainerError::Format("truncated header".into()));
        }
        let header: Header =
            serde_json::from_slice(&bytes[start..end]).map_err(|e| ContainerError::Format(e.to_string()))?;
        let mut pos = end;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for info in header.tensors {
            let n: usize = info.shape.iter().product();
            let stop = pos + 4 * n;
            if bytes.len() < stop {
                return Err(ContainerError::Format(format!("truncated tensor {}", info.name)));
            }
            let data = bytes[pos..stop]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            pos = stop;
            tensors.push(Tensor {
                name: info.name,
                shape: info.shape,
                data,
            });
        }
        if pos != bytes.len() {
            return Err(ContainerError::Format("trailing bytes".into()));
        }
        Ok(Container {
            kind: header.kind,
            meta: header.meta,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ContainerError> {
        fs::write(path, self.to_bytes()).map_err(|source| ContainerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ContainerError> {
        let bytes = fs::read(path).map_err(|source| ContainerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = Container::new("test", serde_json::json!({"a": 1, "vocab": ["<pad>", "C"]}));
        c.push(Tensor::new("w", vec![2, 3], vec![1.0, -2.5, 3.25, f32::MIN_POSITIVE, 0.0, 7.0]));
        c.push(Tensor::new("b", vec![0], vec![]));
        let bytes = c.to_bytes();
        assert!(bytes.starts_with(b"pagforge-container v1 header_bytes="));
        assert_eq!(Container::from_bytes(&bytes).unwrap(), c);
        assert!(Container::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
