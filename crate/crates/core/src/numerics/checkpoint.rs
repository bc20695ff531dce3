//! Flat binary container of named `f64` tensors plus string metadata.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic     8 bytes  "AEMCKPT\0"
//! version   u32      currently 1
//! n_meta    u32
//!   key_len u32, key bytes (UTF-8), val_len u32, value bytes (UTF-8)
//! n_tensors u32
//!   name_len u32, name bytes (UTF-8)
//!   ndim    u32, dims u64 * ndim
//!   data    f64 * product(dims)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::{AemError, Result};

pub const MAGIC: &[u8; 8] = b"AEMCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorStore {
    pub metadata: BTreeMap<String, String>,
    pub tensors: Vec<NamedTensor>,
}

impl TensorStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        let name = name.into();
        self.tensors.retain(|t| t.name != name);
        self.tensors.push(NamedTensor { name, shape, data });
    }

    pub fn put_vector(&mut self, name: impl Into<String>, v: &Array1<f64>) {
        self.put(name, vec![v.len()], v.to_vec());
    }

    pub fn put_matrix(&mut self, name: impl Into<String>, m: &Array2<f64>) {
        self.put(name, vec![m.nrows(), m.ncols()], m.iter().copied().collect());
    }

    pub fn get(&self, name: &str) -> Result<&NamedTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| AemError::Checkpoint(format!("missing tensor {name:?}")))
    }

    pub fn vector(&self, name: &str) -> Result<Array1<f64>> {
        let t = self.get(name)?;
        if t.shape.len() != 1 {
            return Err(AemError::Checkpoint(format!("{name:?} is not a vector")));
        }
        Ok(Array1::from(t.data.clone()))
    }

    pub fn vector_of_len(&self, name: &str, len: usize) -> Result<Array1<f64>> {
        let v = self.vector(name)?;
        if v.len() != len {
            return Err(AemError::Checkpoint(format!(
                "{name:?} has length {}, expected {len}",
                v.len()
            )));
        }
        Ok(v)
    }

    pub fn matrix(&self, name: &str) -> Result<Array2<f64>> {
        let t = self.get(name)?;
        match t.shape[..] {
            [r, c] => Array2::from_shape_vec((r, c), t.data.clone())
                .map_err(|e| AemError::Checkpoint(e.to_string())),
            _ => Err(AemError::Checkpoint(format!("{name:?} is not a matrix"))),
        }
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| AemError::Checkpoint(format!("missing metadata {key:?}")))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let put_str = |out: &mut Vec<u8>, s: &str| {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        };
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        for (k, v) in &self.metadata {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            put_str(&mut out, &t.name);
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for d in &t.shape {
                out.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for x in &t.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(AemError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(AemError::Checkpoint(format!("unsupported version {version}")));
        }
        let mut store = TensorStore::new();
        for _ in 0..r.u32()? {
            let k = r.string()?;
            let v = r.string()?;
            store.metadata.insert(k, v);
        }
        for _ in 0..r.u32()? {
            let name = r.string()?;
            let ndim = r.u32()? as usize;
            let shape = (0..ndim)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let len = shape
                .iter()
                .try_fold(1usize, |acc, d| acc.checked_mul(*d))
                .ok_or_else(|| AemError::Checkpoint(format!("{name:?}: shape overflow")))?;
            let raw = r.take(len.checked_mul(8).ok_or_else(|| AemError::Checkpoint("size overflow".into()))?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            store.tensors.push(NamedTensor { name, shape, data });
        }
        if r.pos != bytes.len() {
            return Err(AemError::Checkpoint("trailing bytes".into()));
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| AemError::Checkpoint("truncated container".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| AemError::Checkpoint("invalid UTF-8 name".into()))
    }
}
