//! Binary container shared by datasets, checkpoints, and optimizer state.
//!
//! Layout:
//!
//! ```text
//! magic    4 bytes   e.g. b"NQP1"
//! hlen     u64 LE    length of the JSON header in bytes
//! header   hlen bytes UTF-8 JSON, with an "arrays" manifest
//! padding  zero bytes up to the next multiple of 8
//! data     little-endian f64 arrays; offsets in the manifest are byte
//!          offsets from the start of this section
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Debug, Default)]
pub struct ContainerWriter {
    entries: Vec<ArrayEntry>,
    data: Vec<u8>,
}

impl ContainerWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], values: &[f64]) {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.entries.push(ArrayEntry {
            name: name.into(),
            shape: shape.to_vec(),
            offset: self.data.len(),
        });
        self.data.reserve(values.len() * 8);
        for v in values {
            self.data.extend_from_slice(&v.to_le_bytes());
        }
    }

    /// Serializes the container; `header` must be a JSON object and gains an
    /// `"arrays"` key.
    pub fn to_bytes(&self, magic: &[u8; 4], mut header: Value) -> Result<Vec<u8>> {
        let obj = header
            .as_object_mut()
            .ok_or_else(|| Error::Format("container header must be a JSON object".into()))?;
        obj.insert("arrays".into(), serde_json::to_value(&self.entries)?);
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + json.len() + self.data.len());
        out.extend_from_slice(magic);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        while out.len() % 8 != 0 {
            out.push(0);
        }
        out.extend_from_slice(&self.data);
        Ok(out)
    }

    pub fn write(&self, path: &Path, magic: &[u8; 4], header: Value) -> Result<()> {
        let bytes = self.to_bytes(magic, header)?;
        write_atomic(path, &bytes)
    }
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug)]
pub struct Container {
    pub header: Value,
    arrays: BTreeMap<String, (Vec<usize>, Vec<f64>)>,
}

impl Container {
    pub fn from_bytes(bytes: &[u8], magic: &[u8; 4]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != magic {
            return Err(Error::Format(format!(
                "missing magic {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let hlen = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let hend = 12usize
            .checked_add(hlen)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format("header length exceeds file size".into()))?;
        let header: Value = serde_json::from_slice(&bytes[12..hend])?;
        let data_start = hend.div_ceil(8) * 8;
        let data = bytes.get(data_start..).unwrap_or(&[]);
        let entries: Vec<ArrayEntry> = serde_json::from_value(
            header
                .get("arrays")
                .cloned()
                .ok_or_else(|| Error::Format("header has no array manifest".into()))?,
        )?;
        let mut arrays = BTreeMap::new();
        for e in entries {
            let len: usize = e.shape.iter().product();
            let end = e.offset + len * 8;
            let raw = data.get(e.offset..end).ok_or_else(|| {
                Error::Format(format!("array {} runs past the end of the file", e.name))
            })?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            arrays.insert(e.name, (e.shape, values));
        }
        Ok(Self { header, arrays })
    }

    pub fn read(path: &Path, magic: &[u8; 4]) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes, magic)
    }

    pub fn array(&self, name: &str) -> Result<(&[usize], &[f64])> {
        self.arrays
            .get(name)
            .map(|(s, v)| (s.as_slice(), v.as_slice()))
            .ok_or_else(|| Error::Format(format!("array {name} missing from container")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.arrays.keys().map(|s| s.as_str())
    }
}
