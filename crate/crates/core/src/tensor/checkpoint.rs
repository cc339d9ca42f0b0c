use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Real, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub byte_offset: usize,
}

/// JSON side of a checkpoint. The blob is a sibling file of raw little-endian floats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub dtype: String,
    pub tensors: Vec<CheckpointEntry>,
    pub blob: String,
    pub total_bytes: usize,
}

/// Writes `<path>` (manifest) and `<path stem>.bin` (blob).
pub fn save_checkpoint<T: Real>(
    path: &Path,
    tensors: &[(&str, &Tensor<T>)],
) -> Result<CheckpointManifest> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Checkpoint(format!("bad manifest path {}", path.display())))?;
    let blob_name = format!("{stem}.bin");
    let mut bytes = Vec::new();
    let mut entries = Vec::with_capacity(tensors.len());
    for (name, t) in tensors {
        entries.push(CheckpointEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            dtype: T::DTYPE.to_string(),
            byte_offset: bytes.len(),
        });
        for &v in t.data() {
            v.write_le(&mut bytes);
        }
    }
    let manifest = CheckpointManifest {
        dtype: T::DTYPE.to_string(),
        tensors: entries,
        blob: blob_name.clone(),
        total_bytes: bytes.len(),
    };
    fs::write(path.with_file_name(&blob_name), &bytes)?;
    let json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Checkpoint(e.to_string()))?;
    fs::write(path, json + "\n")?;
    Ok(manifest)
}

/// Reads a checkpoint back, checking dtype, offsets, and the blob length.
pub fn load_checkpoint<T: Real>(path: &Path) -> Result<Vec<(String, Tensor<T>)>> {
    let text = fs::read_to_string(path)?;
    let manifest: CheckpointManifest =
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("manifest: {e}")))?;
    if manifest.dtype != T::DTYPE {
        return Err(Error::Checkpoint(format!(
            "dtype {} does not match expected {}",
            manifest.dtype,
            T::DTYPE
        )));
    }
    let bytes = fs::read(path.with_file_name(&manifest.blob))?;
    if bytes.len() != manifest.total_bytes {
        return Err(Error::Checkpoint(format!(
            "blob has {} bytes, manifest says {}",
            bytes.len(),
            manifest.total_bytes
        )));
    }
    let mut expected_offset = 0;
    let mut out = Vec::with_capacity(manifest.tensors.len());
    for e in &manifest.tensors {
        if e.dtype != T::DTYPE {
            return Err(Error::Checkpoint(format!(
                "tensor {} has dtype {}",
                e.name, e.dtype
            )));
        }
        if e.byte_offset != expected_offset {
            return Err(Error::Checkpoint(format!(
                "tensor {} at offset {}, expected {expected_offset}",
                e.name, e.byte_offset
            )));
        }
        let numel: usize = e.shape.iter().product();
        let end = e.byte_offset + numel * T::BYTES;
        if end > bytes.len() {
            return Err(Error::Checkpoint(format!(
                "tensor {} runs past the blob",
                e.name
            )));
        }
        let data = bytes[e.byte_offset..end]
            .chunks_exact(T::BYTES)
            .map(T::read_le)
            .collect();
        out.push((e.name.clone(), Tensor::new(e.shape.clone(), data)?));
        expected_offset = end;
    }
    if expected_offset != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after last tensor",
            bytes.len() - expected_offset
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let a = Tensor::<f32>::new(vec![2, 2], vec![1.0, -2.5, 3.25, 0.0]).unwrap();
        let b = Tensor::<f32>::new(vec![3], vec![7.0, 8.0, 9.0]).unwrap();
        let m = save_checkpoint(&path, &[("a", &a), ("b", &b)]).unwrap();
        assert_eq!(m.total_bytes, 28);
        assert_eq!(m.tensors[1].byte_offset, 16);
        let back = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(back[0].1, a);
        assert_eq!(back[1].0, "b");
        assert_eq!(back[1].1, b);

        assert!(load_checkpoint::<f64>(&path).is_err());
        let blob = dir.path().join("model.bin");
        let mut bytes = std::fs::read(&blob).unwrap();
        bytes.pop();
        std::fs::write(&blob, bytes).unwrap();
        assert!(matches!(
            load_checkpoint::<f32>(&path),
            Err(Error::Checkpoint(_))
        ));
    }
}
