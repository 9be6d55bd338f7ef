//! Binary checkpoints: the magic `DPE1`, a little-endian u64 metadata length,
//! JSON metadata, then every tensor as little-endian f64 in declaration order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NnError, ParamSet, Tensor};

const MAGIC: &[u8; 4] = b"DPE1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub architecture: String,
    pub vocab_hash: String,
    pub seed: u64,
    /// Free-form model configuration.
    pub config: serde_json::Value,
    pub tensors: Vec<TensorInfo>,
}

pub fn write_checkpoint(w: &mut impl Write, meta: &CheckpointMeta, params: &ParamSet) -> Result<(), NnError> {
    let mut meta = meta.clone();
    meta.tensors = params
        .names
        .iter()
        .zip(&params.tensors)
        .map(|(n, t)| TensorInfo {
            name: n.clone(),
            shape: [t.rows, t.cols],
        })
        .collect();
    let json = serde_json::to_vec(&meta).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for t in &params.tensors {
        for x in &t.data {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<(CheckpointMeta, ParamSet), NnError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint("missing DPE1 magic".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 30 {
        return Err(NnError::Checkpoint(format!("metadata length {len} is implausible")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let meta: CheckpointMeta = serde_json::from_slice(&json).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    let mut params = ParamSet::new();
    let mut buf = [0u8; 8];
    for info in &meta.tensors {
        let [rows, cols] = info.shape;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        params.add(info.name.clone(), Tensor::from_vec(rows, cols, data));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(NnError::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok((meta, params))
}

pub fn save(path: &Path, meta: &CheckpointMeta, params: &ParamSet) -> Result<(), NnError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(&mut w, meta, params)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(CheckpointMeta, ParamSet), NnError> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_checkpoint(&mut r)
}
