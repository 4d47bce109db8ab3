//! Named-tensor container: binary, little-endian, versioned.
//!
//! Layout:
//!
//! ```text
//! magic    8 bytes  "GTTSTNSR"
//! version  u32
//! count    u32
//! count × {
//!     name_len u32, name (UTF-8),
//!     rank u32, dims u64 × rank,
//!     data f64 × product(dims)
//! }
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CheckpointError;
use crate::params::ParamStore;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"GTTSTNSR";
pub const VERSION: u32 = 1;

/// One line of the human-readable manifest that accompanies a container.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

pub fn write_tensors<'a, W: Write>(
    mut w: W,
    tensors: impl IntoIterator<Item = (&'a str, &'a Tensor)>,
) -> io::Result<()> {
    let tensors: Vec<_> = tensors.into_iter().collect();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &x in t.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| CheckpointError::Corrupt(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, CheckpointError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| CheckpointError::Corrupt(format!("truncated dims: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_tensors<R: Read>(mut r: R) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| CheckpointError::BadMagic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let count = read_u32(&mut r)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|e| CheckpointError::Corrupt(format!("truncated name: {e}")))?;
        let name = String::from_utf8(name).map_err(|_| CheckpointError::Corrupt("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        let shape = (0..rank)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let n: usize = shape.iter().product();
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes)
            .map_err(|e| CheckpointError::Corrupt(format!("truncated data for `{name}`: {e}")))?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

pub fn manifest_entries<'a>(tensors: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<TensorEntry> {
    tensors
        .into_iter()
        .map(|(name, t)| TensorEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
        })
        .collect()
}

pub fn save_params(params: &ParamStore, path: &Path) -> Result<(), CheckpointError> {
    let f = io::BufWriter::new(fs::File::create(path)?);
    write_tensors(f, params.iter())?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ParamStore, CheckpointError> {
    let f = io::BufReader::new(fs::File::open(path)?);
    let mut store = ParamStore::new();
    for (name, t) in read_tensors(f)? {
        store.insert(name, t);
    }
    Ok(store)
}
