//! Binary checkpoint format for the denoising network.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "FPDN0001"
//! header_len u32
//! header     JSON: {"version": 1, "config": {...}, "meta": {...}}
//! params     u32 count, then per parameter (sorted by name):
//!              name_len u32, name bytes,
//!              rows u32, cols u32,
//!              rows*cols f64 values
//! ```
//!
//! Writing the same parameters and metadata twice produces byte-identical
//! files: the parameter map iterates in sorted order and the JSON header uses
//! sorted object keys.

use crate::denoiser::Denoiser;
use crate::{DenoiserConfig, ModelError, Result};
use ndarray::Array2;
use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"FPDN0001";
const FORMAT_VERSION: u64 = 1;

/// Hard ceiling applied to header and parameter sizes while reading, so a
/// corrupted length field cannot trigger a huge allocation.
const MAX_FIELD_BYTES: u64 = 1 << 31;

#[derive(serde::Serialize, serde::Deserialize)]
struct Header {
    version: u64,
    config: DenoiserConfig,
    meta: serde_json::Value,
}

fn write_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v)
        .map_err(|_| ModelError::Checkpoint(format!("field of {v} bytes exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Serialises `net` (and free-form `meta`, e.g. the training step) to `path`.
pub fn save_checkpoint(net: &Denoiser, meta: &serde_json::Value, path: &Path) -> Result<()> {
    net.config.validate()?;
    let header = Header {
        version: FORMAT_VERSION,
        config: net.config.clone(),
        meta: meta.clone(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| ModelError::Checkpoint(format!("header serialisation failed: {e}")))?;

    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    write_u32(&mut w, header_bytes.len())?;
    w.write_all(&header_bytes)?;
    write_u32(&mut w, net.params.len())?;
    for (name, value) in &net.params {
        write_u32(&mut w, name.len())?;
        w.write_all(name.as_bytes())?;
        write_u32(&mut w, value.nrows())?;
        write_u32(&mut w, value.ncols())?;
        for v in value.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads a checkpoint, reconstructing the network from the stored config.
///
/// Returns the network and the free-form metadata stored alongside it.  The
/// parameter table must exactly match the name/shape inventory implied by the
/// stored config; any deviation (as well as a bad magic, version, or header)
/// is a checkpoint error.
pub fn load_checkpoint(path: &Path) -> Result<(Denoiser, serde_json::Value)> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Checkpoint(format!(
            "bad magic {magic:?}; not a network checkpoint"
        )));
    }
    let header_len = u64::from(read_u32(&mut r)?);
    if header_len > MAX_FIELD_BYTES {
        return Err(ModelError::Checkpoint("header length overflows".into()));
    }
    let mut header_bytes = vec![0u8; header_len as usize];
    r.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| ModelError::Checkpoint(format!("unreadable header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(ModelError::Checkpoint(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            header.version
        )));
    }
    header
        .config
        .validate()
        .map_err(|e| ModelError::Checkpoint(format!("stored config invalid: {e}")))?;

    let expected: BTreeMap<String, [usize; 2]> = Denoiser::param_specs(&header.config)?
        .into_iter()
        .collect();

    let count = read_u32(&mut r)? as usize;
    if count != expected.len() {
        return Err(ModelError::Checkpoint(format!(
            "checkpoint holds {count} parameters, config implies {}",
            expected.len()
        )));
    }
    let mut params = BTreeMap::new();
    for _ in 0..count {
        let name_len = u64::from(read_u32(&mut r)?);
        if name_len > MAX_FIELD_BYTES {
            return Err(ModelError::Checkpoint("name length overflows".into()));
        }
        let mut name_bytes = vec![0u8; name_len as usize];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| ModelError::Checkpoint("parameter name is not UTF-8".into()))?;
        let rows = read_u32(&mut r)? as usize;
        let cols = read_u32(&mut r)? as usize;
        let shape = expected.get(&name).ok_or_else(|| {
            ModelError::Checkpoint(format!("unexpected parameter {name} for stored config"))
        })?;
        if [rows, cols] != *shape {
            return Err(ModelError::Checkpoint(format!(
                "parameter {name} has shape ({rows}, {cols}), config implies ({}, {})",
                shape[0], shape[1]
            )));
        }
        let mut data = vec![0u8; rows * cols * 8];
        r.read_exact(&mut data)?;
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let array = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| ModelError::Checkpoint(format!("parameter {name}: {e}")))?;
        if params.insert(name.clone(), array).is_some() {
            return Err(ModelError::Checkpoint(format!(
                "duplicate parameter {name}"
            )));
        }
    }

    Ok((
        Denoiser {
            config: header.config,
            params,
        },
        header.meta,
    ))
}

const ARRAYS_MAGIC: &[u8; 8] = b"FPAR0001";

/// Writes an arbitrary named-array table (e.g. optimizer moments) to `path`.
///
/// Same wire format as the parameter section of a network checkpoint, under
/// its own magic; iteration order is the map's sorted order, so identical
/// contents produce identical bytes.
pub fn save_named_arrays(arrays: &BTreeMap<String, Array2<f64>>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(ARRAYS_MAGIC)?;
    write_u32(&mut w, arrays.len())?;
    for (name, value) in arrays {
        write_u32(&mut w, name.len())?;
        w.write_all(name.as_bytes())?;
        write_u32(&mut w, value.nrows())?;
        write_u32(&mut w, value.ncols())?;
        for v in value.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`save_named_arrays`].
pub fn load_named_arrays(path: &Path) -> Result<BTreeMap<String, Array2<f64>>> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != ARRAYS_MAGIC {
        return Err(ModelError::Checkpoint(format!(
            "bad magic {magic:?}; not a named-array table"
        )));
    }
    let count = read_u32(&mut r)? as usize;
    let mut arrays = BTreeMap::new();
    for _ in 0..count {
        let name_len = u64::from(read_u32(&mut r)?);
        if name_len > MAX_FIELD_BYTES {
            return Err(ModelError::Checkpoint("name length overflows".into()));
        }
        let mut name_bytes = vec![0u8; name_len as usize];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| ModelError::Checkpoint("array name is not UTF-8".into()))?;
        let rows = read_u32(&mut r)? as u64;
        let cols = read_u32(&mut r)? as u64;
        if rows * cols * 8 > MAX_FIELD_BYTES {
            return Err(ModelError::Checkpoint(format!(
                "array {name} claims {rows}x{cols}, too large"
            )));
        }
        let mut data = vec![0u8; (rows * cols * 8) as usize];
        r.read_exact(&mut data)?;
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let array = Array2::from_shape_vec((rows as usize, cols as usize), values)
            .map_err(|e| ModelError::Checkpoint(format!("array {name}: {e}")))?;
        if arrays.insert(name.clone(), array).is_some() {
            return Err(ModelError::Checkpoint(format!("duplicate array {name}")));
        }
    }
    Ok(arrays)
}

/// Rejects a checkpoint whose stored config differs from `expected` — used
/// when resuming training or evaluating under a configuration file.
pub fn ensure_config(stored: &DenoiserConfig, expected: &DenoiserConfig) -> Result<()> {
    if stored != expected {
        return Err(ModelError::Checkpoint(format!(
            "checkpoint config {stored:?} does not match configured {expected:?}"
        )));
    }
    Ok(())
}
