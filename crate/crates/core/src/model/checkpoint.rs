//! Checkpoint file format.
//!
//! Layout: an 8-byte magic, a u32 format version, a u32 record count, then
//! one record per tensor: u32 name length, UTF-8 name, u8 trainable flag,
//! u32 rows, u32 cols, and rows*cols little-endian float32 values.
//! Adapter stores reuse the same format under `peft/...` names, so one
//! backbone file plus per-task adapter files cover the swap-per-task layout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::params::{Param, ParameterStore};
use crate::tensor::Matrix;

const MAGIC: &[u8; 8] = b"PEFTCKPT";
const VERSION: u32 = 1;

pub fn write_store<W: Write>(store: &ParameterStore, w: &mut W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (name, param) in store.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[u8::from(param.trainable)])?;
        let (rows, cols) = param.value.shape();
        w.write_all(&(rows as u32).to_le_bytes())?;
        w.write_all(&(cols as u32).to_le_bytes())?;
        for &v in param.value.data() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_store<R: Read>(r: &mut R) -> Result<ParameterStore> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data("not a checkpoint file (bad magic)".to_string()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {version}")));
    }
    let count = read_u32(r)? as usize;
    let mut store = ParameterStore::new();
    for _ in 0..count {
        let name_len = read_u32(r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::Data("non-UTF-8 parameter name".to_string()))?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let rows = read_u32(r)? as usize;
        let cols = read_u32(r)? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut buf = [0u8; 4];
        for _ in 0..rows * cols {
            r.read_exact(&mut buf)?;
            data.push(f32::from_le_bytes(buf) as f64);
        }
        store.insert(&name, Matrix::from_vec(rows, cols, data)?, flag[0] != 0)?;
    }
    Ok(store)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub fn save_to_path(store: &ParameterStore, path: &Path) -> Result<()> {
    // write-temp-then-rename keeps checkpoint writes atomic
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_store(store, &mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_from_path(path: &Path) -> Result<ParameterStore> {
    let mut r = BufReader::new(File::open(path)?);
    read_store(&mut r)
}

/// Round every value through f32, mirroring what a save/load cycle does.
pub fn round_trip_precision(store: &ParameterStore) -> ParameterStore {
    let mut out = ParameterStore::new();
    for (name, Param { value, trainable }) in store.iter() {
        let data = value.data().iter().map(|&v| v as f32 as f64).collect();
        let m = Matrix::from_vec(value.rows(), value.cols(), data).expect("same shape");
        out.insert(name, m, *trainable).expect("names already unique");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::ModelConfig;
    use crate::model::params::init_backbone;

    #[test]
    fn round_trip_preserves_names_flags_and_f32_values() {
        let cfg = ModelConfig::tiny(30, 2);
        let mut store = init_backbone(&cfg, 3).unwrap();
        store.set_trainable("embed.token", false).unwrap();

        let mut buf = Vec::new();
        write_store(&store, &mut buf).unwrap();
        let loaded = read_store(&mut buf.as_slice()).unwrap();

        assert_eq!(loaded.len(), store.len());
        assert!(!loaded.get("embed.token").unwrap().trainable);
        let expected = round_trip_precision(&store);
        assert!(loaded.bits_identical(&expected));
    }

    #[test]
    fn rejects_corrupt_magic() {
        let buf = b"NOTACKPT0000".to_vec();
        assert!(read_store(&mut buf.as_slice()).is_err());
    }
}
