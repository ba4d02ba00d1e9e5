//! Versioned binary checkpoints for parameter sets.
//!
//! Layout: magic `SCRLAB1`, entry count (u64 LE), then per entry:
//! name length (u64 LE) + UTF-8 name, rows (u64 LE), cols (u64 LE),
//! data as f64 LE. Bias vectors are stored as 1xN matrices. Round-trips
//! are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::linalg::RealMatrix;
use crate::mlp::ParamSet;

pub const MAGIC: &[u8; 7] = b"SCRLAB1";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected SCRLAB1")]
    BadMagic,
    #[error("malformed entry name: {0}")]
    BadName(#[from] std::string::FromUtf8Error),
    #[error("section {section}: missing entry {entry}")]
    MissingEntry { section: String, entry: String },
    #[error("section {section}: entry {entry} has shape {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        section: String,
        entry: String,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn write_entry<W: Write>(w: &mut W, name: &str, m: &RealMatrix) -> std::io::Result<()> {
    write_u64(w, name.len() as u64)?;
    w.write_all(name.as_bytes())?;
    write_u64(w, m.rows() as u64)?;
    write_u64(w, m.cols() as u64)?;
    for v in m.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_entry<R: Read>(r: &mut R) -> Result<(String, RealMatrix), CheckpointError> {
    let name_len = read_u64(r)? as usize;
    let mut name_buf = vec![0u8; name_len];
    r.read_exact(&mut name_buf)?;
    let name = String::from_utf8(name_buf)?;
    let rows = read_u64(r)? as usize;
    let cols = read_u64(r)? as usize;
    let mut data = vec![0.0f64; rows * cols];
    let mut buf = [0u8; 8];
    for v in &mut data {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok((name, RealMatrix::from_vec(rows, cols, data)))
}

fn section_entries<'a>(section: &str, params: &'a ParamSet) -> Vec<(String, RealMatrix)> {
    let mut out = Vec::with_capacity(params.layers.len() * 2);
    for layer in &params.layers {
        out.push((format!("{section}/{}.w", layer.name), layer.weight.clone()));
        out.push((
            format!("{section}/{}.b", layer.name),
            RealMatrix::from_vec(1, layer.bias.len(), layer.bias.clone()),
        ));
    }
    out
}

/// Writes named parameter sections to `path`.
pub fn save_checkpoint(
    path: &Path,
    sections: &[(&str, &ParamSet)],
) -> Result<(), CheckpointError> {
    let mut entries = Vec::new();
    for (name, params) in sections {
        entries.extend(section_entries(name, params));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    write_u64(&mut w, entries.len() as u64)?;
    for (name, m) in &entries {
        write_entry(&mut w, name, m)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads every named entry from a checkpoint file.
pub fn load_entries(path: &Path) -> Result<Vec<(String, RealMatrix)>, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let count = read_u64(&mut r)? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        entries.push(read_entry(&mut r)?);
    }
    Ok(entries)
}

/// Copies the entries of `section` into `params`, which must already have
/// the right layer names and shapes.
pub fn restore_section(
    entries: &[(String, RealMatrix)],
    section: &str,
    params: &mut ParamSet,
) -> Result<(), CheckpointError> {
    let lookup = |entry: &str| -> Result<&RealMatrix, CheckpointError> {
        entries
            .iter()
            .find(|(n, _)| n == entry)
            .map(|(_, m)| m)
            .ok_or_else(|| CheckpointError::MissingEntry {
                section: section.to_string(),
                entry: entry.to_string(),
            })
    };
    for layer in &mut params.layers {
        let w_name = format!("{section}/{}.w", layer.name);
        let w = lookup(&w_name)?;
        if w.rows() != layer.weight.rows() || w.cols() != layer.weight.cols() {
            return Err(CheckpointError::ShapeMismatch {
                section: section.to_string(),
                entry: w_name,
                got_rows: w.rows(),
                got_cols: w.cols(),
                want_rows: layer.weight.rows(),
                want_cols: layer.weight.cols(),
            });
        }
        layer.weight = w.clone();
        let b_name = format!("{section}/{}.b", layer.name);
        let b = lookup(&b_name)?;
        if b.rows() != 1 || b.cols() != layer.bias.len() {
            return Err(CheckpointError::ShapeMismatch {
                section: section.to_string(),
                entry: b_name,
                got_rows: b.rows(),
                got_cols: b.cols(),
                want_rows: 1,
                want_cols: layer.bias.len(),
            });
        }
        layer.bias = b.data().to_vec();
    }
    Ok(())
}
