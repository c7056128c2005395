//! Raw dumps of realizations.
//!
//! Binary layout: a 32-byte header (magic `FLDG`, format version `u32`,
//! `points_per_side` `u32`, `h` `f64`, `r` `f64`, four zero bytes) followed by
//! the values as little-endian `f64`, row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{FieldRealization, GridSpec};
use crate::error::{Error, Result};

pub const FLDG_MAGIC: &[u8; 4] = b"FLDG";
pub const FLDG_VERSION: u32 = 1;
pub const FLDG_HEADER_LEN: usize = 32;

pub fn write_fldg(path: &Path, field: &FieldRealization) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let mut header = [0u8; FLDG_HEADER_LEN];
    header[..4].copy_from_slice(FLDG_MAGIC);
    header[4..8].copy_from_slice(&FLDG_VERSION.to_le_bytes());
    let pps = u32::try_from(field.grid.points_per_side)
        .map_err(|_| Error::Domain("grid too large for the binary format".into()))?;
    header[8..12].copy_from_slice(&pps.to_le_bytes());
    header[12..20].copy_from_slice(&field.grid.h.to_le_bytes());
    header[20..28].copy_from_slice(&field.grid.r.to_le_bytes());
    w.write_all(&header).map_err(io)?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_fldg(path: &Path) -> Result<(GridSpec, Vec<f64>)> {
    let io = |e| Error::io(path, e);
    let bad = |msg: &str| {
        Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string()),
        )
    };
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut header = [0u8; FLDG_HEADER_LEN];
    r.read_exact(&mut header).map_err(io)?;
    if &header[..4] != FLDG_MAGIC {
        return Err(bad("not a field dump (bad magic)"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FLDG_VERSION {
        return Err(bad(&format!("unsupported field dump version {version}")));
    }
    let pps = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let h = f64::from_le_bytes(header[12..20].try_into().unwrap());
    let rr = f64::from_le_bytes(header[20..28].try_into().unwrap());
    let grid = GridSpec::new(rr, h)?;
    if grid.points_per_side != pps {
        return Err(bad("header grid size is inconsistent with r and h"));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != 8 * pps * pps {
        return Err(bad("payload length does not match the header"));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((grid, values))
}

/// Columns `i, j, x, y, value`.
pub fn write_csv(path: &Path, field: &FieldRealization) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "j", "x", "y", "value"])?;
    let g = &field.grid;
    for i in 0..g.points_per_side {
        for j in 0..g.points_per_side {
            w.write_record(&[
                i.to_string(),
                j.to_string(),
                g.coord(i).to_string(),
                g.coord(j).to_string(),
                field.at(i, j).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
