//! Field dumps, CSV export and flat key-value metadata records.
//!
//! Dump layout (all little-endian):
//!
//! | bytes | content                |
//! |-------|------------------------|
//! | 5     | magic `FLOG1`          |
//! | 4     | dimension `N` (u32)    |
//! | 4     | points per axis `M` (u32) |
//! | 8     | half extent `L` (f64)  |
//! | 8     | order `s` (f64)        |
//! | 8     | `ε` (f64)              |
//! | 8·M^N | values, row-major (f64)|

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;

pub const MAGIC: &[u8; 5] = b"FLOG1";
pub const HEADER_LEN: usize = 5 + 4 + 4 + 8 + 8 + 8;

/// Metadata carried in a dump header besides the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub dim: usize,
    pub points: usize,
    pub half_extent: f64,
    pub order: f64,
    pub epsilon: f64,
}

pub fn encode_dump(field: &Field, order: f64, epsilon: f64) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.node_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.points() as u32).to_le_bytes());
    out.extend_from_slice(&g.half_extent().to_le_bytes());
    out.extend_from_slice(&order.to_le_bytes());
    out.extend_from_slice(&epsilon.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_dump(bytes: &[u8]) -> Result<(Field, DumpHeader)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..5] != MAGIC {
        return Err(Error::Format("bad magic, expected FLOG1".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let header = DumpHeader {
        dim: u32_at(5),
        points: u32_at(9),
        half_extent: f64_at(13),
        order: f64_at(21),
        epsilon: f64_at(29),
    };
    let grid = Grid::new(header.dim, header.half_extent, header.points)
        .map_err(|e| Error::Format(format!("header describes an invalid grid: {e}")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.node_count() {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            body.len(),
            8 * grid.node_count()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((Field::new(&grid, values)?, header))
}

pub fn write_dump(path: &Path, field: &Field, order: f64, epsilon: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_dump(field, order, epsilon))?;
    w.flush()?;
    Ok(())
}

pub fn read_dump(path: &Path) -> Result<(Field, DumpHeader)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_dump(&bytes)
}

/// One line per node: coordinates, then the value.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = field.grid().dim();
    let header: Vec<String> = (1..=n).map(|d| format!("x{d}")).chain(["value".into()]).collect();
    writeln!(w, "{}", header.join(","))?;
    let mut err = Ok(());
    field.grid().for_each_node(|i, x| {
        if err.is_err() {
            return;
        }
        let coords: Vec<String> = x.iter().map(|c| format!("{c:.17e}")).collect();
        err = writeln!(w, "{},{:.17e}", coords.join(","), field.values()[i]);
    });
    err?;
    w.flush()?;
    Ok(())
}

/// Writes `key = value` lines.
pub fn write_metadata(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in entries {
        writeln!(w, "{k} = {v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metadata(path: &Path) -> Result<Vec<(String, String)>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("metadata line {} lacks '='", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = Grid::new(2, 1.5, 16).unwrap();
        let u = Field::from_fn(&g, |x| x[0] - x[1]).unwrap();
        let bytes = encode_dump(&u, 0.5, 0.1);
        assert_eq!(&bytes[..5], b"FLOG1");
        assert_eq!(bytes.len(), HEADER_LEN + 8 * 256);
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 16);
        assert_eq!(f64::from_le_bytes(bytes[13..21].try_into().unwrap()), 1.5);
        let (v, h) = decode_dump(&bytes).unwrap();
        assert_eq!(v.values(), u.values());
        assert_eq!(h.order, 0.5);
        assert_eq!(h.epsilon, 0.1);
    }

    #[test]
    fn rejects_corrupt_dumps() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let bytes = encode_dump(&Field::zeros(&g), 1.0, 1.0);
        assert!(decode_dump(&bytes[..20]).is_err());
        assert!(decode_dump(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_dump(&bad).is_err());
    }

    #[test]
    fn metadata_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("meta.txt");
        let entries = vec![
            ("energy".to_string(), "1.25".to_string()),
            ("converged".to_string(), "true".to_string()),
        ];
        write_metadata(&p, &entries).unwrap();
        assert_eq!(read_metadata(&p).unwrap(), entries);
    }
}
