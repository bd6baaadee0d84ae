//! Matrix files: `"HROM"`, format version (u32), rows and cols (u64), all
//! little-endian, then the entries column by column as little-endian f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkernel::DenseMatrix;

pub const MAGIC: &[u8; 4] = b"HROM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
    if &header[..4] != MAGIC {
        return Err(Error::Format(format!("{}: bad magic bytes", path.display())));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: format version {version}, expected {FORMAT_VERSION}",
            path.display()
        )));
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(header[16..24].try_into().expect("8 bytes")) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format(format!("{}: shape overflows", path.display())))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "{}: expected {} payload bytes, found {}",
            path.display(),
            count * 8,
            bytes.len()
        )));
    }
    let mut data = vec![0.0; count];
    for (k, chunk) in bytes.chunks_exact(8).enumerate() {
        let (j, i) = (k / rows.max(1), k % rows.max(1));
        data[i * cols + j] = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
    }
    DenseMatrix::from_row_major(rows, cols, data).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
