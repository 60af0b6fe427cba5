//! Matrix export in a coordinate text format and a little-endian binary
//! format.
//!
//! Text:
//! ```text
//! %%surjlab coordinate complex
//! <rows> <cols> <nnz>
//! <row> <col> <re> <im>        (0-based, column-major)
//! ```
//!
//! Binary: magic `SJOP`, `u32` version 1, `u64` rows, cols, nnz, then per
//! entry `u64` row, `u64` col, `f64` re, `f64` im.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const TEXT_HEADER: &str = "%%surjlab coordinate complex";
pub const BINARY_MAGIC: &[u8; 4] = b"SJOP";
pub const BINARY_VERSION: u32 = 1;

pub fn write_text<W: Write>(m: &SparseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "{TEXT_HEADER}")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(out, "{i} {j} {:?} {:?}", v.re, v.im)?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(input: R) -> Result<SparseMatrix> {
    let mut lines = input.lines();
    let bad = |msg: &str| Error::Invalid(format!("matrix text: {msg}"));
    let header = lines.next().ok_or_else(|| bad("empty input"))??;
    if header.trim() != TEXT_HEADER {
        return Err(bad("missing header"));
    }
    let dims = lines.next().ok_or_else(|| bad("missing dimensions"))??;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("bad dimension")))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(bad("expected rows cols nnz"));
    };
    let mut triplets = Vec::with_capacity(nnz);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad("expected row col re im"));
        }
        let i = f[0].parse().map_err(|_| bad("bad row"))?;
        let j = f[1].parse().map_err(|_| bad("bad column"))?;
        let re = f[2].parse().map_err(|_| bad("bad real part"))?;
        let im = f[3].parse().map_err(|_| bad("bad imaginary part"))?;
        triplets.push((i, j, Complex64::new(re, im)));
    }
    if triplets.len() != nnz {
        return Err(bad("entry count does not match header"));
    }
    SparseMatrix::from_triplets(rows, cols, triplets)
}

pub fn write_binary<W: Write>(m: &SparseMatrix, mut out: W) -> Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    for n in [m.rows(), m.cols(), m.nnz()] {
        out.write_all(&(n as u64).to_le_bytes())?;
    }
    for (i, j, v) in m.triplets() {
        out.write_all(&(i as u64).to_le_bytes())?;
        out.write_all(&(j as u64).to_le_bytes())?;
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<SparseMatrix> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Invalid("bad magic".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != BINARY_VERSION {
        return Err(Error::Invalid(format!("unsupported version {version}")));
    }
    let read_u64 = |input: &mut R| -> Result<u64> {
        let mut b = [0u8; 8];
        input.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    };
    let rows = read_u64(&mut input)? as usize;
    let cols = read_u64(&mut input)? as usize;
    let nnz = read_u64(&mut input)? as usize;
    let mut triplets = Vec::with_capacity(nnz.min(1 << 24));
    for _ in 0..nnz {
        let i = read_u64(&mut input)? as usize;
        let j = read_u64(&mut input)? as usize;
        let re = f64::from_bits(read_u64(&mut input)?);
        let im = f64::from_bits(read_u64(&mut input)?);
        triplets.push((i, j, Complex64::new(re, im)));
    }
    SparseMatrix::from_triplets(rows, cols, triplets)
}
