//! Binary matrix files. Layout: magic "OZMM", u32 version = 1, u8 kind
//! (0 = binary64, 1 = multi-word), u8 word count, u64 rows, u64 cols, then
//! one row-major little-endian binary64 payload per word, most significant
//! word first. All integers little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ozmm_core::{MatrixF64, MatrixInput, MultiWordMatrix};

use crate::error::{CliError, Result};

const MAGIC: &[u8; 4] = b"OZMM";
const VERSION: u32 = 1;
const KIND_F64: u8 = 0;
const KIND_MULTIWORD: u8 = 1;
// refuse absurd headers before allocating: 2^28 entries is a 2 GiB word
const MAX_ENTRIES: u128 = 1 << 28;
const MAX_WORDS: u8 = 64;

pub fn write_matrix(w: &mut impl Write, m: &MatrixInput) -> Result<()> {
    let (kind, words): (u8, &[MatrixF64]) = match m {
        MatrixInput::F64(f) => (KIND_F64, core::slice::from_ref(f)),
        MatrixInput::MultiWord(mw) => (KIND_MULTIWORD, mw.words()),
    };
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[kind, words.len() as u8])?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for word in words {
        for v in word.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix(r: &mut impl Read) -> Result<MatrixInput> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CliError::Format("bad magic bytes".into()));
    }
    let mut v4 = [0u8; 4];
    r.read_exact(&mut v4)?;
    let version = u32::from_le_bytes(v4);
    if version != VERSION {
        return Err(CliError::Format(format!("unsupported version {version}")));
    }
    let mut kv = [0u8; 2];
    r.read_exact(&mut kv)?;
    let (kind, count) = (kv[0], kv[1]);
    let mut d8 = [0u8; 8];
    r.read_exact(&mut d8)?;
    let rows = u64::from_le_bytes(d8);
    r.read_exact(&mut d8)?;
    let cols = u64::from_le_bytes(d8);
    if count == 0 || count > MAX_WORDS {
        return Err(CliError::Format(format!("bad word count {count}")));
    }
    if kind == KIND_F64 && count != 1 {
        return Err(CliError::Format("binary64 kind requires word count 1".into()));
    }
    if rows == 0 || cols == 0 || (rows as u128) * (cols as u128) > MAX_ENTRIES {
        return Err(CliError::Format(format!("bad dimensions {rows}x{cols}")));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut words = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            r.read_exact(&mut d8)?;
            data.push(f64::from_le_bytes(d8));
        }
        words.push(MatrixF64::new(rows, cols, data)?);
    }
    let input = match kind {
        KIND_F64 => MatrixInput::F64(words.pop().expect("count checked")),
        KIND_MULTIWORD => MatrixInput::MultiWord(MultiWordMatrix::new(words)?),
        other => return Err(CliError::Format(format!("unknown kind {other}"))),
    };
    input.ensure_finite()?;
    Ok(input)
}

pub fn write_matrix_file(path: &Path, m: &MatrixInput) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix_file(path: &Path) -> Result<MatrixInput> {
    read_matrix(&mut BufReader::new(File::open(path)?))
}
