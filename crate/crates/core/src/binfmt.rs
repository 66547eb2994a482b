//! Little-endian binary primitives and atomic file writing for the on-disk
//! artifacts (snapshot sets, bases, reduced operators).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn write_f64s(w: &mut impl Write, vs: &[f64]) -> std::io::Result<()> {
    for &v in vs {
        write_f64(w, v)?;
    }
    Ok(())
}

pub fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_f64s(r: &mut impl Read, len: usize) -> std::io::Result<Vec<f64>> {
    let mut out = vec![0.0f64; len];
    let mut buf = vec![0u8; len.min(4096) * 8];
    let mut filled = 0;
    while filled < len {
        let take = (len - filled).min(4096);
        let bytes = &mut buf[..take * 8];
        r.read_exact(bytes)?;
        for i in 0..take {
            out[filled + i] = f64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().unwrap());
        }
        filled += take;
    }
    Ok(out)
}

/// Read a 7-byte magic tag and match it against the expected one.
pub fn check_magic(r: &mut impl Read, expected: &[u8; 7], what: &str) -> Result<()> {
    let mut got = [0u8; 7];
    r.read_exact(&mut got)
        .map_err(|e| Error::Parse { line: 0, msg: format!("{what}: short header: {e}") })?;
    if &got != expected {
        return Err(Error::Parse {
            line: 0,
            msg: format!("{what}: bad magic {:?}, expected {:?}", got, expected),
        });
    }
    Ok(())
}

/// `u64` count to `usize` with overflow guard.
pub fn count(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Parse { line: 0, msg: format!("{what} count {v} overflows") })
}

/// Write a file atomically: the payload goes to a sibling temp file which is
/// renamed over the destination, so partially written artifacts never appear
/// under the final name.
pub fn atomic_write(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = std::path::PathBuf::from(tmp);
    {
        let file = File::create(&tmp_path).map_err(|e| Error::io(&tmp_path, e))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush().map_err(|e| Error::io(&tmp_path, e))?;
    }
    std::fs::rename(&tmp_path, path).map_err(|e| Error::io(path, e))
}

pub fn open_reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}
