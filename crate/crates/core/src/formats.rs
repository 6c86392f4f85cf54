//! Binary layouts for functions and spectra, and the plain-text integer lists
//! used for sets.
//!
//! ```text
//! function: "ZPFN" | version u32 LE | P u64 LE | P x f64 LE
//! spectrum: "ZPSP" | version u32 LE | P u64 LE | P x (re f64 LE, im f64 LE)
//! ```

use std::io::{BufRead, Read, Write};

use num_complex::Complex;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::zp_fourier::{CyclicFunction, Spectrum};

pub const FUNCTION_MAGIC: &[u8; 4] = b"ZPFN";
pub const SPECTRUM_MAGIC: &[u8; 4] = b"ZPSP";
pub const FORMAT_VERSION: u32 = 1;

fn write_header(w: &mut impl Write, magic: &[u8; 4], p: u64) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&p.to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<u64> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)
        .map_err(|e| LabError::Format(format!("truncated header: {e}")))?;
    if &head[..4] != magic {
        return Err(LabError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&head[..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(LabError::Format(format!("unsupported version {version}")));
    }
    Ok(u64::from_le_bytes(head[8..16].try_into().unwrap()))
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| LabError::Format(format!("truncated payload: {e}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_function<T: Scalar>(w: &mut impl Write, f: &CyclicFunction<T>) -> Result<()> {
    write_header(w, FUNCTION_MAGIC, f.modulus())?;
    for v in f.values() {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_function(r: &mut impl Read) -> Result<CyclicFunction<f64>> {
    let p = read_header(r, FUNCTION_MAGIC)?;
    let count = usize::try_from(p).map_err(|_| LabError::Format(format!("modulus {p} too large")))?;
    let values = read_f64s(r, count)?;
    CyclicFunction::new(p, values)
}

pub fn write_spectrum<T: Scalar>(w: &mut impl Write, s: &Spectrum<T>) -> Result<()> {
    write_header(w, SPECTRUM_MAGIC, s.modulus())?;
    for c in s.coefficients() {
        w.write_all(&c.re.as_f64().to_le_bytes())?;
        w.write_all(&c.im.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_spectrum(r: &mut impl Read) -> Result<Spectrum<f64>> {
    let p = read_header(r, SPECTRUM_MAGIC)?;
    let count = usize::try_from(p).map_err(|_| LabError::Format(format!("modulus {p} too large")))?;
    let flat = read_f64s(r, 2 * count)?;
    let coefs = flat.chunks_exact(2).map(|c| Complex::new(c[0], c[1])).collect();
    Spectrum::new(p, coefs)
}

/// One nonnegative integer per line; blank lines and `#` comments skipped.
pub fn read_integer_set(r: impl BufRead) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v = t.parse::<u64>().map_err(|e| {
            LabError::InvalidInput(format!("line {}: {t:?} is not an integer: {e}", lineno + 1))
        })?;
        out.push(v);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// One integer per line in ASCII decimal, each newline-terminated.
pub fn write_integers(w: &mut impl Write, values: impl IntoIterator<Item = u64>) -> Result<()> {
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}
