//! `CGRID1` binary format: magic `CGRID1\0`, `u32` side, `f64` centre
//! (re, im), `f64` half width, `u8` offset flag, then interleaved `f64`
//! (re, im) values row-major. Everything little-endian.

use super::{ComplexField, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;
use std::io::{Read, Write};
use std::path::Path;

pub const CGRID_MAGIC: &[u8; 7] = b"CGRID1\0";

pub fn write_cgrid_to<T: Real, W: Write>(f: &ComplexField<T>, mut w: W) -> Result<()> {
    let g = f.grid();
    let mut buf = Vec::with_capacity(36 + 16 * g.len());
    buf.extend_from_slice(CGRID_MAGIC);
    buf.extend_from_slice(&(g.n_side as u32).to_le_bytes());
    for x in [g.center.re, g.center.im, g.half_width] {
        buf.extend_from_slice(&x.f64().to_le_bytes());
    }
    buf.push(g.offset as u8);
    for v in f.values() {
        buf.extend_from_slice(&v.re.f64().to_le_bytes());
        buf.extend_from_slice(&v.im.f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_cgrid_from<T: Real, R: Read>(mut r: R) -> Result<ComplexField<T>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let header = 7 + 4 + 24 + 1;
    if bytes.len() < header || &bytes[..7] != CGRID_MAGIC {
        return Err(Error::Format("missing CGRID1 header".into()));
    }
    let n = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let offset = match bytes[35] {
        0 => false,
        1 => true,
        b => return Err(Error::Format(format!("bad offset flag {b}"))),
    };
    let grid = GridSpec::new(
        Complex::new(T::lit(f64_at(11)), T::lit(f64_at(19))),
        T::lit(f64_at(27)),
        n,
        offset,
    )
    .map_err(|e| Error::Format(format!("invalid grid header: {e}")))?;
    let expected = header + 16 * n * n;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "CGRID1 payload has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values = (0..n * n)
        .map(|k| {
            let o = header + 16 * k;
            Complex::new(T::lit(f64_at(o)), T::lit(f64_at(o + 8)))
        })
        .collect();
    ComplexField::new(grid, values)
}

pub fn write_cgrid<T: Real>(f: &ComplexField<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_cgrid_to(f, std::io::BufWriter::new(file))
}

pub fn read_cgrid<T: Real>(path: impl AsRef<Path>) -> Result<ComplexField<T>> {
    read_cgrid_from(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bit_exact() {
        let g = GridSpec::<f64>::new(Complex::new(0.5, -1.25), 3.0, 16, true).unwrap();
        let f = ComplexField::from_fn(g, |z| (z * z).sin()).unwrap();
        let mut buf = Vec::new();
        write_cgrid_to(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), 36 + 16 * 256);
        assert_eq!(&buf[..7], b"CGRID1\0");
        let back: ComplexField<f64> = read_cgrid_from(&buf[..]).unwrap();
        assert_eq!(back, f);
        buf.pop();
        assert!(read_cgrid_from::<f64, _>(&buf[..]).is_err());
        assert!(read_cgrid_from::<f64, _>(&b"NOTGRID"[..]).is_err());
    }
}
