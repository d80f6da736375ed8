//! Binary checkpoints: a 64-byte little-endian header followed by the
//! physical samples in row-major order.
//!
//! ```text
//! 0   b"WVL1"
//! 4   u32 flags (bit 0: complex payload)
//! 8   u64 nx
//! 16  u64 nv
//! 24  f64 Lx
//! 32  f64 Lv
//! 40  f64 x origin
//! 48  f64 eps (0 for the classical model)
//! 56  f64 t
//! 64  f64 data: real parts, or interleaved (re, im)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{PhaseField, PhaseGrid, Representation};

const MAGIC: &[u8; 4] = b"WVL1";
const FLAG_COMPLEX: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub field: PhaseField,
    /// `None` for a Vlasov-Benney run.
    pub eps: Option<f64>,
    pub t: f64,
}

pub fn write_checkpoint(path: &Path, f: &PhaseField, eps: Option<f64>, t: f64) -> Result<()> {
    let phys = f.to_physical();
    let g = phys.grid();
    let complex = !phys.is_real_valued();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(if complex { FLAG_COMPLEX } else { 0 }).to_le_bytes())?;
    w.write_all(&(g.nx() as u64).to_le_bytes())?;
    w.write_all(&(g.nv() as u64).to_le_bytes())?;
    for x in [g.gx.length(), g.gv.length(), g.gx.origin(), eps.unwrap_or(0.0), t] {
        w.write_all(&x.to_le_bytes())?;
    }
    for c in phys.data() {
        w.write_all(&c.re.to_le_bytes())?;
        if complex {
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(b[off..off + 4].try_into().expect("4 bytes"))
}

fn u64_at(b: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(b[off..off + 8].try_into().expect("8 bytes"))
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().expect("8 bytes"))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 64];
    r.read_exact(&mut header)
        .map_err(|_| Error::Checkpoint("file shorter than the 64-byte header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let flags = u32_at(&header, 4);
    if flags & !FLAG_COMPLEX != 0 {
        return Err(Error::Checkpoint(format!("unknown flags {flags:#x}")));
    }
    let complex = flags & FLAG_COMPLEX != 0;
    let nx = u64_at(&header, 8) as usize;
    let nv = u64_at(&header, 16) as usize;
    let (lx, lv, x0, eps, t) = (
        f64_at(&header, 24),
        f64_at(&header, 32),
        f64_at(&header, 40),
        f64_at(&header, 48),
        f64_at(&header, 56),
    );
    let grid = PhaseGrid::build(nx, lx, x0, nv, lv)
        .map_err(|e| Error::Checkpoint(format!("invalid grid in header: {e}")))?;
    let per = if complex { 16 } else { 8 };
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != grid.size() * per {
        return Err(Error::Checkpoint(format!(
            "payload has {} bytes, expected {}",
            body.len(),
            grid.size() * per
        )));
    }
    let data: Vec<Complex64> = body
        .chunks_exact(per)
        .map(|c| {
            if complex {
                Complex64::new(f64_at(c, 0), f64_at(c, 8))
            } else {
                Complex64::new(f64_at(c, 0), 0.0)
            }
        })
        .collect();
    let field = PhaseField::from_parts(grid, data, Representation::Physical, !complex)?;
    Ok(Checkpoint {
        field,
        eps: (eps != 0.0).then_some(eps),
        t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_real_and_complex() {
        let dir = tempfile::tempdir().unwrap();
        let g = PhaseGrid::build(8, 3.0, -1.5, 16, 10.0).unwrap();
        let real = PhaseField::from_fn(g, |x, v| x * v + 0.25);
        let path = dir.path().join("a.wvl");
        write_checkpoint(&path, &real, Some(0.1), 1.5).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 64 + 8 * 128);
        assert_eq!(&bytes[0..4], b"WVL1");
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.field, real);
        assert_eq!(back.eps, Some(0.1));
        assert_eq!(back.t, 1.5);

        let cplx = PhaseField::from_complex_fn(g, Complex64::new);
        write_checkpoint(&path, &cplx, None, 0.0).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back.field, cplx);
        assert_eq!(back.eps, None);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.wvl");
        std::fs::write(&path, b"nope").unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
        let g = PhaseGrid::build(4, 1.0, 0.0, 4, 2.0).unwrap();
        write_checkpoint(&path, &PhaseField::zeros(g), None, 0.0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
    }
}
