//! Binary snapshot format.
//!
//! ```text
//! "PEQS" | u32 version = 1 | f64 L | f64 h | u32 Nx | u32 Ny | u32 Nz
//!        | u32 m_sobolev | f64 delta | (f64 re, f64 im) ...
//!        [| f64 timestamp]
//! ```
//!
//! All integers and floats are little-endian. Coefficients follow the loop
//! order `c`, then `m = -Nx/2+1 ..= Nx/2`, then `n` likewise, then
//! `k = 0 .. Nz`. Trajectory checkpoints append the time as one more `f64`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::SpectralField;

pub const MAGIC: &[u8; 4] = b"PEQS";
pub const VERSION: u32 = 1;

fn header_len() -> usize {
    4 + 4 + 8 + 8 + 4 * 4 + 8
}

fn body_len(g: &GridSpec) -> usize {
    2 * g.nx * g.ny * g.nz * 16
}

pub fn encode(f: &SpectralField, timestamp: Option<f64>) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(header_len() + body_len(g) + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&g.length.to_le_bytes());
    out.extend_from_slice(&g.depth.to_le_bytes());
    for v in [g.nx as u32, g.ny as u32, g.nz as u32, g.m_sobolev] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&g.delta.to_le_bytes());
    let hx = g.nx as i64 / 2;
    let hy = g.ny as i64 / 2;
    for c in 0..2 {
        for m in (-hx + 1)..=hx {
            for n in (-hy + 1)..=hy {
                for k in 0..g.nz {
                    let v = f.get(c, m, n, k);
                    out.extend_from_slice(&v.re.to_le_bytes());
                    out.extend_from_slice(&v.im.to_le_bytes());
                }
            }
        }
    }
    if let Some(t) = timestamp {
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Snapshot("truncated".into()))?;
        self.pos = end;
        Ok(s.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Decodes a snapshot, returning the field and the optional timestamp.
pub fn decode(bytes: &[u8]) -> Result<(SpectralField, Option<f64>)> {
    let mut cur = Cursor { bytes, pos: 0 };
    if &cur.take::<4>()? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let length = cur.f64()?;
    let depth = cur.f64()?;
    let nx = cur.u32()? as usize;
    let ny = cur.u32()? as usize;
    let nz = cur.u32()? as usize;
    let m_sobolev = cur.u32()?;
    let delta = cur.f64()?;
    let g = GridSpec::new(length, depth, nx, ny, nz, m_sobolev, delta)?;
    let rest = bytes.len() - cur.pos;
    let body = body_len(&g);
    let timestamp_present = match rest {
        r if r == body => false,
        r if r == body + 8 => true,
        r => {
            return Err(Error::Snapshot(format!(
                "expected {body} coefficient bytes, found {r}"
            )))
        }
    };
    let mut f = SpectralField::zeros(&g);
    let hx = nx as i64 / 2;
    let hy = ny as i64 / 2;
    for c in 0..2 {
        for m in (-hx + 1)..=hx {
            for n in (-hy + 1)..=hy {
                for k in 0..nz {
                    let re = cur.f64()?;
                    let im = cur.f64()?;
                    f.set(c, m, n, k, Complex64::new(re, im));
                }
            }
        }
    }
    let t = if timestamp_present {
        Some(cur.f64()?)
    } else {
        None
    };
    Ok((f, t))
}

pub fn write<W: Write>(w: &mut W, f: &SpectralField, timestamp: Option<f64>) -> Result<()> {
    w.write_all(&encode(f, timestamp))?;
    Ok(())
}

pub fn read<R: Read>(r: &mut R) -> Result<(SpectralField, Option<f64>)> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode(&buf)
}
