//! Flat binary field files.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `BRLABFLD` |
//! | 4 | u32 format version (1) |
//! | 4 | u32 dimension n |
//! | 4 | u32 N_side |
//! | 4 | u32 domain tag (0 space, 1 frequency) |
//! | 8 | f64 half-width L |
//! | 16 per sample | f64 real, f64 imaginary, row-major |

use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

use super::{Domain, GridSpec, SampledField};
use crate::{Error, Result};

pub const FIELD_MAGIC: &[u8; 8] = b"BRLABFLD";
pub const FIELD_VERSION: u32 = 1;

pub fn encode(field: &SampledField) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 16 * field.data.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&(field.grid.n as u32).to_le_bytes());
    out.extend_from_slice(&(field.grid.n_side as u32).to_le_bytes());
    let tag: u32 = match field.domain {
        Domain::Space => 0,
        Domain::Frequency => 1,
    };
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&field.grid.half_width.to_le_bytes());
    for v in &field.data {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<SampledField> {
    let bad = |m: &str| Error::Numerical(format!("malformed field file: {m}"));
    if bytes.len() < 32 || &bytes[..8] != FIELD_MAGIC {
        return Err(bad("missing magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    if u32_at(8) != FIELD_VERSION {
        return Err(bad("unsupported version"));
    }
    let n = u32_at(12) as usize;
    let side = u32_at(16) as usize;
    let domain = match u32_at(20) {
        0 => Domain::Space,
        1 => Domain::Frequency,
        _ => return Err(bad("unknown domain tag")),
    };
    let half_width = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let grid = GridSpec::new(n, side, half_width)?;
    if bytes.len() != 32 + 16 * grid.len() {
        return Err(bad("length does not match header"));
    }
    let data = bytes[32..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok(SampledField { grid, domain, data })
}

pub fn write_field(path: &Path, field: &SampledField) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(field))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<SampledField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}
