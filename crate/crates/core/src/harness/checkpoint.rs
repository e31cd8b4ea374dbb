//! Binary phase-space checkpoints.
//!
//! Layout (little-endian): `b"SVPK"`, `u32` version, `u32` d, `u32` nx,
//! `u32` nv, `f64` lx, `f64` lv, `f64` t, `u32` frame flag, then the profile
//! values row-major as `f64`.

use std::fs;
use std::path::Path;

use crate::error::{Result, SvpError};
use crate::phase_space::{Frame, PhaseGrid, PhaseProfile};

pub const MAGIC: &[u8; 4] = b"SVPK";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 48;

pub fn encode(profile: &PhaseProfile) -> Vec<u8> {
    let g = &profile.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * profile.values.len());
    out.extend_from_slice(MAGIC);
    for x in [VERSION, g.d as u32, g.nx as u32, g.nv as u32] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for x in [g.lx, g.lv, profile.time] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&profile.frame.flag().to_le_bytes());
    for v in &profile.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode(bytes: &[u8]) -> Result<PhaseProfile> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(SvpError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(SvpError::LengthMismatch {
            found: bytes.len(),
            expected: HEADER_LEN,
        });
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(SvpError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(SvpError::LengthMismatch {
            found: bytes.len(),
            expected: HEADER_LEN,
        });
    }
    let grid = PhaseGrid::new(
        u32_at(bytes, 8) as usize,
        u32_at(bytes, 12) as usize,
        u32_at(bytes, 16) as usize,
        f64_at(bytes, 20),
        f64_at(bytes, 28),
    )?;
    let time = f64_at(bytes, 36);
    let flag = u32_at(bytes, 44);
    let frame = Frame::from_flag(flag).ok_or_else(|| SvpError::InvalidGrid(format!("unknown frame flag {flag}")))?;
    let expected = HEADER_LEN + 8 * grid.len();
    if bytes.len() != expected {
        return Err(SvpError::LengthMismatch {
            found: bytes.len(),
            expected,
        });
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(PhaseProfile {
        grid,
        values,
        time,
        frame,
    })
}

pub fn save_checkpoint(profile: &PhaseProfile, path: &Path) -> Result<()> {
    fs::write(path, encode(profile))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<PhaseProfile> {
    decode(&fs::read(path)?)
}
