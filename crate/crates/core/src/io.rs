//! Flat binary dumps of operators and states for golden tests.
//!
//! Layout: `b"NTFD"`, then `version`, `dim` and `kind` as little-endian
//! `u32`, then the entries as little-endian `(re, im)` `f64` pairs. Operators
//! are stored dense and row-major.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::thermal::{ThermalBra, ThermalKet, ThermalOperator, TruncatedFockSpace};
use crate::C64;

pub const MAGIC: &[u8; 4] = b"NTFD";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum Kind {
    Operator = 0,
    Ket = 1,
    Bra = 2,
}

fn write_header(w: &mut impl Write, dim: usize, kind: Kind) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&(kind as u32).to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_header(r: &mut impl Read, space: TruncatedFockSpace, kind: Kind) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(r)? as usize;
    if dim != space.dim() {
        return Err(Error::ShapeMismatch(format!(
            "file dim {dim}, space dim {}",
            space.dim()
        )));
    }
    let k = read_u32(r)?;
    if k != kind as u32 {
        return Err(Error::Format(format!(
            "expected kind {}, found {k}",
            kind as u32
        )));
    }
    Ok(())
}

fn write_values<'a>(w: &mut impl Write, values: impl Iterator<Item = &'a C64>) -> Result<()> {
    for z in values {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_values(r: &mut impl Read, count: usize) -> Result<Vec<C64>> {
    let mut buf = vec![0u8; 16 * count];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect())
}

pub fn write_operator(w: &mut impl Write, op: &ThermalOperator) -> Result<()> {
    let dense = op.to_dense();
    write_header(w, dense.nrows(), Kind::Operator)?;
    write_values(w, dense.iter())
}

pub fn read_operator(r: &mut impl Read, space: TruncatedFockSpace) -> Result<ThermalOperator> {
    read_header(r, space, Kind::Operator)?;
    let d = space.dim();
    let v = read_values(r, d * d)?;
    let dense = Array2::from_shape_vec((d, d), v).map_err(|e| Error::Format(e.to_string()))?;
    ThermalOperator::from_dense(space, &dense)
}

pub fn write_ket(w: &mut impl Write, ket: &ThermalKet) -> Result<()> {
    write_header(w, ket.data().len(), Kind::Ket)?;
    write_values(w, ket.data().iter())
}

pub fn read_ket(r: &mut impl Read, space: TruncatedFockSpace) -> Result<ThermalKet> {
    read_header(r, space, Kind::Ket)?;
    ThermalKet::from_vec(space, Array1::from(read_values(r, space.dim())?))
}

pub fn write_bra(w: &mut impl Write, bra: &ThermalBra) -> Result<()> {
    write_header(w, bra.data().len(), Kind::Bra)?;
    write_values(w, bra.data().iter())
}

pub fn read_bra(r: &mut impl Read, space: TruncatedFockSpace) -> Result<ThermalBra> {
    read_header(r, space, Kind::Bra)?;
    ThermalBra::from_vec(space, Array1::from(read_values(r, space.dim())?))
}
