//! Binary formats for constraint systems and witnesses.
//!
//! Constraint system: magic `FR1CS`, version (u32), field modulus (32 bytes
//! LE), `num_vars`, `num_public`, `num_constraints` (u64 each), the public
//! input indexes (u32 each), then for every constraint three sparse rows
//! `count (u32), (index u32, value 32 bytes LE)*`, then one tag byte per
//! constraint. Witness: `num_vars` (u64) then 32-byte LE values. All
//! integers are little-endian.

use std::collections::HashMap;
use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use super::cs::{ConstraintSystem, Tag, Witness};
use crate::error::{Error, Result};
use crate::field::{self, Fe};

pub const CS_MAGIC: &[u8; 5] = b"FR1CS";
pub const CS_VERSION: u32 = 1;

fn modulus_bytes() -> [u8; 32] {
    let mut out = [0u8; 32];
    let b = field::modulus().to_bytes_le();
    out[..b.len()].copy_from_slice(&b);
    out
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::ParseError(format!("truncated input: {e}")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_fe<R: Read>(r: &mut R) -> Result<Fe> {
    let mut b = [0u8; 32];
    read_exact(r, &mut b)?;
    field::from_bytes32(&b)
}

pub fn write_cs<W: Write>(cs: &ConstraintSystem, w: &mut W) -> Result<()> {
    let coeff_bytes: Vec<[u8; 32]> = cs.coeffs.iter().map(field::to_bytes32).collect();
    w.write_all(CS_MAGIC)?;
    w.write_all(&CS_VERSION.to_le_bytes())?;
    w.write_all(&modulus_bytes())?;
    w.write_all(&(cs.num_vars as u64).to_le_bytes())?;
    w.write_all(&(cs.public_inputs.len() as u64).to_le_bytes())?;
    w.write_all(&(cs.num_constraints() as u64).to_le_bytes())?;
    for p in &cs.public_inputs {
        w.write_all(&p.to_le_bytes())?;
    }
    for i in 0..cs.num_constraints() {
        for slot in 0..3 {
            let row = cs.row(i, slot);
            w.write_all(&(row.len() as u32).to_le_bytes())?;
            for (v, c) in row {
                w.write_all(&v.to_le_bytes())?;
                w.write_all(&coeff_bytes[*c as usize])?;
            }
        }
    }
    let tags: Vec<u8> = cs.tags.iter().map(|t| *t as u8).collect();
    w.write_all(&tags)?;
    Ok(())
}

pub fn read_cs<R: Read>(r: &mut R) -> Result<ConstraintSystem> {
    let mut magic = [0u8; 5];
    read_exact(r, &mut magic)?;
    if &magic != CS_MAGIC {
        return Err(Error::ParseError("not a constraint system file".into()));
    }
    let version = read_u32(r)?;
    if version != CS_VERSION {
        return Err(Error::ParseError(format!("unsupported version {version}")));
    }
    let mut modulus = [0u8; 32];
    read_exact(r, &mut modulus)?;
    if modulus != modulus_bytes() {
        return Err(Error::ParseError("field modulus mismatch".into()));
    }
    let num_vars = read_u64(r)? as usize;
    let num_public = read_u64(r)? as usize;
    let num_constraints = read_u64(r)? as usize;
    let mut cs = ConstraintSystem { num_vars, ..Default::default() };
    for _ in 0..num_public {
        cs.public_inputs.push(read_u32(r)?);
    }
    let mut intern: HashMap<Fe, u32> = HashMap::new();
    for _ in 0..3 * num_constraints {
        let count = read_u32(r)?;
        for _ in 0..count {
            let v = read_u32(r)?;
            let c = read_fe(r)?;
            let next = cs.coeffs.len() as u32;
            let ci = *intern.entry(c).or_insert(next);
            if ci == next {
                cs.coeffs.push(c);
            }
            cs.terms.push((v, ci));
        }
        cs.row_start.push(cs.terms.len() as u32);
    }
    let mut tags = vec![0u8; num_constraints];
    read_exact(r, &mut tags)?;
    cs.tags = tags
        .into_iter()
        .map(|t| Tag::from_u8(t).ok_or_else(|| Error::ParseError(format!("unknown tag {t}"))))
        .collect::<Result<_>>()?;
    cs.validate()?;
    Ok(cs)
}

/// SHA-256 over a compact encoding of the system's structure.
pub fn cs_digest(cs: &ConstraintSystem) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(CS_MAGIC);
    h.update(CS_VERSION.to_le_bytes());
    h.update((cs.num_vars as u64).to_le_bytes());
    h.update((cs.public_inputs.len() as u64).to_le_bytes());
    for p in &cs.public_inputs {
        h.update(p.to_le_bytes());
    }
    h.update((cs.coeffs.len() as u64).to_le_bytes());
    for c in &cs.coeffs {
        h.update(field::to_bytes32(c));
    }
    h.update((cs.row_start.len() as u64).to_le_bytes());
    let mut buf = Vec::with_capacity(1 << 16);
    for s in &cs.row_start {
        buf.extend_from_slice(&s.to_le_bytes());
        if buf.len() >= 1 << 16 {
            h.update(&buf);
            buf.clear();
        }
    }
    for (v, c) in &cs.terms {
        buf.extend_from_slice(&v.to_le_bytes());
        buf.extend_from_slice(&c.to_le_bytes());
        if buf.len() >= 1 << 16 {
            h.update(&buf);
            buf.clear();
        }
    }
    h.update(&buf);
    let tags: Vec<u8> = cs.tags.iter().map(|t| *t as u8).collect();
    h.update(&tags);
    h.finalize().into()
}

pub fn write_witness<W: Write>(wit: &Witness, w: &mut W) -> Result<()> {
    w.write_all(&(wit.assignment.len() as u64).to_le_bytes())?;
    for v in &wit.assignment {
        w.write_all(&field::to_bytes32(v))?;
    }
    Ok(())
}

pub fn read_witness<R: Read>(r: &mut R) -> Result<Witness> {
    let n = read_u64(r)? as usize;
    let mut assignment = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        assignment.push(read_fe(r)?);
    }
    Ok(Witness { assignment })
}

pub fn witness_to_bytes(wit: &Witness) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 32 * wit.assignment.len());
    write_witness(wit, &mut out).expect("writing to memory cannot fail");
    out
}
