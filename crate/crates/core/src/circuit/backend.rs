//! Proof backends. The reference `direct` backend ships the witness itself:
//! verification re-checks every constraint. It is neither succinct nor
//! zero-knowledge and exists to exercise the protocol plumbing.

use super::cs::{ConstraintSystem, Witness};
use super::io;
use crate::error::{Error, Result};
use crate::field::Fe;

pub const PROOF_MAGIC: &[u8; 4] = b"FPRF";
const HEADER_LEN: usize = 4 + 1 + 8;

/// Framed proof bytes: magic, backend id, big-endian payload length, payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofBlob(pub Vec<u8>);

impl ProofBlob {
    pub fn frame(backend: u8, payload: &[u8]) -> Self {
        let mut v = Vec::with_capacity(HEADER_LEN + payload.len());
        v.extend_from_slice(PROOF_MAGIC);
        v.push(backend);
        v.extend_from_slice(&(payload.len() as u64).to_be_bytes());
        v.extend_from_slice(payload);
        ProofBlob(v)
    }

    /// Backend id and payload.
    pub fn unframe(&self) -> Result<(u8, &[u8])> {
        let b = &self.0;
        if b.len() < HEADER_LEN || &b[..4] != PROOF_MAGIC {
            return Err(Error::MalformedProof("missing proof header".into()));
        }
        let len = u64::from_be_bytes(b[5..13].try_into().unwrap()) as usize;
        if b.len() - HEADER_LEN != len {
            return Err(Error::MalformedProof(format!(
                "payload is {} bytes, header says {len}",
                b.len() - HEADER_LEN
            )));
        }
        Ok((b[4], &b[HEADER_LEN..]))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

pub trait ProofBackend {
    fn id(&self) -> u8;
    fn name(&self) -> &'static str;
    /// Fails with `UnsatisfiedWitness` when `w` does not satisfy `cs`.
    fn prove(&self, cs: &ConstraintSystem, w: &Witness, public: &[Fe]) -> Result<ProofBlob>;
    /// `cs_digest` identifies the system the proof must be about.
    fn verify(&self, cs: &ConstraintSystem, cs_digest: &[u8; 32], public: &[Fe], proof: &ProofBlob) -> Result<bool>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DirectBackend;

impl ProofBackend for DirectBackend {
    fn id(&self) -> u8 {
        0
    }

    fn name(&self) -> &'static str {
        "direct"
    }

    fn prove(&self, cs: &ConstraintSystem, w: &Witness, public: &[Fe]) -> Result<ProofBlob> {
        let sat = cs.check(w, public)?;
        if !sat.is_ok() {
            return Err(Error::UnsatisfiedWitness(sat.to_string()));
        }
        let mut payload = io::cs_digest(cs).to_vec();
        payload.extend(io::witness_to_bytes(w));
        Ok(ProofBlob::frame(self.id(), &payload))
    }

    fn verify(&self, cs: &ConstraintSystem, cs_digest: &[u8; 32], public: &[Fe], proof: &ProofBlob) -> Result<bool> {
        let (id, payload) = proof.unframe()?;
        if id != self.id() {
            return Err(Error::MalformedProof(format!("backend id {id}, expected {}", self.id())));
        }
        if payload.len() < 32 {
            return Err(Error::MalformedProof("payload too short".into()));
        }
        if payload[..32] != cs_digest[..] {
            return Ok(false);
        }
        let w = io::read_witness(&mut &payload[32..]).map_err(|e| Error::MalformedProof(e.to_string()))?;
        if w.assignment.len() != cs.num_vars || public.len() != cs.public_inputs.len() {
            return Ok(false);
        }
        Ok(cs.check(&w, public)?.is_ok())
    }
}

/// Witness carried by a direct-backend proof.
pub fn direct_witness(proof: &ProofBlob) -> Result<Witness> {
    let (_, payload) = proof.unframe()?;
    if payload.len() < 32 {
        return Err(Error::MalformedProof("payload too short".into()));
    }
    io::read_witness(&mut &payload[32..]).map_err(|e| Error::MalformedProof(e.to_string()))
}

pub fn backend_by_name(name: &str) -> Result<Box<dyn ProofBackend + Send + Sync>> {
    match name {
        "direct" => Ok(Box::new(DirectBackend)),
        other => Err(Error::UnsupportedAlgorithm(format!("unknown proof backend {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::builder::{Builder, Mode};

    fn square(mode: Mode, x: u64) -> Builder {
        let mut b = Builder::new(mode);
        let out = b.alloc_public(Fe::from(x * x));
        let v = b.alloc(Fe::from(x));
        b.enforce(&v, &v, &out);
        b
    }

    #[test]
    fn prove_verify_and_tamper() {
        let cs = square(Mode::Shape, 0).finish_shape();
        let digest = io::cs_digest(&cs);
        let (w, _) = square(Mode::Witness, 3).finish_witness();
        let be = DirectBackend;
        let proof = be.prove(&cs, &w, &[Fe::from(9u64)]).unwrap();
        assert!(be.verify(&cs, &digest, &[Fe::from(9u64)], &proof).unwrap());
        assert!(!be.verify(&cs, &digest, &[Fe::from(10u64)], &proof).unwrap());
        assert!(!be.verify(&cs, &[0u8; 32], &[Fe::from(9u64)], &proof).unwrap());
        let truncated = ProofBlob(proof.0[..proof.0.len() - 1].to_vec());
        assert!(matches!(be.verify(&cs, &digest, &[Fe::from(9u64)], &truncated), Err(Error::MalformedProof(_))));
        assert!(matches!(be.prove(&cs, &w, &[Fe::from(10u64)]), Err(Error::UnsatisfiedWitness(_))));
    }
}
