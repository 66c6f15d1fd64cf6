//! Simulated auditing contract: a deterministic state machine with access
//! control and an append-only call log.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::backend::ProofBackend;
use crate::circuit::{build_audit_circuit, Algo, AuditCircuit, AuditParams, AuditShape, AuditStatement, ProofBlob};
use crate::crypto::ecies::{self, Ciphertext};
use crate::crypto::{Commitment, Point};
use crate::error::{Error, Result};
use crate::field::{self, Fe};
use crate::fixed::FixedPoint;

/// Identifier of the only supported encryption function.
pub const ENC_FUNC_ID: &str = "ecies-babyjubjub-mimc7";

/// Audit function parameters, written as `mi-grid:intervals=10,max_iters=20,reps=1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFunc {
    pub intervals: usize,
    pub max_iters: usize,
    pub freivalds_reps: usize,
}

impl Default for AuditFunc {
    fn default() -> Self {
        let p = AuditParams::new(Algo::Raw);
        AuditFunc { intervals: p.intervals, max_iters: p.max_iters, freivalds_reps: p.freivalds_reps }
    }
}

impl AuditFunc {
    pub fn params(&self, algo: Algo) -> AuditParams {
        AuditParams { algo, intervals: self.intervals, max_iters: self.max_iters, freivalds_reps: self.freivalds_reps }
    }
}

impl fmt::Display for AuditFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mi-grid:intervals={},max_iters={},reps={}", self.intervals, self.max_iters, self.freivalds_reps)
    }
}

impl FromStr for AuditFunc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .strip_prefix("mi-grid")
            .ok_or_else(|| Error::UnsupportedAlgorithm(format!("audit function {s:?}")))?;
        let mut out = AuditFunc::default();
        for kv in body.trim_start_matches(':').split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::ParseError(format!("bad audit parameter {kv:?}")))?;
            let v: usize = v.parse().map_err(|_| Error::ParseError(format!("bad audit parameter {kv:?}")))?;
            match k {
                "intervals" => out.intervals = v,
                "max_iters" => out.max_iters = v,
                "reps" => out.freivalds_reps = v,
                _ => return Err(Error::ParseError(format!("unknown audit parameter {k:?}"))),
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub algo: Algo,
    pub pk: Point,
}

/// Encrypted representation on accept, the zero marker on reject.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditOutput {
    Ciphertext(Ciphertext),
    Zero { len: usize },
}

impl AuditOutput {
    pub fn digest(&self) -> Fe {
        match self {
            AuditOutput::Ciphertext(c) => c.digest(),
            AuditOutput::Zero { len } => ecies::zero_digest(*len),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, AuditOutput::Zero { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractState {
    pub owner: String,
    pub consumer: String,
    pub data_hash: Option<Commitment>,
    pub shape: Option<AuditShape>,
    pub threshold: FixedPoint,
    pub audit_func: Option<AuditFunc>,
    pub enc_func: Option<String>,
    pub proposal: Option<Proposal>,
    pub mi_total: FixedPoint,
    pub result: Option<AuditOutput>,
    /// Public inputs of the accepted proof; the proof itself is not kept.
    pub statement: Option<AuditStatement>,
    pub proof_sha256: Option<String>,
}

/// One line of the publicly verifiable record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    /// Logical clock: position of the call in the log.
    pub timestamp: u64,
    pub caller: String,
    pub method: String,
    pub args_digest: String,
    pub outcome: String,
}

impl CallRecord {
    pub fn to_tsv(&self) -> String {
        format!("{}\t{}\t{}\t{}\t{}", self.timestamp, self.caller, self.method, self.args_digest, self.outcome)
    }
}

fn args_digest(parts: &[String]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Contract state plus its call log. Mutations go through `&mut self`, so
/// the single-writer rule is enforced by ownership.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contract {
    pub state: ContractState,
    pub log: Vec<CallRecord>,
}

impl Contract {
    pub fn new(owner: &str, consumer: &str) -> Self {
        Contract {
            state: ContractState {
                owner: owner.into(),
                consumer: consumer.into(),
                data_hash: None,
                shape: None,
                threshold: FixedPoint::ZERO,
                audit_func: None,
                enc_func: None,
                proposal: None,
                mi_total: FixedPoint::ZERO,
                result: None,
                statement: None,
                proof_sha256: None,
            },
            log: Vec::new(),
        }
    }

    fn record<T>(&mut self, caller: &str, method: &str, args: &[String], r: Result<T>) -> Result<T> {
        let outcome = match &r {
            Ok(_) => "ok".to_string(),
            Err(e) => format!("err:{}", error_name(e)),
        };
        self.log.push(CallRecord {
            timestamp: self.log.len() as u64,
            caller: caller.into(),
            method: method.into(),
            args_digest: args_digest(args),
            outcome,
        });
        r
    }

    /// Commits the data hash, dataset shape, threshold and function ids.
    pub fn get_data(
        &mut self,
        caller: &str,
        hash: Commitment,
        shape: AuditShape,
        threshold: FixedPoint,
        audit_id: &str,
        enc_id: &str,
    ) -> Result<()> {
        let args = vec![
            field::to_decimal(&hash.digest),
            format!("{}:{}:{}", shape.rows, shape.n, shape.m),
            threshold.raw().to_string(),
            audit_id.into(),
            enc_id.into(),
        ];
        let r = self.try_get_data(caller, hash, shape, threshold, audit_id, enc_id);
        self.record(caller, "get_data", &args, r)
    }

    fn try_get_data(
        &mut self,
        caller: &str,
        hash: Commitment,
        shape: AuditShape,
        threshold: FixedPoint,
        audit_id: &str,
        enc_id: &str,
    ) -> Result<()> {
        let s = &mut self.state;
        if caller != s.owner {
            return Err(Error::Unauthorized);
        }
        if s.data_hash.is_some() {
            return Err(Error::AlreadyCommitted);
        }
        let audit: AuditFunc = audit_id.parse()?;
        if enc_id != ENC_FUNC_ID {
            return Err(Error::UnsupportedAlgorithm(format!("encryption function {enc_id:?}")));
        }
        s.data_hash = Some(hash);
        s.shape = Some(shape);
        s.threshold = threshold;
        s.audit_func = Some(audit);
        s.enc_func = Some(enc_id.into());
        Ok(())
    }

    pub fn get_proposal(&mut self, caller: &str, algo: Algo, pk: Point) -> Result<()> {
        let args = vec![algo.to_string(), field::to_decimal(&pk.x), field::to_decimal(&pk.y)];
        let r = self.try_get_proposal(caller, algo, pk);
        self.record(caller, "get_proposal", &args, r)
    }

    fn try_get_proposal(&mut self, caller: &str, algo: Algo, pk: Point) -> Result<()> {
        let s = &mut self.state;
        if caller != s.consumer {
            return Err(Error::Unauthorized);
        }
        let shape = s.shape.ok_or(Error::NotCommitted)?;
        let audit = s.audit_func.ok_or(Error::NotCommitted)?;
        if !algo.supports(shape.m) {
            return Err(Error::UnsupportedAlgorithm(format!("{algo} on {} columns", shape.m)));
        }
        audit.params(algo).validate(&shape).map_err(|e| Error::UnsupportedAlgorithm(e.to_string()))?;
        pk.validate()?;
        s.proposal = Some(Proposal { algo, pk });
        Ok(())
    }

    /// Circuit the committed data and current proposal must be proven against.
    pub fn audit_circuit(&self) -> Result<AuditCircuit> {
        let s = &self.state;
        let shape = s.shape.ok_or(Error::NotCommitted)?;
        let audit = s.audit_func.ok_or(Error::NotCommitted)?;
        let p = s.proposal.ok_or(Error::NoProposal)?;
        build_audit_circuit(shape, audit.params(p.algo))
    }

    /// Public statement implied by the contract state and a claimed result.
    pub fn statement_for(&self, pass: bool, mi: FixedPoint, output: &AuditOutput) -> Result<AuditStatement> {
        let s = &self.state;
        let hash = s.data_hash.ok_or(Error::NotCommitted)?;
        let audit = s.audit_func.ok_or(Error::NotCommitted)?;
        let p = s.proposal.ok_or(Error::NoProposal)?;
        Ok(AuditStatement {
            data_hash: hash.digest,
            threshold: s.threshold,
            pass,
            mi,
            y_enc_digest: output.digest(),
            pk: p.pk,
            algo: p.algo,
            intervals: audit.intervals,
            max_iters: audit.max_iters,
        })
    }

    /// Checks the decision and proof, then records MI and the result.
    /// `circuit` must be `self.audit_circuit()`; callers may cache it.
    pub fn verify_and_update(
        &mut self,
        caller: &str,
        pass: bool,
        mi: FixedPoint,
        output: AuditOutput,
        proof: &ProofBlob,
        backend: &dyn ProofBackend,
        circuit: &AuditCircuit,
    ) -> Result<()> {
        let proof_hash = sha256_hex(proof.as_bytes());
        let args = vec![pass.to_string(), mi.raw().to_string(), field::to_decimal(&output.digest()), proof_hash.clone()];
        let r = self.try_verify(caller, pass, mi, output, proof, backend, circuit, proof_hash);
        self.record(caller, "verify_and_update", &args, r)
    }

    #[allow(clippy::too_many_arguments)]
    fn try_verify(
        &mut self,
        caller: &str,
        pass: bool,
        mi: FixedPoint,
        output: AuditOutput,
        proof: &ProofBlob,
        backend: &dyn ProofBackend,
        circuit: &AuditCircuit,
        proof_hash: String,
    ) -> Result<()> {
        if caller != self.state.owner {
            return Err(Error::Unauthorized);
        }
        let shape = self.state.shape.ok_or(Error::NotCommitted)?;
        let p = self.state.proposal.ok_or(Error::NoProposal)?;
        let expected_len = shape.rows * p.algo.output_dims(shape.m);
        let within = mi.raw() <= self.state.threshold.raw();
        let shape_ok = match &output {
            AuditOutput::Ciphertext(c) => pass && c.body.len() == expected_len,
            AuditOutput::Zero { len } => !pass && *len == expected_len,
        };
        if pass != within || !shape_ok {
            return Err(Error::InconsistentDecision);
        }
        let st = self.statement_for(pass, mi, &output)?;
        if circuit.shape != shape || circuit.params.algo != p.algo {
            return Err(Error::ShapeError("circuit does not match the contract state".into()));
        }
        let ok = backend
            .verify(&circuit.cs, &circuit.digest, &circuit.statement_inputs(&st), proof)
            .unwrap_or(false);
        if !ok {
            return Err(Error::InvalidProof);
        }
        let s = &mut self.state;
        s.mi_total = mi;
        s.result = Some(output);
        s.statement = Some(st);
        s.proof_sha256 = Some(proof_hash);
        Ok(())
    }

    /// Records an off-contract step (such as the sender's audit) in the log.
    pub fn note(&mut self, caller: &str, method: &str, args: &[String]) {
        self.record(caller, method, args, Ok(())).expect("ok outcome");
    }

    pub fn mi_total(&self) -> FixedPoint {
        self.state.mi_total
    }

    pub fn result(&self) -> Option<&AuditOutput> {
        self.state.result.as_ref()
    }

    pub fn log_tsv(&self) -> String {
        self.log.iter().map(|r| r.to_tsv() + "\n").collect()
    }
}

fn error_name(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(['(', ' ', '{']).next().unwrap_or("Error").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::Scalar;

    fn committed() -> Contract {
        let mut c = Contract::new("alice", "bob");
        let shape = AuditShape { rows: 10, n: 1, m: 3 };
        c.get_data(
            "alice",
            Commitment { digest: Fe::from(7u64) },
            shape,
            FixedPoint::encode(0.5).unwrap(),
            &AuditFunc::default().to_string(),
            ENC_FUNC_ID,
        )
        .unwrap();
        c
    }

    #[test]
    fn commit_guards() {
        let mut c = Contract::new("alice", "bob");
        let shape = AuditShape { rows: 10, n: 1, m: 3 };
        let t = FixedPoint::encode(0.5).unwrap();
        let h = Commitment { digest: Fe::from(1u64) };
        let af = AuditFunc::default().to_string();
        assert_eq!(c.get_data("bob", h, shape, t, &af, ENC_FUNC_ID), Err(Error::Unauthorized));
        c.get_data("alice", h, shape, t, &af, ENC_FUNC_ID).unwrap();
        assert_eq!(c.get_data("alice", h, shape, t, &af, ENC_FUNC_ID), Err(Error::AlreadyCommitted));
        assert_eq!(c.state.data_hash, Some(h));
        assert_eq!(c.log.len(), 3);
        assert!(c.log[2].outcome.contains("AlreadyCommitted"));
    }

    #[test]
    fn proposal_guards() {
        let mut c = Contract::new("alice", "bob");
        let pk = Point::generator().mul(&Scalar::from_u64(3));
        assert_eq!(c.get_proposal("bob", Algo::Pca(1), pk), Err(Error::NotCommitted));
        let mut c2 = committed();
        assert_eq!(c2.get_proposal("alice", Algo::Pca(1), pk), Err(Error::Unauthorized));
        assert!(matches!(c2.get_proposal("bob", Algo::Pca(4), pk), Err(Error::UnsupportedAlgorithm(_))));
        let off = Point { x: Fe::from(1u64), y: Fe::from(2u64) };
        assert_eq!(c2.get_proposal("bob", Algo::Pca(2), off), Err(Error::InvalidPoint));
        c2.get_proposal("bob", Algo::Pca(3), pk).unwrap();
        assert_eq!(c2.state.proposal, Some(Proposal { algo: Algo::Pca(3), pk }));
    }

    #[test]
    fn audit_func_text() {
        let f: AuditFunc = "mi-grid:intervals=8,max_iters=30,reps=2".parse().unwrap();
        assert_eq!(f, AuditFunc { intervals: 8, max_iters: 30, freivalds_reps: 2 });
        assert_eq!(f.to_string().parse::<AuditFunc>().unwrap(), f);
        assert!("kde".parse::<AuditFunc>().is_err());
    }
}
