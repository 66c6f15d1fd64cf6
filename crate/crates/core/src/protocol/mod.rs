//! Sender and receiver actors around the auditing contract.

pub mod contract;

pub use contract::{AuditFunc, AuditOutput, CallRecord, Contract, ContractState, Proposal, ENC_FUNC_ID};

use crate::circuit::backend::ProofBackend;
use crate::circuit::{generate_witness, AuditCircuit, AuditStatement, NativeAudit, ProofBlob};
use crate::crypto::ecies;
use crate::crypto::Scalar;
use crate::dataset::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::fixed::{FixedPoint, SCALE_BITS};

/// What the sender submits to `verify_and_update`, plus its private view.
#[derive(Clone, Debug)]
pub struct SenderAudit {
    pub pass: bool,
    pub mi: FixedPoint,
    pub output: AuditOutput,
    pub proof: ProofBlob,
    pub statement: AuditStatement,
    pub native: NativeAudit,
}

/// Runs the audit against the committed state and proves it.
pub fn sender_audit(
    dataset: &Dataset,
    contract: &Contract,
    circuit: &AuditCircuit,
    backend: &dyn ProofBackend,
    ephemeral_sk: &Scalar,
) -> Result<SenderAudit> {
    let s = &contract.state;
    let committed = s.data_hash.ok_or(Error::NotCommitted)?;
    if dataset.commitment() != committed {
        return Err(Error::CommitmentMismatch);
    }
    let p = s.proposal.ok_or(Error::NoProposal)?;
    let run = generate_witness(circuit, dataset, &p.pk, ephemeral_sk, &s.threshold)?;
    let proof = backend.prove(&circuit.cs, &run.witness, &circuit.statement_inputs(&run.statement))?;
    let output = match &run.native.ciphertext {
        Some(c) => AuditOutput::Ciphertext(c.clone()),
        None => AuditOutput::Zero { len: run.native.y.len() * run.native.y.first().map_or(0, Vec::len) },
    };
    Ok(SenderAudit {
        pass: run.statement.pass,
        mi: run.statement.mi,
        output,
        proof,
        statement: run.statement,
        native: run.native,
    })
}

/// Public information the consumer can read from the contract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceiverView {
    pub mi_total: FixedPoint,
    pub result: Option<AuditOutput>,
    pub statement: Option<AuditStatement>,
}

pub fn receiver_view(contract: &Contract) -> ReceiverView {
    ReceiverView {
        mi_total: contract.state.mi_total,
        result: contract.state.result.clone(),
        statement: contract.state.statement.clone(),
    }
}

/// Decrypts the stored result into an `N x k` matrix.
pub fn receiver_decode(sk: &Scalar, contract: &Contract) -> Result<Matrix> {
    let s = &contract.state;
    let c = match &s.result {
        Some(AuditOutput::Ciphertext(c)) => c,
        _ => return Err(Error::NoResult),
    };
    let st = s.statement.as_ref().ok_or(Error::NoResult)?;
    if c.digest() != st.y_enc_digest {
        return Err(Error::DigestMismatch);
    }
    let shape = s.shape.ok_or(Error::NotCommitted)?;
    let k = st.algo.output_dims(shape.m);
    let plain = ecies::ecies_decrypt_checked(sk, c)?;
    if plain.len() != shape.rows * k {
        return Err(Error::ShapeMismatch(format!("{} values for a {}x{k} matrix", plain.len(), shape.rows)));
    }
    plain
        .chunks(k)
        .map(|row| {
            row.iter()
                .map(|v| FixedPoint::from_field(v, SCALE_BITS).map_err(|_| Error::DigestMismatch))
                .collect()
        })
        .collect()
}
