//! Rank-1 constraint systems for the audit statement.

pub mod audit;
pub mod backend;
pub mod builder;
pub mod cs;
pub mod gadgets;
pub mod io;

pub use audit::{
    build_audit_circuit, generate_witness, is_satisfied, run_native, Algo, AuditCircuit, AuditParams, AuditRun,
    AuditShape, AuditStatement, NativeAudit,
};
pub use backend::{DirectBackend, ProofBackend, ProofBlob};
pub use builder::{Builder, Lc, Mode};
pub use cs::{constraint_report, ConstraintSystem, ReportRow, Satisfaction, Tag, Witness};
