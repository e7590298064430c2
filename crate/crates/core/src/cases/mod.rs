//! Test cases, error norms, convergence drivers, diagnostics and output.

pub mod convergence;
pub mod init;
pub mod norms;
pub mod output;
pub mod quadrature;
pub mod run;

pub use init::{init_case, CaseId, CaseSpec};
pub use norms::{error_norms, Norms};
