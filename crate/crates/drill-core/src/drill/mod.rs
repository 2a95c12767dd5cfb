//! Drilling: cusped spaces, unwrapping along ℤ-covers, separated families and
//! the constants ledger.

pub mod cusp;
pub mod family;
pub mod instances;
pub mod ledger;
pub mod audits;
pub mod unwrap;

pub use cusp::{certify_cusp, cusp, cusp_path_family, glue_horoball, CuspPathFamily, CuspProvenance, CuspedSpace, Glued, PathCase};
pub use unwrap::{unwrap_and_glue, unwrap_stand_in, UnwrapParams, UnwrappedSpace};
pub use ledger::{constants_ledger, ConstantsLedger, LedgerInputs, PhiSpec, Profile};
