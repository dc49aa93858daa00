//! Conway-Maxwell-Poisson (CMP) distribution family and executable forms of its
//! characterizations: conditional laws, Rao-Rubin damage, recurrence and Stein identities,
//! COM-type transforms and discrete Fisher information, pseudo compound Poisson
//! representation, and the birth-death queue equilibrium.

pub mod characterizations;
pub mod dpcp;
pub mod error;
pub mod information;
pub mod kernels;
pub mod numeric;
pub mod pmf;
pub mod queue;
pub mod registry;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use pmf::{PmfMeta, TailModel, TruncatedPmf};
pub use registry::{Family, FamilyArgs, FamilyRegistry};
pub use verify::{Check, CheckOutcome, CheckRegistry, VerifyReport};
