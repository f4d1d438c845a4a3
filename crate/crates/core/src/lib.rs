//! Quantum algorithms for the regulator and the principal ideal problem in
//! real-quadratic orders, with the quantum subroutines simulated exactly.

pub mod distance;
pub mod error;
pub mod forms;
pub mod oracle;
pub mod qsim;
pub mod recover;

pub use distance::{ApproxReal, Infra, PrecisionBudget, WalkState};
pub use error::{Error, Result};
pub use forms::{Discriminant, Form, PositiveReducedForm, ReducedForm};
pub use recover::{RecoverConfig, RecoveryResult};
