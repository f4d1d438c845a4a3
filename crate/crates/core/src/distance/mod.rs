//! Certified distances on the infrastructure and the period functions Reg and PIP.

mod real;
mod walk;

pub use real::{approx_ln, approx_ln_ratio, ApproxReal};
pub use walk::{quarter, step_distance, Infra, PrecisionBudget, WalkState};
