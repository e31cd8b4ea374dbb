//! Screened Vlasov–Poisson near vacuum: a filtered-frame semi-Lagrangian
//! simulator, a closed-form linear oracle, and diagnostics for measuring
//! dispersive decay and scattering.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod linear_oracle;
pub mod numerics;
pub mod phase_space;
pub mod screened_poisson;

pub use error::{Result, SvpError};
