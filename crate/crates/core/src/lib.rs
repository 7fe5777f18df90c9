//! Field-free alignment of linear molecules driven by elliptically polarized
//! ultrashort laser pulses.
//!
//! The pipeline runs from laboratory parameters ([`units`]) through exact
//! angular matrix elements ([`angular`]), single-state propagation
//! ([`propagator`]) and the thermal average ([`ensemble`]) to the
//! cross-defocusing pump-probe signal ([`signal`]). [`superposition`] holds
//! the closed-form two-pulse superposition picture and [`cli`] drives
//! everything from a config file.

pub mod angular;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod propagator;
pub mod signal;
pub mod superposition;
pub mod units;

pub use error::{AlignError, Result};
