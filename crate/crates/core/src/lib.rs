//! Mean-field simulation of a coherently driven, dissipative chain of
//! cavity-qubit unit cells, together with the tools used to analyse it:
//! transmission maps, hysteresis and bistability detection, chain eigenmodes,
//! and extraction of switching rates and the asymptotic decay rate from
//! two-state telegraph traces.

pub mod config;
pub mod error;
pub mod io;
pub mod mft;
pub mod model;
pub mod observables;
pub mod sweep;
pub mod telegraph;

pub use error::{Error, Result};
pub use model::{DriveSpec, Envelope, LatticeParams, MeanFieldState};
