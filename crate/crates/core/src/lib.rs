//! Nevanlinna-Pick interpolation on the disk and bidisk.
//!
//! The crate decides solvability of Pick problems through positive
//! semi-definite certificates, builds interpolating functions as transfer
//! functions of lurking isometries, and ships finite-sample diagnostics for
//! the Schur-Agler class, interpolating sequences, Toeplitz-corona data and
//! distinguished varieties.

pub mod agler;
pub mod cli;
pub mod corona;
pub mod error;
pub mod lmi;
pub mod numerics;
pub mod pick;
pub mod realization;
pub mod sequences;
pub mod variety;

pub use error::{Error, Result};
pub use numerics::{CMatrix, C64};


pub use pick::{PickCertificate, PickData, PolydiskPoint, SolveReport, SolverOptions};
