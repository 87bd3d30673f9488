//! Subharmonic balls in planar domains via partial balayage, and two-phase
//! Schwarz functions built from them.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: grids, domain and region masks, node quadrature;
//! * [`greens`]: logarithmic kernel and Green functions;
//! * [`balayage`]: obstacle solver, divisible sandpile, sweeping measure;
//! * [`balls`]: ball construction and the verification checks;
//! * [`twophase`]: reflection and null-quadrature two-phase pairs, Schwarz fields;
//! * [`export`]: PGM / CSV / JSON artifacts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balayage;
pub mod balls;
pub mod error;
pub mod export;
pub mod greens;
pub mod grid;
pub mod report;
pub mod twophase;

pub use error::{Error, Result};
pub use grid::{GridSpec, Point};
