//! Scenario-driven front end for `hball-core`: JSON configs, verification
//! runs, artifacts and exit codes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod scenario;
pub mod sweep;

pub use config::{apply_override, ScenarioConfig, ScenarioKind};
pub use scenario::{output_dir, run, Outcome};
pub use sweep::{sweep, SweepOutcome};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

/// Exit code for a failed run: 3 for solver non-convergence, 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let stalled = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<hball_core::Error>(),
            Some(hball_core::Error::NonConvergence { .. })
        )
    });
    if stalled {
        EXIT_NONCONVERGENCE
    } else {
        EXIT_ERROR
    }
}
