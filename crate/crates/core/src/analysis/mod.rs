//! Trajectory diagnostics and verifiers for the synchronization results.

pub mod aggregate;
pub mod diagnostics;
pub mod theorems;

pub use aggregate::{check_spectral_bound, fg_gradient, fg_value, minimize_fg, FgMinimum};
pub use diagnostics::{
    check_common_limit, check_monotone, check_node_optimum, common_zero_set, default_rise_tol,
    diagnostics, diameter, sync_verdict, tail_indices, DiagnosticsSeries, Reference, SyncVerdict,
};
pub use theorems::{
    check_feasibility, check_invariant_cube, check_theorem1, invariant_cube, sweep_k,
    AssumptionStatus, FeasibilityReport, SweepRow, SweepTable, Theorem1Report, Theorem1Tolerances,
};
