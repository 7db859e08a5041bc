//! Simulation and verification of diffusively coupled networks whose nodes
//! descend convex potentials while exchanging state over fixed or switching
//! directed graphs:
//!
//! ```text
//! dx_i/dt = f_i(x_i) + K * sum_{j in N_i(sigma(t))} a_ij (x_j - x_i),   f_i = -grad F_i
//! ```
//!
//! The crate integrates these dynamics and checks the synchronization
//! properties they are known to satisfy: exact synchronization iff the
//! nodes' zero sets intersect, epsilon-synchronization for large gain,
//! monotone Lyapunov quantities, and convergence under jointly connected
//! switching.

// NaN-rejecting comparisons such as `!(x > 0.0)` are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod batch;
pub mod convex_geometry;
pub mod error;
pub mod graphs;
pub mod linalg;
pub mod potentials;
pub mod report;
pub mod simulator;
pub mod vector;

pub use convex_geometry::ConvexBody;
pub use error::{Error, Result};
pub use graphs::{SwitchingSignal, WeightBounds, WeightedDigraph};
pub use potentials::PotentialSpec;
pub use report::CheckReport;
pub use simulator::{IntegratorConfig, Network, NetworkState, Trajectory};
