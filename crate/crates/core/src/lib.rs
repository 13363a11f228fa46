//! Periodic linear ODEs `x' = X(t) x`, their fundamental solutions and monodromy
//! operators, the suspension flow on `S¹ × F`, and box-graph approximations of
//! recurrence and chain recurrence for the discrete monodromy system and for the
//! suspension flow.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod chains;
pub mod correspondence;
pub mod cover;
pub mod error;
pub mod fiber;
pub mod fundamental;
pub mod graph;
pub mod linalg;
pub mod maps;
pub mod skew;
pub mod system;
pub mod verify;

pub use chains::{ChainWitness, SpaceTag};
pub use cover::{build_box_cover, build_suspension_cover, BoxCover, SampleScheme};
pub use error::{Error, Result};
pub use fiber::{EpsilonField, FiberKind, FiberSpace, PhaseSpace};
pub use fundamental::{integrate_fundamental, Constants, FundamentalSolution};
pub use graph::{build_transition_graph, chain_components, ChainComponents, TransitionGraph};
pub use linalg::Matrix;
pub use maps::{DiscreteMap, FnMap, LinearAction, SuspensionMap};
pub use skew::{phi, phi_in, skew_metric, SkewPoint};
pub use system::{Builtin, Coefficient, PeriodicSystem};
pub use verify::{verify_theorem, Analysis, CheckRecord, CheckStatus, TheoremId, VerificationReport, VerifyConfig};
