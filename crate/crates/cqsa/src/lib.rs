//! Desk-scale simulation of clustered quantum secure aggregation for
//! federated learning.
//!
//! Clients encode model-update coordinates as phases on shared GHZ states so
//! a server can measure only per-cluster sums; clusters are re-randomized
//! every round and cluster aggregates are cross-checked with Byzantine-robust
//! filters. The crate bundles:
//!
//! - [`statevec`]: a dense state-vector simulator with trajectory-based
//!   depolarizing noise on CNOTs,
//! - [`protocol`]: GHZ preparation, phase encoding, decoding, and sum
//!   estimation from shot statistics,
//! - [`encoding`]: the classical weight <-> phase scaling with its geometric
//!   preservation guarantees,
//! - [`clustering`]: per-round Fisher-Yates partitioning with dropout
//!   handling,
//! - [`robust`]: similarity metrics and pluggable robust filters (Krum,
//!   Multi-Krum, Median, Trimmed Mean, trust-weighted, multi-statistic),
//! - [`fl`]: an end-to-end federated harness on a synthetic regression task,
//! - [`fidelity`]: the fidelity-scaling study (direct simulation, recurrence
//!   extrapolation, analytic model, clustered product).
//!
//! Every randomized path is seeded through [`seeding`], so identical inputs
//! reproduce identical outputs byte for byte. The `cqsa` binary exposes the
//! same workflows as subcommands; the `examples/` directory shows one
//! runnable program per capability.

pub mod clustering;
pub mod encoding;
pub mod fidelity;
pub mod fl;
pub mod protocol;
pub mod robust;
pub mod seeding;
pub mod statevec;

pub use statevec::{NoiseModel, PauliLabel, SimError, StateVector};
