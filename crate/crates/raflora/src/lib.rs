//! Numerical laboratory for heterogeneous-rank federated low-rank adapter
//! aggregation.
//!
//! The crate implements and compares four server-side aggregation strategies
//! for clients that hold low-rank adapters of different ranks (`hetlora`,
//! `flora`, `flexlora`, and rank-partitioned `raflora`), together with the
//! machinery needed to study how the singular-value energy of the global
//! update distributes over rank indices as training proceeds:
//!
//! - [`linalg`]: deterministic dense matrices and a Jacobi SVD with fixed
//!   ordering and sign conventions,
//! - [`population`]: heterogeneous-rank client rosters, uniform sampling
//!   without replacement, rank coverage, and the hypergeometric contraction
//!   statistics,
//! - [`dynamics`]: the fixed-basis spectrum simulator, the closed-form
//!   expected-energy recursion, the geometric collapse bound, and the
//!   mean-field second-moment bound,
//! - [`aggregate`]: the four aggregation strategies on real factor matrices
//!   plus broadcast truncation and SVD reallocation,
//! - [`harness`]: a desk-scale synthetic federated training loop that
//!   produces energy-dynamics and loss curves,
//! - [`cli`]: the command-line front end with reproducible CSV outputs.

pub mod aggregate;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod population;
pub mod rng;

pub use error::{Error, Result};
