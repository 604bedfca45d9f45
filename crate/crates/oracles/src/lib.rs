//! Slow, obviously-correct reference implementations.
//!
//! Nothing in here shares code with `restorex-core`. Inputs are plain slices
//! and tuples so the oracles cannot accidentally reuse the fast paths they
//! are meant to check. Everything is written as explicit loops and explicit
//! counting; performance is irrelevant.

#![allow(clippy::needless_range_loop)]

pub mod ap;
pub mod gradcam;

pub use ap::{ap_bruteforce, greedy_labels, OracleDet, OracleGt};
pub use gradcam::gradcam_naive;
