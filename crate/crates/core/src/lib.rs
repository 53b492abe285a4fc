//! Multi-party privacy-preserving record linkage.
//!
//! Each party encodes its records into Bloom filters ([`encode`]) and groups
//! them by phonetic blocking keys ([`blocking`]). Within every block the
//! parties are processed one at a time: records of the next party are
//! assigned to the current clusters by maximum-weight bipartite matching
//! ([`assignment`]) under early, late or greedy mapping ([`cluster`]).
//! Cluster similarity is either the average pairwise Dice of the plaintext
//! filters or, in protocol mode ([`protocol`]), the Dice of a counting Bloom
//! filter built by secure summation so that no party sees another's filter.
//!
//! [`pipeline`] ties the pieces together, [`datagen`] produces synthetic
//! parties with known ground truth, [`eval`] scores linkage quality and
//! disclosure risk, and [`cli`] drives everything from files.
//!
//! Runnable examples live in `examples/`:
//!
//! - `bloom_encoding`: pairwise Dice against Dice of the summed filter
//! - `soundex_blocking`: block counts and true matches that share a block
//! - `optimal_mapping`: greedy versus optimal assignment on a conflict matrix
//! - `early_mapping`: four-party incremental clustering on a fixed table
//! - `late_mapping`: the three mappings on data with near-duplicate relatives
//! - `secure_summation`: one summation session and its transcript
//! - `end_to_end`: generate, encode, link and evaluate through files
//! - `disclosure_risk`: linkage attack on filters and on summed filters
//! - `scalability`: comparisons and runtime as parties grow

pub mod assignment;
pub mod blocking;
pub mod cli;
pub mod cluster;
pub mod datagen;
pub mod encode;
pub mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod protocol;
pub mod record;
pub mod seed;

pub use error::{Error, Result};
