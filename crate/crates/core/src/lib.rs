//! Finite-blocklength achievability bounds for unsourced random access (URA)
//! over the Gaussian multiple-access channel.
//!
//! Two random-coding ensembles are supported: i.i.d. Gaussian codebooks and
//! i.i.d. equiprobable binary (±√P) codebooks. For each the per-user
//! probability of error (PUPE) is bounded by a union over the number `t` of
//! missed codewords, each term split with a "good region" on the noise norm
//! into a joint error-and-region part and a region-violation part, both
//! bounded with Chernoff tilts. Everything is carried in the natural-log
//! domain.
//!
//! Modules:
//! - [`numerics`]: log-domain combinatorics, chi-square tails, small
//!   positive-definite determinants, the codeword-sum distribution.
//! - [`gaussian`] / [`binary`]: per-`t` exponents and defect terms of the two
//!   ensembles.
//! - [`optimize`]: the nested tilt/region searches, the full bound at a power
//!   level, and the minimal-Eb/N0 search.
//! - [`mc`]: Monte-Carlo and exhaustive oracles used to validate the above.

pub mod binary;
pub mod error;
pub mod gaussian;
pub mod mc;
pub mod numerics;
pub mod optimize;
pub mod params;

pub use error::{BoundError, Result};
pub use numerics::LogProb;
pub use optimize::{
    ebno_sweep, find_min_ebno, optimize_term_t, pe_bound_at_power, BoundResult, Diagnostics,
    OptimizerSettings, SweepPoint, TermResult,
};
pub use params::{CodebookKind, PowerParams, RegionParams, SystemParams, TiltParams};

/// Version tag mixed into cache keys and CSV output; bump on any change that
/// alters numerical results.
pub const ARTIFACT_VERSION: &str = concat!("ura-bounds/", env!("CARGO_PKG_VERSION"), "+r1");
