//! Finite-window arithmetic for additive bases.
//!
//! The library works with truncations of subsets of the non-negative
//! integers and provides four pieces:
//!
//! * [`set`] — dense integer sets with exact h-fold sumsets, basis-window
//!   checks, and bounded representation enumeration;
//! * [`essential`] — arithmetic-progression gap structure and detection of
//!   essential subsets (finite removals that destroy the basis property
//!   minimally);
//! * [`bounds`] — the exact primorial bound `phi(k, h)` on the number of
//!   essential subsets of size at most `k` in a basis of order `h`, plus a
//!   growth diagnostic;
//! * [`construct`] — a recursive interval/progression block plan that
//!   realizes, for every order `h >= 2`, a basis whose finite prefixes
//!   carry no essential subsets, with mechanical verifiers for the
//!   supporting claims.
//!
//! All operations are pure functions of immutable inputs (the one prime
//! cache is behind a lock), and everything is deterministic: identical
//! inputs produce identical outputs, byte-for-byte in the serialized forms.

pub mod bounds;
pub mod construct;
pub mod error;
pub mod essential;
pub mod set;

pub use bounds::{asymptotic_probe, phi_bound, primorial, primorial_growth_ratio, BoundResult, ProbeMode};
pub use construct::{Block, BlockPlan, E4Outcome, Triple, TripleEnumerator, DEFAULT_MEMORY_BITS};
pub use error::{Error, Result};
pub use essential::{
    enumerate_essential_subsets, is_essential_subset, pairwise_coprime, progression_gap,
    EnumParams, EssentialityReport, GapParams,
};
pub use set::{IntegerSet, Representation, Run};
