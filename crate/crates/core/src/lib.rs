//! Exact finite stages of Bourgain–Delbaen spaces.
//!
//! Everything is computed in exact rational arithmetic: Tsirelson norms and
//! their dual norming sets, greedy c-decompositions, the coded norming set of a
//! seed space with a finite dimensional decomposition, the Bourgain–Delbaen
//! index sets built from it, the embedding of the seed space, augmentations
//! that graft lower estimates onto the construction, and verifiers for every
//! finite-stage inequality involved.

pub mod augment;
pub mod basis;
pub mod bd;
pub mod cdecomp;
pub mod family;
pub mod pipeline;
pub mod rat;
pub mod seed;
mod simplex;
pub mod theorem_a;
pub mod tsirelson;
pub mod vector;
pub mod verdict;

pub use rat::{q, Rat};
pub use vector::{FinVec, IndexId, Universe};
pub use verdict::{Check, Report, Verdict};
