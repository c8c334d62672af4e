//! Sign assignments for vector series whose terms tend to zero.
//!
//! Given `a_1, a_2, ...` with `||a_i|| -> 0`, the engine picks signs so that
//! the partial sums of `a_1 ± a_2 ± a_3 ...` taken at block boundaries form
//! a Cauchy sequence. Terms are grouped into blocks by the norm schedule
//! `1/(m+1)^2`; within each block, same-sector pairs are repeatedly replaced
//! by their difference until at most six vectors remain, which caps the
//! block's signed sum at `6/(m+1)^2`.

pub mod analysis;
pub mod assignment;
pub mod blocking;
pub mod cli;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod io;
pub mod reduction;

pub use assignment::{assign_signs, certify, AssignConfig, AssignmentReport, SignAssignment};
pub use error::{Error, Result};
pub use geometry::{ConeCover, SectorPartition2D, Vector};
pub use reduction::{PairingPolicy, Sign};
