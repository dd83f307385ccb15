//! Parameter-free online convex optimization learners.
//!
//! The crate implements a family of online learners that adapt to both the
//! comparator magnitude and the gradient scale without tuning:
//!
//! * [`base`] — a 1-D follow-the-regularized-leader learner driven by
//!   non-decreasing magnitude hints, with an exponential potential and an
//!   explicit, constant-sharp regret bound evaluator.
//! * [`epigraph`] — the composite learner for linear-plus-regularizer
//!   losses, played as a linear game over pairs constrained to the
//!   epigraph `{y >= psi(x)}` with weighted-norm projections.
//! * [`unconstrained`] — gradient clipping against self-grown hints, the
//!   doubly-logarithmic regularization-coefficient schedule, a unit-ball
//!   direction learner, and the d-dimensional magnitude/direction
//!   composition.
//! * [`full_matrix`] — a reference (d <= 4) matrix-potential FTRL learner
//!   on a ball domain with a log barrier.
//! * [`adversary`] — the constructive lower-bound opponent with its
//!   certificate formulas, plus deterministic synthetic gradient
//!   generators.
//! * [`trace`] — per-round records, regret accounting, and CSV
//!   persistence with lossless float round trips.

pub mod adversary;
pub mod base;
pub mod epigraph;
pub mod error;
pub mod full_matrix;
pub mod primitives;
pub mod regularizer;
pub mod trace;
pub mod unconstrained;

pub use error::{Error, Result};
