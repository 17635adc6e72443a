//! Divisor-level laboratory for real degree-0 line subbundles of rank-2,
//! degree-1 bundles on real genus-2 hyperelliptic curves.
//!
//! The crate is organised bottom-up:
//!
//! * [`curve`]: the sextic model, its real structure and hyperelliptic
//!   involution, fixed circles and anti-real components;
//! * [`divisors`]: effective divisors, reality and odd-circle signatures;
//! * [`equivalence`]: linear equivalence through interpolation in `|kH|`
//!   and the sixteen two-torsion classes;
//! * [`atiyah`]: the four-member orbit of a degree-3 divisor and its real
//!   member count;
//! * [`subbundles`]: parity bookkeeping for topological types of real
//!   maximal subbundles;
//! * [`survey`]: seeded Monte Carlo runs over divisor recipes;
//! * [`newstead`]: the pencil-of-quadrics model and its real forms;
//! * [`cli`]: the command-line front end.

pub mod atiyah;
pub mod cli;
pub mod curve;
pub mod divisors;
pub mod equivalence;
pub mod error;
pub mod fixtures;
pub mod newstead;
pub mod poly;
pub mod subbundles;
pub mod survey;

pub use error::{LabError, Result};
